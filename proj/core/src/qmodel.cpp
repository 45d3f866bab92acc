#include "pdtr/qmodel.hpp"

#include "pdtr/error.hpp"
#include "pdtr/rng.hpp"

namespace pdtr {

std::string engine_name(EngineConfig::Kind kind) {
  return kind == EngineConfig::Kind::kLinear ? "linear" : "trees";
}

EngineConfig::Kind parse_engine(const std::string& name) {
  if (name == "linear") return EngineConfig::Kind::kLinear;
  if (name == "trees") return EngineConfig::Kind::kTrees;
  throw UsageError("unknown engine '" + name + "' (expected linear or trees)");
}

StageModel StageModel::fit(int stage, const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets,
                           const EngineConfig& engine) {
  if (engine.kind == EngineConfig::Kind::kLinear) {
    try {
      return StageModel(stage, Linear{least_squares(design, targets)});
    } catch (const NumericalError& e) {
      throw NumericalError("stage " + std::to_string(stage + 1) + " fit: " + e.what());
    }
  }
  Trees t;
  t.forests.reserve(static_cast<std::size_t>(targets.cols()));
  for (Eigen::Index c = 0; c < targets.cols(); ++c) {
    TreeOptions opt = engine.trees;
    opt.seed = derive_seed(engine.trees.seed, {static_cast<std::uint64_t>(stage), static_cast<std::uint64_t>(c)});
    t.forests.push_back(fit_forest(design, targets.col(c), opt));
  }
  return StageModel(stage, std::move(t));
}

int StageModel::n_targets() const {
  if (const auto* l = std::get_if<Linear>(&fit_)) return static_cast<int>(l->coefficients.cols());
  return static_cast<int>(std::get<Trees>(fit_).forests.size());
}

Eigen::VectorXd StageModel::predict(const Eigen::VectorXd& features) const {
  if (const auto* l = std::get_if<Linear>(&fit_)) return l->coefficients.transpose() * features;
  const auto& forests = std::get<Trees>(fit_).forests;
  Eigen::VectorXd out(static_cast<Eigen::Index>(forests.size()));
  for (std::size_t c = 0; c < forests.size(); ++c) out(static_cast<Eigen::Index>(c)) = forests[c].predict(features.data());
  return out;
}

Eigen::MatrixXd StageModel::predict_rows(const Eigen::MatrixXd& design) const {
  if (const auto* l = std::get_if<Linear>(&fit_)) return design * l->coefficients;
  const auto& forests = std::get<Trees>(fit_).forests;
  Eigen::MatrixXd out(design.rows(), static_cast<Eigen::Index>(forests.size()));
  Eigen::VectorXd row(design.cols());
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    row = design.row(i).transpose();
    for (std::size_t c = 0; c < forests.size(); ++c) out(i, static_cast<Eigen::Index>(c)) = forests[c].predict(row.data());
  }
  return out;
}

Eigen::VectorXd QModelStack::predict(const History& h, int action) const {
  return stages.at(static_cast<std::size_t>(h.stage))->predict(basis.features(h, action));
}

double QModelStack::predict(const History& h, int action, int target) const {
  if (target < 0 || target >= n_targets())
    throw UsageError("outcome index " + std::to_string(target) + " out of range");
  return predict(h, action)(target);
}

}  // namespace pdtr
