#include "pdtr/irl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pdtr/backward.hpp"
#include "pdtr/error.hpp"
#include "pdtr/parallel.hpp"
#include "pdtr/rng.hpp"

namespace pdtr {

CompositeSpec CompositeSpec::from_direction(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalError("composite direction undefined");
  return {v / norm};
}

void CompositeSpec::validate() const {
  if (lambda.size() == 0 || std::abs(lambda.norm() - 1.0) > 1e-10)
    throw UsageError("composite weights must have unit norm");
}

Dataset ensure_standardized(const Dataset& data) {
  return data.standardization() ? data : standardize_outcomes(data);
}

Dataset composite_data(const Dataset& data, OutcomeScale scale) {
  return scale == OutcomeScale::kStandardized ? ensure_standardized(data) : data;
}

std::string scale_name(OutcomeScale s) { return s == OutcomeScale::kRaw ? "raw" : "standardized"; }

OutcomeScale parse_scale(const std::string& name) {
  if (name == "raw") return OutcomeScale::kRaw;
  if (name == "standardized") return OutcomeScale::kStandardized;
  throw UsageError("unknown outcome scale '" + name + "' (expected raw or standardized)");
}

namespace {

std::vector<History> baseline_histories(const Dataset& data) {
  std::vector<History> hs(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) hs[i] = data.history(i, 0);
  return hs;
}

Eigen::VectorXd mean_first_stage(const Dataset& data, const Regime& regime, const QModelStack& stack) {
  const auto hs = baseline_histories(data);
  const auto acts = regime.actions(hs);
  const Eigen::MatrixXd q = stack.stages.front()->predict_rows(stack.basis.design(data, 0, acts));
  return q.colwise().mean().transpose();
}

}  // namespace

Eigen::VectorXd plug_in_values(const Dataset& data, const Regime& regime, const FeatureBasis& basis,
                               const EngineConfig& engine, OutcomeScale scale) {
  const Dataset cdata = composite_data(data, scale);
  const QModelStack stack = backward_induce(cdata, basis, engine, &regime);
  return mean_first_stage(cdata, regime, stack);
}

double composite_value(const Dataset& data, const Regime& regime, const FeatureBasis& basis,
                       const EngineConfig& engine, const Eigen::VectorXd& lambda, OutcomeScale scale) {
  const Dataset cdata = composite_data(data, scale);
  if (lambda.size() != cdata.n_outcomes()) throw UsageError("composite weights do not match outcome count");
  const Eigen::MatrixXd c = cdata.outcome_matrix() * lambda;
  const QModelStack stack = backward_induce(cdata, c, basis, engine, &regime);
  return mean_first_stage(cdata, regime, stack)(0);
}

std::vector<Eigen::VectorXd> sphere_grid(int dimension, int n_points, std::uint64_t seed) {
  if (dimension < 1) throw UsageError("sphere dimension must be positive");
  if (n_points < 1) throw UsageError("sphere grid needs at least one point");
  std::vector<Eigen::VectorXd> grid;
  if (dimension == 1) {
    grid.push_back(Eigen::VectorXd::Constant(1, 1.0));
    grid.push_back(Eigen::VectorXd::Constant(1, -1.0));
    return grid;
  }
  grid.reserve(static_cast<std::size_t>(n_points));
  if (dimension == 2) {
    for (int i = 0; i < n_points; ++i) {
      const double t = 2.0 * std::numbers::pi * i / n_points;
      grid.push_back(Eigen::Vector2d(std::cos(t), std::sin(t)));
    }
  } else if (dimension == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n_points; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / n_points;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double t = golden * i;
      grid.push_back(Eigen::Vector3d(r * std::cos(t), r * std::sin(t), z));
    }
  } else {
    Rng rng = make_stream(seed, {0x5947});
    for (int i = 0; i < n_points; ++i) {
      Eigen::VectorXd v(dimension);
      do {
        for (int j = 0; j < dimension; ++j) v(j) = standard_normal(rng);
      } while (v.norm() == 0.0);
      grid.push_back(v / v.norm());
    }
  }
  return grid;
}

GridSearchResult grid_search_lambda(const Dataset& data, const Regime& regime, const FeatureBasis& basis,
                                    const EngineConfig& engine, const std::vector<Eigen::VectorXd>& grid,
                                    OutcomeScale scale, int workers) {
  if (grid.empty()) throw UsageError("empty sphere grid");
  const Dataset cdata = composite_data(data, scale);
  std::vector<double> values(grid.size());
  if (engine.kind == EngineConfig::Kind::kLinear) {
    // One design, many composite targets: fit them as columns of a single
    // least-squares system per stage.
    Eigen::MatrixXd lambdas(cdata.n_outcomes(), static_cast<Eigen::Index>(grid.size()));
    for (std::size_t g = 0; g < grid.size(); ++g) lambdas.col(static_cast<Eigen::Index>(g)) = grid[g];
    const Eigen::MatrixXd c = cdata.outcome_matrix() * lambdas;
    const QModelStack stack = backward_induce(cdata, c, basis, engine, &regime);
    const Eigen::VectorXd v = mean_first_stage(cdata, regime, stack);
    for (std::size_t g = 0; g < grid.size(); ++g) values[g] = v(static_cast<Eigen::Index>(g));
  } else {
    parallel_for(grid.size(), workers,
                 [&](std::size_t g) { values[g] = composite_value(cdata, regime, basis, engine, grid[g], scale); });
  }
  const auto best = std::max_element(values.begin(), values.end()) - values.begin();
  return {grid[static_cast<std::size_t>(best)], values[static_cast<std::size_t>(best)]};
}

CompositeSpec estimate_lambda(const Dataset& data, const Regime& regime, const FeatureBasis& basis,
                              const EngineConfig& engine, OutcomeScale scale, int workers) {
  if (engine.kind == EngineConfig::Kind::kLinear)
    return CompositeSpec::from_direction(plug_in_values(data, regime, basis, engine, scale));
  const auto grid = sphere_grid(data.n_outcomes(), kDefaultSphereGrid);
  return {grid_search_lambda(data, regime, basis, engine, grid, scale, workers).lambda};
}

std::shared_ptr<const StageRuleRegime> tuned_composite_regime(const Dataset& data, const CompositeSpec& spec,
                                                              const FeatureBasis& basis, const EngineConfig& engine,
                                                              OutcomeScale scale) {
  spec.validate();
  const Dataset cdata = composite_data(data, scale);
  if (spec.lambda.size() != cdata.n_outcomes()) throw UsageError("composite weights do not match outcome count");
  const Eigen::MatrixXd c = cdata.outcome_matrix() * spec.lambda;
  return q_learning(cdata, c, Eigen::VectorXd::Ones(1), basis, engine, "tuned_composite");
}

double angle_degrees(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double c = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

}  // namespace pdtr
