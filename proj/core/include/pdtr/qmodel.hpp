#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "pdtr/data.hpp"
#include "pdtr/features.hpp"
#include "pdtr/regression.hpp"

namespace pdtr {

struct EngineConfig {
  enum class Kind { kLinear, kTrees };
  Kind kind = Kind::kLinear;
  TreeOptions trees;
};

std::string engine_name(EngineConfig::Kind kind);
EngineConfig::Kind parse_engine(const std::string& name);

// Fitted stage-k regression: maps features(h^k, a) to a vector of targets
// (one entry per outcome or composite).
class StageModel {
 public:
  struct Linear {
    Eigen::MatrixXd coefficients;  // dimension x n_targets
  };
  struct Trees {
    std::vector<Forest> forests;  // one per target
  };

  StageModel() = default;
  StageModel(int stage, std::variant<Linear, Trees> fit) : stage_(stage), fit_(std::move(fit)) {}

  // Fits every column of `targets` on the given design rows.
  static StageModel fit(int stage, const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets,
                        const EngineConfig& engine);

  int stage() const { return stage_; }
  int n_targets() const;
  bool is_linear() const { return std::holds_alternative<Linear>(fit_); }
  const std::variant<Linear, Trees>& fit() const { return fit_; }

  Eigen::VectorXd predict(const Eigen::VectorXd& features) const;
  // Row-wise predictions for a design matrix (rows x n_targets).
  Eigen::MatrixXd predict_rows(const Eigen::MatrixXd& design) const;

 private:
  int stage_ = 0;
  std::variant<Linear, Trees> fit_;
};

// Fitted Q-functions for stages 1..K. Stage models may be shared between
// stacks that differ only in upstream stages (e.g. candidates that share the
// final-stage fit).
struct QModelStack {
  FeatureBasis basis;
  std::vector<std::shared_ptr<const StageModel>> stages;
  // Human-readable record of the downstream rule that produced the
  // pseudo-outcomes of stages < K.
  std::string downstream;

  int n_stages() const { return static_cast<int>(stages.size()); }
  int n_targets() const { return stages.empty() ? 0 : stages.back()->n_targets(); }

  Eigen::VectorXd predict(const History& h, int action) const;
  double predict(const History& h, int action, int target) const;
};

}  // namespace pdtr
