#pragma once

#include <map>
#include <vector>

#include <Eigen/Core>

#include "pdtr/data.hpp"

namespace pdtr {

// Regression design for stage-k Q-functions.
//
// kLinear: features(h^k, a) = [1, m(h^k)] ⊗ [1, d(a)] where m(h^k) holds the
//   covariates of stages 1..k, dummy codes of past actions and (optionally)
//   each past action's dummies times that stage's covariates and squared
//   covariates; d(a) are dummy codes for actions 1..|A^k|-1.
// kSaturated: one indicator per distinct (h^k, a) cell seen at fit time.
//   Cell values are exact cell means; unseen cells are rejected.
class FeatureBasis {
 public:
  enum class Kind { kLinear, kSaturated };

  struct Options {
    bool past_action_interactions = true;
    bool quadratic = false;
  };

  FeatureBasis() = default;
  static FeatureBasis linear(std::vector<StageLayout> layout, Options options);
  static FeatureBasis linear(std::vector<StageLayout> layout) { return linear(std::move(layout), Options{}); }
  static FeatureBasis saturated(const Dataset& data);

  Kind kind() const { return kind_; }
  const Options& options() const { return options_; }
  const std::vector<StageLayout>& layout() const { return layout_; }
  int n_stages() const { return static_cast<int>(layout_.size()); }

  int dimension(int stage) const;
  Eigen::VectorXd features(const History& h, int action) const;
  void features_into(const History& h, int action, Eigen::Ref<Eigen::VectorXd> out) const;
  // Row i = features(history(i, stage), actions[i]).
  Eigen::MatrixXd design(const Dataset& data, int stage, std::span<const int> actions) const;
  Eigen::MatrixXd observed_design(const Dataset& data, int stage) const;

  // Saturated cells (stage -> key -> column); exposed for serialization.
  using CellKey = std::vector<double>;
  const std::vector<std::map<CellKey, int>>& cells() const { return cells_; }
  static FeatureBasis from_cells(std::vector<StageLayout> layout,
                                 std::vector<std::map<CellKey, int>> cells);

  bool operator==(const FeatureBasis& o) const {
    return kind_ == o.kind_ && layout_ == o.layout_ &&
           options_.past_action_interactions == o.options_.past_action_interactions &&
           options_.quadratic == o.options_.quadratic && cells_ == o.cells_;
  }

 private:
  int main_dimension(int stage) const;
  void main_effects(const History& h, double* out) const;
  static CellKey cell_key(const History& h, int action);

  Kind kind_ = Kind::kLinear;
  std::vector<StageLayout> layout_;
  Options options_;
  std::vector<std::map<CellKey, int>> cells_;
};

}  // namespace pdtr
