#pragma once

#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "pdtr/data.hpp"
#include "pdtr/features.hpp"
#include "pdtr/qmodel.hpp"
#include "pdtr/regime.hpp"

namespace pdtr {

// Downstream behaviour used to form stage-k pseudo-outcomes:
//  - Greedy: argmax_a w' Q^{k+1}(h, a) on the stack being fit (Q-learning
//    when the targets are a single composite and w = (1));
//  - a fixed regime supplied by the caller.
struct GreedyRule {
  Eigen::VectorXd weights;
};
using DownstreamRule = std::variant<GreedyRule, const Regime*>;

// Least-squares (or tree) fit of each target column on features(H^K, A^K).
StageModel fit_stage_K(const Dataset& data, const Eigen::MatrixXd& targets, const FeatureBasis& basis,
                       const EngineConfig& engine);

// Fits Q^K on `targets` then, for k = K-1..1, regresses
// Q^{k+1}(H^{k+1}, pi^{k+1}(H^{k+1})) on features(H^k, A^k).
QModelStack backward_induce(const Dataset& data, const Eigen::MatrixXd& targets, const FeatureBasis& basis,
                            const EngineConfig& engine, const DownstreamRule& rule);
// Vector-outcome form: targets are the dataset's outcome matrix.
QModelStack backward_induce(const Dataset& data, const FeatureBasis& basis, const EngineConfig& engine,
                            const DownstreamRule& rule);

// Plug-in V_l(h^1, pi) = Q^1_l(h^1, a^1) for the regime playing a^1 then the
// stack's downstream rule.
double conditional_value(const QModelStack& stack, const History& h1, int first_action, int outcome);

// Greedy Q-learning on the given targets: returns the regime that plays
// argmax w'Q^k at every stage, with its stack.
std::shared_ptr<const StageRuleRegime> q_learning(const Dataset& data, const Eigen::MatrixXd& targets,
                                                  const Eigen::VectorXd& weights, const FeatureBasis& basis,
                                                  const EngineConfig& engine, std::string label);

// Backward induction for a whole class of weight-indexed downstream rules.
//
// For each weight vector w the downstream rule at stage k >= 2 is
// argmax_a w'Q^k_w(h^k, a). Weight vectors whose rules pick identical actions
// on every training history at every stage >= 2 produce identical
// pseudo-outcomes, so they share one fitted stack ("group"); each stage is fit
// once for all groups with a shared factorization.
class CandidateStacks {
 public:
  static CandidateStacks fit(const Dataset& data, const Eigen::MatrixXd& targets, const FeatureBasis& basis,
                             const EngineConfig& engine, std::vector<WeightVector> weights);

  CandidateStacks(FeatureBasis basis, std::vector<WeightVector> weights, std::vector<int> group_of,
                  std::vector<QModelStack> group_stacks);

  const FeatureBasis& basis() const { return basis_; }
  const std::vector<WeightVector>& weights() const { return weights_; }
  int n_weights() const { return static_cast<int>(weights_.size()); }
  int n_groups() const { return static_cast<int>(group_stacks_.size()); }
  int n_targets() const { return group_stacks_.front().n_targets(); }
  int n_stages() const { return basis_.n_stages(); }
  int group_of(int weight_index) const { return group_of_[static_cast<std::size_t>(weight_index)]; }
  // Smallest weight index in the group.
  int representative(int group) const { return representative_[static_cast<std::size_t>(group)]; }
  int group_size(int group) const { return group_size_[static_cast<std::size_t>(group)]; }
  const QModelStack& stack(int group) const { return group_stacks_[static_cast<std::size_t>(group)]; }
  const std::vector<int>& group_index() const { return group_of_; }

  // Stage-1 values for first action a at each history:
  // rows = histories, columns = group * n_targets + target.
  Eigen::MatrixXd stage1_values(std::span<const History> h1, int first_action) const;

  // Concatenated stage-1 coefficients (features x groups*targets) when every
  // group uses the linear engine.
  const std::optional<Eigen::MatrixXd>& stage1_coefficients() const { return stage1_coefficients_; }

  // Stage k >= 2 action of the rule indexed by weight_index.
  int downstream_action(int weight_index, const History& h) const;

 private:
  FeatureBasis basis_;
  std::vector<WeightVector> weights_;
  std::vector<int> group_of_;
  std::vector<int> representative_;
  std::vector<int> group_size_;
  std::vector<QModelStack> group_stacks_;
  // Concatenated stage-1 coefficients (linear engine only).
  std::optional<Eigen::MatrixXd> stage1_coefficients_;
};

}  // namespace pdtr
