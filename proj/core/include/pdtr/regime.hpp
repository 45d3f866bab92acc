#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "pdtr/data.hpp"
#include "pdtr/qmodel.hpp"

namespace pdtr {

// Convex outcome weights: entries in [0,1] summing to 1 (within 1e-10).
class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(Eigen::VectorXd lambda);

  const Eigen::VectorXd& values() const { return lambda_; }
  int size() const { return static_cast<int>(lambda_.size()); }
  double operator()(int i) const { return lambda_(i); }
  static WeightVector vertex(int p_y, int l);
  bool operator==(const WeightVector& o) const { return lambda_ == o.lambda_; }

 private:
  Eigen::VectorXd lambda_;
};

// n_samples i.i.d. uniform draws from the (p_y - 1)-simplex via sorted
// uniform spacings, followed by the p_y vertices e_1..e_{p_y} so every
// single-outcome greedy rule is in the class. With p_y = 1 the class is the
// single weight (1).
std::vector<WeightVector> sample_simplex(int n_samples, int p_y, std::uint64_t seed);

// Candidate set {(a^1, lambda)} evaluated at each baseline history.
struct CandidateClass {
  std::vector<WeightVector> stage2_weights;
  std::vector<int> stage1_actions;

  int size() const { return static_cast<int>(stage2_weights.size() * stage1_actions.size()); }
};

// Argmax of weights' Q(h, a) over feasible actions, ties to the lowest code.
// `weights` must have as many entries as the stack has targets.
int greedy_action(const QModelStack& stack, const Eigen::VectorXd& weights, const History& h);

// Canonical text key of a history's stage-s information (used by tabulated
// rules and trace exports).
std::string history_key(const History& h);

class Regime {
 public:
  virtual ~Regime() = default;

  // Always returns an action in h.feasible().
  virtual int action(const History& h) const = 0;
  // Batch form; histories may come from different trajectories but share a
  // stage. The default loops over action().
  virtual std::vector<int> actions(std::span<const History> hs) const;

  virtual nlohmann::json to_json() const = 0;
  virtual std::string describe() const = 0;

  // FNV-1a of the serialized document (without the hash field), hex encoded.
  std::string content_hash() const;
};

// Per-stage decision rules.
class StageRuleRegime final : public Regime {
 public:
  struct Fixed {
    int action = 0;
  };
  // argmax_a lambda' Q^k(h^k, a) with Q from a shared stack.
  struct WeightIndexed {
    Eigen::VectorXd weights;
    std::shared_ptr<const QModelStack> stack;
  };
  struct Tabulated {
    std::map<std::string, int> table;  // history_key -> action
  };
  using Rule = std::variant<Fixed, WeightIndexed, Tabulated>;

  StageRuleRegime(std::vector<Rule> rules, std::string label);

  static StageRuleRegime fixed(std::vector<int> actions, std::string label = "fixed");
  static StageRuleRegime greedy(Eigen::VectorXd weights, std::shared_ptr<const QModelStack> stack,
                                std::string label);

  int n_stages() const { return static_cast<int>(rules_.size()); }
  const std::vector<Rule>& rules() const { return rules_; }
  const std::string& label() const { return label_; }

  // A fixed action that is infeasible at h falls back to the lowest feasible
  // code; a tabulated rule queried at an unknown key throws DataError.
  int action(const History& h) const override;
  nlohmann::json to_json() const override;
  std::string describe() const override { return label_; }

 private:
  std::vector<Rule> rules_;
  std::string label_;
};

int lowest_feasible(const History& h);

}  // namespace pdtr
