#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pdtr/backward.hpp"
#include "pdtr/regime.hpp"

namespace pdtr {

enum class DissimilarityKind { kAbsoluteDifference, kLogRatio };

std::string dissimilarity_name(DissimilarityKind kind);
DissimilarityKind parse_dissimilarity(const std::string& name);

// Per-outcome dissimilarity d_l and clinical threshold delta_l >= 0
// (+infinity allowed: every candidate is then equivalent on that outcome).
struct DissimilaritySpec {
  std::vector<DissimilarityKind> kinds;
  std::vector<double> thresholds;

  static DissimilaritySpec absolute(std::vector<double> thresholds);
  int n_outcomes() const { return static_cast<int>(thresholds.size()); }
  void validate() const;
};

// |u - v| or |log(u / v)|; the log ratio requires u, v > 0.
double dissimilarity(const DissimilaritySpec& spec, int outcome, double u, double v);

// {c : d_l(max_c' V_l(c'), V_l(c)) <= delta_l}. NaN entries mark candidates
// that are not available (infeasible first action) and are never members.
std::vector<int> equivalence_class(std::span<const double> values, const DissimilaritySpec& spec, int outcome);

// d_l(max_c V_l(c), V_l(candidate)).
double regret(std::span<const double> values, int candidate, const DissimilaritySpec& spec, int outcome);

// Result of the sequential thresholding at one baseline history. Candidate
// indices refer to the rows of `values`.
struct PrioritizedSelection {
  Eigen::MatrixXd values;                 // candidates x p_y
  std::vector<std::vector<int>> classes;  // xi_l for l = 1..p_y
  std::vector<int> admissible;            // intersection of xi_1..xi_depth
  int depth = 0;                          // largest iota with non-empty prefix intersection
  int tiebreak_outcome = 0;               // 0-based; outcome 1 when depth == p_y, else depth + 1
  int chosen = -1;
};

// Computes xi_l sequentially, intersecting until empty, then picks the
// admissible candidate with the largest value on the tie-break outcome
// (ties to the lowest candidate index).
PrioritizedSelection select_from_values(const Eigen::MatrixXd& values, const DissimilaritySpec& spec);

// omega_0 .. omega_{p_y+1} with omega_0 = omega_{p_y+1} = 1 and
// omega_1 > ... > omega_{p_y} > 1.
struct UtilityWeights {
  Eigen::VectorXd omega;

  static UtilityWeights from_interior(const Eigen::VectorXd& interior);
  int n_outcomes() const { return static_cast<int>(omega.size()) - 2; }
  void validate() const;
};

// Priority-respecting utility of a regret profile. Conventions: the empty
// prefix product is 1; B_{p_y+1} = 0; R_{p_y+1} = R_{p_y}; the l = p_y+1
// normalizer is that of outcome p_y.
double utility(const Eigen::VectorXd& regrets, const Eigen::VectorXd& sup_regrets, const DissimilaritySpec& spec,
               const UtilityWeights& weights);

enum class Preference { kFirst, kSecond, kEquivalent };

// Quasi-lexicographic comparison of two regret profiles at one history:
// (i) equal B prefix, both B_kappa = 0 and strictly smaller regret wins;
// (ii) equal B prefix of ones and B_kappa = 1 beats B_kappa = 0.
Preference prefers(const Eigen::VectorXd& regrets_a, const Eigen::VectorXd& regrets_b, const DissimilaritySpec& spec);

// Regret of every candidate on every outcome (rows = candidates).
Eigen::MatrixXd regret_matrix(const Eigen::MatrixXd& values, const DissimilaritySpec& spec);

// Max regret per outcome over a grid of histories x candidates, floored at
// 1e-6.
Eigen::VectorXd sup_regrets(std::span<const Eigen::MatrixXd> values_per_history, const DissimilaritySpec& spec);

// One entry of the population-level regime: the chosen (a^1, lambda) at a
// baseline history together with the selection diagnostics.
struct SelectionRecord {
  int first_action = 0;
  int weight_index = 0;
  int depth = 0;
  int tiebreak_outcome = 0;
  std::vector<int> class_sizes;  // |xi_l| counted over the full candidate class
  int admissible_size = 0;
};

// Estimated prioritized regime: stage 1 plays the selected (a^1, lambda) at
// h^1; later stages play argmax lambda'Q^k.
class PrioritizedRegime final : public Regime {
 public:
  PrioritizedRegime(CandidateStacks stacks, std::vector<int> stage1_actions, DissimilaritySpec spec);

  const CandidateStacks& stacks() const { return stacks_; }
  const std::vector<int>& stage1_actions() const { return stage1_actions_; }
  const DissimilaritySpec& spec() const { return spec_; }
  int class_size() const { return static_cast<int>(stage1_actions_.size()) * stacks_.n_weights(); }

  // Full selection at one baseline history over the deduplicated candidate
  // list; `candidate_of` maps its rows to (first action, weight index).
  PrioritizedSelection select(const History& h1) const;
  std::vector<SelectionRecord> choose(std::span<const History> h1) const;
  // Index into candidates() of the selection at each history; same result as
  // select(h).chosen without building the diagnostic sets.
  std::vector<int> chosen_candidates(std::span<const History> h1) const;

  struct Candidate {
    int first_action;
    int weight_index;
    int multiplicity;
  };
  const std::vector<Candidate>& candidates() const { return candidates_; }
  // Values (candidates x p_y) at each history; infeasible candidates are NaN.
  std::vector<Eigen::MatrixXd> candidate_values(std::span<const History> h1) const;

  int action(const History& h) const override;
  std::vector<int> actions(std::span<const History> hs) const override;
  nlohmann::json to_json() const override;
  std::string describe() const override { return "prioritized"; }

 private:
  SelectionRecord record(const PrioritizedSelection& sel) const;

  CandidateStacks stacks_;
  std::vector<int> stage1_actions_;
  DissimilaritySpec spec_;
  std::vector<Candidate> candidates_;
  std::uint64_t instance_id_;  // keys the per-thread selection memo
};

std::shared_ptr<const PrioritizedRegime> fit_prioritized(const Dataset& data, const FeatureBasis& basis,
                                                         const EngineConfig& engine, const CandidateClass& candidates,
                                                         const DissimilaritySpec& spec);

// Per-history audit export: id, |xi_l|, depth, tie-break outcome, chosen
// (a^1, lambda index).
std::string selection_trace_csv(const PrioritizedRegime& regime, const Dataset& data);

}  // namespace pdtr
