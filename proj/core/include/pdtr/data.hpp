#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace pdtr {

// 0/1 feasibility flags indexed by action code.
using ActionMask = std::vector<std::uint8_t>;

struct StageLayout {
  int covariate_dim = 0;
  int n_actions = 2;
  bool operator==(const StageLayout&) const = default;
};

// One subject's record: stage-wise covariates X^1..X^K, actions A^1..A^K,
// outcome vector Y (priority order, larger is better), per-stage feasibility
// masks and the probability of the observed action given the history.
struct Trajectory {
  std::string id;
  std::vector<Eigen::VectorXd> covariates;
  std::vector<int> actions;
  std::vector<ActionMask> feasible;
  std::vector<double> propensities;
  Eigen::VectorXd outcomes;

  int n_stages() const { return static_cast<int>(actions.size()); }
};

// Information available at a decision point: X^1, A^1, ..., X^k of one
// trajectory. Stage is 0-based; stage s exposes covariates[0..s] and
// actions[0..s-1].
struct History {
  const Trajectory* trajectory = nullptr;
  int stage = 0;

  const Eigen::VectorXd& covariates(int s) const { return trajectory->covariates[s]; }
  int action(int s) const { return trajectory->actions[s]; }
  const ActionMask& feasible() const { return trajectory->feasible[stage]; }
  bool is_feasible(int a) const;
};

// Per-outcome affine map y -> (y - mean) / scale, replayable on new data.
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  std::vector<bool> constant;

  Eigen::VectorXd apply(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& y) const;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<StageLayout> layout, std::vector<std::string> outcome_names,
          std::vector<Trajectory> trajectories);

  // Checks every trajectory invariant; throws DataError naming the offending
  // row on the first violation.
  void validate() const;

  std::size_t size() const { return trajectories_.size(); }
  bool empty() const { return trajectories_.empty(); }
  int n_stages() const { return static_cast<int>(layout_.size()); }
  int n_outcomes() const { return static_cast<int>(outcome_names_.size()); }
  const std::vector<StageLayout>& layout() const { return layout_; }
  const std::vector<std::string>& outcome_names() const { return outcome_names_; }
  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  const Trajectory& operator[](std::size_t i) const { return trajectories_[i]; }

  History history(std::size_t i, int stage) const { return {&trajectories_[i], stage}; }

  // n x p_y matrix of outcomes (raw, or standardized if this dataset was
  // produced by standardize_outcomes).
  Eigen::MatrixXd outcome_matrix() const;

  const std::optional<Standardization>& standardization() const { return standardization_; }

  Dataset subset(std::span<const std::size_t> rows) const;

  // Standardizes new data with this dataset's stored map (see
  // standardize_outcomes). Throws if none is stored.
  Dataset replay_standardization(const Dataset& other) const;

  friend Dataset standardize_outcomes(const Dataset& data);
  friend Dataset with_standardization(const Dataset& data, const Standardization& s);

 private:
  std::vector<StageLayout> layout_;
  std::vector<std::string> outcome_names_;
  std::vector<Trajectory> trajectories_;
  std::optional<Standardization> standardization_;
};

// Centers and scales each outcome to sample mean 0 and (population) variance
// 1. Constant columns keep scale 1 and are flagged in the stored map.
Dataset standardize_outcomes(const Dataset& data);

// Applies a given map; the returned dataset records it.
Dataset with_standardization(const Dataset& data, const Standardization& s);

struct SplitResult {
  Dataset first;
  Dataset second;
  std::optional<std::size_t> dropped;  // row dropped when n is odd
};

// Uniformly random partition into two halves of equal size, deterministic in
// the seed. Odd n drops one row chosen at random (logged).
SplitResult split_even(const Dataset& data, std::uint64_t seed);

// CSV schema: id, x1_1..x1_p1, a1, feas1_<code>.., prop1, x2_1.., a2, ...,
// y_1..y_py. feas*/prop* columns are optional per stage.
struct CsvSchema {
  std::vector<StageLayout> layout;
  int n_outcomes = 0;
};

Dataset load_csv(const std::filesystem::path& path,
                 const std::optional<CsvSchema>& expected = std::nullopt);
Dataset parse_csv(const std::string& text,
                  const std::optional<CsvSchema>& expected = std::nullopt);
void write_csv(const Dataset& data, const std::filesystem::path& path);
std::string to_csv(const Dataset& data);

// 64-bit content hash of one record (covariates, actions, outcomes); used to
// detect overlap between fit and evaluation data.
std::uint64_t row_hash(const Trajectory& t);

}  // namespace pdtr
