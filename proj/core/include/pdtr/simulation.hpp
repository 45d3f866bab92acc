#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pdtr/data.hpp"
#include "pdtr/regime.hpp"
#include "pdtr/rng.hpp"

namespace pdtr {

// Generative model for K-stage trajectories with stage-wise sampling so that
// actions can be chosen by a regime from the history drawn so far.
//
// Every trajectory i of a draw owns the substreams (seed, i, stage); each
// stage consumes a fixed number of variates whether or not a regime sets the
// action. Two draws with the same seed therefore share baseline covariates
// and noise (common random numbers) across regimes.
class TrajectoryModel {
 public:
  virtual ~TrajectoryModel() = default;

  virtual std::string name() const = 0;
  virtual std::vector<StageLayout> layout() const = 0;
  virtual std::vector<std::string> outcome_names() const = 0;
  int n_stages() const { return static_cast<int>(layout().size()); }
  int n_outcomes() const { return static_cast<int>(outcome_names().size()); }

  // Covariates of `stage` given the partial trajectory (stages < stage
  // filled in) and the stage's random stream.
  virtual Eigen::VectorXd draw_covariates(const Trajectory& t, int stage, Rng& rng) const = 0;
  virtual Eigen::VectorXd draw_outcomes(const Trajectory& t, Rng& rng) const = 0;
  // Randomization probability of each action code at `stage`.
  virtual double assignment_probability(int stage, int action) const = 0;

  // n trajectories; actions randomized when regime is null, else chosen by
  // the regime (recorded propensity 1). Row ids are "<prefix><i>".
  Dataset draw(std::size_t n, const Regime* regime, std::uint64_t seed, int workers = 1,
               const std::string& id_prefix = "") const;
};

enum class SmartDesign { kS1, kS2, kS3, kS4 };

std::string design_name(SmartDesign d);
SmartDesign parse_design(const std::string& name);
// Outcome maps for S1/S2. kLiteral evaluates "3Z1/3", "4Z1/4", "4Z3/4" as
// Z1, Z1, Z3. kAveraged differs only for S1, where Y3 = (Z1 + Z2 + Z3) / 3.
enum class OutcomeReading { kAveraged, kLiteral };

std::string reading_name(OutcomeReading r);
OutcomeReading parse_reading(const std::string& name);

// Clinical thresholds per design: 0.1 (S1), 0.25 (S2), 0.5 (S3, S4).
std::vector<double> default_delta(SmartDesign d);

// Two-stage SMART models with actions coded 0 <-> -1 and 1 <-> +1, each with
// probability 1/2.
//
// First collection (S1, S2): X^1 ~ N(0, I_3), X^2_j = 0.5 X^1_j A^1 + u_j,
//   Z_j = g1 + g2 X^1_j + g3 A^1 + g4 X^1_j A^1 + g5 A^2 + g6 X^2_j A^2
//         + g7 A^1 A^2 + e_j with g = gamma row j,
//   Y = outcome_coefficients * Z.
// Second collection (S3, S4): X^1 ~ N(0, I_4), thresholded/linear X^2 and
//   Z_4, Z_5, Z_6; Y is a permutation of (Z_4, Z_5, Z_6).
class SmartModel final : public TrajectoryModel {
 public:
  using Gamma = std::array<std::array<double, 7>, 3>;

  explicit SmartModel(SmartDesign design, OutcomeReading reading = OutcomeReading::kAveraged);
  SmartModel(SmartDesign design, Gamma gamma, Eigen::Matrix3d outcome_coefficients);

  static Gamma default_gamma();
  static Eigen::Matrix3d default_outcome_coefficients(SmartDesign design,
                                                      OutcomeReading reading = OutcomeReading::kAveraged);

  SmartDesign design() const { return design_; }
  const Gamma& gamma() const { return gamma_; }
  const Eigen::Matrix3d& outcome_coefficients() const { return coefficients_; }

  std::string name() const override { return design_name(design_); }
  std::vector<StageLayout> layout() const override;
  std::vector<std::string> outcome_names() const override { return {"y1", "y2", "y3"}; }
  Eigen::VectorXd draw_covariates(const Trajectory& t, int stage, Rng& rng) const override;
  Eigen::VectorXd draw_outcomes(const Trajectory& t, Rng& rng) const override;
  double assignment_probability(int, int) const override { return 0.5; }

  // Deterministic maps with the noise supplied explicitly; a1, a2 in {-1, +1}.
  Eigen::VectorXd second_stage_covariates(const Eigen::VectorXd& x1, int a1, const Eigen::VectorXd& upsilon) const;
  Eigen::VectorXd z_values(const Eigen::VectorXd& x1, int a1, const Eigen::VectorXd& x2, int a2,
                           const Eigen::Vector3d& epsilon) const;
  Eigen::VectorXd outcomes(const Eigen::VectorXd& x1, int a1, const Eigen::VectorXd& x2, int a2,
                           const Eigen::Vector3d& epsilon) const;

 private:
  bool first_collection() const { return design_ == SmartDesign::kS1 || design_ == SmartDesign::kS2; }

  SmartDesign design_;
  Gamma gamma_;
  Eigen::Matrix3d coefficients_;
};

inline int action_sign(int code) { return code == 1 ? 1 : -1; }

struct OracleValue {
  Eigen::VectorXd mean;
  Eigen::VectorXd standard_error;
};

// Mean outcome vector over test_size draws under the regime.
OracleValue oracle_conditional_value(const TrajectoryModel& model, const Regime& regime, std::size_t test_size,
                                     std::uint64_t seed, int workers = 1);

}  // namespace pdtr
