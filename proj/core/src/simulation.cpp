#include "pdtr/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "pdtr/error.hpp"
#include "pdtr/parallel.hpp"
#include "pdtr/rng.hpp"

namespace pdtr {
namespace {

constexpr std::size_t kBlock = 2048;

Eigen::VectorXd normals(Rng& rng, int n) {
  Eigen::VectorXd v(n);
  for (int j = 0; j < n; ++j) v(j) = standard_normal(rng);
  return v;
}

}  // namespace

Dataset TrajectoryModel::draw(std::size_t n, const Regime* regime, std::uint64_t seed, int workers,
                              const std::string& id_prefix) const {
  const auto lay = layout();
  const int k_stages = static_cast<int>(lay.size());
  std::vector<Trajectory> ts(n);
  const std::size_t n_blocks = (n + kBlock - 1) / kBlock;
  parallel_for(n_blocks, workers, [&](std::size_t b) {
    const std::size_t lo = b * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    std::vector<double> bits(hi - lo);
    std::vector<History> hs(hi - lo);
    for (int s = 0; s < k_stages; ++s) {
      const auto n_actions = static_cast<std::size_t>(lay[static_cast<std::size_t>(s)].n_actions);
      for (std::size_t i = lo; i < hi; ++i) {
        Trajectory& t = ts[i];
        if (s == 0) t.id = id_prefix + std::to_string(i);
        Rng rng = make_stream(seed, {i, static_cast<std::uint64_t>(s)});
        t.covariates.push_back(draw_covariates(t, s, rng));
        t.feasible.emplace_back(n_actions, std::uint8_t{1});
        bits[i - lo] = uniform01(rng);
        hs[i - lo] = {&t, s};
      }
      std::vector<int> chosen;
      if (regime) chosen = regime->actions(hs);
      for (std::size_t i = lo; i < hi; ++i) {
        Trajectory& t = ts[i];
        if (regime) {
          t.actions.push_back(chosen[i - lo]);
          t.propensities.push_back(1.0);
        } else {
          // Inverse-CDF pick of the randomized action.
          double acc = 0.0;
          int a = static_cast<int>(n_actions) - 1;
          for (std::size_t c = 0; c < n_actions; ++c) {
            acc += assignment_probability(s, static_cast<int>(c));
            if (bits[i - lo] < acc) {
              a = static_cast<int>(c);
              break;
            }
          }
          t.actions.push_back(a);
          t.propensities.push_back(assignment_probability(s, a));
        }
      }
    }
    for (std::size_t i = lo; i < hi; ++i) {
      Rng rng = make_stream(seed, {i, static_cast<std::uint64_t>(k_stages)});
      ts[i].outcomes = draw_outcomes(ts[i], rng);
    }
  });
  return Dataset(lay, outcome_names(), std::move(ts));
}

std::string design_name(SmartDesign d) {
  switch (d) {
    case SmartDesign::kS1: return "s1";
    case SmartDesign::kS2: return "s2";
    case SmartDesign::kS3: return "s3";
    case SmartDesign::kS4: return "s4";
  }
  return "?";
}

SmartDesign parse_design(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "s1") return SmartDesign::kS1;
  if (lower == "s2") return SmartDesign::kS2;
  if (lower == "s3") return SmartDesign::kS3;
  if (lower == "s4") return SmartDesign::kS4;
  throw UsageError("unknown design '" + name + "' (expected s1, s2, s3 or s4)");
}

std::vector<double> default_delta(SmartDesign d) {
  switch (d) {
    case SmartDesign::kS1: return {0.1, 0.1, 0.1};
    case SmartDesign::kS2: return {0.25, 0.25, 0.25};
    default: return {0.5, 0.5, 0.5};
  }
}

std::string reading_name(OutcomeReading r) { return r == OutcomeReading::kAveraged ? "averaged" : "literal"; }

OutcomeReading parse_reading(const std::string& name) {
  if (name == "averaged") return OutcomeReading::kAveraged;
  if (name == "literal") return OutcomeReading::kLiteral;
  throw UsageError("unknown outcome reading '" + name + "' (expected averaged or literal)");
}

SmartModel::SmartModel(SmartDesign design, OutcomeReading reading)
    : SmartModel(design, default_gamma(), default_outcome_coefficients(design, reading)) {}

SmartModel::SmartModel(SmartDesign design, Gamma gamma, Eigen::Matrix3d outcome_coefficients)
    : design_(design), gamma_(gamma), coefficients_(std::move(outcome_coefficients)) {}

SmartModel::Gamma SmartModel::default_gamma() {
  return {{{0, 0.5, -0.7, 0.75, 0.3, 0.5, 0.5}, {0, 0.5, 0.7, 0.75, 0.3, 0.5, 0.5}, {0, 0.5, 0, 0.75, 0.1, 0.5, 0}}};
}

// Rows are outcomes, columns the Z's feeding them.
Eigen::Matrix3d SmartModel::default_outcome_coefficients(SmartDesign design, OutcomeReading reading) {
  Eigen::Matrix3d c;
  const double z1_in_y3 = reading == OutcomeReading::kLiteral ? 1.0 : 1.0 / 3;
  switch (design) {
    case SmartDesign::kS1:
      c << 1, 0, 0,
           0, 1, 0,
           z1_in_y3, 1.0 / 3, 1.0 / 3;
      break;
    case SmartDesign::kS2:
      c << 1, 0.1, 0.1,
           0, 0.2, 1,
           0.5, 0.5, 1.0 / 3;
      break;
    case SmartDesign::kS3:  // (Z4, Z6, Z5) over columns (Z4, Z5, Z6)
      c << 1, 0, 0,
           0, 0, 1,
           0, 1, 0;
      break;
    case SmartDesign::kS4:  // (Z5, Z6, Z4)
      c << 0, 1, 0,
           0, 0, 1,
           1, 0, 0;
      break;
  }
  return c;
}

std::vector<StageLayout> SmartModel::layout() const {
  const int p = first_collection() ? 3 : 4;
  return {{p, 2}, {p, 2}};
}

Eigen::VectorXd SmartModel::second_stage_covariates(const Eigen::VectorXd& x1, int a1,
                                                    const Eigen::VectorXd& upsilon) const {
  if (first_collection()) return 0.5 * x1 * a1 + upsilon;
  Eigen::VectorXd x2(4);
  x2(0) = 1.25 * x1(0) * a1 + upsilon(0) > 0.0 ? 1.0 : 0.0;
  x2(1) = -1.75 * x1(0) * a1 + upsilon(1) > 0.0 ? 1.0 : 0.0;
  x2(2) = 1.0 + 1.5 * x1(2) * a1 + upsilon(2);
  x2(3) = 0.5 * x1(2) * a1 + upsilon(3);
  return x2;
}

Eigen::VectorXd SmartModel::z_values(const Eigen::VectorXd& x1, int a1, const Eigen::VectorXd& x2, int a2,
                                     const Eigen::Vector3d& epsilon) const {
  Eigen::Vector3d z;
  if (first_collection()) {
    for (int j = 0; j < 3; ++j) {
      const auto& g = gamma_[static_cast<std::size_t>(j)];
      z(j) = g[0] + g[1] * x1(j) + g[2] * a1 + g[3] * x1(j) * a1 + g[4] * a2 + g[5] * x2(j) * a2 +
             g[6] * a1 * a2 + epsilon(j);
    }
  } else {
    const double common = 0.5 + x2(2) + 0.5 * a1 + 0.5 * x2(0) - 0.5 * x2(1);
    z(0) = 1.5 * a2 * common + epsilon(0);
    z(1) = -1.5 * a2 * common + epsilon(1);
    z(2) = 2.0 * a2 * (0.75 - x2(2) + 0.75 * a1 - 0.75 * x2(0) - 0.25 * x2(1)) + epsilon(2);
  }
  return z;
}

Eigen::VectorXd SmartModel::outcomes(const Eigen::VectorXd& x1, int a1, const Eigen::VectorXd& x2, int a2,
                                     const Eigen::Vector3d& epsilon) const {
  return coefficients_ * z_values(x1, a1, x2, a2, epsilon);
}

Eigen::VectorXd SmartModel::draw_covariates(const Trajectory& t, int stage, Rng& rng) const {
  const int p = first_collection() ? 3 : 4;
  if (stage == 0) return normals(rng, p);
  const Eigen::VectorXd upsilon = normals(rng, p);
  return second_stage_covariates(t.covariates[0], action_sign(t.actions[0]), upsilon);
}

Eigen::VectorXd SmartModel::draw_outcomes(const Trajectory& t, Rng& rng) const {
  const Eigen::Vector3d epsilon = normals(rng, 3);
  return outcomes(t.covariates[0], action_sign(t.actions[0]), t.covariates[1], action_sign(t.actions[1]), epsilon);
}

OracleValue oracle_conditional_value(const TrajectoryModel& model, const Regime& regime, std::size_t test_size,
                                     std::uint64_t seed, int workers) {
  if (test_size == 0) throw UsageError("oracle test size must be positive");
  // Large test sets are drawn in chunks with disjoint substreams and folded
  // in order; sums are accumulated about the first chunk's mean for accuracy.
  constexpr std::size_t kChunk = 100000;
  const int p = model.n_outcomes();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd pivot;
  for (std::size_t start = 0, c = 0; start < test_size; start += kChunk, ++c) {
    const std::size_t n = std::min(kChunk, test_size - start);
    const Dataset d = model.draw(n, &regime, derive_seed(seed, {c}), workers);
    const Eigen::MatrixXd y = d.outcome_matrix();
    if (c == 0) pivot = y.colwise().mean().transpose();
    const Eigen::MatrixXd centered = y.rowwise() - pivot.transpose();
    sum += centered.colwise().sum().transpose();
    sum_sq += centered.array().square().matrix().colwise().sum().transpose();
  }
  const auto n = static_cast<double>(test_size);
  OracleValue out;
  const Eigen::VectorXd mean_c = sum / n;
  out.mean = pivot + mean_c;
  const Eigen::VectorXd var = ((sum_sq / n).array() - mean_c.array().square()).max(0.0).matrix();
  out.standard_error = test_size > 1 ? (var * n / (n - 1) / n).cwiseSqrt().eval() : Eigen::VectorXd::Zero(p).eval();
  return out;
}

}  // namespace pdtr
