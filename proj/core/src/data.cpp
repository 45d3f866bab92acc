#include "pdtr/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include <spdlog/spdlog.h>

#include "pdtr/error.hpp"
#include "pdtr/rng.hpp"

namespace pdtr {

double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

bool History::is_feasible(int a) const {
  const ActionMask& m = feasible();
  return a >= 0 && a < static_cast<int>(m.size()) && m[a] != 0;
}

Eigen::VectorXd Standardization::apply(const Eigen::VectorXd& y) const {
  return (y - mean).cwiseQuotient(scale);
}

Eigen::MatrixXd Standardization::apply_rows(const Eigen::MatrixXd& y) const {
  Eigen::MatrixXd out = y.rowwise() - mean.transpose();
  return out.array().rowwise() / scale.transpose().array();
}

Dataset::Dataset(std::vector<StageLayout> layout, std::vector<std::string> outcome_names,
                 std::vector<Trajectory> trajectories)
    : layout_(std::move(layout)),
      outcome_names_(std::move(outcome_names)),
      trajectories_(std::move(trajectories)) {
  validate();
}

void Dataset::validate() const {
  const int k_stages = n_stages();
  const int p_y = n_outcomes();
  for (std::size_t i = 0; i < trajectories_.size(); ++i) {
    const Trajectory& t = trajectories_[i];
    auto fail = [&](const std::string& msg) {
      throw DataError("row " + std::to_string(i + 1) + " (id '" + t.id + "'): " + msg);
    };
    if (t.n_stages() != k_stages || static_cast<int>(t.covariates.size()) != k_stages ||
        static_cast<int>(t.feasible.size()) != k_stages ||
        static_cast<int>(t.propensities.size()) != k_stages)
      fail("expected " + std::to_string(k_stages) + " stages");
    for (int k = 0; k < k_stages; ++k) {
      const StageLayout& sl = layout_[k];
      if (t.covariates[k].size() != sl.covariate_dim)
        fail("stage " + std::to_string(k + 1) + " covariate dimension mismatch");
      if (!t.covariates[k].allFinite())
        fail("non-finite covariate at stage " + std::to_string(k + 1));
      if (static_cast<int>(t.feasible[k].size()) != sl.n_actions)
        fail("stage " + std::to_string(k + 1) + " feasibility mask has wrong length");
      const int a = t.actions[k];
      if (a < 0 || a >= sl.n_actions || t.feasible[k][a] == 0)
        fail("action " + std::to_string(a) + " infeasible at stage " + std::to_string(k + 1));
      const double p = t.propensities[k];
      if (!(p > 0.0 && p <= 1.0))
        fail("propensity at stage " + std::to_string(k + 1) + " outside (0,1]");
      const auto n_feasible = std::count(t.feasible[k].begin(), t.feasible[k].end(), 1);
      if (n_feasible == 1 && p != 1.0)
        fail("singleton feasible set requires propensity 1 at stage " + std::to_string(k + 1));
    }
    if (t.outcomes.size() != p_y) fail("expected " + std::to_string(p_y) + " outcomes");
    if (!t.outcomes.allFinite()) fail("non-finite outcome");
  }
}

Eigen::MatrixXd Dataset::outcome_matrix() const {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(size()), n_outcomes());
  for (std::size_t i = 0; i < size(); ++i) y.row(static_cast<Eigen::Index>(i)) = trajectories_[i].outcomes.transpose();
  return y;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.layout_ = layout_;
  out.outcome_names_ = outcome_names_;
  out.standardization_ = standardization_;
  out.trajectories_.reserve(rows.size());
  for (std::size_t r : rows) out.trajectories_.push_back(trajectories_.at(r));
  return out;
}

Dataset Dataset::replay_standardization(const Dataset& other) const {
  if (!standardization_) throw DataError("dataset carries no standardization to replay");
  return with_standardization(other, *standardization_);
}

Dataset with_standardization(const Dataset& data, const Standardization& s) {
  if (s.mean.size() != data.n_outcomes())
    throw DataError("standardization length does not match outcome count");
  Dataset out = data;
  for (Trajectory& t : out.trajectories_) t.outcomes = s.apply(t.outcomes);
  out.standardization_ = s;
  return out;
}

Dataset standardize_outcomes(const Dataset& data) {
  const int p_y = data.n_outcomes();
  Standardization s;
  s.mean = Eigen::VectorXd::Zero(p_y);
  s.scale = Eigen::VectorXd::Ones(p_y);
  s.constant.assign(p_y, false);
  if (!data.empty()) {
    const Eigen::MatrixXd y = data.outcome_matrix();
    const double n = static_cast<double>(y.rows());
    s.mean = y.colwise().mean().transpose();
    for (int l = 0; l < p_y; ++l) {
      const double var = (y.col(l).array() - s.mean(l)).square().sum() / n;
      if (var > 0.0) {
        s.scale(l) = std::sqrt(var);
      } else {
        s.constant[l] = true;
        spdlog::warn("outcome '{}' is constant; scale fixed at 1", data.outcome_names()[l]);
      }
    }
  }
  return with_standardization(data, s);
}

SplitResult split_even(const Dataset& data, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (n < 4) throw DataError("split_even needs at least 4 rows, got " + std::to_string(n));
  Rng rng = make_stream(seed, {0x5b1u});
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with uniform01 so the permutation is portable across
  // standard library implementations.
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  SplitResult out;
  if (n % 2 == 1) {
    out.dropped = order.back();
    order.pop_back();
    spdlog::warn("odd sample size {}: dropped row {} (id '{}') before splitting", n,
                 *out.dropped + 1, data[*out.dropped].id);
  }
  const std::size_t m = order.size() / 2;
  std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(m), order.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  out.first = data.subset(a);
  out.second = data.subset(b);
  return out;
}

namespace {

void hash_bytes(std::uint64_t& h, const void* p, std::size_t len) {
  const auto* b = static_cast<const unsigned char*>(p);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= b[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

std::uint64_t row_hash(const Trajectory& t) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int k = 0; k < t.n_stages(); ++k) {
    hash_bytes(h, t.covariates[k].data(), sizeof(double) * static_cast<std::size_t>(t.covariates[k].size()));
    hash_bytes(h, &t.actions[k], sizeof(int));
  }
  hash_bytes(h, t.outcomes.data(), sizeof(double) * static_cast<std::size_t>(t.outcomes.size()));
  return h;
}

}  // namespace pdtr
