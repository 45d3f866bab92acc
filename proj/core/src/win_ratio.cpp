#include "pdtr/win_ratio.hpp"

#include <array>
#include <cmath>

#include "pdtr/error.hpp"
#include "pdtr/rng.hpp"

namespace pdtr {

void WinRatioSpec::validate(int p_y) const {
  if (static_cast<int>(margins.size()) != p_y) throw UsageError("win ratio needs one margin per outcome");
  if (!kinds.empty() && static_cast<int>(kinds.size()) != p_y)
    throw UsageError("win ratio needs one dissimilarity kind per outcome");
  for (double t : margins)
    if (!(t >= 0.0)) throw UsageError("win ratio margins must be nonnegative");
  if (pairs < 1) throw UsageError("win ratio needs at least one pair");
}

WinRatioResult compare_outcomes(const Eigen::MatrixXd& ya, const Eigen::MatrixXd& yb, const WinRatioSpec& spec) {
  const int p = static_cast<int>(ya.cols());
  spec.validate(p);
  if (ya.rows() != yb.rows() || yb.cols() != p) throw UsageError("paired outcome matrices differ in shape");
  DissimilaritySpec d;
  d.kinds = spec.kinds.empty() ? std::vector<DissimilarityKind>(static_cast<std::size_t>(p), DissimilarityKind::kAbsoluteDifference)
                               : spec.kinds;
  d.thresholds = spec.margins;
  std::size_t wins_a = 0, wins_b = 0;
  std::vector<std::size_t> decided(static_cast<std::size_t>(p), 0), decided_a(static_cast<std::size_t>(p), 0);
  for (Eigen::Index i = 0; i < ya.rows(); ++i) {
    for (int l = 0; l < p; ++l) {
      if (dissimilarity(d, l, ya(i, l), yb(i, l)) > spec.margins[static_cast<std::size_t>(l)]) {
        ++decided[static_cast<std::size_t>(l)];
        if (ya(i, l) > yb(i, l)) {
          ++wins_a;
          ++decided_a[static_cast<std::size_t>(l)];
        } else {
          ++wins_b;
        }
        break;
      }
    }
  }
  WinRatioResult r;
  r.pairs = static_cast<std::size_t>(ya.rows());
  const auto n = static_cast<double>(r.pairs);
  r.win_a = static_cast<double>(wins_a) / n;
  r.win_b = static_cast<double>(wins_b) / n;
  // complement rather than count / n so the three proportions sum to 1.0 in floating point
  r.tie = 1.0 - (r.win_a + r.win_b);
  for (int l = 0; l < p; ++l)
    if (decided[static_cast<std::size_t>(l)] > 0)
      r.wr_sum_of_conditionals +=
          static_cast<double>(decided_a[static_cast<std::size_t>(l)]) / static_cast<double>(decided[static_cast<std::size_t>(l)]);
  r.decided_at = std::move(decided);
  return r;
}

WinRatioResult win_ratio(const TrajectoryModel& model, const Regime& regime_a, const Regime& regime_b,
                         const WinRatioSpec& spec, int workers) {
  spec.validate(model.n_outcomes());
  const bool a_first = regime_a.content_hash() <= regime_b.content_hash();
  const std::uint64_t seed_a = derive_seed(spec.seed, {a_first ? 0u : 1u});
  const std::uint64_t seed_b = derive_seed(spec.seed, {a_first ? 1u : 0u});
  const Eigen::MatrixXd ya = model.draw(spec.pairs, &regime_a, seed_a, workers).outcome_matrix();
  const Eigen::MatrixXd yb = model.draw(spec.pairs, &regime_b, seed_b, workers).outcome_matrix();
  return compare_outcomes(ya, yb, spec);
}

std::vector<std::array<int, 3>> cyclic_triples(const std::vector<std::vector<WinRatioResult>>& table) {
  const int n = static_cast<int>(table.size());
  auto beats = [&](int i, int j) { return table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].win_a >
                                          table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].win_b; };
  std::vector<std::array<int, 3>> out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (i < j && i < k && j != k && beats(i, j) && beats(j, k) && beats(k, i)) out.push_back({i, j, k});
  return out;
}

}  // namespace pdtr
