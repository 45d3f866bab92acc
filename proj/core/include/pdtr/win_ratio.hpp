#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pdtr/prioritized.hpp"
#include "pdtr/regime.hpp"
#include "pdtr/simulation.hpp"

namespace pdtr {

struct WinRatioSpec {
  std::vector<double> margins;  // theta_l >= 0 (+inf allowed)
  std::vector<DissimilarityKind> kinds;
  std::size_t pairs = 100000;
  std::uint64_t seed = 1;

  void validate(int p_y) const;
};

struct WinRatioResult {
  double win_a = 0.0;
  double win_b = 0.0;
  double tie = 0.0;
  // Sum over l of P(a better at l | l is the first decisive outcome).
  double wr_sum_of_conditionals = 0.0;
  std::vector<std::size_t> decided_at;  // pair counts decided at each outcome
  std::size_t pairs = 0;
};

// Scores paired outcome vectors (rows of ya and yb): the first outcome whose
// dissimilarity exceeds its margin decides the pair for the larger value.
WinRatioResult compare_outcomes(const Eigen::MatrixXd& ya, const Eigen::MatrixXd& yb, const WinRatioSpec& spec);

// Draws spec.pairs independent trajectories under each regime and compares
// them pairwise. The two draw streams are assigned by the regimes' content
// hashes so swapping the arguments mirrors the pairing exactly.
WinRatioResult win_ratio(const TrajectoryModel& model, const Regime& regime_a, const Regime& regime_b,
                         const WinRatioSpec& spec, int workers = 1);

// Triples (i, j, k) with WR(i, j), WR(j, k), WR(k, i) all favouring the first
// regime (win > loss), from a matrix of pairwise results indexed [i][j].
std::vector<std::array<int, 3>> cyclic_triples(const std::vector<std::vector<WinRatioResult>>& table);

}  // namespace pdtr
