#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pdtr/error.hpp"
#include "pdtr/prioritized.hpp"
#include "pdtr/simulation.hpp"
#include "discrete_instance.hpp"

using namespace pdtr;
using pdtr::testing::brute_force_select;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> col(const Eigen::MatrixXd& m, int c) {
  return std::vector<double>(m.col(c).data(), m.col(c).data() + m.rows());
}

}  // namespace

TEST(Dissimilarity, Arithmetic) {
  DissimilaritySpec abs = DissimilaritySpec::absolute({0.1});
  EXPECT_DOUBLE_EQ(dissimilarity(abs, 0, 2.0, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(dissimilarity(abs, 0, 0.7, 0.7), 0.0);
  DissimilaritySpec lr{{DissimilarityKind::kLogRatio}, {0.1}};
  EXPECT_NEAR(dissimilarity(lr, 0, std::exp(1.0), 1.0), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(dissimilarity(lr, 0, 3.0, 3.0), 0.0);
  EXPECT_THROW(dissimilarity(lr, 0, -1.0, 1.0), NumericalError);
}

TEST(EquivalenceClass, ThresholdCases) {
  const std::vector<double> v{1.0, 0.95, 0.5};
  EXPECT_EQ(equivalence_class(v, DissimilaritySpec::absolute({0.1}), 0), (std::vector<int>{0, 1}));
  EXPECT_EQ(equivalence_class(v, DissimilaritySpec::absolute({kInf}), 0), (std::vector<int>{0, 1, 2}));
  const std::vector<double> tie{0.3, 0.9, 0.2, 0.9};
  EXPECT_EQ(equivalence_class(tie, DissimilaritySpec::absolute({0.0}), 0), (std::vector<int>{1, 3}));
}

TEST(EquivalenceClass, MonotoneInThreshold) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> v(12);
    for (auto& x : v) x = z(gen);
    std::vector<int> prev;
    for (double d : {0.0, 0.1, 0.3, 0.8, 2.0, kInf}) {
      const auto cur = equivalence_class(v, DissimilaritySpec::absolute({d}), 0);
      for (int c : prev) EXPECT_NE(std::find(cur.begin(), cur.end(), c), cur.end());
      prev = cur;
    }
  }
}

TEST(Regret, Cases) {
  const DissimilaritySpec abs = DissimilaritySpec::absolute({0.1});
  const std::vector<double> v{1.0, 0.4};
  EXPECT_DOUBLE_EQ(regret(v, 0, abs, 0), 0.0);
  EXPECT_DOUBLE_EQ(regret(v, 1, abs, 0), 0.6);
  DissimilaritySpec lr{{DissimilarityKind::kLogRatio}, {0.1}};
  const std::vector<double> e{std::exp(2.0), std::exp(1.0)};
  EXPECT_NEAR(regret(e, 1, lr, 0), 1.0, 1e-12);
}

TEST(Select, ThreeCandidateInstance) {
  Eigen::MatrixXd v(3, 2);
  v << 1.0, 0.0, 0.98, 1.0, 0.2, 2.0;
  const auto spec = DissimilaritySpec::absolute({0.05, 0.05});
  const PrioritizedSelection s = select_from_values(v, spec);
  const auto oracle = brute_force_select(v, {0.05, 0.05});
  EXPECT_EQ(s.classes[0], oracle.xi[0]);
  EXPECT_EQ(s.classes[1], oracle.xi[1]);
  EXPECT_EQ(s.admissible, oracle.admissible);
  EXPECT_EQ(s.depth, oracle.depth);
  EXPECT_EQ(s.tiebreak_outcome, oracle.tiebreak);
  EXPECT_EQ(s.chosen, oracle.chosen);
  // by hand: xi1 = {0, 1}, xi2 = {2}, empty intersection, depth 1, tie-break on Y2 -> candidate 1
  EXPECT_EQ(s.chosen, 1);
  EXPECT_EQ(s.depth, 1);
  EXPECT_EQ(s.tiebreak_outcome, 1);
}

TEST(Select, MatchesBruteForceOnRandomTables) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.0, 0.6);
  for (int rep = 0; rep < 500; ++rep) {
    const int n = 2 + rep % 9, p = 1 + rep % 4;
    Eigen::MatrixXd v(n, p);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::round(z(gen) * 4.0) / 4.0;  // coarse grid forces ties
    std::vector<double> delta(static_cast<std::size_t>(p));
    for (auto& d : delta) d = std::round(u(gen) * 4.0) / 4.0;
    const auto s = select_from_values(v, DissimilaritySpec::absolute(delta));
    const auto o = brute_force_select(v, delta);
    ASSERT_EQ(s.chosen, o.chosen) << "rep " << rep;
    ASSERT_EQ(s.depth, o.depth);
    ASSERT_EQ(s.tiebreak_outcome, o.tiebreak);
  }
}

TEST(Select, SingleOutcomeIsArgmax) {
  Eigen::MatrixXd v(4, 1);
  v << 0.1, 0.7, 0.7, -2.0;
  const auto s = select_from_values(v, DissimilaritySpec::absolute({0.3}));
  EXPECT_EQ(s.tiebreak_outcome, 0);
  EXPECT_EQ(s.chosen, 1);
}

TEST(Select, VacuousThresholdsPickFirstOutcomeArgmax) {
  Eigen::MatrixXd v(3, 3);
  v << 0.0, 5.0, 5.0, 1.0, -5.0, -5.0, 0.5, 0.0, 0.0;
  const auto s = select_from_values(v, DissimilaritySpec::absolute({kInf, kInf, kInf}));
  EXPECT_EQ(s.depth, 3);
  EXPECT_EQ(s.tiebreak_outcome, 0);
  EXPECT_EQ(s.chosen, 1);
}

TEST(Utility, HandEvaluation) {
  const auto spec = DissimilaritySpec::absolute({0.1, 0.1});
  const auto w = UtilityWeights::from_interior(Eigen::Vector2d(3.0, 2.0));
  EXPECT_DOUBLE_EQ(utility(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), spec, w), 5.0);
  // B1 = 0: only the first term survives and it decreases in R1
  const double a = utility(Eigen::Vector2d(0.3, 0.0), Eigen::Vector2d(1, 1), spec, w);
  const double b = utility(Eigen::Vector2d(0.6, 0.0), Eigen::Vector2d(1, 1), spec, w);
  EXPECT_DOUBLE_EQ(a, -0.3);
  EXPECT_GT(a, b);
  // both B = (1, 0), smaller R2 wins
  const double u1 = utility(Eigen::Vector2d(0.05, 0.2), Eigen::Vector2d(1, 1), spec, w);
  const double u2 = utility(Eigen::Vector2d(0.05, 0.4), Eigen::Vector2d(1, 1), spec, w);
  EXPECT_GT(u1, u2);
  EXPECT_THROW(UtilityWeights::from_interior(Eigen::Vector2d(2.0, 3.0)), UsageError);
}

TEST(Prefers, DefinitionalCases) {
  const auto spec = DissimilaritySpec::absolute({0.1, 0.1});
  EXPECT_EQ(prefers(Eigen::Vector2d(0.05, 0.3), Eigen::Vector2d(0.05, 0.3), spec), Preference::kEquivalent);
  EXPECT_EQ(prefers(Eigen::Vector2d(0.0, 0.05), Eigen::Vector2d(0.0, 0.5), spec), Preference::kFirst);
  EXPECT_EQ(prefers(Eigen::Vector2d(0.0, 0.2), Eigen::Vector2d(0.0, 0.4), spec), Preference::kFirst);
  EXPECT_EQ(prefers(Eigen::Vector2d(0.0, 0.4), Eigen::Vector2d(0.0, 0.2), spec), Preference::kSecond);
}

TEST(PrioritizedRegime, FastPathAgreesWithFullSelection) {
  const SmartModel model(SmartDesign::kS1);
  const Dataset d = model.draw(500, nullptr, 17);
  const FeatureBasis basis = FeatureBasis::linear(d.layout());
  CandidateClass cls{sample_simplex(200, 3, 2), {0, 1}};
  const auto r = fit_prioritized(d, basis, EngineConfig{}, cls, DissimilaritySpec::absolute({0.1, 0.1, 0.1}));
  std::vector<History> h1;
  for (std::size_t i = 0; i < d.size(); ++i) h1.push_back(d.history(i, 0));
  const auto fast = r->chosen_candidates(h1);
  for (std::size_t i = 0; i < h1.size(); ++i) ASSERT_EQ(fast[i], r->select(h1[i]).chosen) << i;
}

TEST(PrioritizedRegime, VacuousThresholdsReduceToFirstOutcomeArgmax) {
  const SmartModel model(SmartDesign::kS1);
  const Dataset d = model.draw(500, nullptr, 23);
  const FeatureBasis basis = FeatureBasis::linear(d.layout());
  CandidateClass cls{sample_simplex(100, 3, 5), {0, 1}};
  const auto r = fit_prioritized(d, basis, EngineConfig{}, cls, DissimilaritySpec::absolute({kInf, kInf, kInf}));
  for (std::size_t i = 0; i < d.size(); i += 7) {
    const auto values = r->candidate_values(std::vector<History>{d.history(i, 0)}).front();
    const auto sel = r->select(d.history(i, 0));
    double best = -kInf;
    for (Eigen::Index c = 0; c < values.rows(); ++c)
      if (!std::isnan(values(c, 0))) best = std::max(best, values(c, 0));
    EXPECT_DOUBLE_EQ(values(sel.chosen, 0), best);
  }
}

TEST(PrioritizedRegime, SingleOutcomeEqualsQLearning) {
  const SmartModel model(SmartDesign::kS1);
  const Dataset full = model.draw(400, nullptr, 29);
  std::vector<Trajectory> rows = full.trajectories();
  for (auto& t : rows) t.outcomes = t.outcomes.head(1).eval();
  const Dataset d(full.layout(), {"y1"}, rows);
  const FeatureBasis basis = FeatureBasis::linear(d.layout());
  CandidateClass cls{sample_simplex(10, 1, 1), {0, 1}};
  const auto r = fit_prioritized(d, basis, EngineConfig{}, cls, DissimilaritySpec::absolute({0.2}));
  const auto q = q_learning(d, d.outcome_matrix(), Eigen::VectorXd::Ones(1), basis, EngineConfig{}, "q");
  for (std::size_t i = 0; i < d.size(); ++i)
    for (int k = 0; k < 2; ++k) EXPECT_EQ(r->action(d.history(i, k)), q->action(d.history(i, k)));
}

TEST(PrioritizedRegime, TraceHasOneRowPerHistory) {
  const SmartModel model(SmartDesign::kS1);
  const Dataset d = model.draw(60, nullptr, 31);
  CandidateClass cls{sample_simplex(20, 3, 5), {0, 1}};
  const auto r = fit_prioritized(d, FeatureBasis::linear(d.layout()), EngineConfig{}, cls,
                                 DissimilaritySpec::absolute({0.1, 0.1, 0.1}));
  const std::string csv = selection_trace_csv(*r, d);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), d.size() + 1);
}
