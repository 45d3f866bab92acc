#include <gtest/gtest.h>

#include <memory>

#include "pdtr/error.hpp"
#include "pdtr/regime.hpp"
#include "pdtr/simulation.hpp"

using namespace pdtr;

namespace {

// One-stage stack whose only model returns fixed per-action values.
std::shared_ptr<const QModelStack> constant_stack(const Eigen::MatrixXd& per_action) {
  // linear basis on a 1-covariate, 2-action stage: features [1, x, d, x d]
  QModelStack s;
  s.basis = FeatureBasis::linear({{1, 2}});
  Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(4, per_action.cols());
  coef.row(0) = per_action.row(0);
  coef.row(2) = per_action.row(1) - per_action.row(0);
  s.stages.push_back(std::make_shared<const StageModel>(0, StageModel::Linear{coef}));
  s.downstream = "none";
  return std::make_shared<const QModelStack>(std::move(s));
}

Trajectory one_stage(ActionMask mask) {
  Trajectory t;
  t.id = "t";
  t.covariates = {Eigen::VectorXd::Constant(1, 0.3)};
  t.actions = {0};
  t.feasible = {std::move(mask)};
  t.propensities = {1.0};
  t.outcomes = Eigen::VectorXd::Zero(3);
  return t;
}

}  // namespace

TEST(Simplex, SizesAndSums) {
  const auto w = sample_simplex(1000, 3, 42);
  ASSERT_EQ(w.size(), 1003u);
  for (const auto& v : w) {
    EXPECT_NEAR(v.values().sum(), 1.0, 1e-10);
    EXPECT_GE(v.values().minCoeff(), 0.0);
  }
  for (int l = 0; l < 3; ++l) EXPECT_EQ(w[1000 + static_cast<std::size_t>(l)], WeightVector::vertex(3, l));
  const auto single = sample_simplex(1, 1, 1);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_DOUBLE_EQ(single[0](0), 1.0);
}

TEST(Simplex, UniformMoments) {
  const auto w = sample_simplex(100000, 3, 9);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int i = 0; i < 100000; ++i) mean += w[static_cast<std::size_t>(i)].values();
  mean /= 100000.0;
  // Independent check: Dirichlet(1,1,1) has mean 1/3 and sd sqrt(2/36) per coordinate.
  for (int l = 0; l < 3; ++l) EXPECT_NEAR(mean(l), 1.0 / 3.0, 0.01);
}

TEST(Simplex, Reproducible) {
  const auto a = sample_simplex(10, 4, 3);
  const auto b = sample_simplex(10, 4, 3);
  EXPECT_EQ(a, b);
}

TEST(WeightVector, RejectsOffSimplex) {
  EXPECT_THROW(WeightVector(Eigen::Vector2d(0.7, 0.7)), UsageError);
  EXPECT_THROW(WeightVector(Eigen::Vector2d(-0.1, 1.1)), UsageError);
}

TEST(GreedyRule, ArgmaxAndTies) {
  Eigen::MatrixXd v(2, 3);
  v << 1.0, 5.0, 0.0,  // action 0
      2.0, 0.0, 0.0;   // action 1
  const auto stack = constant_stack(v);
  const Trajectory t = one_stage({1, 1});
  const History h{&t, 0};
  EXPECT_EQ(greedy_action(*stack, Eigen::Vector3d(1, 0, 0), h), 1);
  EXPECT_EQ(greedy_action(*stack, Eigen::Vector3d(0, 1, 0), h), 0);
  EXPECT_EQ(greedy_action(*stack, Eigen::Vector3d(0, 0, 1), h), 0);  // exact tie -> lower code
  // positive rescaling leaves the argmax unchanged
  EXPECT_EQ(greedy_action(*stack, Eigen::Vector3d(7, 0, 0), h), 1);
}

TEST(GreedyRule, SingletonFeasibleSetIsForced) {
  Eigen::MatrixXd v(2, 3);
  v << 1.0, 1.0, 1.0, 9.0, 9.0, 9.0;
  const auto stack = constant_stack(v);
  const Trajectory t = one_stage({1, 0});
  EXPECT_EQ(greedy_action(*stack, Eigen::Vector3d(1, 0, 0), History{&t, 0}), 0);
}

TEST(StageRuleRegime, FixedFallsBackToFeasible) {
  const StageRuleRegime r = StageRuleRegime::fixed({1});
  const Trajectory ok = one_stage({1, 1});
  const Trajectory forced = one_stage({1, 0});
  EXPECT_EQ(r.action(History{&ok, 0}), 1);
  EXPECT_EQ(r.action(History{&forced, 0}), 0);
}

TEST(StageRuleRegime, TabulatedUnknownKeyThrows) {
  const Trajectory t = one_stage({1, 1});
  StageRuleRegime::Tabulated tab;
  tab.table[history_key(History{&t, 0})] = 1;
  const StageRuleRegime r({tab}, "tab");
  EXPECT_EQ(r.action(History{&t, 0}), 1);
  Trajectory other = t;
  other.covariates[0](0) = 0.9;
  EXPECT_THROW(r.action(History{&other, 0}), DataError);
}

TEST(StageRuleRegime, NeverEmitsInfeasibleActions) {
  const SmartModel model(SmartDesign::kS1);
  Dataset d = model.draw(300, nullptr, 4);
  std::vector<Trajectory> rows = d.trajectories();
  for (std::size_t i = 0; i < rows.size(); i += 3) {
    rows[i].feasible[1] = {1, 0};
    rows[i].actions[1] = 0;
    rows[i].propensities[1] = 1.0;
  }
  const Dataset masked(d.layout(), d.outcome_names(), rows);
  const StageRuleRegime r = StageRuleRegime::fixed({1, 1});
  for (std::size_t i = 0; i < masked.size(); ++i)
    for (int k = 0; k < 2; ++k) {
      const History h = masked.history(i, k);
      EXPECT_TRUE(h.is_feasible(r.action(h)));
    }
}
