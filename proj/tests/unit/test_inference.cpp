#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "pdtr/backward.hpp"
#include "pdtr/error.hpp"
#include "pdtr/inference.hpp"
#include "pdtr/simulation.hpp"

using namespace pdtr;

namespace {

QModelStack zero_stack(const FeatureBasis& basis, int p_y) {
  QModelStack s;
  s.basis = basis;
  for (int k = 0; k < basis.n_stages(); ++k)
    s.stages.push_back(std::make_shared<const StageModel>(
        k, StageModel::Linear{Eigen::MatrixXd::Zero(basis.dimension(k), p_y)}));
  s.downstream = "zero";
  return s;
}

QModelStack shifted(const QModelStack& s, int from_stage, double c) {
  QModelStack out = s;
  for (int k = from_stage; k < s.n_stages(); ++k) {
    Eigen::MatrixXd coef = std::get<StageModel::Linear>(s.stages[static_cast<std::size_t>(k)]->fit()).coefficients;
    coef.row(0).array() += c;  // the intercept column
    out.stages[static_cast<std::size_t>(k)] = std::make_shared<const StageModel>(k, StageModel::Linear{coef});
  }
  return out;
}

Dataset one_outcome(const std::vector<double>& y) {
  std::vector<Trajectory> rows;
  for (std::size_t i = 0; i < y.size(); ++i) {
    Trajectory t;
    t.id = std::to_string(i);
    t.covariates = {Eigen::VectorXd::Zero(1)};
    t.actions = {1};
    t.feasible = {{1, 1}};
    t.propensities = {1.0};
    t.outcomes = Eigen::VectorXd::Constant(1, y[i]);
    rows.push_back(t);
  }
  return Dataset({{1, 2}}, {"y"}, rows);
}

}  // namespace

TEST(Coarsening, MonotoneAndStartsAtOne) {
  const SmartModel model(SmartDesign::kS1);
  const Dataset d = model.draw(300, nullptr, 2);
  const StageRuleRegime r = StageRuleRegime::fixed({1, 0});
  const auto w = CoarseningWeights::compute(d, r);
  for (Eigen::Index i = 0; i < w.zeta.rows(); ++i) {
    EXPECT_EQ(w.zeta(i, 0), 1);
    for (int k = 1; k <= 2; ++k) EXPECT_LE(w.zeta(i, k), w.zeta(i, k - 1));
    EXPECT_GT(w.product(i, 2), 0.0);
  }
}

TEST(Coarsening, ZeroPropensityNamesTrajectory) {
  const SmartModel model(SmartDesign::kS1);
  std::vector<Trajectory> rows = model.draw(10, nullptr, 2).trajectories();
  rows[3].propensities[0] = 0.0;
  rows[3].id = "subject-3";
  EXPECT_THROW(
      {
        const Dataset d(model.layout(), model.outcome_names(), rows);
        CoarseningWeights::compute(d, StageRuleRegime::fixed({1, 1}));
      },
      DataError);
}

TEST(SigmaHat, HandCases) {
  const StageRuleRegime r = StageRuleRegime::fixed({1});
  EXPECT_NEAR(sigma_hat(one_outcome({0.0, 2.0}), r)(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(sigma_hat(one_outcome({3.0, 3.0, 3.0}), r)(0, 0), 0.0, 1e-15);
  EXPECT_THROW(sigma_hat(one_outcome({1.0}), r), UsageError);
}

TEST(SigmaHat, SymmetricPsdAndOrderFree) {
  const SmartModel model(SmartDesign::kS2);
  const Dataset d = model.draw(400, nullptr, 6);
  const StageRuleRegime r = StageRuleRegime::fixed({1, 1});
  const Eigen::MatrixXd s = sigma_hat(d, r);
  EXPECT_LT((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
  std::vector<std::size_t> perm(d.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  EXPECT_LT((sigma_hat(d.subset(perm), r) - s).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Aipw, ZeroModelsGiveIpw) {
  const SmartModel model(SmartDesign::kS1);
  const Dataset d = model.draw(400, nullptr, 9);
  const StageRuleRegime r = StageRuleRegime::fixed({1, 0});
  const auto est = aipw_value(d, r, zero_stack(FeatureBasis::linear(d.layout()), 3));
  const Eigen::VectorXd ipw = ipw_terms(d, r).colwise().mean();
  EXPECT_LT((est.value - ipw).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Aipw, RegimeMatchingEveryRowTelescopes) {
  // propensities 0.5, every observed action agrees with the regime
  const SmartModel model(SmartDesign::kS1);
  const StageRuleRegime r = StageRuleRegime::fixed({1, 1});
  Dataset d = model.draw(300, &r, 4);
  std::vector<Trajectory> rows = d.trajectories();
  for (auto& t : rows) t.propensities = {0.5, 0.5};
  d = Dataset(d.layout(), d.outcome_names(), rows);
  const FeatureBasis basis = FeatureBasis::linear(d.layout());
  const QModelStack stack = backward_induce(model.draw(300, nullptr, 5), basis, EngineConfig{}, &r);
  const auto est = aipw_value(d, r, stack);
  // by hand: 4 Y + (1 - 2) Q1 + (2 - 4) Q2 averaged over rows
  Eigen::VectorXd manual = Eigen::VectorXd::Zero(3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    manual += 4.0 * d[i].outcomes;
    manual -= stack.predict(d.history(i, 0), 1);
    manual -= 2.0 * stack.predict(d.history(i, 1), 1);
  }
  manual /= static_cast<double>(d.size());
  EXPECT_LT((est.value - manual).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Aipw, InvariantToConstantShiftOfLaterStages) {
  const SmartModel model(SmartDesign::kS1);
  const StageRuleRegime r = StageRuleRegime::fixed({1, 1});
  const Dataset d = model.draw(300, &r, 4);  // recorded propensity 1 so zeta = 1 everywhere
  const FeatureBasis basis = FeatureBasis::linear(d.layout());
  const QModelStack stack = backward_induce(model.draw(300, nullptr, 5), basis, EngineConfig{}, &r);
  const auto a = aipw_value(d, r, stack);
  const auto b = aipw_value(d, r, shifted(stack, 1, 3.5));
  EXPECT_LT((a.value - b.value).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Confidence, WaldArithmetic) {
  ValueEstimate est;
  est.value = Eigen::VectorXd::Constant(1, 2.0);
  est.sigma_hat = Eigen::MatrixXd::Identity(1, 1);
  est.sigma_ipw = est.sigma_aipw = est.sigma_hat;
  est.m = 100;
  set_confidence(est, 0.05);
  EXPECT_NEAR(est.intervals[0].lower, 2.0 - 0.196, 1e-3);
  EXPECT_NEAR(est.intervals[0].upper, 2.0 + 0.196, 1e-3);
  EXPECT_NEAR(est.intervals[0].upper - 2.0, 1.959963984540054 / 10.0, 1e-12);
  EXPECT_THROW(set_confidence(est, 1.0), UsageError);
}

TEST(Confidence, EllipsoidContainsCenter) {
  const SmartModel model(SmartDesign::kS1);
  const Dataset d = model.draw(400, nullptr, 3);
  const StageRuleRegime r = StageRuleRegime::fixed({0, 1});
  const auto est = aipw_value(d, r, zero_stack(FeatureBasis::linear(d.layout()), 3));
  const ConfidenceEllipsoid e(est, 0.05);
  EXPECT_TRUE(e.contains(est.value));
  EXPECT_NEAR(e.radius(), 7.814727903251178, 1e-9);
  EXPECT_FALSE(e.contains(est.value + Eigen::Vector3d::Constant(10.0)));
}

TEST(Confidence, SingularCovarianceUsesPseudoInverse) {
  ValueEstimate est;
  est.value = Eigen::Vector2d(1.0, 1.0);
  est.sigma_hat = Eigen::Matrix2d::Zero();
  est.sigma_hat(0, 0) = 1.0;
  est.sigma_ipw = est.sigma_aipw = est.sigma_hat;
  est.m = 50;
  set_confidence(est, 0.05);
  const ConfidenceEllipsoid e(est, 0.05);
  EXPECT_TRUE(e.pseudo_inverse());
  EXPECT_TRUE(e.contains(Eigen::Vector2d(1.0, 5.0)));  // direction with no variance is ignored
}

TEST(LambdaSet, ReferenceIsMemberAndShiftLogged) {
  const SmartModel model(SmartDesign::kS1);
  const Dataset d = model.draw(500, nullptr, 7);
  const FeatureBasis basis = FeatureBasis::linear(d.layout());
  const StageRuleRegime r = StageRuleRegime::fixed({1, 1});
  const Eigen::Vector3d lam = Eigen::Vector3d(1, 1, 1).normalized();
  std::vector<Eigen::VectorXd> grid = sphere_grid(3, 500);
  grid.push_back(lam);
  const auto set = universal_lambda_set(d, r, basis, EngineConfig{}, std::nullopt, lam, grid, 0.05);
  EXPECT_TRUE(set.member.back());
  EXPECT_NEAR(set.ratio.back(), 1.0, 1e-12);
  EXPECT_GE(set.shift, 0.0);
  EXPECT_GT(set.coverage, 0.0);
  // near alpha = 1 only values not above the reference survive
  const auto tight = universal_lambda_set(d, r, basis, EngineConfig{}, std::nullopt, lam, grid, 0.999999);
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (tight.member[i]) EXPECT_LE(tight.ratio[i], 1.0 / 0.999999);
}
