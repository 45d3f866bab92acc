#include "pdtr/inference.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <spdlog/spdlog.h>

#include "pdtr/backward.hpp"
#include "pdtr/error.hpp"

namespace pdtr {
namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
}

std::vector<History> stage_histories(const Dataset& data, int stage) {
  std::vector<History> hs(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) hs[i] = data.history(i, stage);
  return hs;
}

}  // namespace

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

double chi2_quantile(int dof, double p) {
  return boost::math::quantile(boost::math::chi_squared(static_cast<double>(dof)), p);
}

CoarseningWeights CoarseningWeights::compute(const Dataset& data, const Regime& regime) {
  const auto m = static_cast<Eigen::Index>(data.size());
  const int k_stages = data.n_stages();
  CoarseningWeights w;
  w.zeta = Eigen::MatrixXi::Ones(m, k_stages + 1);
  w.product = Eigen::MatrixXd::Ones(m, k_stages + 1);
  for (int s = 0; s < k_stages; ++s) {
    const auto acts = regime.actions(stage_histories(data, s));
    for (Eigen::Index i = 0; i < m; ++i) {
      const Trajectory& t = data[static_cast<std::size_t>(i)];
      const double p = t.propensities[static_cast<std::size_t>(s)];
      if (!(p > 0.0)) throw DataError("trajectory '" + t.id + "': zero propensity at stage " + std::to_string(s + 1));
      const bool follows = acts[static_cast<std::size_t>(i)] == t.actions[static_cast<std::size_t>(s)];
      w.zeta(i, s + 1) = w.zeta(i, s) && follows ? 1 : 0;
      w.product(i, s + 1) = w.product(i, s) * p;
    }
  }
  return w;
}

Eigen::MatrixXd ipw_terms(const Dataset& data, const Regime& regime) {
  const CoarseningWeights w = CoarseningWeights::compute(data, regime);
  const int k = data.n_stages();
  Eigen::MatrixXd out = data.outcome_matrix();
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) *= w.zeta(i, k) / w.product(i, k);
  return out;
}

Eigen::MatrixXd population_covariance(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 2) throw UsageError("covariance needs at least two evaluation rows");
  const Eigen::MatrixXd centered = rows.rowwise() - rows.colwise().mean();
  Eigen::MatrixXd s = centered.transpose() * centered / static_cast<double>(rows.rows());
  return (s + s.transpose()) / 2.0;
}

Eigen::MatrixXd sigma_hat(const Dataset& data, const Regime& regime) {
  return population_covariance(ipw_terms(data, regime));
}

Eigen::MatrixXd aipw_terms(const Dataset& data, const Regime& regime, const QModelStack& stack) {
  if (stack.n_stages() != data.n_stages()) throw UsageError("Q stack stage count does not match data");
  const CoarseningWeights w = CoarseningWeights::compute(data, regime);
  const int k_stages = data.n_stages();
  Eigen::MatrixXd out = data.outcome_matrix();
  if (stack.n_targets() != out.cols()) throw UsageError("Q stack target count does not match outcomes");
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) *= w.zeta(i, k_stages) / w.product(i, k_stages);
  for (int s = 0; s < k_stages; ++s) {
    const auto acts = regime.actions(stage_histories(data, s));
    const Eigen::MatrixXd q = stack.stages[static_cast<std::size_t>(s)]->predict_rows(stack.basis.design(data, s, acts));
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double c = w.zeta(i, s) / w.product(i, s) - w.zeta(i, s + 1) / w.product(i, s + 1);
      if (c != 0.0) out.row(i) += c * q.row(i);
    }
  }
  return out;
}

void set_confidence(ValueEstimate& est, double alpha) {
  check_alpha(alpha);
  est.alpha = alpha;
  const double z = normal_quantile(1.0 - alpha / 2.0);
  est.intervals.clear();
  for (Eigen::Index l = 0; l < est.value.size(); ++l) {
    const double half = z * std::sqrt(std::max(0.0, est.sigma_hat(l, l)) / est.m);
    est.intervals.push_back({est.value(l) - half, est.value(l) + half});
  }
  est.chi2_radius = chi2_quantile(static_cast<int>(est.value.size()), 1.0 - alpha);
}

std::string covariance_name(CovarianceKind k) { return k == CovarianceKind::kAipw ? "aipw" : "ipw"; }

CovarianceKind parse_covariance(const std::string& name) {
  if (name == "aipw") return CovarianceKind::kAipw;
  if (name == "ipw") return CovarianceKind::kIpw;
  throw UsageError("unknown covariance '" + name + "' (expected aipw or ipw)");
}

ValueEstimate aipw_value(const Dataset& data, const Regime& regime, const QModelStack& stack, double alpha,
                         CovarianceKind covariance) {
  check_alpha(alpha);
  if (data.size() < 2) throw UsageError("evaluation needs at least two rows");
  ValueEstimate est;
  est.m = static_cast<int>(data.size());
  const Eigen::MatrixXd terms = aipw_terms(data, regime, stack);
  est.value = terms.colwise().mean().transpose();
  est.sigma_aipw = population_covariance(terms);
  est.sigma_ipw = sigma_hat(data, regime);
  est.covariance = covariance;
  est.sigma_hat = covariance == CovarianceKind::kAipw ? est.sigma_aipw : est.sigma_ipw;
  set_confidence(est, alpha);
  return est;
}

ConfidenceEllipsoid::ConfidenceEllipsoid(const ValueEstimate& est, double alpha)
    : center_(est.value), m_(est.m), radius_(chi2_quantile(static_cast<int>(est.value.size()), 1.0 - alpha)) {
  check_alpha(alpha);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(est.sigma_hat);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double tol = std::max(1e-12, ev.cwiseAbs().maxCoeff() * 1e-10);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index j = 0; j < ev.size(); ++j) {
    if (ev(j) > tol) inv(j) = 1.0 / ev(j);
    else pseudo_ = true;
  }
  if (pseudo_) spdlog::warn("covariance estimate is singular; ellipsoid uses the pseudo-inverse");
  precision_ = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

double ConfidenceEllipsoid::statistic(const Eigen::VectorXd& nu) const {
  const Eigen::VectorXd d = center_ - nu;
  return m_ * d.dot(precision_ * d);
}

LambdaSetResult universal_lambda_set(const Dataset& eval_data, const Regime& regime, const FeatureBasis& basis,
                                     const EngineConfig& engine, const std::optional<Standardization>& standardization,
                                     const Eigen::VectorXd& lambda_hat, const std::vector<Eigen::VectorXd>& grid,
                                     double alpha, double min_positive) {
  check_alpha(alpha);
  if (grid.empty()) throw UsageError("empty lambda grid");
  const Dataset std_data = standardization ? with_standardization(eval_data, *standardization) : eval_data;
  const Eigen::MatrixXd y = std_data.outcome_matrix();
  const QModelStack stack = backward_induce(std_data, basis, engine, &regime);
  const auto acts = regime.actions(stage_histories(std_data, 0));
  const Eigen::VectorXd v =
      stack.stages.front()->predict_rows(basis.design(std_data, 0, acts)).colwise().mean().transpose();

  std::vector<double> values(grid.size());
  double lowest = lambda_hat.dot(v);
  double lowest_row = (y * lambda_hat).minCoeff();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    values[g] = grid[g].dot(v);
    lowest = std::min(lowest, values[g]);
    lowest_row = std::min(lowest_row, (y * grid[g]).minCoeff());
  }
  LambdaSetResult out;
  out.shift = std::max(0.0, min_positive - std::min(lowest, lowest_row));
  spdlog::debug("universal lambda set: composite shift {}", out.shift);
  out.reference_value = lambda_hat.dot(v) + out.shift;
  if (!(out.reference_value > 0.0)) throw NumericalError("nonpositive reference composite value after shift");
  std::size_t members = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double r = (values[g] + out.shift) / out.reference_value;
    out.ratio.push_back(r);
    out.member.push_back(r <= 1.0 / alpha);
    members += out.member.back() ? 1 : 0;
  }
  out.coverage = static_cast<double>(members) / static_cast<double>(grid.size());
  return out;
}

}  // namespace pdtr
