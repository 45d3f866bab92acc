#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pdtr/data.hpp"
#include "pdtr/irl.hpp"
#include "pdtr/qmodel.hpp"
#include "pdtr/regime.hpp"

namespace pdtr {

// zeta(i, k) = 1 if trajectory i followed the regime for its first k stages
// (k = 0..K, zeta(i, 0) = 1); product(i, k) = prod_{s<k} P(A^s | H^s).
struct CoarseningWeights {
  Eigen::MatrixXi zeta;
  Eigen::MatrixXd product;

  static CoarseningWeights compute(const Dataset& data, const Regime& regime);
};

struct WaldInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double v) const { return lower <= v && v <= upper; }
};

// Covariance behind the intervals: kAipw is the (1/m) covariance of the
// per-row AIPW terms; kIpw the covariance of the IPW vectors Y zeta^K / prod P.
enum class CovarianceKind { kAipw, kIpw };

std::string covariance_name(CovarianceKind k);
CovarianceKind parse_covariance(const std::string& name);

struct ValueEstimate {
  Eigen::VectorXd value;
  Eigen::MatrixXd sigma_hat;  // the covariance selected by `covariance`
  Eigen::MatrixXd sigma_ipw;
  Eigen::MatrixXd sigma_aipw;
  CovarianceKind covariance = CovarianceKind::kAipw;
  int m = 0;
  double alpha = 0.05;
  std::vector<WaldInterval> intervals;
  double chi2_radius = 0.0;  // chi^2_{p_y, 1-alpha} quantile
};

// Y zeta^K / prod P for every row (m x p_y).
Eigen::MatrixXd ipw_terms(const Dataset& data, const Regime& regime);

// (1/m) sum (w_i - w_bar)(w_i - w_bar)' of the IPW vectors.
Eigen::MatrixXd sigma_hat(const Dataset& data, const Regime& regime);
Eigen::MatrixXd population_covariance(const Eigen::MatrixXd& rows);

// Per-row AIPW contributions (m x p_y); their mean is the estimate.
Eigen::MatrixXd aipw_terms(const Dataset& data, const Regime& regime, const QModelStack& stack);

ValueEstimate aipw_value(const Dataset& data, const Regime& regime, const QModelStack& stack, double alpha = 0.05,
                         CovarianceKind covariance = CovarianceKind::kAipw);

// Fills intervals and chi2_radius of est for the given level.
void set_confidence(ValueEstimate& est, double alpha);

class ConfidenceEllipsoid {
 public:
  ConfidenceEllipsoid(const ValueEstimate& est, double alpha);

  double statistic(const Eigen::VectorXd& nu) const;  // m (V - nu)' S^+ (V - nu)
  bool contains(const Eigen::VectorXd& nu) const { return statistic(nu) <= radius_; }
  double radius() const { return radius_; }
  bool pseudo_inverse() const { return pseudo_; }

 private:
  Eigen::VectorXd center_;
  Eigen::MatrixXd precision_;
  int m_ = 0;
  double radius_ = 0.0;
  bool pseudo_ = false;
};

struct LambdaSetResult {
  std::vector<bool> member;
  std::vector<double> ratio;
  double coverage = 0.0;  // fraction of grid points in the set
  double shift = 0.0;
  double reference_value = 0.0;
};

// Universal-inference set {lambda : V_lambda / V_lambda_hat <= 1/alpha} with
// V_lambda the plug-in composite value on `eval_data` (on the raw scale, or
// standardized with the fitting half's map when one is given). Values are shifted by a constant so that the smallest
// per-row composite and every V_lambda are >= min_positive.
LambdaSetResult universal_lambda_set(const Dataset& eval_data, const Regime& regime, const FeatureBasis& basis,
                                     const EngineConfig& engine, const std::optional<Standardization>& standardization,
                                     const Eigen::VectorXd& lambda_hat, const std::vector<Eigen::VectorXd>& grid,
                                     double alpha, double min_positive = 0.1);

double normal_quantile(double p);
double chi2_quantile(int dof, double p);

}  // namespace pdtr
