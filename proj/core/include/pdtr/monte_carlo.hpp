#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "pdtr/inference.hpp"
#include "pdtr/irl.hpp"
#include "pdtr/prioritized.hpp"
#include "pdtr/qmodel.hpp"
#include "pdtr/simulation.hpp"

namespace pdtr {

// Method names: "prioritized", "qlearn_y<l>" (1-based outcome), the alias
// "qlearn_per_outcome" expanding to every outcome, "composite_average",
// "tuned_composite" and "fixed" (every stage plays action code 1).
std::vector<std::string> expand_methods(const std::vector<std::string>& methods, int p_y);

// Fits the regimes named by expand_methods on one dataset. The prioritized
// regime is fit once and shared with tuned_composite, which composes with
// its estimated lambda.
class MethodFitter {
 public:
  MethodFitter(const Dataset& data, FeatureBasis basis, EngineConfig engine, DissimilaritySpec spec, int n_lambda,
               std::uint64_t simplex_seed, OutcomeScale composite_scale = OutcomeScale::kRaw);

  std::shared_ptr<const Regime> fit(const std::string& method);
  std::shared_ptr<const PrioritizedRegime> prioritized();
  // lambda-hat of the last tuned_composite fit (empty otherwise).
  const Eigen::VectorXd& lambda_hat() const { return lambda_hat_; }

 private:
  const Dataset& data_;
  FeatureBasis basis_;
  EngineConfig engine_;
  DissimilaritySpec spec_;
  int n_lambda_;
  std::uint64_t simplex_seed_;
  OutcomeScale scale_;
  std::shared_ptr<const PrioritizedRegime> prioritized_;
  Eigen::VectorXd lambda_hat_;
};

struct MCConfig {
  SmartDesign design = SmartDesign::kS1;
  OutcomeReading reading = OutcomeReading::kAveraged;
  OutcomeScale composite_scale = OutcomeScale::kRaw;
  std::size_t n = 1000;
  std::size_t reps = 100;
  std::size_t test_size = 10000;
  std::vector<std::string> methods = {"prioritized", "qlearn_per_outcome", "composite_average", "tuned_composite"};
  double alpha = 0.05;
  CovarianceKind covariance = CovarianceKind::kAipw;
  std::uint64_t seed = 1;
  int n_lambda = 1000;
  EngineConfig engine;
  std::optional<std::vector<double>> delta;  // default_delta(design) when unset
  std::vector<DissimilarityKind> kinds;      // absolute differences when empty
  int workers = 1;

  void validate() const;
  DissimilaritySpec dissimilarity() const;
  nlohmann::json to_json() const;  // excludes workers
};

// One fitted regime in one replication.
struct MCRecord {
  std::size_t rep = 0;
  std::string method;
  Eigen::VectorXd oracle_value;  // conditional value from the test set
  Eigen::VectorXd estimate;      // AIPWE on the evaluation half
  std::vector<bool> covered;     // marginal interval contains oracle_value
  std::vector<bool> covered_ipw;  // same with the IPW covariance
  Eigen::VectorXd lambda_hat;    // tuned_composite only
};

struct MCSummaryRow {
  std::string method;
  int outcome = 0;  // 0-based
  double mean_value = 0.0;
  double mc_se = 0.0;
  double coverage = 0.0;
  double coverage_ipw = 0.0;
  std::size_t reps = 0;
};

struct MCResult {
  MCConfig config;
  std::vector<MCRecord> records;  // ordered by (rep, method)
  std::vector<std::size_t> failed_reps;
  std::vector<MCSummaryRow> summary;
};

// Runs one replication; exposed for tests.
std::vector<MCRecord> run_replication(const SmartModel& model, const MCConfig& config, std::size_t rep);

// Replications run in parallel, each on its own substreams; failed
// replications are logged and excluded; more than 5% failures throws.
MCResult run_mc(const SmartModel& model, const MCConfig& config);
// Builds the model from config.design and config.reading.
MCResult run_mc(const MCConfig& config);

// Per-method, per-outcome summary over records whose rep < max_rep.
std::vector<MCSummaryRow> summarize(const std::vector<MCRecord>& records, const std::vector<std::string>& methods,
                                    std::size_t max_rep = static_cast<std::size_t>(-1));

// CSV: design, method, outcome, mean_value, mc_se, coverage, reps, n, seed.
std::string results_csv(const MCResult& result);
nlohmann::json results_json(const MCResult& result);

}  // namespace pdtr
