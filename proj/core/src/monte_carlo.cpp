#include "pdtr/monte_carlo.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "pdtr/backward.hpp"
#include "pdtr/error.hpp"
#include "pdtr/inference.hpp"
#include "pdtr/irl.hpp"
#include "pdtr/parallel.hpp"
#include "pdtr/rng.hpp"

namespace pdtr {
namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Substream tags within a replication.
enum : std::uint64_t { kTagData = 1, kTagSplit = 2, kTagSimplex = 3, kTagOracle = 4 };

}  // namespace

std::vector<std::string> expand_methods(const std::vector<std::string>& methods, int p_y) {
  std::vector<std::string> out;
  auto add = [&](const std::string& m) {
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  };
  for (const std::string& m : methods) {
    if (m == "qlearn_per_outcome") {
      for (int l = 1; l <= p_y; ++l) add("qlearn_y" + std::to_string(l));
    } else if (m == "prioritized" || m == "composite_average" || m == "tuned_composite" || m == "fixed") {
      add(m);
    } else if (m.rfind("qlearn_y", 0) == 0) {
      int l = 0;
      const char* first = m.data() + 8;
      const char* last = m.data() + m.size();
      auto res = std::from_chars(first, last, l);
      if (res.ec != std::errc() || res.ptr != last || l < 1 || l > p_y) throw UsageError("unknown method '" + m + "'");
      add(m);
    } else {
      throw UsageError("unknown method '" + m + "'");
    }
  }
  if (out.empty()) throw UsageError("no methods requested");
  return out;
}

void MCConfig::validate() const {
  if (n < 4) throw UsageError("n must be at least 4");
  if (reps < 1) throw UsageError("reps must be at least 1");
  if (test_size < 1) throw UsageError("test size must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  if (n_lambda < 1) throw UsageError("n_lambda must be at least 1");
  expand_methods(methods, 3);
  const DissimilaritySpec spec = dissimilarity();
  if (spec.thresholds.size() != 3 || spec.kinds.size() != 3)
    throw UsageError("delta and kinds need one entry per outcome (3)");
  spec.validate();
}

DissimilaritySpec MCConfig::dissimilarity() const {
  DissimilaritySpec spec;
  spec.thresholds = delta ? *delta : default_delta(design);
  spec.kinds = kinds.empty() ? std::vector<DissimilarityKind>(spec.thresholds.size(), DissimilarityKind::kAbsoluteDifference)
                             : kinds;
  return spec;
}

nlohmann::json MCConfig::to_json() const {
  const DissimilaritySpec d = dissimilarity();
  nlohmann::json kinds_json = nlohmann::json::array();
  for (auto k : d.kinds) kinds_json.push_back(dissimilarity_name(k));
  return {{"design", design_name(design)},
          {"outcome_reading", reading_name(reading)},
          {"composite_scale", scale_name(composite_scale)},
          {"n", n},
          {"reps", reps},
          {"test_size", test_size},
          {"methods", methods},
          {"alpha", alpha},
          {"covariance", covariance_name(covariance)},
          {"seed", seed},
          {"n_lambda", n_lambda},
          {"engine", engine_name(engine.kind)},
          {"delta", d.thresholds},
          {"kinds", kinds_json}};
}

MethodFitter::MethodFitter(const Dataset& data, FeatureBasis basis, EngineConfig engine, DissimilaritySpec spec,
                           int n_lambda, std::uint64_t simplex_seed, OutcomeScale composite_scale)
    : data_(data),
      basis_(std::move(basis)),
      engine_(engine),
      spec_(std::move(spec)),
      n_lambda_(n_lambda),
      simplex_seed_(simplex_seed),
      scale_(composite_scale) {}

std::shared_ptr<const PrioritizedRegime> MethodFitter::prioritized() {
  if (!prioritized_) {
    CandidateClass cls{sample_simplex(n_lambda_, data_.n_outcomes(), simplex_seed_), {0, 1}};
    prioritized_ = fit_prioritized(data_, basis_, engine_, cls, spec_);
  }
  return prioritized_;
}

std::shared_ptr<const Regime> MethodFitter::fit(const std::string& method) {
  const std::string m = expand_methods({method}, data_.n_outcomes()).front();
  lambda_hat_ = Eigen::VectorXd();
  if (m == "prioritized") return prioritized();
  const Eigen::MatrixXd y = data_.outcome_matrix();
  if (m == "composite_average")
    return q_learning(data_, y.rowwise().mean(), Eigen::VectorXd::Ones(1), basis_, engine_, m);
  if (m == "tuned_composite") {
    const CompositeSpec lambda = estimate_lambda(data_, *prioritized(), basis_, engine_, scale_);
    lambda_hat_ = lambda.lambda;
    return tuned_composite_regime(data_, lambda, basis_, engine_, scale_);
  }
  if (m == "fixed")
    return std::make_shared<const StageRuleRegime>(
        StageRuleRegime::fixed(std::vector<int>(static_cast<std::size_t>(data_.n_stages()), 1)));
  const int l = std::stoi(m.substr(8)) - 1;
  return q_learning(data_, y.col(l), Eigen::VectorXd::Ones(1), basis_, engine_, m);
}

std::vector<MCRecord> run_replication(const SmartModel& model, const MCConfig& config, std::size_t rep) {
  const int p_y = model.n_outcomes();
  const auto methods = expand_methods(config.methods, p_y);
  const Dataset data = model.draw(config.n, nullptr, derive_seed(config.seed, {rep, kTagData}));
  const SplitResult split = split_even(data, derive_seed(config.seed, {rep, kTagSplit}));
  const Dataset& fit_half = split.first;
  const Dataset& eval_half = split.second;
  const FeatureBasis basis = FeatureBasis::linear(data.layout());

  MethodFitter fitter(fit_half, basis, config.engine, config.dissimilarity(), config.n_lambda,
                      derive_seed(config.seed, {rep, kTagSimplex}), config.composite_scale);

  std::vector<MCRecord> out;
  for (const std::string& m : methods) {
    MCRecord rec;
    rec.rep = rep;
    rec.method = m;
    const std::shared_ptr<const Regime> regime = fitter.fit(m);
    if (m == "tuned_composite") rec.lambda_hat = fitter.lambda_hat();
    // Common test stream across methods within the replication.
    rec.oracle_value =
        oracle_conditional_value(model, *regime, config.test_size, derive_seed(config.seed, {rep, kTagOracle})).mean;
    const QModelStack stack = backward_induce(fit_half, basis, config.engine, regime.get());
    const ValueEstimate est = aipw_value(eval_half, *regime, stack, config.alpha, config.covariance);
    ValueEstimate ipw = est;
    ipw.sigma_hat = est.sigma_ipw;
    set_confidence(ipw, config.alpha);
    rec.estimate = est.value;
    for (int l = 0; l < p_y; ++l) {
      rec.covered.push_back(est.intervals[static_cast<std::size_t>(l)].contains(rec.oracle_value(l)));
      rec.covered_ipw.push_back(ipw.intervals[static_cast<std::size_t>(l)].contains(rec.oracle_value(l)));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<MCSummaryRow> summarize(const std::vector<MCRecord>& records, const std::vector<std::string>& methods,
                                    std::size_t max_rep) {
  std::vector<MCSummaryRow> rows;
  for (const std::string& m : methods) {
    std::vector<const MCRecord*> rs;
    for (const MCRecord& r : records)
      if (r.method == m && r.rep < max_rep) rs.push_back(&r);
    if (rs.empty()) continue;
    const int p = static_cast<int>(rs.front()->oracle_value.size());
    for (int l = 0; l < p; ++l) {
      double sum = 0.0, sum_sq = 0.0, cov = 0.0, cov_ipw = 0.0;
      for (const MCRecord* r : rs) {
        sum += r->oracle_value(l);
        cov += r->covered[static_cast<std::size_t>(l)] ? 1.0 : 0.0;
        cov_ipw += r->covered_ipw[static_cast<std::size_t>(l)] ? 1.0 : 0.0;
      }
      const auto k = static_cast<double>(rs.size());
      const double mean = sum / k;
      for (const MCRecord* r : rs) sum_sq += (r->oracle_value(l) - mean) * (r->oracle_value(l) - mean);
      MCSummaryRow row;
      row.method = m;
      row.outcome = l;
      row.mean_value = mean;
      row.mc_se = rs.size() > 1 ? std::sqrt(sum_sq / (k - 1) / k) : 0.0;
      row.coverage = cov / k;
      row.coverage_ipw = cov_ipw / k;
      row.reps = rs.size();
      rows.push_back(row);
    }
  }
  return rows;
}

MCResult run_mc(const SmartModel& model, const MCConfig& config) {
  config.validate();
  std::vector<std::vector<MCRecord>> per_rep(config.reps);
  std::vector<std::string> errors(config.reps);
  parallel_for(config.reps, config.workers, [&](std::size_t r) {
    try {
      per_rep[r] = run_replication(model, config, r);
    } catch (const Error& e) {
      errors[r] = e.what();
    }
  });
  MCResult result;
  result.config = config;
  for (std::size_t r = 0; r < config.reps; ++r) {
    if (!errors[r].empty()) {
      spdlog::warn("replication {} failed and is excluded: {}", r, errors[r]);
      result.failed_reps.push_back(r);
      continue;
    }
    for (MCRecord& rec : per_rep[r]) result.records.push_back(std::move(rec));
  }
  if (result.failed_reps.size() * 20 > config.reps)
    throw NumericalError(std::to_string(result.failed_reps.size()) + " of " + std::to_string(config.reps) +
                         " replications failed (limit 5%)");
  result.summary = summarize(result.records, expand_methods(config.methods, model.n_outcomes()));
  return result;
}

MCResult run_mc(const MCConfig& config) { return run_mc(SmartModel(config.design, config.reading), config); }

std::string results_csv(const MCResult& result) {
  std::ostringstream out;
  out << "design,method,outcome,mean_value,mc_se,coverage,reps,n,seed\n";
  for (const MCSummaryRow& row : result.summary)
    out << design_name(result.config.design) << ',' << row.method << ",y" << row.outcome + 1 << ','
        << num(row.mean_value) << ',' << num(row.mc_se) << ',' << num(row.coverage) << ',' << row.reps << ','
        << result.config.n << ',' << result.config.seed << '\n';
  return out.str();
}

nlohmann::json results_json(const MCResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const MCSummaryRow& row : result.summary)
    rows.push_back({{"method", row.method},
                    {"outcome", "y" + std::to_string(row.outcome + 1)},
                    {"mean_value", row.mean_value},
                    {"mc_se", row.mc_se},
                    {"coverage", row.coverage},
                    {"coverage_ipw", row.coverage_ipw},
                    {"reps", row.reps}});
  return {{"config", result.config.to_json()},
          {"failed_replications", result.failed_reps},
          {"summary", std::move(rows)}};
}

}  // namespace pdtr
