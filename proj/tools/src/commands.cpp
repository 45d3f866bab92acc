#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "io.hpp"
#include "pdtr/backward.hpp"
#include "pdtr/error.hpp"
#include "pdtr/inference.hpp"
#include "pdtr/irl.hpp"
#include "pdtr/monte_carlo.hpp"
#include "pdtr/prioritized.hpp"
#include "pdtr/serialize.hpp"
#include "pdtr/simulation.hpp"
#include "pdtr/win_ratio.hpp"

namespace pdtr::cli {

using nlohmann::json;

namespace {

EngineConfig make_engine(const std::string& name, std::uint64_t seed) {
  EngineConfig e;
  e.kind = parse_engine(name);
  e.trees.seed = seed;
  return e;
}

FeatureBasis make_basis(const std::string& name, const Dataset& data) {
  if (name == "linear") return FeatureBasis::linear(data.layout());
  if (name == "saturated") return FeatureBasis::saturated(data);
  throw UsageError("unknown basis '" + name + "' (expected linear or saturated)");
}

std::vector<DissimilarityKind> make_kinds(const std::vector<std::string>& names, std::size_t p_y) {
  if (names.empty()) return std::vector<DissimilarityKind>(p_y, DissimilarityKind::kAbsoluteDifference);
  if (names.size() != p_y) throw UsageError("--kinds needs one entry per outcome (" + std::to_string(p_y) + ")");
  std::vector<DissimilarityKind> out;
  for (const auto& n : names) out.push_back(parse_dissimilarity(n));
  return out;
}

json kinds_json(const std::vector<DissimilarityKind>& kinds) {
  json out = json::array();
  for (auto k : kinds) out.push_back(dissimilarity_name(k));
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json matrix_rows(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

std::string fmt3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", x);
  return buf;
}

}  // namespace

void run_simulate(const SimulateOptions& o) {
  require(o.n > 0, "--n must be a positive integer");
  require(!o.out.empty(), "--out is required");
  const SmartModel model(parse_design(o.design), parse_reading(o.reading));
  std::shared_ptr<const Regime> regime;
  if (!o.regime.empty()) regime = load_regime(o.regime);
  const Dataset data = model.draw(static_cast<std::size_t>(o.n), regime.get(), o.seed, o.workers);
  write_text(o.out, to_csv(data));
  write_config_sidecar(o.out, {{"command", "simulate"},
                               {"design", design_name(model.design())},
                               {"reading", reading_name(parse_reading(o.reading))},
                               {"n", o.n},
                               {"seed", o.seed},
                               {"regime", o.regime}});
  spdlog::info("wrote {} trajectories to {}", data.size(), o.out);
}

void run_fit(const FitOptions& o) {
  require(!o.out.empty(), "--out is required");
  const Dataset data = load_csv(o.data);
  const int p_y = data.n_outcomes();
  const auto expanded = expand_methods({o.method}, p_y);
  require(expanded.size() == 1, "fit takes a single method, got '" + o.method + "'");
  const std::string method = expanded.front();
  const OutcomeScale scale = parse_scale(o.composite_scale);
  const EngineConfig engine = make_engine(o.engine, o.seed);
  require(o.n_lambda >= 1, "--n-lambda must be at least 1");

  DissimilaritySpec spec;
  const bool needs_delta = method == "prioritized" || method == "tuned_composite";
  if (needs_delta) {
    require(!o.delta.empty(), "--delta is required for method " + method);
    spec.thresholds = parse_thresholds(o.delta);
    require(spec.thresholds.size() == static_cast<std::size_t>(p_y),
            "--delta needs one threshold per outcome (" + std::to_string(p_y) + ")");
    spec.kinds = make_kinds(o.kinds, spec.thresholds.size());
    spec.validate();
  }

  json config = {{"command", "fit"},
                 {"data", o.data},
                 {"method", method},
                 {"delta", thresholds_json(spec.thresholds)},
                 {"kinds", kinds_json(spec.kinds)},
                 {"n_lambda", o.n_lambda},
                 {"engine", engine_name(engine.kind)},
                 {"basis", o.basis},
                 {"composite_scale", scale_name(scale)},
                 {"seed", o.seed},
                 {"fixed_actions", o.fixed_actions}};
  if (o.split_seed) config["split_seed"] = *o.split_seed;

  Dataset fit_data = data;
  if (o.split_seed) {
    require(!o.eval_out.empty(), "--split-seed needs --eval-out for the held-out half");
    SplitResult split = split_even(data, *o.split_seed);
    write_text(o.eval_out, to_csv(split.second));
    write_config_sidecar(o.eval_out, config);
    fit_data = std::move(split.first);
  }

  const FeatureBasis basis = make_basis(o.basis, fit_data);
  MethodFitter fitter(fit_data, basis, engine, spec, o.n_lambda, o.seed, scale);
  std::shared_ptr<const Regime> regime;
  if (method == "fixed" && !o.fixed_actions.empty()) {
    require(o.fixed_actions.size() == static_cast<std::size_t>(fit_data.n_stages()),
            "--fixed-actions needs one action per stage");
    regime = std::make_shared<const StageRuleRegime>(StageRuleRegime::fixed(o.fixed_actions));
  } else {
    regime = fitter.fit(method);
  }

  json doc = regime->to_json();
  doc["evaluation_stack"] = stack_to_json(backward_induce(fit_data, basis, engine, regime.get()));

  json irl = {{"composite_scale", scale_name(scale)}};
  const Eigen::VectorXd v = plug_in_values(fit_data, *regime, basis, engine, scale);
  irl["plug_in_values"] = vector_to_json(v);
  try {
    irl["lambda_hat"] = rounded(CompositeSpec::from_direction(v).lambda, 4);
  } catch (const NumericalError& e) {
    spdlog::warn("lambda-hat not recorded: {}", e.what());
  }
  if (scale == OutcomeScale::kStandardized)
    irl["standardization"] = standardization_to_json(*ensure_standardized(fit_data).standardization());
  doc["irl"] = std::move(irl);
  if (method == "tuned_composite") doc["composite_lambda"] = vector_to_json(fitter.lambda_hat());

  std::vector<std::string> hashes;
  for (const Trajectory& t : fit_data.trajectories()) hashes.push_back(hex64(row_hash(t)));
  std::sort(hashes.begin(), hashes.end());
  doc["fit_data"] = {{"n", fit_data.size()}, {"row_hashes", std::move(hashes)}};
  doc["config"] = config;
  stamp_content_hash(doc);
  write_json(o.out, doc);

  if (!o.trace.empty()) {
    const auto* pr = dynamic_cast<const PrioritizedRegime*>(regime.get());
    require(pr != nullptr, "--trace is only available for the prioritized method");
    write_text(o.trace, selection_trace_csv(*pr, fit_data));
    write_config_sidecar(o.trace, config);
  }
  std::cout << method << " regime " << doc["content_hash"].get<std::string>() << " -> " << o.out << "\n";
}

void run_evaluate(const EvaluateOptions& o) {
  require(!o.out.empty(), "--out is required");
  require(o.alpha > 0.0 && o.alpha < 1.0, "--alpha must lie in (0, 1)");
  const CovarianceKind covariance = parse_covariance(o.covariance);
  json doc;
  const auto regime = load_regime(o.regime, &doc);
  if (!doc.contains("evaluation_stack"))
    throw UsageError("regime document has no evaluation stack; produce it with 'pdtr fit'");
  const Dataset data = load_csv(o.data);

  if (doc.contains("fit_data")) {
    std::set<std::string> fit_rows;
    for (const auto& h : doc["fit_data"].at("row_hashes")) fit_rows.insert(h.get<std::string>());
    std::size_t shared = 0;
    for (const Trajectory& t : data.trajectories()) shared += fit_rows.count(hex64(row_hash(t)));
    if (shared > 0)
      throw DataError("evaluation data shares " + std::to_string(shared) +
                      " rows with the data the regime was fit on; evaluate on a disjoint half");
  }

  const QModelStack stack = stack_from_json(doc["evaluation_stack"]);
  if (stack.basis.layout() != data.layout() || stack.n_targets() != data.n_outcomes())
    throw DataError("evaluation data layout does not match the regime document");

  const ValueEstimate est = aipw_value(data, *regime, stack, o.alpha, covariance);
  const ConfidenceEllipsoid ellipsoid(est, o.alpha);
  const int p_y = data.n_outcomes();

  json intervals = json::array();
  std::ostringstream csv;
  csv << "outcome,estimate,std_error,lower,upper,m,covariance\n";
  for (int l = 0; l < p_y; ++l) {
    const auto& iv = est.intervals[static_cast<std::size_t>(l)];
    const double se = std::sqrt(est.sigma_hat(l, l) / est.m);
    intervals.push_back({{"outcome", data.outcome_names()[static_cast<std::size_t>(l)]},
                         {"estimate", est.value(l)},
                         {"std_error", se},
                         {"lower", iv.lower},
                         {"upper", iv.upper}});
    csv << data.outcome_names()[static_cast<std::size_t>(l)] << ',' << est.value(l) << ',' << se << ',' << iv.lower
        << ',' << iv.upper << ',' << est.m << ',' << covariance_name(covariance) << '\n';
  }

  json config = {{"command", "evaluate"},
                 {"regime", o.regime},
                 {"regime_hash", doc.value("content_hash", std::string())},
                 {"data", o.data},
                 {"alpha", o.alpha},
                 {"covariance", covariance_name(covariance)},
                 {"lambda_grid", o.lambda_grid}};
  json report = {{"config", config},
                 {"regime", regime->describe()},
                 {"m", est.m},
                 {"value", vector_to_json(est.value)},
                 {"sigma_hat", matrix_rows(est.sigma_hat)},
                 {"sigma_aipw", matrix_rows(est.sigma_aipw)},
                 {"sigma_ipw", matrix_rows(est.sigma_ipw)},
                 {"intervals", std::move(intervals)},
                 {"ellipsoid",
                  {{"radius", ellipsoid.radius()},
                   {"pseudo_inverse", ellipsoid.pseudo_inverse()},
                   {"statistic_at_zero", ellipsoid.statistic(Eigen::VectorXd::Zero(p_y))}}}};

  if (o.lambda_grid > 0 && doc.contains("irl") && doc["irl"].contains("lambda_hat")) {
    const json& irl = doc["irl"];
    const Eigen::VectorXd lambda_hat = vector_from_json(irl["lambda_hat"]);
    std::optional<Standardization> standardization;
    if (irl.contains("standardization")) standardization = standardization_from_json(irl["standardization"]);
    const auto& cfg = doc.contains("config") ? doc["config"] : json::object();
    const EngineConfig engine = make_engine(cfg.value("engine", std::string("linear")), cfg.value("seed", 1ULL));
    const auto grid = sphere_grid(p_y, o.lambda_grid, 1);
    const LambdaSetResult set =
        universal_lambda_set(data, *regime, stack.basis, engine, standardization, lambda_hat, grid, o.alpha);
    report["lambda_set"] = {{"lambda_hat", irl["lambda_hat"]},
                            {"grid_size", grid.size()},
                            {"coverage", set.coverage},
                            {"shift", set.shift},
                            {"reference_value", set.reference_value}};
  }

  write_json(o.out, report);
  if (!o.csv.empty()) {
    write_text(o.csv, csv.str());
    write_config_sidecar(o.csv, config);
  }
  std::cout << csv.str();
}

void run_mc(const McOptions& o) {
  require(o.seed.has_value(), "mc requires --seed");
  require(!o.out.empty(), "--out is required");
  require(o.n > 0 && o.reps > 0 && o.test_size > 0, "--n, --reps and --test-size must be positive");
  MCConfig c;
  c.design = parse_design(o.design);
  c.reading = parse_reading(o.reading);
  c.composite_scale = parse_scale(o.composite_scale);
  c.n = static_cast<std::size_t>(o.n);
  c.reps = static_cast<std::size_t>(o.reps);
  c.test_size = static_cast<std::size_t>(o.test_size);
  c.methods = o.methods;
  c.alpha = o.alpha;
  c.covariance = parse_covariance(o.covariance);
  c.seed = *o.seed;
  c.n_lambda = o.n_lambda;
  c.engine = make_engine(o.engine, *o.seed);
  if (!o.delta.empty()) c.delta = parse_thresholds(o.delta);
  c.kinds = make_kinds(o.kinds, c.delta ? c.delta->size() : default_delta(c.design).size());
  c.workers = o.workers;
  c.validate();

  const MCResult result = pdtr::run_mc(c);
  json config = c.to_json();
  config["command"] = "mc";
  write_text(o.out, results_csv(result));
  write_config_sidecar(o.out, config);
  if (!o.json_out.empty()) write_json(o.json_out, results_json(result));

  std::cout << "method               outcome  mean     mc_se    coverage  coverage_ipw\n";
  for (const MCSummaryRow& r : result.summary) {
    std::printf("%-20s y%-7d %-8s %-8s %-9s %s\n", r.method.c_str(), r.outcome + 1, fmt3(r.mean_value).c_str(),
                fmt3(r.mc_se).c_str(), fmt3(r.coverage).c_str(), fmt3(r.coverage_ipw).c_str());
  }
  std::fflush(stdout);
}

void run_winratio(const WinRatioOptions& o) {
  require(!o.out.empty(), "--out is required");
  require(o.regimes.size() >= 2, "--regimes needs at least two regimes");
  require(o.pairs > 0, "--pairs must be positive");
  const SmartModel model(parse_design(o.design), parse_reading(o.reading));
  const int p_y = model.n_outcomes();

  WinRatioSpec spec;
  require(!o.margins.empty(), "--margins is required");
  spec.margins = parse_thresholds(o.margins);
  require(spec.margins.size() == static_cast<std::size_t>(p_y),
          "--margins needs one margin per outcome (" + std::to_string(p_y) + ")");
  spec.kinds = make_kinds(o.kinds, spec.margins.size());
  spec.pairs = static_cast<std::size_t>(o.pairs);
  spec.seed = o.seed;
  spec.validate(p_y);

  std::vector<std::shared_ptr<const Regime>> regimes;
  for (const auto& r : o.regimes) regimes.push_back(load_regime(r));

  const std::size_t k = regimes.size();
  std::vector<std::vector<WinRatioResult>> table(k, std::vector<WinRatioResult>(k));
  json pairs = json::array();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      table[i][j] = win_ratio(model, *regimes[i], *regimes[j], spec, o.workers);
      if (i > j) continue;
      const WinRatioResult& r = table[i][j];
      json entry = {{"a", o.regimes[i]},
                    {"b", o.regimes[j]},
                    {"win_a", r.win_a},
                    {"win_b", r.win_b},
                    {"tie", r.tie},
                    {"wr_sum_of_conditionals", r.wr_sum_of_conditionals},
                    {"decided_at", r.decided_at}};
      entry["win_ratio"] = r.win_b > 0.0 ? json(r.win_a / r.win_b) : json(nullptr);
      pairs.push_back(std::move(entry));
      std::printf("%s vs %s: win %.4f loss %.4f tie %.4f\n", o.regimes[i].c_str(), o.regimes[j].c_str(), r.win_a,
                  r.win_b, r.tie);
    }
  }
  json cycles = json::array();
  for (const auto& t : cyclic_triples(table))
    cycles.push_back({o.regimes[static_cast<std::size_t>(t[0])], o.regimes[static_cast<std::size_t>(t[1])],
                      o.regimes[static_cast<std::size_t>(t[2])]});

  json config = {{"command", "winratio"},
                 {"design", design_name(model.design())},
                 {"reading", reading_name(parse_reading(o.reading))},
                 {"regimes", o.regimes},
                 {"margins", thresholds_json(spec.margins)},
                 {"kinds", kinds_json(spec.kinds)},
                 {"pairs", spec.pairs},
                 {"seed", spec.seed}};
  write_json(o.out, {{"config", config}, {"comparisons", std::move(pairs)}, {"cyclic_triples", std::move(cycles)}});
  std::fflush(stdout);
}

void run_irl(const IrlOptions& o) {
  require(!o.out.empty(), "--out is required");
  const Dataset data = load_csv(o.data);
  const auto regime = load_regime(o.regime);
  const FeatureBasis basis = make_basis(o.basis, data);
  const EngineConfig engine = make_engine(o.engine, o.seed);
  const OutcomeScale scale = parse_scale(o.composite_scale);

  const Eigen::VectorXd v = plug_in_values(data, *regime, basis, engine, scale);
  Eigen::VectorXd lambda;
  std::string how;
  if (engine.kind == EngineConfig::Kind::kLinear) {
    lambda = CompositeSpec::from_direction(v).lambda;
    how = "closed_form";
  } else {
    require(o.grid > 0, "--grid must be positive");
    const auto grid = sphere_grid(data.n_outcomes(), o.grid, o.seed);
    lambda = grid_search_lambda(data, *regime, basis, engine, grid, scale, o.workers).lambda;
    how = "sphere_grid";
  }
  json config = {{"command", "irl"},         {"data", o.data},   {"regime", o.regime},
                 {"engine", o.engine},       {"basis", o.basis}, {"composite_scale", scale_name(scale)},
                 {"grid", o.grid},           {"seed", o.seed}};
  write_json(o.out, {{"config", config},
                     {"method", how},
                     {"lambda_hat", rounded(lambda, 4)},
                     {"plug_in_values", vector_to_json(v)}});
  std::cout << "lambda_hat " << rounded(lambda, 4).dump() << "\n";
}

void run_report(const ReportOptions& o) {
  require(!o.inputs.empty(), "--inputs is required");
  struct Cell {
    std::map<int, std::pair<double, double>> by_outcome;  // outcome -> (mean, coverage)
  };
  std::vector<std::pair<std::string, std::string>> order;  // (method, design)
  std::map<std::pair<std::string, std::string>, Cell> cells;
  int p_y = 0;
  for (const auto& path : o.inputs) {
    std::istringstream in(read_text(path));
    std::string line;
    std::getline(in, line);
    if (line != "design,method,outcome,mean_value,mc_se,coverage,reps,n,seed")
      throw DataError("'" + path + "' is not an mc results table");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string tok;
      while (std::getline(ss, tok, ',')) f.push_back(tok);
      if (f.size() != 9 || f[2].size() < 2 || f[2][0] != 'y') throw DataError("malformed row in '" + path + "'");
      int l = 0;
      double mean = 0.0, cov = 0.0;
      try {
        l = std::stoi(f[2].substr(1));
        mean = std::stod(f[3]);
        cov = std::stod(f[5]);
      } catch (const std::exception&) {
        throw DataError("malformed row in '" + path + "'");
      }
      const auto key = std::make_pair(f[1], f[0]);
      if (!cells.contains(key)) order.push_back(key);
      cells[key].by_outcome[l] = {mean, cov};
      p_y = std::max(p_y, l);
    }
  }

  std::ostringstream out;
  {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-20s %-7s ", "Method", "Setting");
    out << buf;
    for (int l = 1; l <= p_y; ++l) {
      std::snprintf(buf, sizeof(buf), " %-8s", ("V" + std::to_string(l)).c_str());
      out << buf;
    }
    for (int l = 1; l <= p_y; ++l) {
      std::snprintf(buf, sizeof(buf), " %-6s", ("CP" + std::to_string(l)).c_str());
      out << buf;
    }
    out << "\n";
  }
  for (const auto& key : order) {
    char head[64];
    std::snprintf(head, sizeof(head), "%-20s %-7s ", key.first.c_str(), key.second.c_str());
    out << head;
    const Cell& c = cells[key];
    for (int l = 1; l <= p_y; ++l) {
      char buf[32];
      if (auto it = c.by_outcome.find(l); it != c.by_outcome.end())
        std::snprintf(buf, sizeof(buf), " %-8.3f", it->second.first);
      else
        std::snprintf(buf, sizeof(buf), " %-8s", "-");
      out << buf;
    }
    for (int l = 1; l <= p_y; ++l) {
      char buf[32];
      if (auto it = c.by_outcome.find(l); it != c.by_outcome.end())
        std::snprintf(buf, sizeof(buf), " %-6.3f", it->second.second);
      else
        std::snprintf(buf, sizeof(buf), " %-6s", "-");
      out << buf;
    }
    out << "\n";
  }
  if (o.out.empty()) {
    std::cout << out.str();
  } else {
    write_text(o.out, out.str());
    write_config_sidecar(o.out, {{"command", "report"}, {"inputs", o.inputs}});
  }
}

}  // namespace pdtr::cli
