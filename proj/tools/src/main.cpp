#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "pdtr/error.hpp"

namespace {

// Reads --config files. Keys are option names ('_' or '-'); a top-level
// object named after a subcommand holds that subcommand's options. Sections
// for other subcommands are ignored so one file can serve several commands.
class JsonConfig : public CLI::Config {
 public:
  std::string active;

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        if (key != active) continue;
        for (const auto& [k, v] : value.items()) add(items, k, v);
      } else {
        add(items, key, value);
      }
    }
    return items;
  }

 private:
  void add(std::vector<CLI::ConfigItem>& items, std::string name, const nlohmann::json& v) const {
    if (v.is_null()) return;
    for (char& c : name)
      if (c == '_') c = '-';
    CLI::ConfigItem item;
    if (name != "verbose") item.parents = {active};
    item.name = name;
    auto text = [](const nlohmann::json& e) { return e.is_string() ? e.get<std::string>() : e.dump(); };
    if (v.is_array()) {
      for (const auto& e : v) item.inputs.push_back(text(e));
    } else {
      item.inputs.push_back(text(v));
    }
    items.push_back(std::move(item));
  }
};

}  // namespace

int main(int argc, char** argv) {
  using namespace pdtr::cli;
  CLI::App app{"Prioritized-outcome dynamic treatment regimes"};
  app.require_subcommand(1);
  app.fallthrough();
  auto config = std::make_shared<JsonConfig>();
  app.config_formatter(config);
  app.set_config("--config", "", "JSON file of option values; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Draw a SMART dataset");
  s->add_option("--design", sim.design, "s1, s2, s3 or s4")->required();
  s->add_option("--n", sim.n, "Number of trajectories")->required();
  s->add_option("--seed", sim.seed, "Master seed");
  s->add_option("--reading", sim.reading, "Outcome reading for S1/S2: averaged or literal");
  s->add_option("--regime", sim.regime, "Draw under a regime document or fixed:a1,a2 instead of randomizing");
  s->add_option("--out", sim.out, "Output CSV")->required();
  s->add_option("--workers", sim.workers, "Worker threads");

  FitOptions fit;
  auto* f = app.add_subcommand("fit", "Fit a regime and write its document");
  f->add_option("--data", fit.data, "Training CSV")->required()->check(CLI::ExistingFile);
  f->add_option("--out", fit.out, "Regime document (JSON)")->required();
  f->add_option("--method", fit.method,
                "prioritized, qlearn_y<l>, composite_average, tuned_composite or fixed");
  f->add_option("--delta", fit.delta, "Clinical thresholds, one per outcome ('inf' allowed)");
  f->add_option("--kinds", fit.kinds, "Dissimilarity per outcome: absolute_difference or log_ratio");
  f->add_option("--n-lambda", fit.n_lambda, "Simplex samples for the candidate class");
  f->add_option("--engine", fit.engine, "linear or trees");
  f->add_option("--basis", fit.basis, "linear or saturated");
  f->add_option("--composite-scale", fit.composite_scale, "raw or standardized");
  f->add_option("--seed", fit.seed, "Seed for simplex sampling and tree bagging");
  f->add_option("--fixed-actions", fit.fixed_actions, "Per-stage action codes for --method fixed");
  f->add_option("--split-seed", fit.split_seed, "Fit on one half of the data, write the other half");
  f->add_option("--eval-out", fit.eval_out, "Held-out half (with --split-seed)");
  f->add_option("--trace", fit.trace, "Per-history selection audit CSV (prioritized only)");
  f->add_option("--workers", fit.workers, "Worker threads");

  EvaluateOptions ev;
  auto* e = app.add_subcommand("evaluate", "AIPW evaluation of a fitted regime on held-out data");
  e->add_option("--regime", ev.regime, "Regime document from 'fit'")->required();
  e->add_option("--data", ev.data, "Evaluation CSV")->required()->check(CLI::ExistingFile);
  e->add_option("--out", ev.out, "Report (JSON)")->required();
  e->add_option("--csv", ev.csv, "Per-outcome interval table");
  e->add_option("--alpha", ev.alpha, "Significance level");
  e->add_option("--covariance", ev.covariance, "aipw or ipw");
  e->add_option("--lambda-grid", ev.lambda_grid, "Sphere grid size for the lambda set (0 skips it)");
  e->add_option("--workers", ev.workers, "Worker threads");

  McOptions mc;
  auto* m = app.add_subcommand("mc", "Monte Carlo study on a SMART design");
  m->add_option("--design", mc.design, "s1, s2, s3 or s4")->required();
  m->add_option("--seed", mc.seed, "Master seed (required)");
  m->add_option("--reps", mc.reps, "Replications");
  m->add_option("--n", mc.n, "Trajectories per replication");
  m->add_option("--test-size", mc.test_size, "Oracle draws per regime");
  m->add_option("--methods", mc.methods, "Methods to compare");
  m->add_option("--alpha", mc.alpha, "Significance level");
  m->add_option("--covariance", mc.covariance, "aipw or ipw");
  m->add_option("--n-lambda", mc.n_lambda, "Simplex samples");
  m->add_option("--engine", mc.engine, "linear or trees");
  m->add_option("--delta", mc.delta, "Clinical thresholds (design default when omitted)");
  m->add_option("--kinds", mc.kinds, "Dissimilarity per outcome");
  m->add_option("--reading", mc.reading, "averaged or literal");
  m->add_option("--composite-scale", mc.composite_scale, "raw or standardized");
  m->add_option("--out", mc.out, "Results CSV")->required();
  m->add_option("--json-out", mc.json_out, "Results JSON with IPW coverage and failures");
  m->add_option("--workers", mc.workers, "Worker threads");

  WinRatioOptions wr;
  auto* w = app.add_subcommand("winratio", "Pairwise win ratios between regimes");
  w->add_option("--design", wr.design, "s1, s2, s3 or s4")->required();
  w->add_option("--regimes", wr.regimes, "Regime documents or fixed:a1,a2")->required();
  w->add_option("--margins", wr.margins, "Comparability margins, one per outcome ('inf' allowed)")->required();
  w->add_option("--kinds", wr.kinds, "Dissimilarity per outcome");
  w->add_option("--pairs", wr.pairs, "Pairs per comparison");
  w->add_option("--seed", wr.seed, "Master seed");
  w->add_option("--reading", wr.reading, "averaged or literal");
  w->add_option("--out", wr.out, "Result JSON")->required();
  w->add_option("--workers", wr.workers, "Worker threads");

  IrlOptions irl;
  auto* i = app.add_subcommand("irl", "Composite weights under which a regime is optimal");
  i->add_option("--data", irl.data, "CSV")->required()->check(CLI::ExistingFile);
  i->add_option("--regime", irl.regime, "Regime document or fixed:a1,a2")->required();
  i->add_option("--engine", irl.engine, "linear (closed form) or trees (sphere grid)");
  i->add_option("--basis", irl.basis, "linear or saturated");
  i->add_option("--composite-scale", irl.composite_scale, "raw or standardized");
  i->add_option("--grid", irl.grid, "Sphere grid size for non-linear engines");
  i->add_option("--seed", irl.seed, "Seed");
  i->add_option("--out", irl.out, "Result JSON")->required();
  i->add_option("--workers", irl.workers, "Worker threads");

  ReportOptions rep;
  auto* r = app.add_subcommand("report", "Table of mean values and coverage from mc results");
  r->add_option("--inputs", rep.inputs, "mc result CSVs")->required();
  r->add_option("--out", rep.out, "Output text file (stdout when omitted)");

  for (auto* sub : app.get_subcommands({})) {
    for (auto* opt : sub->get_options())
      if (opt->get_expected_max() <= 1) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (app.get_subcommand_no_throw(arg)) {
      config->active = arg;
      break;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : static_cast<int>(pdtr::ErrorKind::kUsage);
  }

  auto logger = spdlog::stderr_color_mt("pdtr");
  spdlog::set_default_logger(logger);
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    if (s->parsed()) run_simulate(sim);
    else if (f->parsed()) run_fit(fit);
    else if (e->parsed()) run_evaluate(ev);
    else if (m->parsed()) run_mc(mc);
    else if (w->parsed()) run_winratio(wr);
    else if (i->parsed()) run_irl(irl);
    else if (r->parsed()) run_report(rep);
  } catch (const pdtr::Error& err) {
    std::cerr << "pdtr: " << err.what() << "\n";
    return err.exit_code();
  } catch (const std::exception& err) {
    std::cerr << "pdtr: internal error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
