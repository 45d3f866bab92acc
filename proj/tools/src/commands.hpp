#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pdtr::cli {

struct SimulateOptions {
  std::string design;
  std::string reading = "averaged";
  long long n = 0;
  std::uint64_t seed = 1;
  std::string regime;  // optional: draw under this regime instead of randomizing
  std::string out;
  int workers = 1;
};

struct FitOptions {
  std::string data;
  std::string out;
  std::string method = "prioritized";
  std::vector<std::string> delta;
  std::vector<std::string> kinds;
  int n_lambda = 1000;
  std::string engine = "linear";
  std::string basis = "linear";
  std::string composite_scale = "raw";
  std::uint64_t seed = 1;
  std::vector<int> fixed_actions;
  std::optional<std::uint64_t> split_seed;
  std::string eval_out;
  std::string trace;
  int workers = 1;
};

struct EvaluateOptions {
  std::string regime;
  std::string data;
  std::string out;
  std::string csv;
  double alpha = 0.05;
  std::string covariance = "aipw";
  int lambda_grid = 10000;
  int workers = 1;
};

struct McOptions {
  std::string design;
  std::string reading = "averaged";
  std::string composite_scale = "raw";
  long long n = 1000;
  long long reps = 100;
  long long test_size = 10000;
  std::vector<std::string> methods = {"prioritized", "qlearn_per_outcome", "composite_average", "tuned_composite"};
  double alpha = 0.05;
  std::string covariance = "aipw";
  std::optional<std::uint64_t> seed;
  int n_lambda = 1000;
  std::string engine = "linear";
  std::vector<std::string> delta;
  std::vector<std::string> kinds;
  std::string out;
  std::string json_out;
  int workers = 1;
};

struct WinRatioOptions {
  std::string design;
  std::string reading = "averaged";
  std::vector<std::string> regimes;
  std::vector<std::string> margins;
  std::vector<std::string> kinds;
  long long pairs = 100000;
  std::uint64_t seed = 1;
  std::string out;
  int workers = 1;
};

struct IrlOptions {
  std::string data;
  std::string regime;
  std::string engine = "linear";
  std::string basis = "linear";
  std::string composite_scale = "raw";
  int grid = 10000;
  std::uint64_t seed = 1;
  std::string out;
  int workers = 1;
};

struct ReportOptions {
  std::vector<std::string> inputs;
  std::string out;
};

void run_simulate(const SimulateOptions& o);
void run_fit(const FitOptions& o);
void run_evaluate(const EvaluateOptions& o);
void run_mc(const McOptions& o);
void run_winratio(const WinRatioOptions& o);
void run_irl(const IrlOptions& o);
void run_report(const ReportOptions& o);

}  // namespace pdtr::cli
