#include "io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "pdtr/error.hpp"
#include "pdtr/serialize.hpp"

namespace pdtr::cli {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << text;
  if (!out.flush()) throw UsageError("cannot write '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) { write_text(path, doc.dump(2) + "\n"); }

void write_config_sidecar(const std::filesystem::path& csv_path, const nlohmann::json& config) {
  write_json(csv_path.string() + ".config.json", config);
}

std::vector<double> parse_thresholds(const std::vector<std::string>& values) {
  std::vector<double> out;
  for (const std::string& v : values) {
    if (v == "inf" || v == "infinity" || v == "Inf") {
      out.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || !(d >= 0.0)) throw UsageError("threshold '" + v + "' is not a non-negative number");
    out.push_back(d);
  }
  return out;
}

nlohmann::json thresholds_json(const std::vector<double>& values) {
  nlohmann::json out = nlohmann::json::array();
  for (double d : values) {
    if (std::isinf(d)) out.push_back("inf");
    else out.push_back(d);
  }
  return out;
}

std::shared_ptr<const Regime> load_regime(const std::string& spec, nlohmann::json* document) {
  if (spec.rfind("fixed:", 0) == 0) {
    std::vector<int> actions;
    std::stringstream ss(spec.substr(6));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        actions.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw UsageError("bad fixed regime '" + spec + "'");
      }
    }
    if (actions.empty()) throw UsageError("bad fixed regime '" + spec + "'");
    auto r = std::make_shared<const StageRuleRegime>(StageRuleRegime::fixed(actions, spec));
    if (document) *document = r->to_json();
    return r;
  }
  nlohmann::json doc = read_json(spec);
  if (doc.contains("content_hash") && !verify_content_hash(doc))
    throw DataError("regime document '" + spec + "' fails its content hash");
  auto r = regime_from_json(doc);
  if (document) *document = std::move(doc);
  return r;
}

double round_to(double x, int digits) {
  const double s = std::pow(10.0, digits);
  const double r = std::round(x * s) / s;
  return r == 0.0 ? 0.0 : r;  // no "-0"
}

nlohmann::json rounded(const Eigen::VectorXd& v, int digits) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(round_to(v(i), digits));
  return out;
}

}  // namespace pdtr::cli
