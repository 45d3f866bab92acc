#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "pdtr/regime.hpp"

namespace pdtr::cli {

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

// CSV outputs get a "<path>.config.json" sidecar holding the effective config.
void write_config_sidecar(const std::filesystem::path& csv_path, const nlohmann::json& config);

// "inf" / "infinity" accepted.
std::vector<double> parse_thresholds(const std::vector<std::string>& values);
nlohmann::json thresholds_json(const std::vector<double>& values);

// A regime document path, or "fixed:a1,a2,..." for a constant-action regime.
std::shared_ptr<const Regime> load_regime(const std::string& spec, nlohmann::json* document = nullptr);

double round_to(double x, int digits);
nlohmann::json rounded(const Eigen::VectorXd& v, int digits);

}  // namespace pdtr::cli
