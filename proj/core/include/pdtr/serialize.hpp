#pragma once

#include <memory>
#include <string>

#include <Eigen/Core>
#include <json.hpp>

#include "pdtr/data.hpp"
#include "pdtr/features.hpp"
#include "pdtr/qmodel.hpp"

namespace pdtr {

class Regime;
class StageRuleRegime;
class PrioritizedRegime;

inline constexpr int kRegimeFormatVersion = 1;

std::string fnv1a_hex(const std::string& bytes);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

nlohmann::json basis_to_json(const FeatureBasis& b);
FeatureBasis basis_from_json(const nlohmann::json& j);
nlohmann::json stage_model_to_json(const StageModel& m);
StageModel stage_model_from_json(const nlohmann::json& j);
nlohmann::json standardization_to_json(const Standardization& s);
Standardization standardization_from_json(const nlohmann::json& j);

// Self-contained stack: {"basis", "models", "stages", "downstream"}.
nlohmann::json stack_to_json(const QModelStack& s);
QModelStack stack_from_json(const nlohmann::json& j);

// Regime documents: {"format_version", "kind", ...}. Stage models shared
// between rules or candidate groups are written once in "models" and
// referenced by index.
nlohmann::json regime_document(const StageRuleRegime& r);
nlohmann::json regime_document(const PrioritizedRegime& r);
std::shared_ptr<const Regime> regime_from_json(const nlohmann::json& doc);

// Adds "content_hash" computed over the document without that field.
void stamp_content_hash(nlohmann::json& doc);
bool verify_content_hash(const nlohmann::json& doc);

}  // namespace pdtr
