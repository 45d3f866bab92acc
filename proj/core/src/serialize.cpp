#include "pdtr/serialize.hpp"

#include <cstdio>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include "pdtr/error.hpp"
#include "pdtr/prioritized.hpp"
#include "pdtr/regime.hpp"

namespace pdtr {

using nlohmann::json;

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw DataError("matrix payload has wrong length");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[static_cast<std::size_t>(i * cols + c)].get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

namespace {

json layout_to_json(const std::vector<StageLayout>& layout) {
  json out = json::array();
  for (const StageLayout& s : layout) out.push_back({{"covariate_dim", s.covariate_dim}, {"n_actions", s.n_actions}});
  return out;
}

std::vector<StageLayout> layout_from_json(const json& j) {
  std::vector<StageLayout> out;
  for (const json& s : j) out.push_back({s.at("covariate_dim").get<int>(), s.at("n_actions").get<int>()});
  return out;
}

json tree_to_json(const RegressionTree& t) {
  json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
       value = json::array();
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

RegressionTree tree_from_json(const json& j) {
  RegressionTree t;
  const auto f = j.at("feature").get<std::vector<int>>();
  const auto th = j.at("threshold").get<std::vector<double>>();
  const auto l = j.at("left").get<std::vector<int>>();
  const auto r = j.at("right").get<std::vector<int>>();
  const auto v = j.at("value").get<std::vector<double>>();
  for (std::size_t i = 0; i < f.size(); ++i) t.nodes.push_back({f[i], th[i], l[i], r[i], v[i]});
  return t;
}

// Assigns indices to distinct stage models in first-seen order.
class ModelTable {
 public:
  int add(const std::shared_ptr<const StageModel>& m) {
    auto [it, inserted] = index_.try_emplace(m.get(), static_cast<int>(models_.size()));
    if (inserted) models_.push_back(stage_model_to_json(*m));
    return it->second;
  }
  json dump() const { return models_; }

 private:
  std::map<const StageModel*, int> index_;
  json models_ = json::array();
};

std::vector<std::shared_ptr<const StageModel>> load_models(const json& j) {
  std::vector<std::shared_ptr<const StageModel>> out;
  for (const json& m : j) out.push_back(std::make_shared<const StageModel>(stage_model_from_json(m)));
  return out;
}

json stack_refs(const QModelStack& s, ModelTable& table) {
  json refs = json::array();
  for (const auto& m : s.stages) refs.push_back(table.add(m));
  return {{"stages", refs}, {"downstream", s.downstream}};
}

QModelStack stack_from_refs(const json& j, const FeatureBasis& basis,
                            const std::vector<std::shared_ptr<const StageModel>>& models) {
  QModelStack s;
  s.basis = basis;
  for (const json& r : j.at("stages")) s.stages.push_back(models.at(r.get<std::size_t>()));
  s.downstream = j.at("downstream").get<std::string>();
  return s;
}

}  // namespace

json basis_to_json(const FeatureBasis& b) {
  json out = {{"layout", layout_to_json(b.layout())}};
  if (b.kind() == FeatureBasis::Kind::kLinear) {
    out["kind"] = "linear";
    out["past_action_interactions"] = b.options().past_action_interactions;
    out["quadratic"] = b.options().quadratic;
  } else {
    out["kind"] = "saturated";
    json cells = json::array();
    for (const auto& stage : b.cells()) {
      json keys = json::array();
      for (const auto& [key, col] : stage) keys.push_back(key);  // columns follow map order
      cells.push_back(std::move(keys));
    }
    out["cells"] = std::move(cells);
  }
  return out;
}

FeatureBasis basis_from_json(const json& j) {
  auto layout = layout_from_json(j.at("layout"));
  if (j.at("kind") == "linear") {
    FeatureBasis::Options opt;
    opt.past_action_interactions = j.at("past_action_interactions").get<bool>();
    opt.quadratic = j.at("quadratic").get<bool>();
    return FeatureBasis::linear(std::move(layout), opt);
  }
  std::vector<std::map<FeatureBasis::CellKey, int>> cells;
  for (const json& stage : j.at("cells")) {
    std::map<FeatureBasis::CellKey, int> m;
    int col = 0;
    for (const json& key : stage) m.emplace(key.get<std::vector<double>>(), col++);
    cells.push_back(std::move(m));
  }
  return FeatureBasis::from_cells(std::move(layout), std::move(cells));
}

json stage_model_to_json(const StageModel& m) {
  if (const auto* l = std::get_if<StageModel::Linear>(&m.fit()))
    return {{"stage", m.stage()}, {"engine", "linear"}, {"coefficients", matrix_to_json(l->coefficients)}};
  json forests = json::array();
  for (const Forest& f : std::get<StageModel::Trees>(m.fit()).forests) {
    json trees = json::array();
    for (const RegressionTree& t : f.trees) trees.push_back(tree_to_json(t));
    forests.push_back(std::move(trees));
  }
  return {{"stage", m.stage()}, {"engine", "trees"}, {"forests", std::move(forests)}};
}

StageModel stage_model_from_json(const json& j) {
  const int stage = j.at("stage").get<int>();
  if (j.at("engine") == "linear") return StageModel(stage, StageModel::Linear{matrix_from_json(j.at("coefficients"))});
  StageModel::Trees t;
  for (const json& f : j.at("forests")) {
    Forest forest;
    for (const json& tree : f) forest.trees.push_back(tree_from_json(tree));
    t.forests.push_back(std::move(forest));
  }
  return StageModel(stage, std::move(t));
}

json standardization_to_json(const Standardization& s) {
  return {{"mean", vector_to_json(s.mean)}, {"scale", vector_to_json(s.scale)}, {"constant", s.constant}};
}

Standardization standardization_from_json(const json& j) {
  Standardization s;
  s.mean = vector_from_json(j.at("mean"));
  s.scale = vector_from_json(j.at("scale"));
  s.constant = j.at("constant").get<std::vector<bool>>();
  return s;
}

json stack_to_json(const QModelStack& s) {
  ModelTable table;
  json refs = stack_refs(s, table);
  refs["basis"] = basis_to_json(s.basis);
  refs["models"] = table.dump();
  return refs;
}

QModelStack stack_from_json(const json& j) {
  try {
    return stack_from_refs(j, basis_from_json(j.at("basis")), load_models(j.at("models")));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model stack: ") + e.what());
  }
}

json regime_document(const StageRuleRegime& r) {
  ModelTable table;
  std::map<const QModelStack*, int> stack_index;
  json stacks = json::array();
  json rules = json::array();
  std::optional<json> basis;
  for (const auto& rule : r.rules()) {
    if (const auto* f = std::get_if<StageRuleRegime::Fixed>(&rule)) {
      rules.push_back({{"type", "fixed"}, {"action", f->action}});
    } else if (const auto* w = std::get_if<StageRuleRegime::WeightIndexed>(&rule)) {
      auto [it, inserted] = stack_index.try_emplace(w->stack.get(), static_cast<int>(stacks.size()));
      if (inserted) {
        stacks.push_back(stack_refs(*w->stack, table));
        if (!basis) basis = basis_to_json(w->stack->basis);
      }
      rules.push_back({{"type", "weight_indexed"}, {"weights", vector_to_json(w->weights)}, {"stack", it->second}});
    } else {
      json table_json = json::object();
      for (const auto& [key, a] : std::get<StageRuleRegime::Tabulated>(rule).table) table_json[key] = a;
      rules.push_back({{"type", "tabulated"}, {"table", std::move(table_json)}});
    }
  }
  json doc = {{"format_version", kRegimeFormatVersion},
              {"kind", "stage_rules"},
              {"label", r.label()},
              {"rules", std::move(rules)}};
  if (basis) {
    doc["basis"] = *basis;
    doc["models"] = table.dump();
    doc["stacks"] = std::move(stacks);
  }
  return doc;
}

json regime_document(const PrioritizedRegime& r) {
  const CandidateStacks& cs = r.stacks();
  ModelTable table;
  json groups = json::array();
  for (int g = 0; g < cs.n_groups(); ++g) groups.push_back(stack_refs(cs.stack(g), table));
  json weights = json::array();
  for (const WeightVector& w : cs.weights()) weights.push_back(vector_to_json(w.values()));
  json kinds = json::array();
  for (DissimilarityKind k : r.spec().kinds) kinds.push_back(dissimilarity_name(k));
  json thresholds = json::array();
  for (double d : r.spec().thresholds) {
    if (std::isinf(d)) thresholds.push_back("inf");
    else thresholds.push_back(d);
  }
  return {{"format_version", kRegimeFormatVersion},
          {"kind", "prioritized"},
          {"dissimilarity", {{"kinds", kinds}, {"thresholds", thresholds}}},
          {"stage1_actions", r.stage1_actions()},
          {"weights", std::move(weights)},
          {"group_of", cs.group_index()},
          {"basis", basis_to_json(cs.basis())},
          {"models", table.dump()},
          {"groups", std::move(groups)}};
}

std::shared_ptr<const Regime> regime_from_json(const json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kRegimeFormatVersion)
      throw DataError("unsupported regime format_version " + doc.at("format_version").dump());
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "stage_rules") {
      std::vector<std::shared_ptr<const QModelStack>> stacks;
      if (doc.contains("stacks")) {
        const FeatureBasis basis = basis_from_json(doc.at("basis"));
        const auto models = load_models(doc.at("models"));
        for (const json& s : doc.at("stacks"))
          stacks.push_back(std::make_shared<const QModelStack>(stack_from_refs(s, basis, models)));
      }
      std::vector<StageRuleRegime::Rule> rules;
      for (const json& r : doc.at("rules")) {
        const std::string type = r.at("type").get<std::string>();
        if (type == "fixed") {
          rules.emplace_back(StageRuleRegime::Fixed{r.at("action").get<int>()});
        } else if (type == "weight_indexed") {
          rules.emplace_back(StageRuleRegime::WeightIndexed{vector_from_json(r.at("weights")),
                                                            stacks.at(r.at("stack").get<std::size_t>())});
        } else if (type == "tabulated") {
          StageRuleRegime::Tabulated t;
          for (const auto& [key, a] : r.at("table").items()) t.table.emplace(key, a.get<int>());
          rules.emplace_back(std::move(t));
        } else {
          throw DataError("unknown stage rule type '" + type + "'");
        }
      }
      return std::make_shared<const StageRuleRegime>(std::move(rules), doc.value("label", std::string("regime")));
    }
    if (kind == "prioritized") {
      const FeatureBasis basis = basis_from_json(doc.at("basis"));
      const auto models = load_models(doc.at("models"));
      std::vector<QModelStack> groups;
      for (const json& g : doc.at("groups")) groups.push_back(stack_from_refs(g, basis, models));
      std::vector<WeightVector> weights;
      for (const json& w : doc.at("weights")) weights.emplace_back(vector_from_json(w));
      DissimilaritySpec spec;
      for (const json& k : doc.at("dissimilarity").at("kinds")) spec.kinds.push_back(parse_dissimilarity(k.get<std::string>()));
      for (const json& d : doc.at("dissimilarity").at("thresholds"))
        spec.thresholds.push_back(d.is_string() ? std::numeric_limits<double>::infinity() : d.get<double>());
      CandidateStacks cs(basis, std::move(weights), doc.at("group_of").get<std::vector<int>>(), std::move(groups));
      return std::make_shared<const PrioritizedRegime>(std::move(cs), doc.at("stage1_actions").get<std::vector<int>>(),
                                                       std::move(spec));
    }
    throw DataError("unknown regime kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed regime document: ") + e.what());
  }
}

void stamp_content_hash(json& doc) {
  doc.erase("content_hash");
  doc["content_hash"] = fnv1a_hex(doc.dump());
}

bool verify_content_hash(const json& doc) {
  if (!doc.contains("content_hash")) return false;
  json copy = doc;
  copy.erase("content_hash");
  return doc.at("content_hash").get<std::string>() == fnv1a_hex(copy.dump());
}

}  // namespace pdtr
