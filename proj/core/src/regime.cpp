#include "pdtr/regime.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "pdtr/error.hpp"
#include "pdtr/rng.hpp"
#include "pdtr/serialize.hpp"

namespace pdtr {

WeightVector::WeightVector(Eigen::VectorXd lambda) : lambda_(std::move(lambda)) {
  if (lambda_.size() == 0) throw UsageError("weight vector must be non-empty");
  for (Eigen::Index i = 0; i < lambda_.size(); ++i)
    if (!(lambda_(i) >= 0.0 && lambda_(i) <= 1.0))
      throw UsageError("weight vector entries must lie in [0,1]");
  if (std::abs(lambda_.sum() - 1.0) > 1e-10) throw UsageError("weight vector must sum to 1");
}

WeightVector WeightVector::vertex(int p_y, int l) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(p_y);
  e(l) = 1.0;
  return WeightVector(std::move(e));
}

std::vector<WeightVector> sample_simplex(int n_samples, int p_y, std::uint64_t seed) {
  if (n_samples < 1) throw UsageError("sample_simplex: n_samples must be >= 1");
  if (p_y < 1) throw UsageError("sample_simplex: p_y must be >= 1");
  std::vector<WeightVector> out;
  if (p_y == 1) {
    out.emplace_back(Eigen::VectorXd::Ones(1));
    return out;
  }
  Rng rng = make_stream(seed, {0x51ac5u});
  std::vector<double> cuts(static_cast<std::size_t>(p_y - 1));
  out.reserve(static_cast<std::size_t>(n_samples + p_y));
  for (int s = 0; s < n_samples; ++s) {
    for (double& c : cuts) c = uniform01(rng);
    std::sort(cuts.begin(), cuts.end());
    Eigen::VectorXd w(p_y);
    double prev = 0.0;
    for (int l = 0; l < p_y - 1; ++l) {
      w(l) = cuts[static_cast<std::size_t>(l)] - prev;
      prev = cuts[static_cast<std::size_t>(l)];
    }
    w(p_y - 1) = 1.0 - prev;
    w /= w.sum();
    out.emplace_back(std::move(w));
  }
  for (int l = 0; l < p_y; ++l) out.push_back(WeightVector::vertex(p_y, l));
  return out;
}

int lowest_feasible(const History& h) {
  const ActionMask& m = h.feasible();
  for (std::size_t a = 0; a < m.size(); ++a)
    if (m[a]) return static_cast<int>(a);
  throw DataError("empty feasible set at stage " + std::to_string(h.stage + 1));
}

int greedy_action(const QModelStack& stack, const Eigen::VectorXd& weights, const History& h) {
  if (weights.size() != stack.n_targets())
    throw UsageError("greedy_action: weight length does not match stack targets");
  const ActionMask& m = h.feasible();
  int best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < m.size(); ++a) {
    if (!m[a]) continue;
    const double v = weights.dot(stack.predict(h, static_cast<int>(a)));
    if (best < 0 || v > best_value) {
      best = static_cast<int>(a);
      best_value = v;
    }
  }
  if (best < 0) throw DataError("empty feasible set at stage " + std::to_string(h.stage + 1));
  return best;
}

std::string history_key(const History& h) {
  std::string key;
  char buf[32];
  for (int s = 0; s <= h.stage; ++s) {
    const Eigen::VectorXd& x = h.covariates(s);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const auto r = std::to_chars(buf, buf + sizeof(buf), x(j));
      if (!key.empty()) key += ',';
      key.append(buf, r.ptr);
    }
    if (s < h.stage) key += ",a" + std::to_string(h.action(s));
  }
  return key;
}

std::vector<int> Regime::actions(std::span<const History> hs) const {
  std::vector<int> out(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) out[i] = action(hs[i]);
  return out;
}

std::string Regime::content_hash() const {
  nlohmann::json doc = to_json();
  doc.erase("content_hash");
  return fnv1a_hex(doc.dump());
}

StageRuleRegime::StageRuleRegime(std::vector<Rule> rules, std::string label)
    : rules_(std::move(rules)), label_(std::move(label)) {
  if (rules_.empty()) throw UsageError("regime needs at least one stage rule");
}

StageRuleRegime StageRuleRegime::fixed(std::vector<int> actions, std::string label) {
  std::vector<Rule> rules;
  for (int a : actions) rules.emplace_back(Fixed{a});
  return StageRuleRegime(std::move(rules), std::move(label));
}

StageRuleRegime StageRuleRegime::greedy(Eigen::VectorXd weights, std::shared_ptr<const QModelStack> stack,
                                        std::string label) {
  std::vector<Rule> rules;
  for (int k = 0; k < stack->n_stages(); ++k) rules.emplace_back(WeightIndexed{weights, stack});
  return StageRuleRegime(std::move(rules), std::move(label));
}

int StageRuleRegime::action(const History& h) const {
  if (h.stage >= n_stages()) throw UsageError("regime has no rule for stage " + std::to_string(h.stage + 1));
  const Rule& rule = rules_[static_cast<std::size_t>(h.stage)];
  if (const auto* f = std::get_if<Fixed>(&rule)) return h.is_feasible(f->action) ? f->action : lowest_feasible(h);
  if (const auto* w = std::get_if<WeightIndexed>(&rule)) return greedy_action(*w->stack, w->weights, h);
  const auto& t = std::get<Tabulated>(rule);
  const auto it = t.table.find(history_key(h));
  if (it == t.table.end())
    throw DataError("tabulated rule at stage " + std::to_string(h.stage + 1) + " has no entry for history '" +
                    history_key(h) + "'");
  if (!h.is_feasible(it->second))
    throw DataError("tabulated rule maps history '" + history_key(h) + "' to an infeasible action");
  return it->second;
}

nlohmann::json StageRuleRegime::to_json() const { return regime_document(*this); }

}  // namespace pdtr
