#include "pdtr/prioritized.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "pdtr/error.hpp"
#include "pdtr/serialize.hpp"

namespace pdtr {

std::string dissimilarity_name(DissimilarityKind kind) {
  return kind == DissimilarityKind::kAbsoluteDifference ? "absolute_difference" : "log_ratio";
}

DissimilarityKind parse_dissimilarity(const std::string& name) {
  if (name == "absolute_difference" || name == "absolute" || name == "abs")
    return DissimilarityKind::kAbsoluteDifference;
  if (name == "log_ratio" || name == "log") return DissimilarityKind::kLogRatio;
  throw UsageError("unknown dissimilarity '" + name + "' (expected absolute_difference or log_ratio)");
}

DissimilaritySpec DissimilaritySpec::absolute(std::vector<double> thresholds) {
  DissimilaritySpec s;
  s.kinds.assign(thresholds.size(), DissimilarityKind::kAbsoluteDifference);
  s.thresholds = std::move(thresholds);
  return s;
}

void DissimilaritySpec::validate() const {
  if (thresholds.empty()) throw UsageError("dissimilarity spec needs at least one outcome");
  if (kinds.size() != thresholds.size()) throw UsageError("dissimilarity kinds and thresholds differ in length");
  for (double d : thresholds)
    if (!(d >= 0.0)) throw UsageError("thresholds must be >= 0");
}

double dissimilarity(const DissimilaritySpec& spec, int outcome, double u, double v) {
  if (spec.kinds.at(static_cast<std::size_t>(outcome)) == DissimilarityKind::kAbsoluteDifference)
    return std::abs(u - v);
  if (!(u > 0.0 && v > 0.0)) throw NumericalError("log_ratio dissimilarity requires positive values");
  return std::abs(std::log(u / v));
}

namespace {

double max_available(std::span<const double> values) {
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (double v : values) {
    if (std::isnan(v)) continue;
    any = true;
    best = std::max(best, v);
  }
  if (!any) throw UsageError("no available candidates");
  return best;
}

std::uint64_t next_instance_id() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

// NaN marks an unavailable candidate.
inline bool admissible_any(double v) { return !std::isnan(v); }

}  // namespace

std::vector<int> equivalence_class(std::span<const double> values, const DissimilaritySpec& spec, int outcome) {
  const double best = max_available(values);
  const double delta = spec.thresholds.at(static_cast<std::size_t>(outcome));
  std::vector<int> out;
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (std::isnan(values[c])) continue;
    if (dissimilarity(spec, outcome, best, values[c]) <= delta) out.push_back(static_cast<int>(c));
  }
  return out;
}

double regret(std::span<const double> values, int candidate, const DissimilaritySpec& spec, int outcome) {
  return dissimilarity(spec, outcome, max_available(values), values[static_cast<std::size_t>(candidate)]);
}

PrioritizedSelection select_from_values(const Eigen::MatrixXd& values, const DissimilaritySpec& spec) {
  const int p_y = static_cast<int>(values.cols());
  if (values.rows() == 0) throw UsageError("select_regime: empty candidate class");
  if (p_y != spec.n_outcomes()) throw UsageError("select_regime: value columns do not match the spec");
  PrioritizedSelection sel;
  sel.values = values;
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(p_y));
  for (int l = 0; l < p_y; ++l) {
    cols[l].resize(static_cast<std::size_t>(values.rows()));
    for (Eigen::Index c = 0; c < values.rows(); ++c) cols[l][static_cast<std::size_t>(c)] = values(c, l);
    sel.classes.push_back(equivalence_class(cols[l], spec, l));
  }
  sel.admissible = sel.classes[0];
  sel.depth = 1;
  for (int l = 1; l < p_y; ++l) {
    std::vector<int> next;
    std::set_intersection(sel.admissible.begin(), sel.admissible.end(), sel.classes[l].begin(),
                          sel.classes[l].end(), std::back_inserter(next));
    if (next.empty()) break;
    sel.admissible = std::move(next);
    sel.depth = l + 1;
  }
  sel.tiebreak_outcome = sel.depth == p_y ? 0 : sel.depth;
  double best = -std::numeric_limits<double>::infinity();
  for (int c : sel.admissible) {
    const double v = values(c, sel.tiebreak_outcome);
    if (sel.chosen < 0 || v > best) {
      sel.chosen = c;
      best = v;
    }
  }
  return sel;
}

UtilityWeights UtilityWeights::from_interior(const Eigen::VectorXd& interior) {
  UtilityWeights w;
  w.omega.resize(interior.size() + 2);
  w.omega(0) = 1.0;
  w.omega.segment(1, interior.size()) = interior;
  w.omega(interior.size() + 1) = 1.0;
  w.validate();
  return w;
}

void UtilityWeights::validate() const {
  const int p = n_outcomes();
  if (p < 1) throw UsageError("utility weights need at least one outcome");
  if (omega(0) != 1.0 || omega(p + 1) != 1.0) throw UsageError("omega_0 and omega_{p_y+1} must equal 1");
  for (int l = 1; l <= p; ++l)
    if (!(omega(l) > omega(l + 1))) throw UsageError("utility weights must be strictly decreasing down to 1");
}

double utility(const Eigen::VectorXd& regrets, const Eigen::VectorXd& sup_regrets, const DissimilaritySpec& spec,
               const UtilityWeights& weights) {
  const int p = spec.n_outcomes();
  if (regrets.size() != p || sup_regrets.size() != p || weights.n_outcomes() != p)
    throw UsageError("utility: dimension mismatch");
  weights.validate();
  for (int l = 0; l < p; ++l) {
    if (!(sup_regrets(l) > 0.0 && std::isfinite(sup_regrets(l))))
      throw NumericalError("utility: sup-regret normalizers must be finite and positive");
    if (!(regrets(l) >= 0.0) || regrets(l) > sup_regrets(l) * (1.0 + 1e-12))
      throw NumericalError("utility: regret outside [0, sup-regret]");
  }
  double total = 0.0;
  double prefix = 1.0;  // empty product
  for (int l = 1; l <= p + 1; ++l) {
    const int idx = std::min(l, p) - 1;
    const double b = l <= p ? (regrets(idx) <= spec.thresholds[static_cast<std::size_t>(idx)] ? 1.0 : 0.0) : 0.0;
    const double term = weights.omega(l) * b - weights.omega(l - 1) * regrets(idx) / sup_regrets(idx) * (1.0 - b);
    total += term * prefix;
    prefix *= b;
  }
  return total;
}

Preference prefers(const Eigen::VectorXd& regrets_a, const Eigen::VectorXd& regrets_b, const DissimilaritySpec& spec) {
  const int p = spec.n_outcomes();
  for (int k = 0; k < p; ++k) {
    const double delta = spec.thresholds[static_cast<std::size_t>(k)];
    const bool ba = regrets_a(k) <= delta;
    const bool bb = regrets_b(k) <= delta;
    if (ba && bb) continue;
    if (ba != bb) return ba ? Preference::kFirst : Preference::kSecond;
    if (regrets_a(k) < regrets_b(k)) return Preference::kFirst;
    if (regrets_b(k) < regrets_a(k)) return Preference::kSecond;
    return Preference::kEquivalent;
  }
  return Preference::kEquivalent;
}

Eigen::MatrixXd regret_matrix(const Eigen::MatrixXd& values, const DissimilaritySpec& spec) {
  Eigen::MatrixXd r(values.rows(), values.cols());
  for (Eigen::Index l = 0; l < values.cols(); ++l) {
    std::vector<double> col(values.col(l).data(), values.col(l).data() + values.rows());
    const double best = max_available(col);
    for (Eigen::Index c = 0; c < values.rows(); ++c)
      r(c, l) = std::isnan(values(c, l)) ? std::numeric_limits<double>::quiet_NaN()
                                         : dissimilarity(spec, static_cast<int>(l), best, values(c, l));
  }
  return r;
}

Eigen::VectorXd sup_regrets(std::span<const Eigen::MatrixXd> values_per_history, const DissimilaritySpec& spec) {
  Eigen::VectorXd sup = Eigen::VectorXd::Constant(spec.n_outcomes(), 1e-6);
  for (const Eigen::MatrixXd& v : values_per_history) {
    const Eigen::MatrixXd r = regret_matrix(v, spec);
    for (Eigen::Index c = 0; c < r.rows(); ++c)
      for (Eigen::Index l = 0; l < r.cols(); ++l)
        if (!std::isnan(r(c, l))) sup(l) = std::max(sup(l), r(c, l));
  }
  return sup;
}

PrioritizedRegime::PrioritizedRegime(CandidateStacks stacks, std::vector<int> stage1_actions, DissimilaritySpec spec)
    : stacks_(std::move(stacks)),
      stage1_actions_(std::move(stage1_actions)),
      spec_(std::move(spec)),
      instance_id_(next_instance_id()) {
  spec_.validate();
  if (spec_.n_outcomes() != stacks_.n_targets())
    throw UsageError("dissimilarity spec length does not match the number of outcomes");
  if (stage1_actions_.empty()) throw UsageError("empty candidate class");
  for (int a : stage1_actions_)
    for (int g = 0; g < stacks_.n_groups(); ++g)
      candidates_.push_back({a, stacks_.representative(g), stacks_.group_size(g)});
}

std::vector<Eigen::MatrixXd> PrioritizedRegime::candidate_values(std::span<const History> h1) const {
  const int t = stacks_.n_targets();
  const int g_count = stacks_.n_groups();
  std::vector<Eigen::MatrixXd> out(h1.size(), Eigen::MatrixXd(static_cast<Eigen::Index>(candidates_.size()), t));
  for (std::size_t ai = 0; ai < stage1_actions_.size(); ++ai) {
    const Eigen::MatrixXd v = stacks_.stage1_values(h1, stage1_actions_[ai]);
    for (std::size_t i = 0; i < h1.size(); ++i)
      for (int g = 0; g < g_count; ++g)
        out[i].row(static_cast<Eigen::Index>(ai) * g_count + g) =
            v.row(static_cast<Eigen::Index>(i)).segment(static_cast<Eigen::Index>(g) * t, t);
  }
  return out;
}

PrioritizedSelection PrioritizedRegime::select(const History& h1) const {
  const std::vector<Eigen::MatrixXd> v = candidate_values(std::span<const History>(&h1, 1));
  return select_from_values(v.front(), spec_);
}

SelectionRecord PrioritizedRegime::record(const PrioritizedSelection& sel) const {
  SelectionRecord r;
  const Candidate& c = candidates_[static_cast<std::size_t>(sel.chosen)];
  r.first_action = c.first_action;
  r.weight_index = c.weight_index;
  r.depth = sel.depth;
  r.tiebreak_outcome = sel.tiebreak_outcome;
  for (const auto& cls : sel.classes) {
    int size = 0;
    for (int m : cls) size += candidates_[static_cast<std::size_t>(m)].multiplicity;
    r.class_sizes.push_back(size);
  }
  for (int m : sel.admissible) r.admissible_size += candidates_[static_cast<std::size_t>(m)].multiplicity;
  return r;
}

std::vector<SelectionRecord> PrioritizedRegime::choose(std::span<const History> h1) const {
  constexpr std::size_t kBatch = 2048;
  std::vector<SelectionRecord> out;
  out.reserve(h1.size());
  for (std::size_t start = 0; start < h1.size(); start += kBatch) {
    const auto chunk = h1.subspan(start, std::min(kBatch, h1.size() - start));
    const std::vector<Eigen::MatrixXd> values = candidate_values(chunk);
    for (const Eigen::MatrixXd& v : values) out.push_back(record(select_from_values(v, spec_)));
  }
  return out;
}

std::vector<int> PrioritizedRegime::chosen_candidates(std::span<const History> h1) const {
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  constexpr std::size_t kBatch = 256;
  const int t = stacks_.n_targets();
  const std::size_t g_count = static_cast<std::size_t>(stacks_.n_groups());
  const std::size_t n_actions = stage1_actions_.size();
  const std::size_t n_cand = candidates_.size();
  std::vector<int> out;
  out.reserve(h1.size());
  // vals[c * t + l] for the current history, candidates in candidates_ order.
  std::vector<double> vals(n_cand * static_cast<std::size_t>(t));
  std::vector<std::uint8_t> admissible(n_cand), next(n_cand);
  const auto& coef = stacks_.stage1_coefficients();
  // Linear engine: one gemv per (history, first action) straight into vals.
  RowMatrix coef_t;
  Eigen::VectorXd features;
  if (coef) {
    coef_t = coef->transpose();
    features.resize(coef->rows());
  }
  const auto block = static_cast<Eigen::Index>(g_count) * t;
  for (std::size_t start = 0; start < h1.size(); start += kBatch) {
    const auto chunk = h1.subspan(start, std::min(kBatch, h1.size() - start));
    std::vector<RowMatrix> v;
    if (!coef)
      for (int a : stage1_actions_) v.emplace_back(stacks_.stage1_values(chunk, a));
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      for (std::size_t ai = 0; ai < n_actions; ++ai) {
        Eigen::Map<Eigen::VectorXd> dst(vals.data() + ai * g_count * t, block);
        if (!coef) {
          dst = v[ai].row(static_cast<Eigen::Index>(i)).transpose();
        } else if (!chunk[i].is_feasible(stage1_actions_[ai])) {
          dst.setConstant(std::numeric_limits<double>::quiet_NaN());
        } else {
          stacks_.basis().features_into(chunk[i], stage1_actions_[ai], features);
          dst.noalias() = coef_t * features;
        }
      }
      bool any = false;
      for (std::size_t c = 0; c < n_cand; ++c) {
        admissible[c] = !std::isnan(vals[c * t]);
        any = any || admissible[c];
      }
      if (!any) throw UsageError("no available candidates");
      int depth = 1;
      for (int l = 0; l < t; ++l) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < n_cand; ++c)
          if (admissible_any(vals[c * t + l])) best = std::max(best, vals[c * t + l]);
        const double delta = spec_.thresholds[static_cast<std::size_t>(l)];
        const bool absolute = spec_.kinds[static_cast<std::size_t>(l)] == DissimilarityKind::kAbsoluteDifference;
        bool nonempty = false;
        for (std::size_t c = 0; c < n_cand; ++c) {
          const double x = vals[c * t + l];
          next[c] = admissible[c] && (absolute ? best - x : dissimilarity(spec_, l, best, x)) <= delta;
          nonempty = nonempty || next[c];
        }
        if (!nonempty) break;
        admissible.swap(next);
        depth = l + 1;
      }
      const int tiebreak = depth == t ? 0 : depth;
      int chosen = -1;
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < n_cand; ++c) {
        if (!admissible[c]) continue;
        if (chosen < 0 || vals[c * t + tiebreak] > top) {
          chosen = static_cast<int>(c);
          top = vals[c * t + tiebreak];
        }
      }
      out.push_back(chosen);
    }
  }
  return out;
}

int PrioritizedRegime::action(const History& h) const { return actions(std::span<const History>(&h, 1)).front(); }

namespace {

// Stage-1 selections of the most recent baseline batch on this thread. Later
// stages of the same trajectories (simulation, coarsening) reuse them instead
// of repeating the candidate scan; entries are checked against the stored
// baseline covariates and mask before use.
struct SelectionMemo {
  std::uint64_t owner = 0;
  struct Entry {
    Eigen::VectorXd x1;
    ActionMask mask;
    int chosen;
  };
  std::unordered_map<const Trajectory*, Entry> entries;
};
thread_local SelectionMemo memo;

}  // namespace

std::vector<int> PrioritizedRegime::actions(std::span<const History> hs) const {
  std::vector<int> chosen(hs.size(), -1);
  std::vector<History> misses;
  std::vector<std::size_t> miss_index;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (hs[i].stage > 0 && memo.owner == instance_id_) {
      const auto it = memo.entries.find(hs[i].trajectory);
      if (it != memo.entries.end() && it->second.x1 == hs[i].covariates(0) &&
          it->second.mask == hs[i].trajectory->feasible[0]) {
        chosen[i] = it->second.chosen;
        continue;
      }
    }
    misses.push_back(History{hs[i].trajectory, 0});
    miss_index.push_back(i);
  }
  if (!misses.empty()) {
    const std::vector<int> fresh = chosen_candidates(misses);
    for (std::size_t j = 0; j < misses.size(); ++j) chosen[miss_index[j]] = fresh[j];
    if (hs.front().stage == 0) {
      memo.owner = instance_id_;
      memo.entries.clear();
      for (std::size_t j = 0; j < misses.size(); ++j)
        memo.entries.insert_or_assign(misses[j].trajectory,
                                      SelectionMemo::Entry{misses[j].covariates(0), misses[j].trajectory->feasible[0], fresh[j]});
    }
  }
  std::vector<int> out(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const Candidate& c = candidates_[static_cast<std::size_t>(chosen[i])];
    out[i] = hs[i].stage == 0 ? c.first_action : stacks_.downstream_action(c.weight_index, hs[i]);
  }
  return out;
}

nlohmann::json PrioritizedRegime::to_json() const { return regime_document(*this); }

std::shared_ptr<const PrioritizedRegime> fit_prioritized(const Dataset& data, const FeatureBasis& basis,
                                                         const EngineConfig& engine, const CandidateClass& candidates,
                                                         const DissimilaritySpec& spec) {
  if (candidates.stage2_weights.empty() || candidates.stage1_actions.empty())
    throw UsageError("select_regime: empty candidate class");
  CandidateStacks stacks =
      CandidateStacks::fit(data, data.outcome_matrix(), basis, engine, candidates.stage2_weights);
  return std::make_shared<const PrioritizedRegime>(std::move(stacks), candidates.stage1_actions, spec);
}

std::string selection_trace_csv(const PrioritizedRegime& regime, const Dataset& data) {
  std::vector<History> h1(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) h1[i] = data.history(i, 0);
  const std::vector<SelectionRecord> rec = regime.choose(h1);
  std::string out = "id";
  for (int l = 0; l < regime.spec().n_outcomes(); ++l) out += ",xi" + std::to_string(l + 1) + "_size";
  out += ",admissible_size,depth,tiebreak_outcome,first_action,weight_index\n";
  for (std::size_t i = 0; i < rec.size(); ++i) {
    out += data[i].id;
    for (int s : rec[i].class_sizes) out += "," + std::to_string(s);
    out += "," + std::to_string(rec[i].admissible_size) + "," + std::to_string(rec[i].depth) + "," +
           std::to_string(rec[i].tiebreak_outcome + 1) + "," + std::to_string(rec[i].first_action) + "," +
           std::to_string(rec[i].weight_index) + "\n";
  }
  return out;
}

}  // namespace pdtr
