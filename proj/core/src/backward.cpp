#include "pdtr/backward.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include "pdtr/error.hpp"

namespace pdtr {
namespace {

std::vector<History> stage_histories(const Dataset& data, int stage) {
  std::vector<History> hs(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) hs[i] = data.history(i, stage);
  return hs;
}

// predictions[a] = model(features(h_i, a)) for every row; rows where a is
// infeasible are left as NaN.
std::vector<Eigen::MatrixXd> predictions_by_action(const Dataset& data, int stage, const FeatureBasis& basis,
                                                   const StageModel& model) {
  const int n_actions = data.layout()[static_cast<std::size_t>(stage)].n_actions;
  const int p = basis.dimension(stage);
  std::vector<Eigen::MatrixXd> out;
  for (int a = 0; a < n_actions; ++a) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(data.size()), p);
    std::vector<bool> ok(data.size(), false);
    Eigen::VectorXd row(p);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const History h = data.history(i, stage);
      if (!h.is_feasible(a)) continue;
      basis.features_into(h, a, row);
      x.row(static_cast<Eigen::Index>(i)) = row.transpose();
      ok[i] = true;
    }
    Eigen::MatrixXd pred = model.predict_rows(x);
    for (std::size_t i = 0; i < data.size(); ++i)
      if (!ok[i]) pred.row(static_cast<Eigen::Index>(i)).setConstant(std::numeric_limits<double>::quiet_NaN());
    out.push_back(std::move(pred));
  }
  return out;
}

int argmax_feasible(const std::vector<Eigen::MatrixXd>& preds, const Eigen::VectorXd& w, Eigen::Index row,
                    const ActionMask& mask) {
  int best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < preds.size(); ++a) {
    if (!mask[a]) continue;
    const double v = preds[a].row(row).dot(w);
    if (best < 0 || v > best_value) {
      best = static_cast<int>(a);
      best_value = v;
    }
  }
  return best;
}

StageModel slice_targets(const StageModel& model, int begin, int count) {
  if (const auto* l = std::get_if<StageModel::Linear>(&model.fit()))
    return StageModel(model.stage(), StageModel::Linear{l->coefficients.middleCols(begin, count)});
  const auto& forests = std::get<StageModel::Trees>(model.fit()).forests;
  StageModel::Trees t;
  t.forests.assign(forests.begin() + begin, forests.begin() + begin + count);
  return StageModel(model.stage(), std::move(t));
}

void check_targets(const Dataset& data, const Eigen::MatrixXd& targets, const FeatureBasis& basis) {
  if (data.empty()) throw DataError("cannot fit Q-functions on an empty dataset");
  if (targets.rows() != static_cast<Eigen::Index>(data.size()))
    throw UsageError("target matrix rows do not match dataset size");
  if (basis.n_stages() != data.n_stages()) throw UsageError("feature basis stage count does not match data");
}

}  // namespace

StageModel fit_stage_K(const Dataset& data, const Eigen::MatrixXd& targets, const FeatureBasis& basis,
                       const EngineConfig& engine) {
  check_targets(data, targets, basis);
  const int last = data.n_stages() - 1;
  return StageModel::fit(last, basis.observed_design(data, last), targets, engine);
}

QModelStack backward_induce(const Dataset& data, const Eigen::MatrixXd& targets, const FeatureBasis& basis,
                            const EngineConfig& engine, const DownstreamRule& rule) {
  check_targets(data, targets, basis);
  const int n_stages = data.n_stages();
  QModelStack stack;
  stack.basis = basis;
  stack.stages.resize(static_cast<std::size_t>(n_stages));
  stack.stages.back() = std::make_shared<const StageModel>(fit_stage_K(data, targets, basis, engine));
  if (const auto* g = std::get_if<GreedyRule>(&rule)) {
    if (g->weights.size() != targets.cols()) throw UsageError("greedy rule weights do not match target count");
    Eigen::IOFormat fmt(Eigen::FullPrecision, Eigen::DontAlignCols, ",", ",", "", "", "(", ")");
    std::ostringstream desc;
    desc << "greedy" << g->weights.transpose().format(fmt);
    stack.downstream = desc.str();
  } else {
    stack.downstream = "regime:" + std::get<const Regime*>(rule)->describe();
  }

  for (int s = n_stages - 2; s >= 0; --s) {
    const StageModel& next = *stack.stages[static_cast<std::size_t>(s + 1)];
    std::vector<int> acts;
    if (const auto* g = std::get_if<GreedyRule>(&rule)) {
      const auto preds = predictions_by_action(data, s + 1, basis, next);
      acts.resize(data.size());
      for (std::size_t i = 0; i < data.size(); ++i)
        acts[i] = argmax_feasible(preds, g->weights, static_cast<Eigen::Index>(i), data[i].feasible[static_cast<std::size_t>(s + 1)]);
    } else {
      const std::vector<History> hs = stage_histories(data, s + 1);
      acts = std::get<const Regime*>(rule)->actions(hs);
    }
    const Eigen::MatrixXd pseudo = next.predict_rows(basis.design(data, s + 1, acts));
    try {
      stack.stages[static_cast<std::size_t>(s)] =
          std::make_shared<const StageModel>(StageModel::fit(s, basis.observed_design(data, s), pseudo, engine));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("backward induction (") + stack.downstream + "): " + e.what());
    }
  }
  return stack;
}

QModelStack backward_induce(const Dataset& data, const FeatureBasis& basis, const EngineConfig& engine,
                            const DownstreamRule& rule) {
  return backward_induce(data, data.outcome_matrix(), basis, engine, rule);
}

double conditional_value(const QModelStack& stack, const History& h1, int first_action, int outcome) {
  if (h1.stage != 0) throw UsageError("conditional_value expects a baseline history");
  return stack.predict(h1, first_action, outcome);
}

std::shared_ptr<const StageRuleRegime> q_learning(const Dataset& data, const Eigen::MatrixXd& targets,
                                                  const Eigen::VectorXd& weights, const FeatureBasis& basis,
                                                  const EngineConfig& engine, std::string label) {
  auto stack = std::make_shared<const QModelStack>(backward_induce(data, targets, basis, engine, GreedyRule{weights}));
  return std::make_shared<const StageRuleRegime>(StageRuleRegime::greedy(weights, std::move(stack), std::move(label)));
}

CandidateStacks::CandidateStacks(FeatureBasis basis, std::vector<WeightVector> weights, std::vector<int> group_of,
                                 std::vector<QModelStack> group_stacks)
    : basis_(std::move(basis)),
      weights_(std::move(weights)),
      group_of_(std::move(group_of)),
      group_stacks_(std::move(group_stacks)) {
  if (weights_.empty() || group_stacks_.empty()) throw UsageError("empty candidate class");
  representative_.assign(group_stacks_.size(), std::numeric_limits<int>::max());
  group_size_.assign(group_stacks_.size(), 0);
  for (std::size_t w = 0; w < group_of_.size(); ++w) {
    const auto g = static_cast<std::size_t>(group_of_[w]);
    representative_[g] = std::min(representative_[g], static_cast<int>(w));
    ++group_size_[g];
  }
  const bool linear = std::all_of(group_stacks_.begin(), group_stacks_.end(),
                                  [](const QModelStack& s) { return s.stages.front()->is_linear(); });
  if (linear) {
    const int t = n_targets();
    const int p = basis_.dimension(0);
    Eigen::MatrixXd coef(p, static_cast<Eigen::Index>(group_stacks_.size()) * t);
    for (std::size_t g = 0; g < group_stacks_.size(); ++g)
      coef.middleCols(static_cast<Eigen::Index>(g) * t, t) =
          std::get<StageModel::Linear>(group_stacks_[g].stages.front()->fit()).coefficients;
    stage1_coefficients_ = std::move(coef);
  }
}

CandidateStacks CandidateStacks::fit(const Dataset& data, const Eigen::MatrixXd& targets, const FeatureBasis& basis,
                                     const EngineConfig& engine, std::vector<WeightVector> weights) {
  check_targets(data, targets, basis);
  if (weights.empty()) throw UsageError("empty candidate class");
  for (const WeightVector& w : weights)
    if (w.size() != targets.cols()) throw UsageError("candidate weights do not match target count");
  const int n_stages = data.n_stages();
  const int t = static_cast<int>(targets.cols());

  struct Partial {
    std::vector<std::shared_ptr<const StageModel>> models;
    std::vector<int> members;
  };
  std::vector<Partial> level(1);
  level[0].models.resize(static_cast<std::size_t>(n_stages));
  level[0].models.back() = std::make_shared<const StageModel>(fit_stage_K(data, targets, basis, engine));
  level[0].members.resize(weights.size());
  std::iota(level[0].members.begin(), level[0].members.end(), 0);

  for (int s = n_stages - 1; s >= 1; --s) {
    std::vector<Partial> next_level;
    std::vector<Eigen::MatrixXd> pseudo_blocks;
    for (const Partial& part : level) {
      const auto preds = predictions_by_action(data, s, basis, *part.models[static_cast<std::size_t>(s)]);
      std::map<std::vector<int>, std::size_t> by_pattern;
      std::vector<std::vector<int>> patterns;
      for (int w : part.members) {
        std::vector<int> acts(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
          acts[i] = argmax_feasible(preds, weights[static_cast<std::size_t>(w)].values(), static_cast<Eigen::Index>(i),
                                    data[i].feasible[static_cast<std::size_t>(s)]);
        auto [it, inserted] = by_pattern.try_emplace(acts, next_level.size());
        if (inserted) {
          Partial child;
          child.models = part.models;
          next_level.push_back(std::move(child));
          Eigen::MatrixXd pseudo(static_cast<Eigen::Index>(data.size()), t);
          for (std::size_t i = 0; i < data.size(); ++i)
            pseudo.row(static_cast<Eigen::Index>(i)) = preds[static_cast<std::size_t>(acts[i])].row(static_cast<Eigen::Index>(i));
          pseudo_blocks.push_back(std::move(pseudo));
        }
        next_level[it->second].members.push_back(w);
      }
    }
    Eigen::MatrixXd all(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(pseudo_blocks.size()) * t);
    for (std::size_t g = 0; g < pseudo_blocks.size(); ++g)
      all.middleCols(static_cast<Eigen::Index>(g) * t, t) = pseudo_blocks[g];
    const StageModel big = StageModel::fit(s - 1, basis.observed_design(data, s - 1), all, engine);
    for (std::size_t g = 0; g < next_level.size(); ++g)
      next_level[g].models[static_cast<std::size_t>(s - 1)] =
          std::make_shared<const StageModel>(slice_targets(big, static_cast<int>(g) * t, t));
    level = std::move(next_level);
  }

  std::sort(level.begin(), level.end(),
            [](const Partial& a, const Partial& b) { return a.members.front() < b.members.front(); });
  std::vector<int> group_of(weights.size(), -1);
  std::vector<QModelStack> stacks;
  for (std::size_t g = 0; g < level.size(); ++g) {
    for (int w : level[g].members) group_of[static_cast<std::size_t>(w)] = static_cast<int>(g);
    QModelStack st;
    st.basis = basis;
    st.stages = level[g].models;
    st.downstream = "weight-indexed group " + std::to_string(g);
    stacks.push_back(std::move(st));
  }
  return CandidateStacks(basis, std::move(weights), std::move(group_of), std::move(stacks));
}

Eigen::MatrixXd CandidateStacks::stage1_values(std::span<const History> h1, int first_action) const {
  const int t = n_targets();
  const int p = basis_.dimension(0);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(h1.size()), p);
  std::vector<bool> ok(h1.size(), false);
  Eigen::VectorXd row(p);
  for (std::size_t i = 0; i < h1.size(); ++i) {
    if (!h1[i].is_feasible(first_action)) continue;
    basis_.features_into(h1[i], first_action, row);
    x.row(static_cast<Eigen::Index>(i)) = row.transpose();
    ok[i] = true;
  }
  Eigen::MatrixXd values;
  if (stage1_coefficients_) {
    values = x * *stage1_coefficients_;
  } else {
    values.resize(x.rows(), static_cast<Eigen::Index>(group_stacks_.size()) * t);
    for (std::size_t g = 0; g < group_stacks_.size(); ++g)
      values.middleCols(static_cast<Eigen::Index>(g) * t, t) = group_stacks_[g].stages.front()->predict_rows(x);
  }
  for (std::size_t i = 0; i < h1.size(); ++i)
    if (!ok[i]) values.row(static_cast<Eigen::Index>(i)).setConstant(std::numeric_limits<double>::quiet_NaN());
  return values;
}

int CandidateStacks::downstream_action(int weight_index, const History& h) const {
  if (h.stage < 1) throw UsageError("downstream_action is defined for stages >= 2");
  return greedy_action(stack(group_of(weight_index)), weights_[static_cast<std::size_t>(weight_index)].values(), h);
}

}  // namespace pdtr
