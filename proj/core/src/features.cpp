#include "pdtr/features.hpp"

#include "pdtr/error.hpp"

namespace pdtr {

FeatureBasis FeatureBasis::linear(std::vector<StageLayout> layout, Options options) {
  FeatureBasis b;
  b.kind_ = Kind::kLinear;
  b.layout_ = std::move(layout);
  b.options_ = options;
  return b;
}

FeatureBasis FeatureBasis::saturated(const Dataset& data) {
  FeatureBasis b;
  b.kind_ = Kind::kSaturated;
  b.layout_ = data.layout();
  b.cells_.resize(data.n_stages());
  for (int k = 0; k < data.n_stages(); ++k) {
    auto& cells = b.cells_[k];
    for (std::size_t i = 0; i < data.size(); ++i) {
      const History h = data.history(i, k);
      // Every feasible action at an observed history gets a cell so that
      // counterfactual evaluation at observed histories is defined.
      for (int a = 0; a < data.layout()[k].n_actions; ++a) {
        if (!h.is_feasible(a)) continue;
        cells.try_emplace(cell_key(h, a), 0);
      }
    }
    int col = 0;
    for (auto& [key, c] : cells) c = col++;
  }
  return b;
}

FeatureBasis FeatureBasis::from_cells(std::vector<StageLayout> layout,
                                      std::vector<std::map<CellKey, int>> cells) {
  FeatureBasis b;
  b.kind_ = Kind::kSaturated;
  b.layout_ = std::move(layout);
  b.cells_ = std::move(cells);
  return b;
}

FeatureBasis::CellKey FeatureBasis::cell_key(const History& h, int action) {
  CellKey key;
  for (int s = 0; s <= h.stage; ++s) {
    const Eigen::VectorXd& x = h.covariates(s);
    key.insert(key.end(), x.data(), x.data() + x.size());
    key.push_back(s < h.stage ? h.action(s) : action);
  }
  return key;
}

int FeatureBasis::main_dimension(int stage) const {
  int d = 0;
  for (int s = 0; s <= stage; ++s) {
    const int p = layout_[s].covariate_dim;
    d += p;
    if (options_.quadratic) d += p;
    if (s < stage) {
      const int na = layout_[s].n_actions - 1;
      d += na;
      if (options_.past_action_interactions) d += na * p;
    }
  }
  return d;
}

int FeatureBasis::dimension(int stage) const {
  if (kind_ == Kind::kSaturated) return static_cast<int>(cells_.at(stage).size());
  return (1 + main_dimension(stage)) * layout_[stage].n_actions;
}

void FeatureBasis::main_effects(const History& h, double* out) const {
  for (int s = 0; s <= h.stage; ++s) {
    const Eigen::VectorXd& x = h.covariates(s);
    const int p = static_cast<int>(x.size());
    for (int j = 0; j < p; ++j) *out++ = x(j);
    if (options_.quadratic)
      for (int j = 0; j < p; ++j) *out++ = x(j) * x(j);
    if (s < h.stage) {
      const int na = layout_[s].n_actions;
      const int a = h.action(s);
      for (int c = 1; c < na; ++c) *out++ = a == c ? 1.0 : 0.0;
      if (options_.past_action_interactions)
        for (int c = 1; c < na; ++c)
          for (int j = 0; j < p; ++j) *out++ = a == c ? x(j) : 0.0;
    }
  }
}

void FeatureBasis::features_into(const History& h, int action, Eigen::Ref<Eigen::VectorXd> out) const {
  const int stage = h.stage;
  if (kind_ == Kind::kSaturated) {
    out.setZero();
    const auto& cells = cells_.at(stage);
    const auto it = cells.find(cell_key(h, action));
    if (it == cells.end())
      throw DataError("saturated basis: history/action cell at stage " + std::to_string(stage + 1) +
                      " was not observed when the basis was built");
    out(it->second) = 1.0;
    return;
  }
  const int m = main_dimension(stage);
  const int block = 1 + m;
  out(0) = 1.0;
  main_effects(h, out.data() + 1);
  const int na = layout_[stage].n_actions;
  for (int c = 1; c < na; ++c) {
    double* dst = out.data() + c * block;
    if (action == c) {
      for (int j = 0; j < block; ++j) dst[j] = out(j);
    } else {
      for (int j = 0; j < block; ++j) dst[j] = 0.0;
    }
  }
}

Eigen::VectorXd FeatureBasis::features(const History& h, int action) const {
  Eigen::VectorXd out(dimension(h.stage));
  features_into(h, action, out);
  return out;
}

Eigen::MatrixXd FeatureBasis::design(const Dataset& data, int stage, std::span<const int> actions) const {
  const int p = dimension(stage);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), p);
  Eigen::VectorXd row(p);
  for (std::size_t i = 0; i < data.size(); ++i) {
    features_into(data.history(i, stage), actions[i], row);
    x.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return x;
}

Eigen::MatrixXd FeatureBasis::observed_design(const Dataset& data, int stage) const {
  std::vector<int> actions(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) actions[i] = data[i].actions[stage];
  return design(data, stage, actions);
}

}  // namespace pdtr
