#include "pdtr/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "pdtr/error.hpp"
#include "pdtr/rng.hpp"

namespace pdtr {

Eigen::MatrixXd least_squares(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                              LeastSquaresReport* report) {
  if (x.rows() != y.rows()) throw NumericalError("least_squares: row mismatch");
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd gram = x.transpose() * x;
  // Scale-free conditioning check on the Gram matrix.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double max_ev = ev.maxCoeff();
  const double min_ev = std::max(ev.minCoeff(), 0.0);
  double cond = min_ev > 0.0 ? max_ev / min_ev : std::numeric_limits<double>::infinity();
  bool ridge = false;
  if (!(max_ev > 0.0)) throw NumericalError("least_squares: design matrix is identically zero");
  if (cond > kRidgeConditionThreshold) {
    gram.diagonal().array() += kRidgePenalty;
    ridge = true;
    cond = (max_ev + kRidgePenalty) / (min_ev + kRidgePenalty);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || !(cond < 1.0 / std::numeric_limits<double>::epsilon())) {
    std::ostringstream msg;
    msg << "least_squares: rank-deficient design (" << x.rows() << " x " << p
        << "), condition number " << cond << " after ridge";
    throw NumericalError(msg.str());
  }
  if (report) *report = {cond, ridge};
  return llt.solve(x.transpose() * y);
}

double RegressionTree::predict(const double* x) const {
  int i = 0;
  while (nodes[i].feature >= 0) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].value;
}

double Forest::predict(const double* x) const {
  double s = 0.0;
  for (const RegressionTree& t : trees) s += t.predict(x);
  return trees.empty() ? 0.0 : s / static_cast<double>(trees.size());
}

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& x;  // row-major access is not needed; columns are features
  const Eigen::VectorXd& y;
  const TreeOptions& opt;
  RegressionTree tree;

  int build(std::vector<int>& idx, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double sum = 0.0;
    for (int i : idx) sum += y(i);
    const double n = static_cast<double>(idx.size());
    tree.nodes[node_id].value = sum / n;
    if (depth >= opt.max_depth || static_cast<int>(idx.size()) < 2 * opt.min_leaf) return node_id;

    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<int> order(idx);
    for (int f = 0; f < x.cols(); ++f) {
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return x(a, f) < x(b, f) || (x(a, f) == x(b, f) && a < b);
      });
      double left_sum = 0.0;
      for (std::size_t s = 0; s + 1 < order.size(); ++s) {
        left_sum += y(order[s]);
        const int n_left = static_cast<int>(s) + 1;
        const int n_right = static_cast<int>(order.size()) - n_left;
        if (n_left < opt.min_leaf || n_right < opt.min_leaf) continue;
        const double xl = x(order[s], f);
        const double xr = x(order[s + 1], f);
        if (xl == xr) continue;
        const double right_sum = sum - left_sum;
        // SSE reduction relative to the parent, up to a constant.
        const double gain = left_sum * left_sum / n_left + right_sum * right_sum / n_right - sum * sum / n;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = 0.5 * (xl + xr);
        }
      }
    }
    if (best_feature < 0) return node_id;
    std::vector<int> left, right;
    for (int i : idx) (x(i, best_feature) <= best_threshold ? left : right).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    tree.nodes[node_id].feature = best_feature;
    tree.nodes[node_id].threshold = best_threshold;
    tree.nodes[node_id].left = l;
    tree.nodes[node_id].right = r;
    return node_id;
  }
};

}  // namespace

Forest fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TreeOptions& options) {
  if (x.rows() != y.size() || x.rows() == 0) throw NumericalError("fit_forest: bad dimensions");
  Forest forest;
  Rng rng = make_stream(options.seed, {0x7ee5u});
  const int n = static_cast<int>(x.rows());
  for (int t = 0; t < options.n_trees; ++t) {
    std::vector<int> idx(n);
    for (int& i : idx) i = std::min(n - 1, static_cast<int>(uniform01(rng) * n));
    std::sort(idx.begin(), idx.end());
    TreeBuilder b{x, y, options, {}};
    b.build(idx, 0);
    forest.trees.push_back(std::move(b.tree));
  }
  return forest;
}

}  // namespace pdtr
