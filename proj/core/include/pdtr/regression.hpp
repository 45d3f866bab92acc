#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pdtr {

struct LeastSquaresReport {
  double condition_number = 0.0;
  bool ridge_applied = false;
};

// Solves min ||X B - Y||^2 for all columns of Y with one factorization of
// X'X. When cond(X'X) exceeds 1e10 a ridge of 1e-8 I is added; if the
// regularized system is still numerically singular a NumericalError
// reporting the condition number is thrown.
Eigen::MatrixXd least_squares(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                              LeastSquaresReport* report = nullptr);

inline constexpr double kRidgeConditionThreshold = 1e10;
inline constexpr double kRidgePenalty = 1e-8;

struct TreeOptions {
  int n_trees = 50;
  int max_depth = 4;
  int min_leaf = 5;
  std::uint64_t seed = 1;
};

// Depth-limited CART regression tree stored as a flat node array.
struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  std::vector<Node> nodes;

  double predict(const double* x) const;
};

// Bagged regression trees (bootstrap resamples, all features at every split).
struct Forest {
  std::vector<RegressionTree> trees;

  double predict(const double* x) const;
};

Forest fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TreeOptions& options);

}  // namespace pdtr
