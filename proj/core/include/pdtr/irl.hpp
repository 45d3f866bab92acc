#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pdtr/data.hpp"
#include "pdtr/features.hpp"
#include "pdtr/qmodel.hpp"
#include "pdtr/regime.hpp"

namespace pdtr {

// Outcome scale the composite is formed on: raw Y, or Y standardized to mean
// 0 and variance 1 on the fitting data.
enum class OutcomeScale { kRaw, kStandardized };

std::string scale_name(OutcomeScale s);
OutcomeScale parse_scale(const std::string& name);

// Composite outcome C = rho(Y)' lambda with ||lambda||_2 = 1.
struct CompositeSpec {
  Eigen::VectorXd lambda;

  // Normalizes v; throws NumericalError("composite direction undefined")
  // when v is zero.
  static CompositeSpec from_direction(const Eigen::VectorXd& v);
  void validate() const;
};

// Returns data with standardized outcomes (unchanged if already standardized).
Dataset ensure_standardized(const Dataset& data);
Dataset composite_data(const Dataset& data, OutcomeScale scale);

// v_l = mean over rows of Q^1_l(H^1, pi^1(H^1)) where the Q stack is fit on
// the outcomes on the given scale with `regime` as the downstream rule.
Eigen::VectorXd plug_in_values(const Dataset& data, const Regime& regime, const FeatureBasis& basis,
                               const EngineConfig& engine, OutcomeScale scale = OutcomeScale::kRaw);

// Plug-in V_lambda obtained by fitting the scalar composite directly.
double composite_value(const Dataset& data, const Regime& regime, const FeatureBasis& basis,
                       const EngineConfig& engine, const Eigen::VectorXd& lambda,
                       OutcomeScale scale = OutcomeScale::kRaw);

// Unit-vector grids: {+1, -1} for dimension 1, an even circle for 2, a
// Fibonacci lattice for 3 and seeded Gaussian directions above that.
std::vector<Eigen::VectorXd> sphere_grid(int dimension, int n_points, std::uint64_t seed = 1);

struct GridSearchResult {
  Eigen::VectorXd lambda;
  double value = 0.0;
};

// argmax over the grid of composite_value (ties to the first grid point).
GridSearchResult grid_search_lambda(const Dataset& data, const Regime& regime, const FeatureBasis& basis,
                                    const EngineConfig& engine, const std::vector<Eigen::VectorXd>& grid,
                                    OutcomeScale scale = OutcomeScale::kRaw, int workers = 1);

inline constexpr int kDefaultSphereGrid = 10000;

// Linear engine: closed form plug_in_values / norm. Other engines: grid
// search over kDefaultSphereGrid points.
CompositeSpec estimate_lambda(const Dataset& data, const Regime& regime, const FeatureBasis& basis,
                              const EngineConfig& engine, OutcomeScale scale = OutcomeScale::kRaw,
                              int workers = 1);

// Greedy Q-learning on the composite rho(Y)' lambda.
std::shared_ptr<const StageRuleRegime> tuned_composite_regime(const Dataset& data, const CompositeSpec& spec,
                                                              const FeatureBasis& basis, const EngineConfig& engine,
                                                              OutcomeScale scale = OutcomeScale::kRaw);

double angle_degrees(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace pdtr
