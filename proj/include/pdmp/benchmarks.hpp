#pragma once

#include "pdmp/bundle.hpp"
#include "pdmp/selector.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pdmp {

// Parameters for the built-in model families. The two families are
//   model-a "drain-and-reset": linear drain on (0,1) with a boundary cost and
//     a uniform reset kernel; exercises boundary dynamics.
//   model-b "decay-no-boundary": exponential decay on (0,5) that never reaches
//     the boundary; exercises the infinite-horizon branch.
// Most fields override a family default; leave them unset for the standard
// benchmark instances.
struct BenchmarkParams {
  std::string id = "model-a";
  std::size_t grid_resolution = 49;
  std::vector<Action> actions;          // empty = family default
  std::vector<double> kernel_support;   // empty = family default
  double intensity_scale = 1.0;
  double running_cost_scale = 1.0;
  std::optional<double> constant_running_cost;
  double boundary_cost = 1.0;           // model-a only
  std::optional<double> deterministic_kernel_point;

  // Growth-witness inputs; b, M and K_lambda are computed at build time from
  // a refined probe sweep unless overridden.
  double c = 0.25;
  double delta = 0.25;
  double r_bar = 0.4;
  std::optional<double> b_override;
  std::optional<double> m_override;
  std::optional<double> k_lambda_override;

  int nodes_per_unit_time = 128;
  QuadRule rule = QuadRule::composite_simpson;
  std::optional<double> t_max;
  double tail_tol = 1e-8;

  std::uint64_t seed = 20240817;
};

ModelBundle make_benchmark(const BenchmarkParams& params);

inline ModelBundle make_benchmark(const std::string& id) {
  BenchmarkParams params;
  params.id = id;
  return make_benchmark(params);
}

// Uniformly spaced coarse policy grid used by the brute-force oracles.
std::shared_ptr<const StateGrid> coarse_policy_grid(const ModelBundle& bundle,
                                                    std::size_t points);

struct OracleBudget {
  std::size_t replications = 16;
  std::size_t policy_points = 5;
  double horizon = 40.0;          // average-cost evaluation horizon per policy
  std::uint64_t max_total_jumps = 10'000'000;
  std::size_t jobs = 1;           // worker threads for the policy enumeration
};

struct OracleResult {
  double value = 0.0;
  double std_error = 0.0;
  double min_mean_plus_3se = 0.0;  // floor of mean + 3 std errors over all policies
  std::size_t policies_evaluated = 0;
  FeedbackSelector best;           // on the coarse policy grid
  std::uint64_t jumps_used = 0;
};

// Exhaustive enumeration of all feedback selectors on the coarse policy grid,
// each evaluated by Monte Carlo; returns the minimal estimate. Ground truth
// for the discounted solver at matched coarse resolution.
OracleResult oracle_discounted(const ModelBundle& bundle, const Vec& x, double alpha,
                               const OracleBudget& budget, std::uint64_t seed);

// Same enumeration with long-horizon average-cost estimates.
OracleResult oracle_average(const ModelBundle& bundle, const OracleBudget& budget,
                            std::uint64_t seed);

}  // namespace pdmp
