#pragma once

#include "pdmp/bundle.hpp"
#include "pdmp/rng.hpp"
#include "pdmp/selector.hpp"

#include <cstdint>
#include <vector>

namespace pdmp {

// One simulated controlled path: jump times, post-jump states, boundary-hit
// flags, and the accumulated cost functionals.
struct TrajectoryRecord {
  std::vector<double> jump_times;
  std::vector<Vec> post_jump_states;
  std::vector<bool> boundary_hit_flags;  // X(T_i-) on the boundary
  std::vector<double> cumulative_costs;  // running + boundary cost at each jump

  double running_cost_integral = 0.0;  // integral of f along the path
  double boundary_cost_sum = 0.0;      // sum of r over boundary hits
  double discounted_running = 0.0;     // integral of exp(-alpha s) f
  double discounted_boundary = 0.0;    // sum of exp(-alpha T_i) r
  double cost_at_half = 0.0;           // undiscounted cost up to horizon / 2

  double horizon = 0.0;
  std::size_t jump_count = 0;
  std::size_t boundary_hit_count = 0;  // p*(horizon)
};

struct CostEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t replications = 0;
  double horizon = 0.0;
  double truncation_bias = 0.0;     // certified discounted tail bound
  double split_half_drift = 0.0;    // average-cost stationarity check
  std::uint64_t seed = 0;
};

struct SimulationOptions {
  std::size_t explosion_guard = 1'000'000;  // max jumps per trajectory
  double bias_target = 1e-4;                // discounted truncation bias cap
};

struct SojournSample {
  double time = 0.0;
  bool boundary = false;
  bool censored = false;
};

// Draws the next inter-jump time from the survival law exp(-Lambda(x, t))
// with the deterministic boundary atom at t*(x): inversion of the integrated
// hazard along the selector-induced path, by bisection on its quadrature.
SojournSample sample_sojourn(const ModelBundle& bundle, const Vec& x,
                             const FeedbackSelector& selector, Rng& rng,
                             double max_time = -1.0);

// Simulates the controlled process from x up to the horizon, alternating
// sojourn draws and kernel draws; costs are accumulated by quadrature along
// each inter-jump flow segment.
TrajectoryRecord simulate_trajectory(const ModelBundle& bundle, const Vec& x,
                                     const FeedbackSelector& selector, double horizon,
                                     double alpha, Rng& rng,
                                     const SimulationOptions& options = {});

// Mean discounted cost over n_traj independent trajectories truncated at a
// horizon with a certified bias bound.
CostEstimate estimate_discounted_cost(const ModelBundle& bundle, const Vec& x,
                                      const FeedbackSelector& selector, double alpha,
                                      std::size_t n_traj, std::uint64_t seed,
                                      const SimulationOptions& options = {});

// Mean of cost(horizon) / horizon over independent replications, with a
// split-half drift statistic flagging non-stationarity.
CostEstimate estimate_average_cost(const ModelBundle& bundle, const Vec& x,
                                   const FeedbackSelector& selector, double horizon,
                                   std::size_t n_traj, std::uint64_t seed,
                                   const SimulationOptions& options = {});

// Truncation horizon giving a certified discounted tail below the bias target.
double discount_truncation_horizon(const ModelBundle& bundle, double alpha,
                                   double bias_target);

}  // namespace pdmp
