#include "pdmp/benchmarks.hpp"

#include "pdmp/simulator.hpp"
#include "pdmp/solvers.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace pdmp {

namespace {

struct Enumeration {
  ModelBundle coarse;                  // bundle with the policy grid swapped in
  std::vector<std::size_t> radices;    // action count per digit
  std::size_t interior_digits = 0;
  std::uint64_t total = 0;
};

Enumeration make_enumeration(const ModelBundle& bundle, std::size_t policy_points) {
  Enumeration out;
  out.coarse = bundle;
  out.coarse.grid = coarse_policy_grid(bundle, policy_points);

  const StateGrid& grid = *out.coarse.grid;
  out.interior_digits = grid.size();
  for (std::size_t i = 0; i < grid.size(); ++i)
    out.radices.push_back(bundle.model.action_set(grid.point(i), false).size());
  for (const Vec& z : grid.boundary_points())
    out.radices.push_back(bundle.model.action_set(z, true).size());

  out.total = 1;
  for (std::size_t r : out.radices) {
    out.total *= r;
    if (out.total > 1'000'000)
      throw ContractViolation("oracle enumeration: policy space too large");
  }
  return out;
}

FeedbackSelector decode_policy(const Enumeration& enumeration, std::uint64_t code) {
  FeedbackSelector selector;
  for (std::size_t d = 0; d < enumeration.radices.size(); ++d) {
    auto digit = static_cast<std::int32_t>(code % enumeration.radices[d]);
    code /= enumeration.radices[d];
    if (d < enumeration.interior_digits)
      selector.interior.push_back(digit);
    else
      selector.boundary.push_back(digit);
  }
  return selector;
}

template <typename Evaluate>
OracleResult run_enumeration(const Enumeration& enumeration, const OracleBudget& budget,
                             Evaluate&& evaluate) {
  std::vector<double> means(enumeration.total), errors(enumeration.total);
  std::atomic<std::uint64_t> total_jumps{0};
  std::atomic<bool> exhausted{false};
  std::atomic<std::uint64_t> completed{0};

  auto worker = [&](std::uint64_t begin, std::uint64_t stride) {
    for (std::uint64_t code = begin; code < enumeration.total; code += stride) {
      if (exhausted.load(std::memory_order_relaxed)) return;
      FeedbackSelector policy = decode_policy(enumeration, code);
      std::uint64_t jumps = 0;
      CostEstimate estimate = evaluate(policy, jumps);
      means[code] = estimate.mean;
      errors[code] = estimate.std_error;
      completed.fetch_add(1, std::memory_order_relaxed);
      if (total_jumps.fetch_add(jumps, std::memory_order_relaxed) + jumps >
          budget.max_total_jumps)
        exhausted.store(true, std::memory_order_relaxed);
    }
  };

  std::size_t jobs = std::max<std::size_t>(1, budget.jobs);
  if (jobs == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker, t, jobs);
    for (auto& th : pool) th.join();
  }

  if (exhausted.load()) {
    std::ostringstream msg;
    msg << "oracle enumeration: jump budget exhausted after " << completed.load() << " of "
        << enumeration.total << " policies";
    throw ConvergenceError(msg.str());
  }

  OracleResult best;
  best.value = std::numeric_limits<double>::infinity();
  best.min_mean_plus_3se = std::numeric_limits<double>::infinity();
  for (std::uint64_t code = 0; code < enumeration.total; ++code) {
    if (means[code] < best.value) {
      best.value = means[code];
      best.std_error = errors[code];
      best.best = decode_policy(enumeration, code);
    }
    best.min_mean_plus_3se =
        std::min(best.min_mean_plus_3se, means[code] + 3.0 * errors[code]);
  }
  best.policies_evaluated = static_cast<std::size_t>(enumeration.total);
  best.jumps_used = total_jumps.load();
  return best;
}

// Cheap jump counter: replications x expected jumps, measured per policy from
// the realized trajectories.
std::uint64_t count_jumps(const ModelBundle& bundle, const FeedbackSelector& policy,
                          const Vec& x, double horizon, double alpha, std::size_t reps,
                          std::uint64_t seed, double& mean, double& std_error,
                          bool discounted) {
  std::uint64_t jumps = 0;
  double m = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < reps; ++i) {
    Rng rng(derive_stream_seed(seed, i));
    TrajectoryRecord record = simulate_trajectory(bundle, x, policy, horizon, alpha, rng);
    jumps += record.jump_count;
    double value = discounted
                       ? record.discounted_running + record.discounted_boundary
                       : (record.running_cost_integral + record.boundary_cost_sum) / horizon;
    double d = value - m;
    m += d / static_cast<double>(i + 1);
    m2 += d * (value - m);
  }
  mean = m;
  std_error =
      reps > 1 ? std::sqrt(m2 / (static_cast<double>(reps) * (static_cast<double>(reps) - 1)))
               : 0.0;
  return jumps;
}

}  // namespace

OracleResult oracle_discounted(const ModelBundle& bundle, const Vec& x, double alpha,
                               const OracleBudget& budget, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw ContractViolation("oracle_discounted requires alpha > 0");
  Enumeration enumeration = make_enumeration(bundle, budget.policy_points);
  double t_sim = discount_truncation_horizon(bundle, alpha, 1e-4);

  return run_enumeration(enumeration, budget,
                         [&](const FeedbackSelector& policy, std::uint64_t& jumps) {
                           CostEstimate estimate;
                           estimate.replications = budget.replications;
                           jumps += count_jumps(enumeration.coarse, policy, x, t_sim, alpha,
                                                budget.replications, seed, estimate.mean,
                                                estimate.std_error, true);
                           return estimate;
                         });
}

OracleResult oracle_average(const ModelBundle& bundle, const OracleBudget& budget,
                            std::uint64_t seed) {
  Enumeration enumeration = make_enumeration(bundle, budget.policy_points);
  Vec start = enumeration.coarse.grid->point(centroid_index(*enumeration.coarse.grid));

  return run_enumeration(enumeration, budget,
                         [&](const FeedbackSelector& policy, std::uint64_t& jumps) {
                           CostEstimate estimate;
                           estimate.replications = budget.replications;
                           jumps += count_jumps(enumeration.coarse, policy, start,
                                                budget.horizon, 0.0, budget.replications, seed,
                                                estimate.mean, estimate.std_error, false);
                           return estimate;
                         });
}

}  // namespace pdmp
