#pragma once

#include "pdmp/one_stage.hpp"
#include "pdmp/simulator.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace pdmp {

struct SolveOptions {
  double vi_tol = 1e-8;
  std::size_t max_iter = 3'000'000;
  bool enforce_value_bound = true;  // check the discounted growth bound on exit
};

struct DiscountedSolution {
  double alpha = 0.0;
  GridFunction value;           // J at grid points, boundary extension included
  FeedbackSelector selector;
  std::size_t iterations = 0;
  double residual = 0.0;        // g-norm of T(0, J) - J at exit
  std::vector<double> residual_trace;  // decimated when long
};

// Discounted value iteration from zero: v_{m+1} = T_alpha(0, v_m) until the
// g-norm residual meets vi_tol. Iterates are pointwise nondecreasing.
DiscountedSolution solve_discounted(const ModelBundle& bundle, double alpha,
                                    const SolveOptions& options = {});

struct NeumannReport {
  std::vector<double> errors;  // g-norm of S_K - J per partial sum
  bool monotone = true;        // errors decrease in K
};

// Partial sums of the one-jump cost transported by the post-jump kernel under
// the solution's selector; their g-norm distance to J must shrink.
NeumannReport neumann_check(const ModelBundle& bundle, const DiscountedSolution& solution,
                            std::size_t terms);

struct AverageOptions {
  SolveOptions discounted;
  std::optional<double> rho_tol;   // default 1e-4 max(1, |rho_0|)
  std::optional<double> acoi_tol;  // default 1e-3 (1 + |h|_g)
  double h_stab_tol = 1e-2;        // relative stabilization of the h iterates
  std::size_t min_terms = 2;       // never stop before this many schedule terms
};

struct AverageSolution {
  double rho = 0.0;
  GridFunction h;
  FeedbackSelector selector;
  std::vector<std::pair<double, double>> rho_trace;  // (alpha_k, rho_k)
  std::vector<double> h_gap_trace;                   // g-norm of h_k - h_{k-1}
  double acoi_residual = 0.0;                        // min over grid of h - T(rho, h)
  std::size_t terms_used = 0;
  bool anchor_exact = true;   // h_k(x0) == 0 bitwise at every schedule term
};

std::vector<double> default_vanishing_schedule(double c, std::size_t terms = 12);

// Vanishing-discount scheme: solves the discounted problem along a decreasing
// schedule, tracks rho_k = alpha_k J_k(x0) and the normalized iterates
// h_k = J_k - J_k(x0), and returns the limit pair with its greedy selector.
AverageSolution solve_average(const ModelBundle& bundle,
                              std::optional<std::size_t> x0_index = std::nullopt,
                              std::vector<double> schedule = {},
                              const AverageOptions& options = {});

std::size_t centroid_index(const StateGrid& grid);

struct BoundViolation {
  std::size_t index = 0;
  std::size_t other = 0;  // pair partner for the difference bound
  double slack = 0.0;
};

struct ValueBoundReport {
  double worst_level_slack = 0.0;       // min over grid of bound - J
  double worst_difference_slack = 0.0;  // min over sampled pairs
  std::vector<BoundViolation> level_violations;
  std::vector<BoundViolation> difference_violations;
  bool pass = true;
};

// Per-point slack of the discounted growth bound
// J(x) <= M g(x) / (c + alpha) + M b / (c alpha), plus the pairwise
// difference bound |J(x) - J(y)| <= a M' / (1 - kappa) (1 + g(y)) g(x) when an
// ergodicity witness is supplied.
ValueBoundReport check_value_bounds(const ModelBundle& bundle,
                                    const DiscountedSolution& solution,
                                    const ErgodicityWitness* ergodicity = nullptr,
                                    std::size_t pair_samples = 256);

// Finite-horizon transversality monitor: mean of T(rho, h)(X(t)) / t under the
// solution's policy, per requested horizon. Reporting only; the values must
// stay bounded below as the horizon grows.
std::vector<double> transversality_monitor(const ModelBundle& bundle,
                                           const AverageSolution& solution,
                                           const std::vector<double>& horizons,
                                           std::size_t replications, std::uint64_t seed);

}  // namespace pdmp
