#pragma once

#include "pdmp/bundle.hpp"
#include "pdmp/selector.hpp"
#include "pdmp/solvers.hpp"

#include <string>
#include <vector>

namespace pdmp {

struct ViolationEntry {
  std::size_t point_index = 0;
  bool boundary = false;
  Action action = 0.0;
  double slack = 0.0;  // left-hand side minus right-hand side; > 0 violates
};

struct InequalityReport {
  std::string name;
  double worst_slack = 0.0;
  std::vector<ViolationEntry> worst;  // up to ten worst entries
  bool pass = true;
};

// Runnable audit of the expected-growth inequalities: the drift condition,
// the running-cost bound, the boundary comparison, and the boundary-cost
// bound, each evaluated exactly on grid x action pairs.
struct GrowthReport {
  InequalityReport drift;                // Xg + c g - lambda (g - Qg) <= b
  InequalityReport running_cost;         // f <= M g
  InequalityReport boundary_comparison;  // r_bar + Qg <= g on the boundary
  InequalityReport boundary_cost;        // r <= M / (c + delta) r_bar
  bool pass = true;
};

GrowthReport check_growth(const ModelBundle& bundle, const GrowthWitness& witness,
                          double check_tol = -1.0);

inline GrowthReport check_growth(const ModelBundle& bundle, double check_tol = -1.0) {
  return check_growth(bundle, bundle.growth, check_tol);
}

// Integrability audit: pointwise domination of the intensity floor and cost
// ceiling, the sojourn-mass bound, and the decay/finiteness conditions along
// never-exiting flow lines.
struct IntegrabilityReport {
  InequalityReport domination_lambda;  // lambda_lower <= lambda(., a)
  InequalityReport domination_cost;    // f(., a) <= f_upper
  InequalityReport sojourn_bound;      // integral of e^{ct - hazard floor} <= K_lambda
  double worst_growth_decay = 0.0;     // condition on e^{ct - hazard floor} at the horizon
  double worst_weighted_decay = 0.0;   // condition on e^{-hazard floor} g at the horizon
  double worst_cost_tail = 0.0;        // certified tail of the cost integral
  bool pass = true;
};

IntegrabilityReport check_integrability(const ModelBundle& bundle,
                                        const IntegrabilityWitness& witness,
                                        double check_tol = -1.0);

inline IntegrabilityReport check_integrability(const ModelBundle& bundle,
                                               double check_tol = -1.0) {
  return check_integrability(bundle, bundle.integrability, check_tol);
}

// integral of exp(c t - int_0^t lambda_floor) dt along the flow from x,
// truncated at t_int; +inf when the integrand has not decayed by then.
double sojourn_bound_integral(const ModelSpec& model,
                              const std::function<double(const Vec&)>& lambda_lower, double c,
                              const Vec& x, double t_int, int nodes_per_unit);

struct ErgodicityReport {
  ErgodicityWitness witness;
  std::vector<std::vector<double>> probe_errors;  // per probe: g-norm error per step
  std::vector<std::size_t> probe_cutoffs;         // last iterate above the noise floor
  double row_sum_defect = 0.0;                    // max |row sum - 1| of the embedded kernel
};

// Empirical geometric-ergodicity estimate of the embedded post-jump chain
// under a fixed selector: power iteration of the discrete kernel on a family
// of probe functions, with a least-squares geometric fit. Throws when no
// contraction is detected.
ErgodicityReport estimate_ergodicity(const ModelBundle& bundle, const FeedbackSelector& selector,
                                     std::vector<GridFunction> probes = {}, std::size_t steps = 30);

std::vector<GridFunction> default_ergodicity_probes(const ModelBundle& bundle);

// Dense matrix of the embedded post-jump kernel at zero discount under the
// selector-induced paths; rows are indexed by grid points.
Eigen::MatrixXd embedded_kernel_matrix(const ModelBundle& bundle,
                                       const FeedbackSelector& selector);

struct AcoiReport {
  std::vector<double> residuals;  // h - T(rho, h) per grid point
  double min_residual = 0.0;
  double mean_residual = 0.0;
  std::size_t worst_index = 0;
  bool pass = true;
};

// Average-cost optimality inequality audit: h >= T(rho, h) - tol on the grid.
AcoiReport check_acoi(const ModelBundle& bundle, const AverageSolution& solution,
                      double acoi_tol = -1.0);

AcoiReport check_acoi(const ModelBundle& bundle, double rho, const GridFunction& h,
                      double acoi_tol = -1.0);

}  // namespace pdmp
