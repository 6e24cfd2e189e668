#pragma once

#include "pdmp/bundle.hpp"
#include "pdmp/selector.hpp"

#include <memory>
#include <utility>
#include <vector>

namespace pdmp {

// Result of one evaluation of the one-stage optimization operator at a point:
// the optimal value, the minimizing piecewise-constant path, and the per-node
// minimizers for diagnostics.
struct OneStageResult {
  double value = 0.0;
  ControlPath path;
  std::vector<std::pair<Action, double>> node_trace;  // (action, value) per time node
};

// argmin over feasible boundary actions of r(z, a) + Qh(z, a); ties resolve
// to the lowest action index. Returns (index, minimal value).
std::pair<std::size_t, double> best_boundary_action(const ModelSpec& model,
                                                    const GridFunction& h, const Vec& z);

// argmin over feasible actions of f(x, a) - lambda(x, a) [w_value - Qh(x, a)],
// the pointwise Hamiltonian minimization; ties resolve to the lowest index.
std::pair<std::size_t, double> hamiltonian_argmin(const ModelSpec& model, double w_value,
                                                  const GridFunction& h, const Vec& x);

// Backward induction along the flow from x on the shared induction time grid:
// evaluates the one-stage operator value T_alpha(rho, h)(x) together with the
// minimizing path. Throws on non-finite h and when a truncated evaluation
// falls below the certified lower floor.
OneStageResult one_stage_value(const ModelBundle& bundle, double alpha, double rho,
                               const GridFunction& h, const Vec& x);

// Greedy feedback selector for the pair (w, h): Hamiltonian argmin at interior
// grid points, boundary argmin at boundary points.
FeedbackSelector extract_selector(const ModelBundle& bundle, const GridFunction& h,
                                  const std::vector<double>& w_values);

// Reusable whole-grid evaluator. Geometry, hazards, costs, and kernel rows
// along every grid point's induction path are prepared once; each sweep then
// reduces to a few fused multiplies per interval and action. Values agree
// with one_stage_value up to floating-point roundoff.
class OneStageSolver {
 public:
  explicit OneStageSolver(const ModelBundle& bundle);
  ~OneStageSolver();
  OneStageSolver(OneStageSolver&&) noexcept;
  OneStageSolver& operator=(OneStageSolver&&) noexcept;

  void set_alpha(double alpha);

  // out[i] = T_alpha(rho, h)(x_i) over the whole grid.
  void sweep(double rho, const GridFunction& h, std::vector<double>& out) const;

  const ModelBundle& bundle() const { return *bundle_; }

 private:
  const ModelBundle* bundle_;
  struct Prepared;
  std::unique_ptr<Prepared> prep_;
};

// Convenience wrapper: one full sweep as a GridFunction (boundary values are
// filled with the boundary argmin values).
GridFunction one_stage_apply(const ModelBundle& bundle, double alpha, double rho,
                             const GridFunction& h);

}  // namespace pdmp
