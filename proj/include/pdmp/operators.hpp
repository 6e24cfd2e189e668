#pragma once

#include "pdmp/model.hpp"
#include "pdmp/selector.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace pdmp {

enum class QuadRule { trapezoid, composite_simpson };

// Quadrature settings shared by the operator evaluations, the one-stage
// backward induction, and the simulator's hazard inversion. decay_rate and
// g_sup feed the exponential tail certificate used when a path is truncated
// at t_max instead of ending on the boundary.
struct QuadratureConfig {
  int nodes_per_unit_time = 64;
  QuadRule rule = QuadRule::composite_simpson;
  double t_max = 40.0;
  double tail_tol = 1e-8;
  double decay_rate = 0.25;
  double g_sup = 1.0;

  double pair_width() const { return 2.0 / nodes_per_unit_time; }
  double required_t_max(double alpha) const;
};

// Piecewise-constant open-loop control along one flow trajectory: actions per
// time interval plus the action applied on a boundary hit.
struct ControlPath {
  Vec origin;
  std::vector<double> time_nodes;        // 0 = t0 < ... < tN = min(t*, t_max)
  std::vector<Action> actions;           // one per interval [tk, tk+1)
  std::optional<Action> boundary_action; // present iff the path ends on the boundary
};

// Time nodes 0, w, 2w, ..., t_end with w the induction pair width; the final
// interval is shortened so the last node lands exactly on t_end.
std::vector<double> induction_nodes(double t_end, const QuadratureConfig& config);

ControlPath make_constant_path(const ModelSpec& model, const Vec& x, Action a,
                               const QuadratureConfig& config,
                               std::optional<Action> boundary_action = std::nullopt);

// Path induced by a feedback selector: actions are looked up at the nearest
// grid point of the flow position at each interval's left endpoint.
ControlPath make_selector_path(const ModelSpec& model, const StateGrid& grid,
                               const FeedbackSelector& selector, const Vec& x,
                               const QuadratureConfig& config);

void validate_path(const ModelSpec& model, const ControlPath& path,
                   const QuadratureConfig& config);

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

// Discretization of one control path: quadrature nodes along the flow with
// the cumulative integrated hazard, plus the boundary data. All discrete-time
// operator evaluations for the path are sums over these shared nodes, so the
// one-stage induction can reproduce them term by term.
class PathQuadrature {
 public:
  PathQuadrature(const ModelSpec& model, const ControlPath& path,
                 const QuadratureConfig& config);

  // Integrated hazard at time t in [0, tN]; exact when the intensity is
  // constant along the flow.
  double hazard_at(double t) const;

  // integral of exp(-alpha s - Lambda(s)) v(x(s), a(s)) ds over [0, tN].
  QuadResult running_integral(double alpha,
                              const std::function<double(const Vec&, Action)>& v) const;

  // running_integral of 1.
  QuadResult sojourn_mass(double alpha) const;

  // exp(-alpha t* - Lambda(t*)) w(boundary point, boundary action); zero for
  // paths that never reach the boundary.
  QuadResult boundary_term(double alpha,
                           const std::function<double(const Vec&, Action)>& w) const;

  // integral of exp(-alpha s - Lambda(s)) lambda(s) Qh(x(s), a(s)) ds plus,
  // when the path ends on the boundary, the discounted boundary kernel term.
  QuadResult jump_expectation(double alpha, const GridFunction& h) const;

  // Visits every node of the jump expectation with its effective weight, so
  // that summing weight * Qh(x, a) over the visits reproduces the integral.
  void for_each_jump_weight(double alpha,
                            const std::function<void(const Vec&, Action, double)>& fn) const;

  bool ends_on_boundary() const { return boundary_finite_; }
  double t_end() const { return t_end_; }
  double hazard_end() const { return hazard_end_; }
  const Vec& boundary_point() const { return boundary_point_; }
  Action boundary_action() const { return boundary_action_; }
  std::size_t node_count() const { return s_.size(); }

 private:
  void check_alpha(double alpha) const;
  void check_tail(double alpha) const;

  template <typename Integrand>
  QuadResult accumulate(double alpha, Integrand&& fn) const;

  const ModelSpec* model_;
  QuadratureConfig config_;

  // Flat node arrays; nodes at control-interval junctions are duplicated so
  // each copy carries its own interval's action.
  std::vector<double> s_;
  std::vector<Vec> x_;
  std::vector<double> lambda_;
  std::vector<double> hazard_;
  std::vector<double> w_full_;
  std::vector<double> w_half_;
  std::vector<Action> action_;

  bool boundary_finite_ = false;
  double t_end_ = 0.0;
  double hazard_end_ = 0.0;
  Vec boundary_point_;
  Action boundary_action_ = 0.0;
};

// One-shot evaluation of the integrated hazard along a path.
double integrated_hazard(const ModelSpec& model, const ControlPath& path,
                         const QuadratureConfig& config, double t);

// Combined one-jump operator value -rho * sojourn + running cost + boundary
// cost + post-jump expectation of h; the quantity the one-stage operator
// minimizes over paths.
double path_stage_value(const ModelSpec& model, const ControlPath& path,
                        const QuadratureConfig& config, double alpha, double rho,
                        const GridFunction& h);

namespace detail {

// Three-node quadrature over one induction interval [0, 2h]: hazard increment
// to the midpoint and the end, and the node weights of the configured rule.
struct PairRule {
  double d_hazard_mid;
  double d_hazard_end;
  double w0, w1, w2;
};

PairRule pair_rule(QuadRule rule, double h, double lam0, double lam1, double lam2);

}  // namespace detail

}  // namespace pdmp
