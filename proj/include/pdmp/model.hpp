#pragma once

#include "pdmp/grid.hpp"
#include "pdmp/types.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace pdmp {

// Finite discrete post-jump distribution. Weights are validated and normalized
// to sum to one exactly on construction, so kernel expectations of constants
// are exact.
class Distribution {
 public:
  struct Atom {
    Vec point;
    double weight;
  };

  explicit Distribution(std::vector<Atom> atoms);

  const std::vector<Atom>& atoms() const { return atoms_; }

 private:
  std::vector<Atom> atoms_;
};

enum class FlowKind { closed_form, ode_defined };

// Drift-field description for flows given by an ODE rather than a formula.
struct OdeFlowSpec {
  std::function<Vec(const Vec&)> drift;
  double step_hint = 1e-2;
};

// Hit-time detection settings for ode_defined flows: scan the signed boundary
// distance up to t_scan; if no sign change occurs and the model declares the
// distance monotone past the scan horizon, the hit time is infinite.
struct HitScanSpec {
  std::function<double(const Vec&)> boundary_distance;  // >0 interior, 0 on the boundary
  double t_scan = 50.0;
  bool monotone_after_scan = false;
  double root_tol = 1e-10;
};

// A controlled piecewise deterministic process: flow, hit time, jump
// intensity, post-jump kernel, running and boundary costs, feasible actions.
// Immutable after construction; every member is a pure function.
struct ModelSpec {
  int state_dim = 1;
  std::function<bool(const Vec&)> interior_test;

  FlowKind flow_kind = FlowKind::closed_form;
  std::function<Vec(const Vec&, double)> flow;  // closed-form flows only
  std::optional<OdeFlowSpec> ode;
  bool flow_supports_backward = false;  // whether flow(x, t) is valid for t < 0

  std::function<double(const Vec&)> hit_time_solver;  // t*(x), +inf when no exit
  std::optional<HitScanSpec> hit_scan;                // used by ode_defined hit times
  Vec cemetery_point;

  std::function<double(const Vec&, Action)> intensity;      // lambda(x, a) >= 0
  std::function<Distribution(const Vec&, Action)> kernel;   // Q(x, a; .)
  std::function<double(const Vec&, Action)> running_cost;   // f(x, a) >= 0
  std::function<double(const Vec&, Action)> boundary_cost;  // r(z, a) >= 0
  std::function<std::vector<Action>(const Vec&, bool)> action_set;  // (point, is_boundary)

  double flow_tol = 1e-9;
  double fd_step = 1e-5;
  double state_scale = 1.0;
};

// Witness for the expected-growth inequalities: a function g >= 1 with a
// boundary extension, a boundary comparison function r_bar, and the constants
// of the drift and cost bounds.
struct GrowthWitness {
  GridFunction g;
  std::vector<double> r_bar;  // one value per grid boundary point
  double b = 0.0;             // drift bound
  double c = 0.0;             // decay rate, > 0
  double delta = 0.0;         // boundary-cost margin, > 0
  double m = 0.0;             // running-cost bound factor
};

// Witness for the integrability conditions: a state-dependent intensity floor,
// a running-cost ceiling, and the sojourn-mass bound K_lambda.
struct IntegrabilityWitness {
  std::function<double(const Vec&)> lambda_lower;
  std::function<double(const Vec&)> f_upper;
  double k_lambda = 0.0;
};

// Empirical geometric-ergodicity estimate for the post-jump chain under a
// fixed selector. Produced only by the diagnostics estimator.
struct ErgodicityWitness {
  double a_const = 0.0;
  double kappa = 0.0;  // in (0, 1)
  double nu_g = 0.0;   // estimate of the invariant mean of g
  double fit_residual = 0.0;
};

struct DerivativeResult {
  double value = 0.0;
  bool reduced_accuracy = false;  // one-sided fallback was used near the boundary
};

// phi(x, t). Throws DomainError when t exceeds the hit time; evaluation exactly
// at t*(x) returns the boundary point.
Vec flow_at(const ModelSpec& model, const Vec& x, double t);

// t*(x) = inf{t > 0 : phi(x, t) hits the boundary}; +inf when the flow never
// exits. ode_defined models detect the hit by scanning the declared boundary
// distance and refining the bracket by bisection.
double hit_time(const ModelSpec& model, const Vec& x);

// Integral of h against Q(x, a; .) with h evaluated by grid interpolation.
double kernel_expectation(const ModelSpec& model, const GridFunction& h, const Vec& x, Action a);

// Central finite-difference approximation of d/dt v(phi(x, t)) at t = 0; falls
// back to a flagged one-sided difference when the backward point is not
// available.
DerivativeResult directional_derivative(const ModelSpec& model, const GridFunction& v,
                                        const Vec& x);

// Same finite-difference stencil for an arbitrary callable.
DerivativeResult directional_derivative(const ModelSpec& model,
                                        const std::function<double(const Vec&)>& v, const Vec& x);

// Throws ContractViolation unless a is a member of the feasible set at x.
void require_feasible(const ModelSpec& model, const Vec& x, bool is_boundary, Action a);

bool is_feasible(const ModelSpec& model, const Vec& x, bool is_boundary, Action a);

// Builds a hit_time_solver for ode_defined models from the scan settings.
std::function<double(const Vec&)> make_scan_hit_time(const ModelSpec* model);

}  // namespace pdmp
