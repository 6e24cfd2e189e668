#include "pdmp/model.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>

namespace pdmp {

Distribution::Distribution(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw ContractViolation("Distribution: empty support");
  double total = 0.0;
  for (const auto& atom : atoms_) {
    if (!(atom.weight >= 0.0) || !std::isfinite(atom.weight))
      throw ContractViolation("Distribution: weights must be nonnegative and finite");
    total += atom.weight;
  }
  if (total <= 0.0) throw ContractViolation("Distribution: weights sum to zero");
  for (auto& atom : atoms_) atom.weight /= total;
}

namespace {

using OdeState = std::vector<double>;

Vec integrate_drift(const std::function<Vec(const Vec&)>& drift, const Vec& x, double span,
                    double step_hint, double tol) {
  namespace odeint = boost::numeric::odeint;
  OdeState state(x.data(), x.data() + x.size());
  auto system = [&](const OdeState& s, OdeState& dsdt, double) {
    Vec v = Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size()));
    Vec d = drift(v);
    dsdt.assign(d.data(), d.data() + d.size());
  };
  if (span > 0.0) {
    auto stepper = odeint::make_controlled<odeint::runge_kutta_cash_karp54<OdeState>>(tol, tol);
    try {
      odeint::integrate_adaptive(stepper, system, state, 0.0, span, std::min(step_hint, span));
    } catch (const std::exception& e) {
      throw NumericError(std::string("flow integration failed: ") + e.what());
    }
  }
  return Eigen::Map<const Vec>(state.data(), static_cast<Eigen::Index>(state.size()));
}

Vec integrate_ode(const ModelSpec& model, const Vec& x, double t) {
  return integrate_drift(model.ode->drift, x, t, model.ode->step_hint, model.flow_tol);
}

Vec integrate_ode_signed(const ModelSpec& model, const Vec& x, double t) {
  if (t >= 0.0) return integrate_ode(model, x, t);
  auto drift = model.ode->drift;
  auto negated = [drift](const Vec& v) { return Vec(-drift(v)); };
  return integrate_drift(negated, x, -t, model.ode->step_hint, model.flow_tol);
}

}  // namespace

Vec flow_at(const ModelSpec& model, const Vec& x, double t) {
  if (t < 0.0) throw DomainError("flow_at: negative time");
  double t_star = hit_time(model, x);
  if (t > t_star * (1.0 + 1e-12) && t > t_star + model.flow_tol)
    throw DomainError("flow_at: flow past boundary (t > t*(x))");
  if (model.flow_kind == FlowKind::closed_form) return model.flow(x, t);
  return integrate_ode(model, x, t);
}

double hit_time(const ModelSpec& model, const Vec& x) { return model.hit_time_solver(x); }

std::function<double(const Vec&)> make_scan_hit_time(const ModelSpec* model) {
  return [model](const Vec& x) -> double {
    const auto& scan = *model->hit_scan;
    auto distance_at = [&](double t) {
      Vec y = model->flow_kind == FlowKind::closed_form ? model->flow(x, t)
                                                        : integrate_ode(*model, x, t);
      return scan.boundary_distance(y);
    };
    double step = std::max(scan.t_scan / 4096.0, scan.root_tol);
    double prev_t = 0.0;
    double prev_d = distance_at(0.0);
    bool decreasing_tail = true;
    for (double t = step; t <= scan.t_scan * (1.0 + 1e-12); t += step) {
      double d = distance_at(t);
      if (d <= 0.0) {
        // Bracketed: refine by bisection.
        double lo = prev_t, hi = t;
        while (hi - lo > scan.root_tol) {
          double mid = 0.5 * (lo + hi);
          (distance_at(mid) <= 0.0 ? hi : lo) = mid;
        }
        return 0.5 * (lo + hi);
      }
      decreasing_tail = d < prev_d;
      prev_t = t;
      prev_d = d;
    }
    if (scan.monotone_after_scan && !decreasing_tail) return kInfiniteTime;
    throw DiagnosticError(
        "hit_time: no boundary crossing before t_scan and no declared monotonicity; "
        "refusing to guess");
  };
}

bool is_feasible(const ModelSpec& model, const Vec& x, bool is_boundary, Action a) {
  auto actions = model.action_set(x, is_boundary);
  for (Action candidate : actions)
    if (std::abs(candidate - a) <= 1e-12 * std::max(1.0, std::abs(candidate))) return true;
  return false;
}

void require_feasible(const ModelSpec& model, const Vec& x, bool is_boundary, Action a) {
  if (!is_feasible(model, x, is_boundary, a))
    throw ContractViolation("action " + std::to_string(a) + " infeasible at state");
}

double kernel_expectation(const ModelSpec& model, const GridFunction& h, const Vec& x, Action a) {
  require_feasible(model, x, !model.interior_test(x), a);
  Distribution q = model.kernel(x, a);
  double out = 0.0;
  for (const auto& atom : q.atoms()) out += atom.weight * h.interpolate(atom.point);
  return out;
}

namespace {

Vec flow_signed(const ModelSpec& model, const Vec& x, double t) {
  if (model.flow_kind == FlowKind::closed_form) return model.flow(x, t);
  return integrate_ode_signed(model, x, t);
}

DerivativeResult directional_derivative_impl(const ModelSpec& model,
                                             const std::function<double(const Vec&)>& v,
                                             const Vec& x) {
  double h = model.fd_step * model.state_scale;
  double t_star = hit_time(model, x);
  bool forward_ok = t_star > h;
  if (!forward_ok) h = std::max(t_star * 0.5, 1e-12);

  Vec fwd = flow_signed(model, x, h);
  bool backward_ok = model.flow_supports_backward || model.flow_kind == FlowKind::ode_defined;
  if (backward_ok) {
    Vec bwd = flow_signed(model, x, -h);
    if (model.interior_test(bwd))
      return {(v(fwd) - v(bwd)) / (2.0 * h), !forward_ok};
  }
  return {(v(fwd) - v(x)) / h, true};
}

}  // namespace

DerivativeResult directional_derivative(const ModelSpec& model, const GridFunction& v,
                                        const Vec& x) {
  return directional_derivative_impl(
      model, [&v](const Vec& y) { return v.interpolate(y); }, x);
}

DerivativeResult directional_derivative(const ModelSpec& model,
                                        const std::function<double(const Vec&)>& v, const Vec& x) {
  return directional_derivative_impl(model, v, x);
}

}  // namespace pdmp
