#include "pdmp/operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pdmp {

double QuadratureConfig::required_t_max(double alpha) const {
  double rate = alpha + decay_rate;
  if (rate <= 0.0) return t_max;
  return std::log(std::max(g_sup, 1.0) / tail_tol) / rate;
}

std::vector<double> induction_nodes(double t_end, const QuadratureConfig& config) {
  if (!(t_end > 0.0)) throw ContractViolation("induction_nodes: t_end must be positive");
  double w = config.pair_width();
  std::vector<double> nodes;
  nodes.reserve(static_cast<std::size_t>(t_end / w) + 2);
  nodes.push_back(0.0);
  for (double t = w; t < t_end - 0.25 * w; t += w) nodes.push_back(t);
  nodes.push_back(t_end);
  return nodes;
}

namespace {

double end_time(const QuadratureConfig& config,
                double t_star) {
  if (std::isfinite(t_star) && t_star > config.t_max)
    throw NumericError("path horizon t_max=" + std::to_string(config.t_max) +
                       " is smaller than the finite hit time t*=" + std::to_string(t_star));
  return std::min(t_star, config.t_max);
}

}  // namespace

ControlPath make_constant_path(const ModelSpec& model, const Vec& x, Action a,
                               const QuadratureConfig& config,
                               std::optional<Action> boundary_action) {
  double t_star = hit_time(model, x);
  ControlPath path;
  path.origin = x;
  path.time_nodes = {0.0, end_time(config, t_star)};
  path.actions = {a};
  if (std::isfinite(t_star)) path.boundary_action = boundary_action.value_or(a);
  return path;
}

ControlPath make_selector_path(const ModelSpec& model, const StateGrid& grid,
                               const FeedbackSelector& selector, const Vec& x,
                               const QuadratureConfig& config) {
  double t_star = hit_time(model, x);
  ControlPath path;
  path.origin = x;
  path.time_nodes = induction_nodes(end_time(config, t_star), config);
  path.actions.reserve(path.time_nodes.size() - 1);
  for (std::size_t k = 0; k + 1 < path.time_nodes.size(); ++k) {
    Vec xt = flow_at(model, x, path.time_nodes[k]);
    path.actions.push_back(selector.interior_action(model, grid, xt));
  }
  if (std::isfinite(t_star)) {
    Vec z = flow_at(model, x, t_star);
    path.boundary_action = selector.boundary_action(model, grid, z);
  }
  return path;
}

void validate_path(const ModelSpec& model, const ControlPath& path,
                   const QuadratureConfig& config) {
  if (path.time_nodes.size() < 2 || path.time_nodes.front() != 0.0)
    throw ContractViolation("ControlPath: time nodes must start at 0 and cover one interval");
  for (std::size_t k = 1; k < path.time_nodes.size(); ++k)
    if (!(path.time_nodes[k] > path.time_nodes[k - 1]))
      throw ContractViolation("ControlPath: time nodes must increase");
  if (path.actions.size() + 1 != path.time_nodes.size())
    throw ContractViolation("ControlPath: one action per interval required");
  double t_star = hit_time(model, path.origin);
  double expected_end = end_time(config, t_star);
  if (std::abs(path.time_nodes.back() - expected_end) >
      1e-9 * std::max(1.0, std::abs(expected_end)))
    throw ContractViolation("ControlPath: final node must equal min(t*, t_max)");
  for (std::size_t k = 0; k + 1 < path.time_nodes.size(); ++k) {
    Vec xt = flow_at(model, path.origin, path.time_nodes[k]);
    require_feasible(model, xt, false, path.actions[k]);
  }
  if (std::isfinite(t_star)) {
    if (!path.boundary_action)
      throw ContractViolation("ControlPath: boundary action required for a finite hit time");
    require_feasible(model, flow_at(model, path.origin, t_star), true, *path.boundary_action);
  } else if (path.boundary_action) {
    throw ContractViolation("ControlPath: boundary action present but the flow never exits");
  }
}

namespace detail {

PairRule pair_rule(QuadRule rule, double h, double lam0, double lam1, double lam2) {
  PairRule out{};
  if (rule == QuadRule::composite_simpson) {
    out.d_hazard_end = h / 3.0 * (lam0 + 4.0 * lam1 + lam2);
    out.d_hazard_mid = h / 12.0 * (5.0 * lam0 + 8.0 * lam1 - lam2);
    // The cumulative hazard is nondecreasing for nonnegative intensities.
    out.d_hazard_mid = std::clamp(out.d_hazard_mid, 0.0, out.d_hazard_end);
    out.w0 = h / 3.0;
    out.w1 = 4.0 * h / 3.0;
    out.w2 = h / 3.0;
  } else {
    out.d_hazard_mid = 0.5 * h * (lam0 + lam1);
    out.d_hazard_end = out.d_hazard_mid + 0.5 * h * (lam1 + lam2);
    out.w0 = 0.5 * h;
    out.w1 = h;
    out.w2 = 0.5 * h;
  }
  return out;
}

}  // namespace detail

PathQuadrature::PathQuadrature(const ModelSpec& model, const ControlPath& path,
                               const QuadratureConfig& config)
    : model_(&model), config_(config) {
  if (path.time_nodes.size() < 2 || path.actions.size() + 1 != path.time_nodes.size())
    throw ContractViolation("PathQuadrature: malformed control path");

  double t_star = hit_time(model, path.origin);
  t_end_ = path.time_nodes.back();
  boundary_finite_ = std::isfinite(t_star) && t_star <= config.t_max * (1.0 + 1e-12);
  if (boundary_finite_ && !path.boundary_action)
    throw ContractViolation("PathQuadrature: missing boundary action on a boundary-bound path");

  // Node budget: per control interval an even micro count close to the
  // configured density, minimum one Simpson pair.
  std::size_t total = 0;
  std::vector<std::size_t> micro(path.actions.size());
  for (std::size_t k = 0; k < path.actions.size(); ++k) {
    double len = path.time_nodes[k + 1] - path.time_nodes[k];
    micro[k] = std::max<std::size_t>(
        2, 2 * static_cast<std::size_t>(
                   std::ceil(0.5 * len * config.nodes_per_unit_time - 1e-12)));
    total += micro[k] + 1;
  }
  s_.reserve(total);
  x_.reserve(total);
  lambda_.reserve(total);
  hazard_.reserve(total);
  w_full_.assign(total, 0.0);
  w_half_.assign(total, 0.0);
  action_.reserve(total);

  double hazard_acc = 0.0;
  for (std::size_t k = 0; k < path.actions.size(); ++k) {
    const double t0 = path.time_nodes[k];
    const double len = path.time_nodes[k + 1] - t0;
    const std::size_t m = micro[k];
    const double h = len / static_cast<double>(m);
    const Action a = path.actions[k];
    const std::size_t base = s_.size();

    for (std::size_t j = 0; j <= m; ++j) {
      double s = (j == m) ? path.time_nodes[k + 1] : t0 + h * static_cast<double>(j);
      Vec xs = (model.flow_kind == FlowKind::closed_form)
                   ? model.flow(path.origin, s)
                   : flow_at(model, path.origin, s);
      s_.push_back(s);
      lambda_.push_back(model.intensity(xs, a));
      x_.push_back(std::move(xs));
      action_.push_back(a);
      hazard_.push_back(0.0);
    }

    // Cumulative hazard and quadrature weights, one pair at a time.
    for (std::size_t j = 0; j + 2 <= m; j += 2) {
      auto rule = detail::pair_rule(config.rule, h, lambda_[base + j], lambda_[base + j + 1],
                                    lambda_[base + j + 2]);
      hazard_[base + j] = hazard_acc;
      hazard_[base + j + 1] = hazard_acc + rule.d_hazard_mid;
      hazard_acc += rule.d_hazard_end;
      w_full_[base + j] += rule.w0;
      w_full_[base + j + 1] += rule.w1;
      w_full_[base + j + 2] += rule.w2;
    }
    hazard_[base + m] = hazard_acc;

    // Companion lower-order weights for the reported error estimate: the
    // trapezoid rule at step h (for Simpson) or at step 2h (for trapezoid).
    if (config.rule == QuadRule::composite_simpson) {
      for (std::size_t j = 0; j <= m; ++j)
        w_half_[base + j] = (j == 0 || j == m) ? 0.5 * h : h;
    } else {
      for (std::size_t j = 0; j <= m; j += 2)
        w_half_[base + j] = (j == 0 || j == m) ? h : 2.0 * h;
    }
  }
  hazard_end_ = hazard_acc;

  if (boundary_finite_) {
    boundary_point_ = (model.flow_kind == FlowKind::closed_form)
                          ? model.flow(path.origin, t_star)
                          : x_.back();
    boundary_action_ = *path.boundary_action;
  }
}

void PathQuadrature::check_alpha(double alpha) const {
  if (alpha < -config_.decay_rate - 1e-12)
    throw ContractViolation("operator evaluation requires alpha >= -c (c = decay_rate)");
}

void PathQuadrature::check_tail(double alpha) const {
  if (boundary_finite_) return;
  double rate = alpha + config_.decay_rate;
  double bound = (rate > 1e-12)
                     ? std::exp(-rate * t_end_) * config_.g_sup
                     : std::exp(-alpha * t_end_ - hazard_end_) * config_.g_sup;
  if (bound > config_.tail_tol)
    throw NumericError("tail certificate failed at t_max=" + std::to_string(config_.t_max) +
                       " (bound " + std::to_string(bound) + " > tail_tol); required t_max >= " +
                       std::to_string(config_.required_t_max(alpha)));
}

template <typename Integrand>
QuadResult PathQuadrature::accumulate(double alpha, Integrand&& fn) const {
  double full = 0.0;
  double half = 0.0;
  for (std::size_t j = 0; j < s_.size(); ++j) {
    double weight = std::exp(-alpha * s_[j] - hazard_[j]) * fn(j);
    full += w_full_[j] * weight;
    half += w_half_[j] * weight;
  }
  return {full, std::abs(full - half)};
}

QuadResult PathQuadrature::running_integral(
    double alpha, const std::function<double(const Vec&, Action)>& v) const {
  check_alpha(alpha);
  check_tail(alpha);
  return accumulate(alpha, [&](std::size_t j) { return v(x_[j], action_[j]); });
}

QuadResult PathQuadrature::sojourn_mass(double alpha) const {
  check_alpha(alpha);
  check_tail(alpha);
  return accumulate(alpha, [](std::size_t) { return 1.0; });
}

QuadResult PathQuadrature::boundary_term(
    double alpha, const std::function<double(const Vec&, Action)>& w) const {
  check_alpha(alpha);
  if (!boundary_finite_) return {0.0, 0.0};
  double weight = std::exp(-alpha * t_end_ - hazard_end_);
  return {weight * w(boundary_point_, boundary_action_), 0.0};
}

QuadResult PathQuadrature::jump_expectation(double alpha, const GridFunction& h) const {
  check_alpha(alpha);
  check_tail(alpha);
  auto qh = [&](const Vec& x, Action a) {
    Distribution q = model_->kernel(x, a);
    double out = 0.0;
    for (const auto& atom : q.atoms()) out += atom.weight * h.interpolate(atom.point);
    return out;
  };
  QuadResult out = accumulate(alpha, [&](std::size_t j) { return lambda_[j] * qh(x_[j], action_[j]); });
  if (boundary_finite_) {
    double weight = std::exp(-alpha * t_end_ - hazard_end_);
    out.value += weight * qh(boundary_point_, boundary_action_);
  }
  return out;
}

void PathQuadrature::for_each_jump_weight(
    double alpha, const std::function<void(const Vec&, Action, double)>& fn) const {
  check_alpha(alpha);
  check_tail(alpha);
  for (std::size_t j = 0; j < s_.size(); ++j) {
    double weight = w_full_[j] * std::exp(-alpha * s_[j] - hazard_[j]) * lambda_[j];
    if (weight != 0.0) fn(x_[j], action_[j], weight);
  }
  if (boundary_finite_)
    fn(boundary_point_, boundary_action_, std::exp(-alpha * t_end_ - hazard_end_));
}

double PathQuadrature::hazard_at(double t) const {
  if (t < 0.0 || t > t_end_ * (1.0 + 1e-12) + 1e-15)
    throw ContractViolation("hazard_at: t outside the path support");
  if (t >= s_.back()) return hazard_end_;
  auto it = std::upper_bound(s_.begin(), s_.end(), t);
  std::size_t j = static_cast<std::size_t>(it - s_.begin());
  j = (j == 0) ? 0 : j - 1;
  while (j + 1 < s_.size() && s_[j + 1] <= s_[j]) ++j;  // skip junction duplicates
  double hseg = s_[j + 1] - s_[j];
  double dt = t - s_[j];
  double lam_t = lambda_[j] + (lambda_[j + 1] - lambda_[j]) * (hseg > 0.0 ? dt / hseg : 0.0);
  return hazard_[j] + 0.5 * dt * (lambda_[j] + lam_t);
}

double integrated_hazard(const ModelSpec& model, const ControlPath& path,
                         const QuadratureConfig& config, double t) {
  PathQuadrature quad(model, path, config);
  return quad.hazard_at(t);
}

double path_stage_value(const ModelSpec& model, const ControlPath& path,
                        const QuadratureConfig& config, double alpha, double rho,
                        const GridFunction& h) {
  PathQuadrature quad(model, path, config);
  double value = -rho * quad.sojourn_mass(alpha).value;
  value += quad
               .running_integral(alpha, [&](const Vec& x, Action a) {
                 return model.running_cost(x, a);
               })
               .value;
  value += quad
               .boundary_term(alpha, [&](const Vec& z, Action a) {
                 return model.boundary_cost(z, a);
               })
               .value;
  value += quad.jump_expectation(alpha, h).value;
  return value;
}

}  // namespace pdmp
