#include "pdmp/one_stage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>

namespace pdmp {

namespace {

double qh_direct(const ModelSpec& model, const GridFunction& h, const Vec& x, Action a) {
  Distribution q = model.kernel(x, a);
  double out = 0.0;
  for (const auto& atom : q.atoms()) out += atom.weight * h.interpolate(atom.point);
  return out;
}

void check_inputs(const GridFunction& h, double alpha) {
  if (alpha < 0.0) throw ContractViolation("one-stage operator requires alpha >= 0");
  if (!h.all_finite()) throw ContractViolation("one-stage operator: non-finite h values");
}

void check_truncation_floor(const ModelBundle& bundle, double rho, double h_norm,
                            double g_at_x, double value) {
  double floor = -(rho + bundle.growth.b * h_norm) * bundle.integrability.k_lambda -
                 h_norm * g_at_x;
  if (value < floor - 1e-6 * (1.0 + std::abs(floor)))
    throw NumericError(
        "one-stage value fell below the certified lower floor; the truncation "
        "horizon t_max is too small for this evaluation");
}

void check_tail_certificate(const QuadratureConfig& quad, double alpha, double t_end) {
  double bound = std::exp(-(alpha + quad.decay_rate) * t_end) * quad.g_sup;
  if (bound > quad.tail_tol)
    throw NumericError("tail certificate failed for the one-stage induction; required t_max >= " +
                       std::to_string(quad.required_t_max(alpha)));
}

}  // namespace

std::pair<std::size_t, double> best_boundary_action(const ModelSpec& model,
                                                    const GridFunction& h, const Vec& z) {
  auto actions = model.action_set(z, true);
  if (actions.empty()) throw ContractViolation("empty boundary action set");
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < actions.size(); ++i) {
    double value = model.boundary_cost(z, actions[i]) + qh_direct(model, h, z, actions[i]);
    if (value < best_value) {
      best_value = value;
      best = i;
    }
  }
  return {best, best_value};
}

std::pair<std::size_t, double> hamiltonian_argmin(const ModelSpec& model, double w_value,
                                                  const GridFunction& h, const Vec& x) {
  auto actions = model.action_set(x, false);
  if (actions.empty()) throw ContractViolation("empty action set");
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < actions.size(); ++i) {
    double lam = model.intensity(x, actions[i]);
    double value = model.running_cost(x, actions[i]) -
                   lam * (w_value - qh_direct(model, h, x, actions[i]));
    if (value < best_value) {
      best_value = value;
      best = i;
    }
  }
  return {best, best_value};
}

OneStageResult one_stage_value(const ModelBundle& bundle, double alpha, double rho,
                               const GridFunction& h, const Vec& x) {
  check_inputs(h, alpha);
  const ModelSpec& model = bundle.model;
  const QuadratureConfig& quad = bundle.quad;

  double t_star = hit_time(model, x);
  if (std::isfinite(t_star) && t_star > quad.t_max)
    throw NumericError("one-stage induction: t_max smaller than the finite hit time");
  bool finite = std::isfinite(t_star);
  double t_end = std::min(t_star, quad.t_max);
  std::vector<double> nodes = induction_nodes(t_end, quad);
  std::size_t n_intervals = nodes.size() - 1;

  OneStageResult result;
  result.node_trace.resize(nodes.size());
  result.path.origin = x;
  result.path.time_nodes = nodes;
  result.path.actions.resize(n_intervals);

  double w;
  if (finite) {
    Vec z = flow_at(model, x, t_star);
    auto actions = model.action_set(z, true);
    auto [bi, bv] = best_boundary_action(model, h, z);
    w = bv;
    result.path.boundary_action = actions[bi];
    result.node_trace.back() = {actions[bi], w};
  } else {
    check_tail_certificate(quad, alpha, t_end);
    w = 0.0;
    result.node_trace.back() = {0.0, 0.0};
  }

  for (std::size_t k = n_intervals; k-- > 0;) {
    double t0 = nodes[k];
    double hh = 0.5 * (nodes[k + 1] - t0);
    Vec x0 = flow_at(model, x, t0);
    Vec xm = flow_at(model, x, t0 + hh);
    Vec x1 = flow_at(model, x, nodes[k + 1]);
    auto actions = model.action_set(x0, false);
    if (actions.empty()) throw ContractViolation("empty action set along the flow");

    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t best_a = 0;
    for (std::size_t ai = 0; ai < actions.size(); ++ai) {
      Action a = actions[ai];
      double lam0 = model.intensity(x0, a);
      double lam1 = model.intensity(xm, a);
      double lam2 = model.intensity(x1, a);
      auto rule = detail::pair_rule(quad.rule, hh, lam0, lam1, lam2);
      double e0 = 1.0;
      double e1 = std::exp(-alpha * hh - rule.d_hazard_mid);
      double e2 = std::exp(-alpha * 2.0 * hh - rule.d_hazard_end);
      double a0 = rule.w0 * e0, a1 = rule.w1 * e1, a2 = rule.w2 * e2;
      double cs = a0 + a1 + a2;
      double cf = a0 * model.running_cost(x0, a) + a1 * model.running_cost(xm, a) +
                  a2 * model.running_cost(x1, a);
      double cg = a0 * lam0 * qh_direct(model, h, x0, a) +
                  a1 * lam1 * qh_direct(model, h, xm, a) +
                  a2 * lam2 * qh_direct(model, h, x1, a);
      double obj = -rho * cs + cf + cg + e2 * w;
      if (obj < best_obj) {
        best_obj = obj;
        best_a = ai;
      }
    }
    w = best_obj;
    result.path.actions[k] = actions[best_a];
    result.node_trace[k] = {actions[best_a], w};
  }

  if (!finite)
    check_truncation_floor(bundle, rho, g_norm(h, bundle.growth.g),
                           bundle.growth.g.interpolate(x), w);
  result.value = w;
  return result;
}

FeedbackSelector extract_selector(const ModelBundle& bundle, const GridFunction& h,
                                  const std::vector<double>& w_values) {
  if (w_values.size() != bundle.grid->size())
    throw ContractViolation("extract_selector: w values must cover the grid");
  FeedbackSelector out;
  out.interior.resize(bundle.grid->size());
  for (std::size_t i = 0; i < bundle.grid->size(); ++i)
    out.interior[i] = static_cast<std::int32_t>(
        hamiltonian_argmin(bundle.model, w_values[i], h, bundle.grid->point(i)).first);
  out.boundary.resize(bundle.grid->boundary_points().size());
  for (std::size_t i = 0; i < out.boundary.size(); ++i)
    out.boundary[i] = static_cast<std::int32_t>(
        best_boundary_action(bundle.model, h, bundle.grid->boundary_points()[i]).first);
  return out;
}

// ---------------------------------------------------------------------------
// Prepared whole-grid solver.

namespace {

using Row = std::vector<std::pair<std::uint32_t, double>>;

Row kernel_row(const ModelSpec& model, const StateGrid& grid, const Vec& x, Action a) {
  std::map<std::uint32_t, double> acc;
  Distribution q = model.kernel(x, a);
  std::size_t indices[StateGrid::kMaxStencil];
  double weights[StateGrid::kMaxStencil];
  for (const auto& atom : q.atoms()) {
    std::size_t n = grid.interpolation_stencil(atom.point, indices, weights);
    for (std::size_t i = 0; i < n; ++i)
      if (weights[i] != 0.0) acc[static_cast<std::uint32_t>(indices[i])] += atom.weight * weights[i];
  }
  return Row(acc.begin(), acc.end());
}

double row_dot(const Row& row, const std::vector<double>& values) {
  double out = 0.0;
  for (const auto& [idx, w] : row) out += w * values[idx];
  return out;
}

}  // namespace

struct OneStageSolver::Prepared {
  struct Slot {
    // Base quantities, independent of the discount rate: the three node
    // weights with their local hazard attenuation, the same weights times the
    // node intensity and running cost, and the interval survival factor.
    double a0, a1, a2;
    double al0, al1, al2;
    double af0, af1, af2;
    double survival;  // exp(-d_hazard_end)
    std::uint32_t row_base;  // first of three per-node kernel rows
  };
  struct Interval {
    double hh;  // half width
    std::uint32_t slot_begin;
    std::uint16_t n_actions;
  };
  struct Terminal {
    double r;
    std::uint32_t row;  // index into rows (unused when kernel rows are shared)
  };
  struct Point {
    std::uint32_t interval_begin = 0;
    std::uint32_t interval_count = 0;
    std::uint32_t terminal_begin = 0;
    std::uint32_t terminal_count = 0;
    bool finite = false;
    double t_end = 0.0;
    double g_value = 1.0;
  };

  std::vector<Point> points;
  std::vector<Interval> intervals;
  std::vector<Slot> slots;
  std::vector<Terminal> terminals;

  // Kernel rows: slot-major, three per slot (one per quadrature node), plus
  // terminal rows; collapsed to a single shared row when every row is equal.
  std::vector<Row> rows;
  bool shared_rows = true;

  // Per-alpha tables rebuilt by set_alpha.
  double alpha = -1.0;
  std::vector<double> cs, cf, e_step;
  std::vector<double> cg0, cg1, cg2;  // per-node jump coefficients
  std::vector<double> cg_sum;         // folded coefficient when rows are shared
};

OneStageSolver::OneStageSolver(const ModelBundle& bundle)
    : bundle_(&bundle), prep_(std::make_unique<Prepared>()) {
  const ModelSpec& model = bundle.model;
  const StateGrid& grid = *bundle.grid;
  const QuadratureConfig& quad = bundle.quad;
  Prepared& p = *prep_;

  auto push_row = [&](Row row) -> std::uint32_t {
    if (!p.rows.empty() && p.shared_rows && row != p.rows.front()) p.shared_rows = false;
    p.rows.push_back(std::move(row));
    return static_cast<std::uint32_t>(p.rows.size() - 1);
  };

  p.points.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Vec x = grid.point(i);
    Prepared::Point& pt = p.points[i];
    pt.g_value = bundle.growth.g[i];

    double t_star = hit_time(model, x);
    if (std::isfinite(t_star) && t_star > quad.t_max)
      throw NumericError("one-stage preparation: t_max smaller than a finite hit time");
    pt.finite = std::isfinite(t_star);
    pt.t_end = std::min(t_star, quad.t_max);

    std::vector<double> nodes = induction_nodes(pt.t_end, quad);
    pt.interval_begin = static_cast<std::uint32_t>(p.intervals.size());
    pt.interval_count = static_cast<std::uint32_t>(nodes.size() - 1);

    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
      Prepared::Interval interval;
      interval.hh = 0.5 * (nodes[k + 1] - nodes[k]);
      interval.slot_begin = static_cast<std::uint32_t>(p.slots.size());
      Vec x0 = flow_at(model, x, nodes[k]);
      Vec xm = flow_at(model, x, nodes[k] + interval.hh);
      Vec x1 = flow_at(model, x, nodes[k + 1]);
      auto actions = model.action_set(x0, false);
      if (actions.empty()) throw ContractViolation("empty action set along the flow");
      interval.n_actions = static_cast<std::uint16_t>(actions.size());
      for (Action a : actions) {
        double lam0 = model.intensity(x0, a);
        double lam1 = model.intensity(xm, a);
        double lam2 = model.intensity(x1, a);
        auto rule = detail::pair_rule(quad.rule, interval.hh, lam0, lam1, lam2);
        Prepared::Slot slot;
        double e1 = std::exp(-rule.d_hazard_mid);
        double e2 = std::exp(-rule.d_hazard_end);
        slot.a0 = rule.w0;
        slot.a1 = rule.w1 * e1;
        slot.a2 = rule.w2 * e2;
        slot.al0 = slot.a0 * lam0;
        slot.al1 = slot.a1 * lam1;
        slot.al2 = slot.a2 * lam2;
        slot.af0 = slot.a0 * model.running_cost(x0, a);
        slot.af1 = slot.a1 * model.running_cost(xm, a);
        slot.af2 = slot.a2 * model.running_cost(x1, a);
        slot.survival = e2;
        slot.row_base = push_row(kernel_row(model, grid, x0, a));
        push_row(kernel_row(model, grid, xm, a));
        push_row(kernel_row(model, grid, x1, a));
        p.slots.push_back(slot);
      }
      p.intervals.push_back(interval);
    }

    if (pt.finite) {
      Vec z = flow_at(model, x, t_star);
      auto actions = model.action_set(z, true);
      if (actions.empty()) throw ContractViolation("empty boundary action set");
      pt.terminal_begin = static_cast<std::uint32_t>(p.terminals.size());
      pt.terminal_count = static_cast<std::uint32_t>(actions.size());
      for (Action a : actions)
        p.terminals.push_back({model.boundary_cost(z, a), push_row(kernel_row(model, grid, z, a))});
    }
  }

  if (p.shared_rows && !p.rows.empty()) p.rows.resize(1);
}

OneStageSolver::~OneStageSolver() = default;
OneStageSolver::OneStageSolver(OneStageSolver&&) noexcept = default;
OneStageSolver& OneStageSolver::operator=(OneStageSolver&&) noexcept = default;

void OneStageSolver::set_alpha(double alpha) {
  if (alpha < 0.0) throw ContractViolation("one-stage operator requires alpha >= 0");
  Prepared& p = *prep_;
  const QuadratureConfig& quad = bundle_->quad;
  for (const auto& pt : p.points)
    if (!pt.finite) check_tail_certificate(quad, alpha, pt.t_end);

  std::size_t n = p.slots.size();
  p.cs.resize(n);
  p.cf.resize(n);
  p.e_step.resize(n);
  if (p.shared_rows) {
    p.cg_sum.resize(n);
  } else {
    p.cg0.resize(n);
    p.cg1.resize(n);
    p.cg2.resize(n);
  }

  for (const auto& interval : p.intervals) {
    double d1 = std::exp(-alpha * interval.hh);
    double d2 = d1 * d1;
    for (std::uint32_t s = interval.slot_begin; s < interval.slot_begin + interval.n_actions;
         ++s) {
      const Prepared::Slot& slot = p.slots[s];
      double a0 = slot.a0, a1 = slot.a1 * d1, a2 = slot.a2 * d2;
      p.cs[s] = a0 + a1 + a2;
      p.cf[s] = slot.af0 + slot.af1 * d1 + slot.af2 * d2;
      p.e_step[s] = slot.survival * d2;
      if (p.shared_rows) {
        p.cg_sum[s] = slot.al0 + slot.al1 * d1 + slot.al2 * d2;
      } else {
        p.cg0[s] = slot.al0;
        p.cg1[s] = slot.al1 * d1;
        p.cg2[s] = slot.al2 * d2;
      }
    }
  }
  p.alpha = alpha;
}

void OneStageSolver::sweep(double rho, const GridFunction& h, std::vector<double>& out) const {
  const Prepared& p = *prep_;
  if (p.alpha < 0.0) throw ContractViolation("OneStageSolver: set_alpha before sweeping");
  if (!h.all_finite()) throw ContractViolation("one-stage operator: non-finite h values");
  out.resize(p.points.size());

  double q_shared = p.shared_rows && !p.rows.empty() ? row_dot(p.rows.front(), h.values()) : 0.0;
  double h_norm_for_floor = -1.0;  // computed lazily, only for truncated points

  for (std::size_t i = 0; i < p.points.size(); ++i) {
    const Prepared::Point& pt = p.points[i];
    double w;
    if (pt.finite) {
      w = std::numeric_limits<double>::infinity();
      for (std::uint32_t t = pt.terminal_begin; t < pt.terminal_begin + pt.terminal_count; ++t) {
        double q = p.shared_rows ? q_shared : row_dot(p.rows[p.terminals[t].row], h.values());
        w = std::min(w, p.terminals[t].r + q);
      }
    } else {
      w = 0.0;
    }

    for (std::uint32_t k = pt.interval_begin + pt.interval_count; k-- > pt.interval_begin;) {
      const Prepared::Interval& interval = p.intervals[k];
      double best = std::numeric_limits<double>::infinity();
      for (std::uint32_t s = interval.slot_begin;
           s < interval.slot_begin + interval.n_actions; ++s) {
        double jump;
        if (p.shared_rows) {
          jump = p.cg_sum[s] * q_shared;
        } else {
          std::uint32_t r = p.slots[s].row_base;
          jump = p.cg0[s] * row_dot(p.rows[r], h.values()) +
                 p.cg1[s] * row_dot(p.rows[r + 1], h.values()) +
                 p.cg2[s] * row_dot(p.rows[r + 2], h.values());
        }
        double obj = -rho * p.cs[s] + p.cf[s] + jump + p.e_step[s] * w;
        if (obj < best) best = obj;
      }
      w = best;
    }

    if (!pt.finite) {
      if (h_norm_for_floor < 0.0) h_norm_for_floor = g_norm(h, bundle_->growth.g);
      check_truncation_floor(*bundle_, rho, h_norm_for_floor, pt.g_value, w);
    }
    out[i] = w;
  }
}

GridFunction one_stage_apply(const ModelBundle& bundle, double alpha, double rho,
                             const GridFunction& h) {
  OneStageSolver solver(bundle);
  solver.set_alpha(alpha);
  GridFunction out(bundle.grid);
  solver.sweep(rho, h, out.values());
  for (std::size_t i = 0; i < bundle.grid->boundary_points().size(); ++i)
    out.boundary_values()[i] =
        best_boundary_action(bundle.model, h, bundle.grid->boundary_points()[i]).second;
  return out;
}

}  // namespace pdmp
