#include "pdmp/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pdmp {

namespace {

void update_boundary_extension(const ModelBundle& bundle, const GridFunction& h,
                               GridFunction& target) {
  for (std::size_t i = 0; i < bundle.grid->boundary_points().size(); ++i)
    target.boundary_values()[i] =
        best_boundary_action(bundle.model, h, bundle.grid->boundary_points()[i]).second;
}

void push_decimated(std::vector<double>& trace, double value) {
  constexpr std::size_t kMaxTrace = 8192;
  trace.push_back(value);
  if (trace.size() > kMaxTrace) {
    for (std::size_t i = 1; 2 * i < trace.size(); ++i) trace[i] = trace[2 * i];
    trace.resize(trace.size() / 2);
  }
}

}  // namespace

DiscountedSolution solve_discounted(const ModelBundle& bundle, double alpha,
                                    const SolveOptions& options) {
  if (!(alpha > 0.0)) throw ContractViolation("solve_discounted requires alpha > 0");

  OneStageSolver solver(bundle);
  solver.set_alpha(alpha);

  GridFunction v(bundle.grid, 0.0);
  std::vector<double> next(bundle.grid->size(), 0.0);
  DiscountedSolution out;
  out.alpha = alpha;

  const GridFunction& g = bundle.growth.g;
  double residual = std::numeric_limits<double>::infinity();
  std::size_t m = 0;
  for (; m < options.max_iter; ++m) {
    solver.sweep(0.0, v, next);
    residual = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i)
      residual = std::max(residual, std::abs(next[i] - v.values()[i]) / g.values()[i]);
    v.values() = next;
    update_boundary_extension(bundle, v, v);
    push_decimated(out.residual_trace, residual);
    if (residual <= options.vi_tol) break;
  }
  if (residual > options.vi_tol) {
    std::ostringstream msg;
    msg << "solve_discounted: residual " << residual << " above vi_tol after " << m
        << " iterations";
    throw ConvergenceError(msg.str());
  }

  out.iterations = m + 1;

  // Reported residual: one extra application of the operator to the accepted
  // value.
  solver.sweep(0.0, v, next);
  out.residual = 0.0;
  for (std::size_t i = 0; i < next.size(); ++i)
    out.residual = std::max(out.residual, std::abs(next[i] - v.values()[i]) / g.values()[i]);

  out.value = v;
  out.selector = extract_selector(bundle, v, v.values());

  if (options.enforce_value_bound) {
    double worst = 0.0;
    std::size_t worst_idx = 0;
    for (std::size_t i = 0; i < v.values().size(); ++i) {
      double bound = bundle.growth.m * g.values()[i] / (bundle.growth.c + alpha) +
                     bundle.growth.m * bundle.growth.b / (bundle.growth.c * alpha);
      double gap = v.values()[i] - bound;
      if (gap > worst) {
        worst = gap;
        worst_idx = i;
      }
    }
    if (worst > 1e-9 * (1.0 + std::abs(v.values()[worst_idx])))
      throw DiagnosticError(
          "solve_discounted: the value exceeds the discounted growth bound; the grid, "
          "quadrature, or declared witness is inadequate");
  }
  return out;
}

NeumannReport neumann_check(const ModelBundle& bundle, const DiscountedSolution& solution,
                            std::size_t terms) {
  const StateGrid& grid = *bundle.grid;
  double alpha = solution.alpha;

  // Selector-induced paths once per grid point.
  std::vector<PathQuadrature> quads;
  quads.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    quads.emplace_back(bundle.model,
                       make_selector_path(bundle.model, grid, solution.selector, grid.point(i),
                                          bundle.quad),
                       bundle.quad);

  auto f_fn = [&](const Vec& x, Action a) { return bundle.model.running_cost(x, a); };
  auto r_fn = [&](const Vec& z, Action a) { return bundle.model.boundary_cost(z, a); };

  GridFunction one_jump_cost(bundle.grid, 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    one_jump_cost.values()[i] =
        quads[i].running_integral(alpha, f_fn).value + quads[i].boundary_term(alpha, r_fn).value;

  GridFunction partial = one_jump_cost;  // S_0
  GridFunction transported = one_jump_cost;
  NeumannReport report;

  auto record_error = [&]() {
    GridFunction diff = partial;
    for (std::size_t i = 0; i < diff.values().size(); ++i)
      diff.values()[i] -= solution.value.values()[i];
    for (std::size_t i = 0; i < diff.boundary_values().size(); ++i) diff.boundary_values()[i] = 0.0;
    report.errors.push_back(g_norm(diff, bundle.growth.g));
  };
  record_error();

  for (std::size_t k = 1; k <= terms; ++k) {
    GridFunction next(bundle.grid, 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i)
      next.values()[i] = quads[i].jump_expectation(alpha, transported).value;
    transported = next;
    for (std::size_t i = 0; i < grid.size(); ++i)
      partial.values()[i] += transported.values()[i];
    record_error();
  }
  for (std::size_t k = 1; k < report.errors.size(); ++k)
    if (report.errors[k] > report.errors[k - 1] + 1e-12) report.monotone = false;
  return report;
}

std::vector<double> default_vanishing_schedule(double c, std::size_t terms) {
  std::vector<double> schedule(terms);
  double alpha = 0.5 * c;
  for (std::size_t k = 0; k < terms; ++k) {
    schedule[k] = alpha;
    alpha *= 0.5;
  }
  return schedule;
}

std::size_t centroid_index(const StateGrid& grid) {
  Vec centroid(grid.dim());
  for (int d = 0; d < grid.dim(); ++d)
    centroid[d] = 0.5 * (grid.axes()[d].front() + grid.axes()[d].back());
  return grid.nearest_index(centroid);
}

AverageSolution solve_average(const ModelBundle& bundle, std::optional<std::size_t> x0_index,
                              std::vector<double> schedule, const AverageOptions& options) {
  if (schedule.empty()) schedule = default_vanishing_schedule(bundle.growth.c);
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (!(schedule[k] < schedule[k - 1]) || !(schedule[k] > 0.0))
      throw ContractViolation("solve_average: schedule must be strictly decreasing and positive");

  std::size_t x0 = x0_index.value_or(centroid_index(*bundle.grid));
  if (x0 >= bundle.grid->size()) throw ContractViolation("solve_average: x0 outside the grid");

  AverageSolution out;
  GridFunction h_prev(bundle.grid, 0.0), h_curr(bundle.grid, 0.0);
  double rho_prev = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> rho_tol = options.rho_tol;
  bool converged = false;

  for (std::size_t k = 0; k < schedule.size(); ++k) {
    DiscountedSolution sol = solve_discounted(bundle, schedule[k], options.discounted);
    double anchor = sol.value.values()[x0];
    double rho_k = schedule[k] * anchor;

    GridFunction h_k = sol.value;
    for (double& v : h_k.values()) v -= anchor;
    for (double& v : h_k.boundary_values()) v -= anchor;
    out.anchor_exact = out.anchor_exact && h_k.values()[x0] == 0.0;

    out.rho_trace.emplace_back(schedule[k], rho_k);
    if (k > 0) out.h_gap_trace.push_back(g_norm_difference(h_k, h_curr, bundle.growth.g));

    h_prev = std::move(h_curr);
    h_curr = std::move(h_k);
    out.terms_used = k + 1;

    if (!rho_tol) rho_tol = 1e-4 * std::max(1.0, std::abs(out.rho_trace.front().second));
    if (k + 1 >= std::max<std::size_t>(options.min_terms, 2)) {
      double h_scale = 1.0 + g_norm(h_curr, bundle.growth.g);
      if (std::abs(rho_k - rho_prev) <= *rho_tol &&
          out.h_gap_trace.back() <= options.h_stab_tol * h_scale) {
        out.rho = rho_k;
        converged = true;
        break;
      }
    }
    rho_prev = rho_k;
    out.rho = rho_k;
  }

  if (!converged) {
    double last_gap = out.rho_trace.size() > 1
                          ? std::abs(out.rho_trace.back().second -
                                     out.rho_trace[out.rho_trace.size() - 2].second)
                          : std::numeric_limits<double>::infinity();
    if (last_gap > *rho_tol) {
      std::ostringstream msg;
      msg << "solve_average: rho trace is not Cauchy at rho_tol " << *rho_tol << "; last gap "
          << last_gap << " over " << out.rho_trace.size() << " schedule terms";
      throw ConvergenceError(msg.str());
    }
  }

  // Conservative liminf surrogate: pointwise minimum of the last two iterates.
  out.h = h_curr;
  if (out.terms_used > 1) {
    for (std::size_t i = 0; i < out.h.values().size(); ++i)
      out.h.values()[i] = std::min(out.h.values()[i], h_prev.values()[i]);
    for (std::size_t i = 0; i < out.h.boundary_values().size(); ++i)
      out.h.boundary_values()[i] = std::min(out.h.boundary_values()[i], h_prev.boundary_values()[i]);
  }

  // Average-cost optimality inequality h >= T(rho, h) on the grid.
  GridFunction applied = one_stage_apply(bundle, 0.0, out.rho, out.h);
  double min_residual = std::numeric_limits<double>::infinity();
  std::size_t worst = 0;
  for (std::size_t i = 0; i < applied.values().size(); ++i) {
    double res = out.h.values()[i] - applied.values()[i];
    if (res < min_residual) {
      min_residual = res;
      worst = i;
    }
  }
  out.acoi_residual = min_residual;
  double acoi_tol =
      options.acoi_tol.value_or(1e-3 * (1.0 + g_norm(out.h, bundle.growth.g)));
  if (min_residual < -acoi_tol) {
    std::ostringstream msg;
    msg << "solve_average: optimality inequality violated by " << -min_residual
        << " at grid index " << worst;
    throw ConvergenceError(msg.str());
  }

  out.selector = extract_selector(bundle, out.h, applied.values());
  return out;
}

ValueBoundReport check_value_bounds(const ModelBundle& bundle,
                                    const DiscountedSolution& solution,
                                    const ErgodicityWitness* ergodicity,
                                    std::size_t pair_samples) {
  const GrowthWitness& w = bundle.growth;
  ValueBoundReport report;
  report.worst_level_slack = std::numeric_limits<double>::infinity();

  const auto& values = solution.value.values();
  const auto& g = w.g.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    double bound = w.m * g[i] / (w.c + solution.alpha) +
                   w.m * w.b / (w.c * solution.alpha);
    double slack = bound - values[i];
    report.worst_level_slack = std::min(report.worst_level_slack, slack);
    if (slack < 0.0) report.level_violations.push_back({i, i, slack});
  }

  report.worst_difference_slack = std::numeric_limits<double>::infinity();
  if (ergodicity) {
    double m_prime = w.m * (1.0 + w.b / w.c) * (1.0 + w.b * bundle.integrability.k_lambda) /
                     w.c;
    double constant = ergodicity->a_const * m_prime / (1.0 - ergodicity->kappa);
    Rng rng(bundle.seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t s = 0; s < pair_samples; ++s) {
      std::size_t i = rng.index(values.size());
      std::size_t j = rng.index(values.size());
      double slack = constant * (1.0 + g[j]) * g[i] - std::abs(values[i] - values[j]);
      report.worst_difference_slack = std::min(report.worst_difference_slack, slack);
      if (slack < 0.0) report.difference_violations.push_back({i, j, slack});
    }
  }

  report.pass = report.level_violations.empty() && report.difference_violations.empty();
  return report;
}

std::vector<double> transversality_monitor(const ModelBundle& bundle,
                                           const AverageSolution& solution,
                                           const std::vector<double>& horizons,
                                           std::size_t replications, std::uint64_t seed) {
  GridFunction applied = one_stage_apply(bundle, 0.0, solution.rho, solution.h);
  std::size_t x0 = centroid_index(*bundle.grid);
  Vec start = bundle.grid->point(x0);

  std::vector<double> out;
  out.reserve(horizons.size());
  for (double t : horizons) {
    double acc = 0.0;
    for (std::size_t r = 0; r < replications; ++r) {
      Rng rng(derive_stream_seed(seed, r * horizons.size() + out.size()));
      TrajectoryRecord record =
          simulate_trajectory(bundle, start, solution.selector, t, 0.0, rng);
      Vec y = record.post_jump_states.empty() ? start : record.post_jump_states.back();
      double since = t - (record.jump_times.empty() ? 0.0 : record.jump_times.back());
      double remaining = std::min(since, hit_time(bundle.model, y));
      Vec end_state = flow_at(bundle.model, y, remaining);
      double value = bundle.model.interior_test(end_state)
                         ? applied.interpolate(end_state)
                         : applied.boundary_value(end_state);
      acc += value;
    }
    out.push_back(acc / (static_cast<double>(replications) * t));
  }
  return out;
}

}  // namespace pdmp
