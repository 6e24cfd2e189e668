#include "pdmp/diagnostics.hpp"

#include "pdmp/one_stage.hpp"
#include "pdmp/operators.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace pdmp {

namespace {

void note_violation(InequalityReport& report, std::size_t index, bool boundary, Action action,
                    double slack) {
  report.worst_slack = std::max(report.worst_slack, slack);
  report.worst.push_back({index, boundary, action, slack});
  std::sort(report.worst.begin(), report.worst.end(),
            [](const ViolationEntry& a, const ViolationEntry& b) { return a.slack > b.slack; });
  if (report.worst.size() > 10) report.worst.resize(10);
}

void finalize(InequalityReport& report, double tol) { report.pass = report.worst_slack <= tol; }

}  // namespace

GrowthReport check_growth(const ModelBundle& bundle, const GrowthWitness& witness,
                          double check_tol) {
  if (check_tol < 0.0) check_tol = 1e-6 * std::max(witness.b, 1.0);
  const ModelSpec& model = bundle.model;
  const StateGrid& grid = *bundle.grid;

  GrowthReport report;
  report.drift.name = "drift";
  report.running_cost.name = "running-cost";
  report.boundary_comparison.name = "boundary-comparison";
  report.boundary_cost.name = "boundary-cost";
  report.drift.worst_slack = -std::numeric_limits<double>::infinity();
  report.running_cost.worst_slack = -std::numeric_limits<double>::infinity();
  report.boundary_comparison.worst_slack = -std::numeric_limits<double>::infinity();
  report.boundary_cost.worst_slack = -std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < grid.size(); ++i) {
    Vec x = grid.point(i);
    double g_x = witness.g[i];
    double xg = directional_derivative(model, witness.g, x).value;
    for (Action a : model.action_set(x, false)) {
      double qg = kernel_expectation(model, witness.g, x, a);
      double drift_slack =
          xg + witness.c * g_x - model.intensity(x, a) * (g_x - qg) - witness.b;
      note_violation(report.drift, i, false, a, drift_slack);

      double cost_slack = model.running_cost(x, a) - witness.m * g_x;
      note_violation(report.running_cost, i, false, a, cost_slack);
    }
  }

  for (std::size_t i = 0; i < grid.boundary_points().size(); ++i) {
    const Vec& z = grid.boundary_points()[i];
    double g_z = witness.g.boundary_values()[i];
    double rbar = witness.r_bar.empty() ? 0.0 : witness.r_bar[i];
    for (Action a : model.action_set(z, true)) {
      double qg = kernel_expectation(model, witness.g, z, a);
      note_violation(report.boundary_comparison, i, true, a, rbar + qg - g_z);

      double allowed = witness.m / (witness.c + witness.delta) * rbar;
      note_violation(report.boundary_cost, i, true, a, model.boundary_cost(z, a) - allowed);
    }
  }

  finalize(report.drift, check_tol);
  finalize(report.running_cost, check_tol);
  finalize(report.boundary_comparison, check_tol);
  finalize(report.boundary_cost, check_tol);
  report.pass = report.drift.pass && report.running_cost.pass &&
                report.boundary_comparison.pass && report.boundary_cost.pass;
  return report;
}

double sojourn_bound_integral(const ModelSpec& model,
                              const std::function<double(const Vec&)>& lambda_lower, double c,
                              const Vec& x, double t_int, int nodes_per_unit) {
  ModelSpec proxy = model;
  proxy.intensity = [&lambda_lower](const Vec& y, Action) { return lambda_lower(y); };
  proxy.action_set = [](const Vec&, bool) { return std::vector<Action>{0.0}; };
  proxy.boundary_cost = [](const Vec&, Action) { return 0.0; };

  QuadratureConfig quad;
  quad.nodes_per_unit_time = nodes_per_unit;
  quad.t_max = t_int;
  quad.decay_rate = c;
  quad.tail_tol = std::numeric_limits<double>::infinity();

  ControlPath path = make_constant_path(proxy, x, 0.0, quad);
  PathQuadrature pq(proxy, path, quad);
  if (!pq.ends_on_boundary()) {
    double tail_weight = std::exp(c * pq.t_end() - pq.hazard_end());
    if (tail_weight > 1e-10) return std::numeric_limits<double>::infinity();
  }
  return pq.sojourn_mass(-c).value;
}

IntegrabilityReport check_integrability(const ModelBundle& bundle,
                                        const IntegrabilityWitness& witness, double check_tol) {
  if (check_tol < 0.0) check_tol = 1e-6 * std::max(witness.k_lambda, 1.0);
  const ModelSpec& model = bundle.model;
  const StateGrid& grid = *bundle.grid;

  IntegrabilityReport report;
  report.domination_lambda.name = "intensity-floor";
  report.domination_cost.name = "cost-ceiling";
  report.sojourn_bound.name = "sojourn-mass-bound";
  report.domination_lambda.worst_slack = -std::numeric_limits<double>::infinity();
  report.domination_cost.worst_slack = -std::numeric_limits<double>::infinity();
  report.sojourn_bound.worst_slack = -std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < grid.size(); ++i) {
    Vec x = grid.point(i);
    for (Action a : model.action_set(x, false)) {
      note_violation(report.domination_lambda, i, false, a,
                     witness.lambda_lower(x) - model.intensity(x, a));
      note_violation(report.domination_cost, i, false, a,
                     model.running_cost(x, a) - witness.f_upper(x));
    }
  }

  double t_scan = std::min(bundle.quad.t_max, 80.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Vec x = grid.point(i);
    double integral = sojourn_bound_integral(model, witness.lambda_lower, bundle.growth.c, x,
                                             t_scan, bundle.quad.nodes_per_unit_time);
    note_violation(report.sojourn_bound, i, false, 0.0, integral - witness.k_lambda);

    if (!std::isfinite(hit_time(model, x))) {
      // Decay conditions along never-exiting flow lines, sampled at the scan
      // horizon and its midpoint.
      auto hazard_floor = [&](double t) {
        // Integral of the intensity floor along the flow, via the proxy
        // quadrature (evaluated cheaply from the bound integral machinery).
        ModelSpec proxy = model;
        proxy.intensity = [&witness](const Vec& y, Action) { return witness.lambda_lower(y); };
        proxy.action_set = [](const Vec&, bool) { return std::vector<Action>{0.0}; };
        QuadratureConfig quad = bundle.quad;
        quad.t_max = t_scan;
        quad.tail_tol = std::numeric_limits<double>::infinity();
        ControlPath path = make_constant_path(proxy, x, 0.0, quad);
        PathQuadrature pq(proxy, path, quad);
        return pq.hazard_at(t);
      };
      double hz_full = hazard_floor(t_scan);
      double hz_half = hazard_floor(0.5 * t_scan);
      double growth_full = std::exp(bundle.growth.c * t_scan - hz_full);
      double growth_half = std::exp(bundle.growth.c * 0.5 * t_scan - hz_half);
      if (growth_full > check_tol || growth_full > growth_half)
        report.worst_growth_decay = std::max(report.worst_growth_decay, growth_full);

      Vec far = flow_at(model, x, t_scan);
      double weighted = std::exp(-hz_full) * bundle.growth.g.interpolate(far);
      report.worst_weighted_decay = std::max(report.worst_weighted_decay, weighted);

      // Certified tail of the cost integral: the integrand at the horizon over
      // the local decay rate.
      double lam_far = witness.lambda_lower(far);
      double tail = lam_far > 0.0
                        ? std::exp(-hz_full) * witness.f_upper(far) / lam_far
                        : std::numeric_limits<double>::infinity();
      report.worst_cost_tail = std::max(report.worst_cost_tail, tail);
    }
  }

  finalize(report.domination_lambda, check_tol);
  finalize(report.domination_cost, check_tol);
  finalize(report.sojourn_bound, check_tol);
  report.pass = report.domination_lambda.pass && report.domination_cost.pass &&
                report.sojourn_bound.pass && report.worst_growth_decay <= check_tol &&
                report.worst_weighted_decay <= std::max(check_tol, 1e-4) &&
                report.worst_cost_tail <= std::max(check_tol, 1e-4);
  return report;
}

Eigen::MatrixXd embedded_kernel_matrix(const ModelBundle& bundle,
                                       const FeedbackSelector& selector) {
  const StateGrid& grid = *bundle.grid;
  const std::size_t n = grid.size();
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                 static_cast<Eigen::Index>(n));

  std::size_t indices[StateGrid::kMaxStencil];
  double weights[StateGrid::kMaxStencil];
  for (std::size_t i = 0; i < n; ++i) {
    ControlPath path =
        make_selector_path(bundle.model, grid, selector, grid.point(i), bundle.quad);
    PathQuadrature pq(bundle.model, path, bundle.quad);

    // Row assembly: quadrature weight times kernel atom stencils.
    auto accumulate_row = [&](const Vec& x, Action a, double weight) {
      Distribution q = bundle.model.kernel(x, a);
      for (const auto& atom : q.atoms()) {
        std::size_t m = grid.interpolation_stencil(atom.point, indices, weights);
        for (std::size_t s = 0; s < m; ++s)
          kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(indices[s])) +=
              weight * atom.weight * weights[s];
      }
    };
    pq.for_each_jump_weight(0.0, accumulate_row);
  }
  return kernel;
}

std::vector<GridFunction> default_ergodicity_probes(const ModelBundle& bundle) {
  std::vector<GridFunction> probes;
  probes.push_back(bundle.growth.g);
  probes.push_back(GridFunction::tabulate(bundle.grid, [&](const Vec& x) {
    return bundle.growth.g.interpolate(x) * std::sin(3.0 * x[0]);
  }));
  probes.push_back(GridFunction::tabulate(bundle.grid, [](const Vec& x) { return x[0]; }));
  probes.push_back(GridFunction::tabulate(bundle.grid, [&](const Vec& x) {
    return 0.5 * bundle.growth.g.interpolate(x) * std::cos(7.0 * x[0]);
  }));
  return probes;
}

ErgodicityReport estimate_ergodicity(const ModelBundle& bundle, const FeedbackSelector& selector,
                                     std::vector<GridFunction> probes, std::size_t steps) {
  if (probes.empty()) probes = default_ergodicity_probes(bundle);
  if (probes.size() < 4)
    throw ContractViolation("estimate_ergodicity: need the witness plus at least three probes");

  const std::size_t n = bundle.grid->size();
  Eigen::MatrixXd kernel = embedded_kernel_matrix(bundle, selector);

  ErgodicityReport report;
  report.row_sum_defect = (kernel.rowwise().sum().array() - 1.0).abs().maxCoeff();

  const auto& g = bundle.growth.g;
  double kappa_hat = 0.0;
  double fit_residual = 0.0;
  std::vector<double> nu_values;

  for (const auto& probe : probes) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) y[static_cast<Eigen::Index>(i)] = probe[i];

    std::vector<Eigen::VectorXd> iterates{y};
    for (std::size_t k = 0; k < steps; ++k) iterates.push_back(kernel * iterates.back());

    double nu = iterates.back().mean();
    nu_values.push_back(nu);

    std::vector<double> errors;
    for (std::size_t k = 0; k <= steps; ++k) {
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        err = std::max(err,
                       std::abs(iterates[k][static_cast<Eigen::Index>(i)] - nu) / g.values()[i]);
      errors.push_back(err);
    }
    report.probe_errors.push_back(errors);
    double e0 = errors.front();
    if (e0 <= 1e-14) {
      report.probe_cutoffs.push_back(0);
      continue;  // constant probe carries no contraction signal
    }

    // Observed prefix: iterates above the quadrature noise floor of the
    // discrete kernel (scaled from its row-sum defect) and still decaying.
    double noise_floor = std::max(1e-12, 100.0 * report.row_sum_defect) * std::max(1.0, e0);
    std::size_t cutoff = 0;
    while (cutoff + 1 < errors.size() && errors[cutoff + 1] > noise_floor &&
           errors[cutoff + 1] < 0.999 * errors[cutoff])
      ++cutoff;
    report.probe_cutoffs.push_back(cutoff);

    double kappa_probe = 0.0;
    if (cutoff >= 2) {
      // Least-squares line through (k, log error) over the observed prefix,
      // skipping the k = 0 transient when enough asymptotic points exist.
      std::size_t k_first = cutoff >= 3 ? 1 : 0;
      double sk = 0.0, se = 0.0, skk = 0.0, ske = 0.0;
      for (std::size_t k = k_first; k <= cutoff; ++k) {
        double lk = static_cast<double>(k);
        double le = std::log(errors[k]);
        sk += lk;
        se += le;
        skk += lk * lk;
        ske += lk * le;
      }
      double m = static_cast<double>(cutoff + 1 - k_first);
      double slope = (m * ske - sk * se) / std::max(m * skk - sk * sk, 1e-30);
      kappa_probe = std::exp(slope);
      for (std::size_t k = k_first; k <= cutoff; ++k) {
        double predicted = slope * static_cast<double>(k) + (se - slope * sk) / m;
        fit_residual = std::max(fit_residual, std::abs(std::log(errors[k]) - predicted));
      }
    } else if (cutoff == 1) {
      kappa_probe = errors[1] / e0;  // immediate collapse: one-step ratio
    }
    kappa_hat = std::max(kappa_hat, kappa_probe);
  }

  if (kappa_hat >= 0.98)
    throw DiagnosticError("estimate_ergodicity: no geometric contraction detected (kappa close "
                          "to one) for this selector");
  kappa_hat = std::clamp(kappa_hat, 1e-12, 0.98);

  // Smallest constant making the geometric envelope valid on every observed
  // iterate of every probe.
  double a_hat = 0.0;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    double h_norm = g_norm(probes[p], g);
    if (h_norm <= 0.0) continue;
    const auto& errors = report.probe_errors[p];
    for (std::size_t k = 0; k <= report.probe_cutoffs[p]; ++k)
      a_hat = std::max(a_hat, errors[k] / (h_norm * std::pow(kappa_hat, static_cast<double>(k))));
  }

  report.witness.a_const = a_hat;
  report.witness.kappa = kappa_hat;
  report.witness.nu_g = nu_values.front();
  report.witness.fit_residual = fit_residual;
  return report;
}

AcoiReport check_acoi(const ModelBundle& bundle, double rho, const GridFunction& h,
                      double acoi_tol) {
  if (acoi_tol < 0.0) acoi_tol = 1e-3 * (1.0 + g_norm(h, bundle.growth.g));
  GridFunction applied = one_stage_apply(bundle, 0.0, rho, h);
  AcoiReport report;
  report.residuals.resize(bundle.grid->size());
  report.min_residual = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (std::size_t i = 0; i < bundle.grid->size(); ++i) {
    double res = h.values()[i] - applied.values()[i];
    report.residuals[i] = res;
    total += res;
    if (res < report.min_residual) {
      report.min_residual = res;
      report.worst_index = i;
    }
  }
  report.mean_residual = total / static_cast<double>(bundle.grid->size());
  report.pass = report.min_residual >= -acoi_tol;
  return report;
}

AcoiReport check_acoi(const ModelBundle& bundle, const AverageSolution& solution,
                      double acoi_tol) {
  return check_acoi(bundle, solution.rho, solution.h, acoi_tol);
}

}  // namespace pdmp
