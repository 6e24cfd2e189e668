#include "pdmp/config.hpp"

#include "pdmp/operators.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace pdmp {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

template <typename T>
void maybe(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

void maybe_opt(const json& j, const char* key, std::optional<double>& target) {
  if (j.contains(key) && !j.at(key).is_null()) target = j.at(key).get<double>();
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ContractViolation(std::string("config: malformed JSON: ") + e.what());
  }

  RunConfig config;
  BenchmarkParams& params = config.benchmark;

  if (j.contains("model")) {
    const json& model = j.at("model");
    maybe(model, "id", params.id);
    if (model.contains("overrides")) {
      const json& o = model.at("overrides");
      maybe(o, "actions", params.actions);
      maybe(o, "kernel_support", params.kernel_support);
      maybe(o, "intensity_scale", params.intensity_scale);
      maybe(o, "running_cost_scale", params.running_cost_scale);
      maybe_opt(o, "constant_running_cost", params.constant_running_cost);
      maybe(o, "boundary_cost", params.boundary_cost);
      maybe_opt(o, "deterministic_kernel_point", params.deterministic_kernel_point);
    }
  }

  if (j.contains("grid")) maybe(j.at("grid"), "resolution", params.grid_resolution);

  if (j.contains("actions") && j.at("actions").contains("count") && params.actions.empty()) {
    // Uniform discretization of the family's action range.
    auto count = j.at("actions").at("count").get<std::size_t>();
    if (count < 1) throw ContractViolation("config: action count must be positive");
    double lo = params.id == "model-a" ? 0.5 : 1.0;
    double hi = params.id == "model-a" ? 2.0 : 3.0;
    for (std::size_t i = 0; i < count; ++i)
      params.actions.push_back(count == 1 ? lo
                                          : lo + (hi - lo) * static_cast<double>(i) /
                                                     static_cast<double>(count - 1));
  }

  if (j.contains("witness")) {
    const json& w = j.at("witness");
    maybe(w, "c", params.c);
    maybe(w, "delta", params.delta);
    maybe(w, "r_bar", params.r_bar);
    maybe_opt(w, "b", params.b_override);
    maybe_opt(w, "M", params.m_override);
    maybe_opt(w, "K_lambda", params.k_lambda_override);
  }

  if (j.contains("quadrature")) {
    const json& q = j.at("quadrature");
    maybe(q, "nodes_per_unit_time", params.nodes_per_unit_time);
    if (q.contains("rule")) {
      std::string rule = q.at("rule").get<std::string>();
      if (rule == "composite-simpson")
        params.rule = QuadRule::composite_simpson;
      else if (rule == "trapezoid")
        params.rule = QuadRule::trapezoid;
      else
        throw ContractViolation("config: unknown quadrature rule " + rule);
    }
    maybe_opt(q, "t_max", params.t_max);
    maybe(q, "tail_tol", params.tail_tol);
  }

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    maybe(s, "vi_tol", config.solve.vi_tol);
    maybe(s, "max_iter", config.solve.max_iter);
    std::optional<double> rho_tol, acoi_tol;
    maybe_opt(s, "rho_tol", rho_tol);
    maybe_opt(s, "acoi_tol", acoi_tol);
    if (rho_tol) config.average.rho_tol = rho_tol;
    if (acoi_tol) config.average.acoi_tol = acoi_tol;
    maybe(s, "schedule_terms", config.schedule_terms);
    maybe(s, "min_terms", config.average.min_terms);
  }
  config.average.discounted = config.solve;

  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    maybe(s, "explosion_guard", config.simulation.explosion_guard);
    maybe(s, "bias_target", config.simulation.bias_target);
    maybe(s, "horizon", config.horizon);
    maybe(s, "replications", config.replications);
  }

  if (j.contains("oracle")) {
    const json& o = j.at("oracle");
    maybe(o, "replications", config.oracle.replications);
    maybe(o, "policy_points", config.oracle.policy_points);
    maybe(o, "horizon", config.oracle.horizon);
    maybe(o, "max_total_jumps", config.oracle.max_total_jumps);
  }

  maybe(j, "seed", config.seed);
  params.seed = config.seed;
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("config: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

ModelBundle build_bundle(const RunConfig& config) { return make_benchmark(config.benchmark); }

namespace {

json selector_to_json(const FeedbackSelector& selector) {
  return json{{"interior", selector.interior}, {"boundary", selector.boundary}};
}

json estimate_to_json(const CostEstimate& estimate) {
  return json{{"mean", estimate.mean},
              {"std_error", estimate.std_error},
              {"replications", estimate.replications},
              {"horizon", estimate.horizon},
              {"truncation_bias", estimate.truncation_bias},
              {"split_half_drift", estimate.split_half_drift},
              {"seed", estimate.seed}};
}

}  // namespace

std::string discounted_archive_json(const ModelBundle& bundle,
                                    const DiscountedSolution& solution) {
  json j{{"kind", "discounted"},
         {"model", bundle.id},
         {"config_hash", bundle.config_hash},
         {"alpha", solution.alpha},
         {"iterations", solution.iterations},
         {"residual", solution.residual},
         {"value", solution.value.values()},
         {"value_boundary", solution.value.boundary_values()},
         {"selector", selector_to_json(solution.selector)}};
  return j.dump(2);
}

std::string average_archive_json(const ModelBundle& bundle, const AverageSolution& solution) {
  json trace = json::array();
  for (auto [alpha, rho] : solution.rho_trace) trace.push_back({{"alpha", alpha}, {"rho", rho}});
  json j{{"kind", "average"},
         {"model", bundle.id},
         {"config_hash", bundle.config_hash},
         {"rho", solution.rho},
         {"acoi_residual", solution.acoi_residual},
         {"terms_used", solution.terms_used},
         {"rho_trace", trace},
         {"h_gap_trace", solution.h_gap_trace},
         {"value", solution.h.values()},
         {"value_boundary", solution.h.boundary_values()},
         {"selector", selector_to_json(solution.selector)}};
  return j.dump(2);
}

LoadedPolicy parse_policy_archive(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ContractViolation(std::string("archive: malformed JSON: ") + e.what());
  }
  LoadedPolicy out;
  out.kind = j.at("kind").get<std::string>();
  out.config_hash = j.at("config_hash").get<std::uint64_t>();
  out.selector.interior = j.at("selector").at("interior").get<std::vector<std::int32_t>>();
  out.selector.boundary = j.at("selector").at("boundary").get<std::vector<std::int32_t>>();
  return out;
}

LoadedPolicy load_policy_archive(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("archive: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_policy_archive(buffer.str());
}

namespace {

json inequality_to_json(const InequalityReport& report) {
  json worst = json::array();
  for (const auto& entry : report.worst)
    worst.push_back({{"point_index", entry.point_index},
                     {"boundary", entry.boundary},
                     {"action", entry.action},
                     {"slack", entry.slack}});
  return json{{"name", report.name},
              {"worst_slack", report.worst_slack},
              {"pass", report.pass},
              {"worst", worst}};
}

}  // namespace

std::string growth_report_json(const GrowthReport& report) {
  json j{{"pass", report.pass},
         {"drift", inequality_to_json(report.drift)},
         {"running_cost", inequality_to_json(report.running_cost)},
         {"boundary_comparison", inequality_to_json(report.boundary_comparison)},
         {"boundary_cost", inequality_to_json(report.boundary_cost)}};
  return j.dump(2);
}

std::string integrability_report_json(const IntegrabilityReport& report) {
  json j{{"pass", report.pass},
         {"intensity_floor", inequality_to_json(report.domination_lambda)},
         {"cost_ceiling", inequality_to_json(report.domination_cost)},
         {"sojourn_bound", inequality_to_json(report.sojourn_bound)},
         {"growth_decay", report.worst_growth_decay},
         {"weighted_decay", report.worst_weighted_decay},
         {"cost_tail", report.worst_cost_tail}};
  return j.dump(2);
}

std::string estimate_json(const CostEstimate& estimate, const ModelBundle& bundle,
                          const std::string& kind) {
  json j = estimate_to_json(estimate);
  j["kind"] = kind;
  j["model"] = bundle.id;
  j["config_hash"] = bundle.config_hash;
  return j.dump(2);
}

std::string oracle_result_json(const OracleResult& result, const ModelBundle& bundle,
                               std::uint64_t seed) {
  json j{{"model", bundle.id},
         {"config_hash", bundle.config_hash},
         {"value", result.value},
         {"std_error", result.std_error},
         {"policies_evaluated", result.policies_evaluated},
         {"jumps_used", result.jumps_used},
         {"seed", seed},
         {"best_policy", selector_to_json(result.best)}};
  return j.dump(2);
}

std::string grid_function_csv(const ModelBundle& bundle, const GridFunction& fn) {
  std::ostringstream out;
  for (int d = 0; d < bundle.grid->dim(); ++d) out << "x" << d << ",";
  out << "value\n";
  for (std::size_t i = 0; i < bundle.grid->size(); ++i) {
    Vec x = bundle.grid->point(i);
    for (int d = 0; d < bundle.grid->dim(); ++d) out << fmt(x[d]) << ",";
    out << fmt(fn[i]) << "\n";
  }
  for (std::size_t i = 0; i < bundle.grid->boundary_points().size(); ++i) {
    const Vec& z = bundle.grid->boundary_points()[i];
    for (int d = 0; d < bundle.grid->dim(); ++d) out << fmt(z[d]) << ",";
    out << fmt(fn.boundary_values()[i]) << "\n";
  }
  return out.str();
}

std::string selector_csv(const ModelBundle& bundle, const FeedbackSelector& selector) {
  std::ostringstream out;
  for (int d = 0; d < bundle.grid->dim(); ++d) out << "x" << d << ",";
  out << "action_index,action_value,boundary\n";
  for (std::size_t i = 0; i < bundle.grid->size(); ++i) {
    Vec x = bundle.grid->point(i);
    Action a = bundle.model.action_set(x, false)[static_cast<std::size_t>(selector.interior[i])];
    for (int d = 0; d < bundle.grid->dim(); ++d) out << fmt(x[d]) << ",";
    out << selector.interior[i] << "," << fmt(a) << ",0\n";
  }
  for (std::size_t i = 0; i < bundle.grid->boundary_points().size(); ++i) {
    const Vec& z = bundle.grid->boundary_points()[i];
    Action a = bundle.model.action_set(z, true)[static_cast<std::size_t>(selector.boundary[i])];
    for (int d = 0; d < bundle.grid->dim(); ++d) out << fmt(z[d]) << ",";
    out << selector.boundary[i] << "," << fmt(a) << ",1\n";
  }
  return out.str();
}

std::string rho_trace_csv(const AverageSolution& solution) {
  std::ostringstream out;
  out << "alpha,rho\n";
  for (auto [alpha, rho] : solution.rho_trace) out << fmt(alpha) << "," << fmt(rho) << "\n";
  return out.str();
}

std::string trajectory_csv(const TrajectoryRecord& record) {
  std::ostringstream out;
  out << "jump_time,boundary_flag,post_state,cumulative_cost\n";
  for (std::size_t i = 0; i < record.jump_times.size(); ++i) {
    out << fmt(record.jump_times[i]) << "," << (record.boundary_hit_flags[i] ? 1 : 0) << ",";
    const Vec& y = record.post_jump_states[i];
    for (Eigen::Index d = 0; d < y.size(); ++d) out << (d ? ";" : "") << fmt(y[d]);
    out << "," << fmt(record.cumulative_costs[i]) << "\n";
  }
  return out.str();
}

std::string running_average_csv(const TrajectoryRecord& record) {
  std::ostringstream out;
  out << "time,running_average\n";
  for (std::size_t i = 0; i < record.jump_times.size(); ++i) {
    double t = record.jump_times[i];
    if (t <= 0.0) continue;
    out << fmt(t) << "," << fmt(record.cumulative_costs[i] / t) << "\n";
  }
  return out.str();
}

std::string operator_sweep_csv(const ModelBundle& bundle, const FeedbackSelector& selector,
                               const std::vector<double>& alphas) {
  std::ostringstream out;
  for (int d = 0; d < bundle.grid->dim(); ++d) out << "x" << d << ",";
  out << "alpha,L,H,G,curlyL\n";
  GridFunction one(bundle.grid, 1.0);
  auto f_fn = [&](const Vec& x, Action a) { return bundle.model.running_cost(x, a); };
  auto r_fn = [&](const Vec& z, Action a) { return bundle.model.boundary_cost(z, a); };
  for (std::size_t i = 0; i < bundle.grid->size(); ++i) {
    Vec x = bundle.grid->point(i);
    ControlPath path = make_selector_path(bundle.model, *bundle.grid, selector, x, bundle.quad);
    PathQuadrature quad(bundle.model, path, bundle.quad);
    for (double alpha : alphas) {
      for (int d = 0; d < bundle.grid->dim(); ++d) out << fmt(x[d]) << ",";
      out << fmt(alpha) << "," << fmt(quad.running_integral(alpha, f_fn).value) << ","
          << fmt(quad.boundary_term(alpha, r_fn).value) << ","
          << fmt(quad.jump_expectation(alpha, one).value) << ","
          << fmt(quad.sojourn_mass(alpha).value) << "\n";
    }
  }
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

}  // namespace pdmp
