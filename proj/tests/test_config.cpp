#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pdmp/config.hpp"

#include <cmath>

using namespace pdmp;

TEST_CASE("config parsing: defaults, overrides, and malformed input") {
  RunConfig defaults = parse_config_text("{}");
  CHECK(defaults.benchmark.id == "model-a");
  CHECK(defaults.benchmark.grid_resolution == 49);

  RunConfig config = parse_config_text(R"({
    "model": {"id": "model-b", "overrides": {"intensity_scale": 0.5}},
    "grid": {"resolution": 25},
    "quadrature": {"rule": "trapezoid", "nodes_per_unit_time": 32, "tail_tol": 1e-6},
    "witness": {"c": 0.2, "K_lambda": 3.0},
    "solver": {"vi_tol": 1e-6, "schedule_terms": 4},
    "seed": 99
  })");
  CHECK(config.benchmark.id == "model-b");
  CHECK(config.benchmark.intensity_scale == 0.5);
  CHECK(config.benchmark.grid_resolution == 25);
  CHECK(config.benchmark.rule == QuadRule::trapezoid);
  CHECK(config.benchmark.c == 0.2);
  CHECK(config.benchmark.k_lambda_override.value() == 3.0);
  CHECK(config.solve.vi_tol == 1e-6);
  CHECK(config.schedule_terms == 4);
  CHECK(config.seed == 99);

  CHECK_THROWS_AS((void)parse_config_text("{ not json"), ContractViolation);
  CHECK_THROWS_AS((void)parse_config_text(R"({"quadrature": {"rule": "gauss"}})"),
                  ContractViolation);

  // Uniform action discretization by count.
  RunConfig actions = parse_config_text(R"({"actions": {"count": 7}})");
  CHECK(actions.benchmark.actions.size() == 7);
  CHECK(actions.benchmark.actions.front() == 0.5);
  CHECK(actions.benchmark.actions.back() == 2.0);
}

TEST_CASE("config hash binds archives to the producing configuration") {
  RunConfig config = parse_config_text(R"({"model": {"id": "model-a"}, "seed": 1})");
  auto bundle = build_bundle(config);
  RunConfig other = parse_config_text(
      R"({"model": {"id": "model-a", "overrides": {"intensity_scale": 1.5}}, "seed": 1})");
  auto other_bundle = build_bundle(other);
  CHECK(bundle.config_hash != other_bundle.config_hash);

  SolveOptions options;
  options.vi_tol = 1e-6;
  auto sol = solve_discounted(bundle, 0.5, options);
  std::string archive = discounted_archive_json(bundle, sol);
  LoadedPolicy loaded = parse_policy_archive(archive);
  CHECK(loaded.kind == "discounted");
  CHECK(loaded.config_hash == bundle.config_hash);
  CHECK(loaded.selector.interior == sol.selector.interior);
  CHECK(loaded.selector.boundary == sol.selector.boundary);
}

TEST_CASE("csv exports carry the documented columns") {
  auto bundle = build_bundle(parse_config_text("{}"));
  GridFunction f = GridFunction::tabulate(bundle.grid, [](const Vec& x) { return x[0]; });
  std::string csv = grid_function_csv(bundle, f);
  CHECK(csv.rfind("x0,value\n", 0) == 0);

  FeedbackSelector sel = constant_selector(*bundle.grid, 1);
  std::string sel_csv = selector_csv(bundle, sel);
  CHECK(sel_csv.rfind("x0,action_index,action_value,boundary\n", 0) == 0);
  CHECK(sel_csv.find(",1,1,1\n") != std::string::npos);  // boundary row

  Rng rng(3);
  auto record = simulate_trajectory(bundle, vec1(0.7), sel, 20.0, 0.0, rng);
  std::string traj = trajectory_csv(record);
  CHECK(traj.rfind("jump_time,boundary_flag,post_state,cumulative_cost\n", 0) == 0);
  std::string avg = running_average_csv(record);
  CHECK(avg.rfind("time,running_average\n", 0) == 0);

  std::string sweep = operator_sweep_csv(bundle, sel, {0.0, 0.5});
  CHECK(sweep.rfind("x0,alpha,L,H,G,curlyL\n", 0) == 0);
}

TEST_CASE("estimates and archives are byte-identical across reruns") {
  auto bundle = build_bundle(parse_config_text(R"({"seed": 31415})"));
  FeedbackSelector sel = constant_selector(*bundle.grid, 0);
  auto e1 = estimate_discounted_cost(bundle, vec1(0.7), sel, 0.5, 300, 31415);
  auto e2 = estimate_discounted_cost(bundle, vec1(0.7), sel, 0.5, 300, 31415);
  CHECK(estimate_json(e1, bundle, "discounted") == estimate_json(e2, bundle, "discounted"));

  SolveOptions options;
  options.vi_tol = 1e-7;
  auto s1 = solve_discounted(bundle, 0.5, options);
  auto s2 = solve_discounted(bundle, 0.5, options);
  CHECK(discounted_archive_json(bundle, s1) == discounted_archive_json(bundle, s2));
}
