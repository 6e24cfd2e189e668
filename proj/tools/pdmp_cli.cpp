// Command-line front end: wiring configs to the diagnostics, solvers,
// simulator, and oracle, with JSON archives and CSV tables as outputs.
//
// Exit codes: 0 success, 1 computational failure, 2 usage or config error.

#include "pdmp/config.hpp"
#include "pdmp/diagnostics.hpp"
#include "pdmp/one_stage.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <thread>

namespace {

using namespace pdmp;

std::uint64_t resolve_seed(std::uint64_t config_seed, std::optional<std::uint64_t> flag_seed) {
  if (const char* env = std::getenv("PDMP_SEED")) {
    try {
      return static_cast<std::uint64_t>(std::stoull(env));
    } catch (const std::exception&) {
      throw ContractViolation("PDMP_SEED must be an unsigned integer");
    }
  }
  return flag_seed.value_or(config_seed);
}

FeedbackSelector resolve_policy(const std::string& spec, const ModelBundle& bundle,
                                const RunConfig& config, std::optional<double> alpha) {
  if (spec.rfind("builtin:const:", 0) == 0) {
    int index = std::stoi(spec.substr(14));
    std::size_t count = bundle.model.action_set(bundle.grid->point(0), false).size();
    if (index < 0 || static_cast<std::size_t>(index) >= count)
      throw ContractViolation("builtin constant policy index outside the action set");
    return constant_selector(*bundle.grid, index);
  }
  if (spec == "builtin:solve") {
    if (alpha) return solve_discounted(bundle, *alpha, config.solve).selector;
    AverageOptions options = config.average;
    return solve_average(bundle, std::nullopt,
                         default_vanishing_schedule(bundle.growth.c, config.schedule_terms),
                         options)
        .selector;
  }
  LoadedPolicy loaded = load_policy_archive(spec);
  if (loaded.config_hash != bundle.config_hash)
    throw Error("policy archive was produced under a different model configuration "
                "(config hash mismatch)");
  if (loaded.selector.interior.size() != bundle.grid->size() ||
      loaded.selector.boundary.size() != bundle.grid->boundary_points().size())
    throw Error("policy archive does not match the grid");
  return loaded.selector;
}

int cmd_check(const std::string& config_path, const std::string& out_path, bool ergodicity,
              std::size_t jobs) {
  (void)jobs;
  RunConfig config = load_config(config_path);
  ModelBundle bundle = build_bundle(config);

  GrowthReport growth = check_growth(bundle);
  IntegrabilityReport integrability = check_integrability(bundle);
  bool pass = growth.pass && integrability.pass;

  std::string ergodicity_json = "null";
  if (ergodicity) {
    // Spot check: the constant selectors the toolkit uses plus twenty random
    // ones; every one of them must contract.
    std::size_t actions = bundle.model.action_set(bundle.grid->point(0), false).size();
    ErgodicityReport first;
    bool have_first = false;
    for (std::size_t a = 0; a < actions; ++a) {
      auto report = estimate_ergodicity(bundle, constant_selector(*bundle.grid, a));
      if (!have_first) {
        first = report;
        have_first = true;
      }
    }
    Rng rng(derive_stream_seed(bundle.seed, 0xe5d));
    for (int r = 0; r < 20; ++r) {
      FeedbackSelector random;
      for (std::size_t i = 0; i < bundle.grid->size(); ++i)
        random.interior.push_back(static_cast<std::int32_t>(rng.index(actions)));
      for (std::size_t i = 0; i < bundle.grid->boundary_points().size(); ++i)
        random.boundary.push_back(static_cast<std::int32_t>(rng.index(actions)));
      (void)estimate_ergodicity(bundle, random);
    }
    char buffer[256];
    std::snprintf(buffer, sizeof(buffer),
                  "{\"a\": %.17g, \"kappa\": %.17g, \"nu_g\": %.17g, \"selectors_checked\": %zu}",
                  first.witness.a_const, first.witness.kappa, first.witness.nu_g, actions + 20);
    ergodicity_json = buffer;
  }

  std::string report = "{\n\"pass\": " + std::string(pass ? "true" : "false") +
                       ",\n\"growth\": " + growth_report_json(growth) +
                       ",\n\"integrability\": " + integrability_report_json(integrability) +
                       ",\n\"ergodicity\": " + ergodicity_json + "\n}\n";
  if (out_path.empty())
    std::cout << report;
  else
    write_file(out_path, report);
  return pass ? 0 : 1;
}

int cmd_solve(const std::string& config_path, const std::string& mode,
              std::optional<double> alpha, std::optional<double> x0,
              std::optional<double> tol, const std::string& out_base, std::size_t jobs) {
  (void)jobs;
  RunConfig config = load_config(config_path);
  if (tol) {
    config.solve.vi_tol = *tol;
    config.average.discounted.vi_tol = *tol;
  }
  ModelBundle bundle = build_bundle(config);

  std::optional<std::size_t> x0_index;
  if (x0) x0_index = bundle.grid->nearest_index(vec1(*x0));

  auto write_failure = [&](const std::string& what) {
    write_file(out_base + ".json",
               std::string("{\n  \"kind\": \"failure\",\n  \"error\": \"") + what +
                   "\"\n}\n");
  };
  if (mode == "discounted") {
    DiscountedSolution sol;
    try {
      sol = solve_discounted(bundle, alpha.value_or(0.5), config.solve);
    } catch (const ConvergenceError& e) {
      write_failure(e.what());
      throw;
    }
    write_file(out_base + ".json", discounted_archive_json(bundle, sol));
    write_file(out_base + "_value.csv", grid_function_csv(bundle, sol.value));
    write_file(out_base + "_selector.csv", selector_csv(bundle, sol.selector));
    std::cout << "alpha " << sol.alpha << ", iterations " << sol.iterations << ", residual "
              << sol.residual << "\n";
    return 0;
  }
  if (mode == "average") {
    AverageSolution sol;
    try {
      sol = solve_average(bundle, x0_index,
                          default_vanishing_schedule(bundle.growth.c, config.schedule_terms),
                          config.average);
    } catch (const ConvergenceError& e) {
      write_failure(e.what());
      throw;
    }
    write_file(out_base + ".json", average_archive_json(bundle, sol));
    write_file(out_base + "_value.csv", grid_function_csv(bundle, sol.h));
    write_file(out_base + "_selector.csv", selector_csv(bundle, sol.selector));
    write_file(out_base + "_rho_trace.csv", rho_trace_csv(sol));
    std::cout << "rho " << sol.rho << " after " << sol.terms_used
              << " schedule terms, optimality-inequality residual " << sol.acoi_residual << "\n";
    return 0;
  }
  throw CLI::ValidationError("--mode must be discounted or average");
}

int cmd_simulate(const std::string& config_path, const std::string& policy,
                 std::optional<double> horizon, std::optional<std::size_t> reps,
                 std::optional<double> alpha, std::optional<std::uint64_t> seed_flag,
                 const std::string& out_base, bool dump_trajectory) {
  RunConfig config = load_config(config_path);
  ModelBundle bundle = build_bundle(config);
  std::uint64_t seed = resolve_seed(config.seed, seed_flag);

  FeedbackSelector selector = resolve_policy(policy, bundle, config, alpha);
  Vec start = bundle.grid->point(centroid_index(*bundle.grid));

  CostEstimate estimate;
  if (alpha) {
    estimate = estimate_discounted_cost(bundle, start, selector, *alpha,
                                        reps.value_or(config.replications), seed,
                                        config.simulation);
  } else {
    estimate = estimate_average_cost(bundle, start, selector,
                                     horizon.value_or(config.horizon),
                                     reps.value_or(config.replications), seed,
                                     config.simulation);
  }
  std::string kind = alpha ? "discounted" : "average";
  std::string body = estimate_json(estimate, bundle, kind);
  if (out_base.empty()) {
    std::cout << body << "\n";
  } else {
    write_file(out_base + "_estimate.json", body);
    Rng rng(derive_stream_seed(seed, 0));
    TrajectoryRecord record = simulate_trajectory(
        bundle, start, selector, horizon.value_or(config.horizon), alpha.value_or(0.0), rng,
        config.simulation);
    write_file(out_base + "_running_average.csv", running_average_csv(record));
    if (dump_trajectory) write_file(out_base + "_trajectory.csv", trajectory_csv(record));
  }
  return 0;
}

int cmd_oracle(const std::string& config_path, const std::string& mode,
               std::optional<double> alpha, std::optional<double> x0,
               std::optional<std::uint64_t> seed_flag, const std::string& out_base,
               std::size_t jobs) {
  RunConfig config = load_config(config_path);
  ModelBundle bundle = build_bundle(config);
  std::uint64_t seed = resolve_seed(config.seed, seed_flag);
  OracleBudget budget = config.oracle;
  budget.jobs = jobs;

  OracleResult result;
  if (mode == "discounted") {
    Vec start = x0 ? vec1(*x0) : bundle.grid->point(centroid_index(*bundle.grid));
    result = oracle_discounted(bundle, start, alpha.value_or(0.5), budget, seed);
  } else if (mode == "average") {
    result = oracle_average(bundle, budget, seed);
  } else {
    throw CLI::ValidationError("--mode must be discounted or average");
  }

  std::string body = oracle_result_json(result, bundle, seed);
  if (out_base.empty())
    std::cout << body << "\n";
  else
    write_file(out_base + ".json", body);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Control toolkit for piecewise deterministic Markov processes"};
  app.require_subcommand(1);

  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--jobs", jobs, "worker threads for parallel sweeps");

  std::string config_path, out_path, solve_out, mode = "discounted",
      policy = "builtin:const:0";
  std::optional<double> alpha, x0, tol, horizon;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  bool ergodicity = false, dump_trajectory = false;

  auto* check = app.add_subcommand("check", "audit the growth and integrability witnesses");
  check->add_option("config", config_path, "model config file")->required();
  check->add_option("--out", out_path, "report path (stdout when omitted)");
  check->add_flag("--ergodicity", ergodicity, "also spot-check geometric ergodicity");

  auto* solve = app.add_subcommand("solve", "solve the discounted or average problem");
  solve->add_option("config", config_path, "model config file")->required();
  solve->add_option("--mode", mode, "discounted | average")->required();
  solve->add_option("--alpha", alpha, "discount rate (discounted mode)");
  solve->add_option("--x0", x0, "anchor state for the vanishing-discount scheme");
  solve->add_option("--tol", tol, "value-iteration tolerance override");
  solve->add_option("--out", solve_out, "output basename (default: solution)");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates under a policy");
  simulate->add_option("config", config_path, "model config file")->required();
  simulate->add_option("--policy", policy,
                       "archive path, builtin:const:<idx>, or builtin:solve");
  simulate->add_option("--horizon", horizon, "average-cost horizon");
  simulate->add_option("--reps", reps, "number of replications");
  simulate->add_option("--alpha", alpha, "discount rate (switches to the discounted estimate)");
  simulate->add_option("--seed", seed, "seed override (PDMP_SEED wins over both)");
  simulate->add_option("--out", out_path, "output basename (stdout when omitted)");
  simulate->add_flag("--dump-trajectory", dump_trajectory, "also write one trajectory as CSV");

  auto* oracle = app.add_subcommand("oracle", "brute-force policy enumeration baseline");
  oracle->add_option("config", config_path, "model config file")->required();
  oracle->add_option("--mode", mode, "discounted | average")->required();
  oracle->add_option("--alpha", alpha, "discount rate (discounted mode)");
  oracle->add_option("--x0", x0, "start state (discounted mode)");
  oracle->add_option("--seed", seed, "seed override");
  oracle->add_option("--out", out_path, "output basename (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (check->parsed()) return cmd_check(config_path, out_path, ergodicity, jobs);
    if (solve->parsed())
      return cmd_solve(config_path, mode, alpha, x0, tol,
                       solve_out.empty() ? "solution" : solve_out, jobs);
    if (simulate->parsed())
      return cmd_simulate(config_path, policy, horizon, reps, alpha, seed, out_path,
                          dump_trajectory);
    if (oracle->parsed()) return cmd_oracle(config_path, mode, alpha, x0, seed, out_path, jobs);
  } catch (const ContractViolation& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
