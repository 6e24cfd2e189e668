#pragma once

#include "pdmp/benchmarks.hpp"
#include "pdmp/diagnostics.hpp"
#include "pdmp/simulator.hpp"
#include "pdmp/solvers.hpp"

#include <string>

namespace pdmp {

// Everything a run needs, parsed from one JSON config file: the model and its
// grid, witness constants, quadrature and solver tolerances, simulation and
// oracle budgets, and the master seed.
struct RunConfig {
  BenchmarkParams benchmark;
  SolveOptions solve;
  AverageOptions average;
  SimulationOptions simulation;
  OracleBudget oracle;
  std::size_t schedule_terms = 12;
  double horizon = 1000.0;
  std::size_t replications = 200;
  std::uint64_t seed = 20240817;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

ModelBundle build_bundle(const RunConfig& config);

// Archives are JSON documents; the config hash binds a stored policy to the
// model and grid it was solved on.
std::string discounted_archive_json(const ModelBundle& bundle,
                                    const DiscountedSolution& solution);
std::string average_archive_json(const ModelBundle& bundle, const AverageSolution& solution);

struct LoadedPolicy {
  FeedbackSelector selector;
  std::uint64_t config_hash = 0;
  std::string kind;  // "discounted" or "average"
};

LoadedPolicy parse_policy_archive(const std::string& text);
LoadedPolicy load_policy_archive(const std::string& path);

std::string growth_report_json(const GrowthReport& report);
std::string integrability_report_json(const IntegrabilityReport& report);
std::string estimate_json(const CostEstimate& estimate, const ModelBundle& bundle,
                          const std::string& kind);
std::string oracle_result_json(const OracleResult& result, const ModelBundle& bundle,
                               std::uint64_t seed);

// CSV exports. Columns follow the documented formats: grid functions as
// coordinates plus value, selectors with the action index, value and boundary
// flag, trajectories as jump records, and operator sweeps for debugging.
std::string grid_function_csv(const ModelBundle& bundle, const GridFunction& fn);
std::string selector_csv(const ModelBundle& bundle, const FeedbackSelector& selector);
std::string rho_trace_csv(const AverageSolution& solution);
std::string trajectory_csv(const TrajectoryRecord& record);
std::string running_average_csv(const TrajectoryRecord& record);
std::string operator_sweep_csv(const ModelBundle& bundle, const FeedbackSelector& selector,
                               const std::vector<double>& alphas);

void write_file(const std::string& path, const std::string& content);

}  // namespace pdmp
