// Python bindings for the main operations: building benchmark models,
// auditing witnesses, solving the discounted and average problems, Monte
// Carlo estimation, and the brute-force oracle.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pdmp/benchmarks.hpp"
#include "pdmp/config.hpp"
#include "pdmp/diagnostics.hpp"
#include "pdmp/one_stage.hpp"
#include "pdmp/operators.hpp"
#include "pdmp/simulator.hpp"
#include "pdmp/solvers.hpp"

namespace py = pybind11;
using namespace pdmp;

namespace {

std::vector<double> grid_coordinates(const ModelBundle& bundle) {
  std::vector<double> out;
  out.reserve(bundle.grid->size());
  for (std::size_t i = 0; i < bundle.grid->size(); ++i)
    out.push_back(bundle.grid->point(i)[0]);
  return out;
}

double identity_defect(const ModelBundle& bundle, double x, double action, double alpha) {
  ControlPath path = make_constant_path(bundle.model, vec1(x), action, bundle.quad);
  PathQuadrature quad(bundle.model, path, bundle.quad);
  GridFunction one(bundle.grid, 1.0);
  return quad.jump_expectation(alpha, one).value + alpha * quad.sojourn_mass(alpha).value - 1.0;
}

}  // namespace

PYBIND11_MODULE(_pdmp, m) {
  m.doc() = "Average and discounted control of piecewise deterministic Markov processes";

  py::register_exception<ContractViolation>(m, "ContractViolation");
  py::register_exception<ConvergenceError>(m, "ConvergenceError");

  py::class_<ModelBundle>(m, "ModelBundle")
      .def_readonly("id", &ModelBundle::id)
      .def_readonly("seed", &ModelBundle::seed)
      .def_readonly("config_hash", &ModelBundle::config_hash)
      .def_property_readonly("grid", &grid_coordinates)
      .def_property_readonly("growth_constants",
                             [](const ModelBundle& b) {
                               return py::dict(py::arg("b") = b.growth.b,
                                               py::arg("c") = b.growth.c,
                                               py::arg("delta") = b.growth.delta,
                                               py::arg("M") = b.growth.m,
                                               py::arg("K_lambda") = b.integrability.k_lambda);
                             });

  py::class_<FeedbackSelector>(m, "FeedbackSelector")
      .def_readonly("interior", &FeedbackSelector::interior)
      .def_readonly("boundary", &FeedbackSelector::boundary);

  py::class_<DiscountedSolution>(m, "DiscountedSolution")
      .def_readonly("alpha", &DiscountedSolution::alpha)
      .def_readonly("iterations", &DiscountedSolution::iterations)
      .def_readonly("residual", &DiscountedSolution::residual)
      .def_readonly("selector", &DiscountedSolution::selector)
      .def_property_readonly("values",
                             [](const DiscountedSolution& s) { return s.value.values(); });

  py::class_<AverageSolution>(m, "AverageSolution")
      .def_readonly("rho", &AverageSolution::rho)
      .def_readonly("acoi_residual", &AverageSolution::acoi_residual)
      .def_readonly("rho_trace", &AverageSolution::rho_trace)
      .def_readonly("terms_used", &AverageSolution::terms_used)
      .def_readonly("selector", &AverageSolution::selector)
      .def_property_readonly("values", [](const AverageSolution& s) { return s.h.values(); });

  py::class_<CostEstimate>(m, "CostEstimate")
      .def_readonly("mean", &CostEstimate::mean)
      .def_readonly("std_error", &CostEstimate::std_error)
      .def_readonly("replications", &CostEstimate::replications)
      .def_readonly("horizon", &CostEstimate::horizon)
      .def_readonly("split_half_drift", &CostEstimate::split_half_drift)
      .def_readonly("seed", &CostEstimate::seed);

  py::class_<OracleResult>(m, "OracleResult")
      .def_readonly("value", &OracleResult::value)
      .def_readonly("std_error", &OracleResult::std_error)
      .def_readonly("policies_evaluated", &OracleResult::policies_evaluated)
      .def_readonly("jumps_used", &OracleResult::jumps_used);

  m.def(
      "make_benchmark",
      [](const std::string& id, std::size_t grid_resolution, int nodes_per_unit_time,
         std::uint64_t seed) {
        BenchmarkParams params;
        params.id = id;
        params.grid_resolution = grid_resolution;
        params.nodes_per_unit_time = nodes_per_unit_time;
        params.seed = seed;
        return make_benchmark(params);
      },
      py::arg("id"), py::arg("grid_resolution") = 49, py::arg("nodes_per_unit_time") = 128,
      py::arg("seed") = 20240817, "Build a built-in benchmark model");

  m.def("load_config_bundle",
        [](const std::string& text) { return build_bundle(parse_config_text(text)); },
        py::arg("config_json"), "Build a model from a JSON config string");

  m.def(
      "check_witnesses",
      [](const ModelBundle& bundle) {
        auto growth = check_growth(bundle);
        auto integrability = check_integrability(bundle);
        return py::dict(py::arg("growth_pass") = growth.pass,
                        py::arg("integrability_pass") = integrability.pass,
                        py::arg("worst_drift_slack") = growth.drift.worst_slack);
      },
      py::arg("bundle"), "Audit the growth and integrability witnesses");

  m.def(
      "solve_discounted",
      [](const ModelBundle& bundle, double alpha, double vi_tol, std::size_t max_iter) {
        SolveOptions options;
        options.vi_tol = vi_tol;
        options.max_iter = max_iter;
        return solve_discounted(bundle, alpha, options);
      },
      py::arg("bundle"), py::arg("alpha"), py::arg("vi_tol") = 1e-8,
      py::arg("max_iter") = 3'000'000,
      "Discounted value iteration to the fixed point of the one-stage operator");

  m.def(
      "solve_average",
      [](const ModelBundle& bundle, std::size_t schedule_terms, double vi_tol,
         std::optional<double> rho_tol) {
        AverageOptions options;
        options.discounted.vi_tol = vi_tol;
        options.rho_tol = rho_tol;
        return solve_average(bundle, std::nullopt,
                             default_vanishing_schedule(bundle.growth.c, schedule_terms),
                             options);
      },
      py::arg("bundle"), py::arg("schedule_terms") = 12, py::arg("vi_tol") = 1e-6,
      py::arg("rho_tol") = std::nullopt,
      "Vanishing-discount scheme for the long-run average cost");

  m.def(
      "constant_policy",
      [](const ModelBundle& bundle, int action_index) {
        return constant_selector(*bundle.grid, action_index);
      },
      py::arg("bundle"), py::arg("action_index"));

  m.def(
      "estimate_discounted_cost",
      [](const ModelBundle& bundle, double x, const FeedbackSelector& selector, double alpha,
         std::size_t replications, std::uint64_t seed) {
        return estimate_discounted_cost(bundle, vec1(x), selector, alpha, replications, seed);
      },
      py::arg("bundle"), py::arg("x"), py::arg("selector"), py::arg("alpha"),
      py::arg("replications") = 1000, py::arg("seed") = 1,
      "Monte Carlo discounted cost under a feedback policy");

  m.def(
      "estimate_average_cost",
      [](const ModelBundle& bundle, double x, const FeedbackSelector& selector, double horizon,
         std::size_t replications, std::uint64_t seed) {
        return estimate_average_cost(bundle, vec1(x), selector, horizon, replications, seed);
      },
      py::arg("bundle"), py::arg("x"), py::arg("selector"), py::arg("horizon") = 1000.0,
      py::arg("replications") = 200, py::arg("seed") = 1,
      "Monte Carlo long-run average cost under a feedback policy");

  m.def(
      "oracle_average",
      [](const ModelBundle& bundle, std::size_t replications, std::size_t policy_points,
         double horizon, std::uint64_t seed, std::size_t jobs) {
        OracleBudget budget;
        budget.replications = replications;
        budget.policy_points = policy_points;
        budget.horizon = horizon;
        budget.jobs = jobs;
        return oracle_average(bundle, budget, seed);
      },
      py::arg("bundle"), py::arg("replications") = 16, py::arg("policy_points") = 5,
      py::arg("horizon") = 40.0, py::arg("seed") = 1, py::arg("jobs") = 1,
      "Exhaustive policy enumeration baseline for the average cost");

  m.def("operator_identity_defect", &identity_defect, py::arg("bundle"), py::arg("x"),
        py::arg("action"), py::arg("alpha"),
        "G1 + alpha * sojourn mass - 1 along a constant-action path");

#ifdef PDMP_VERSION
  m.attr("__version__") = PDMP_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
