#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pdmp/benchmarks.hpp"
#include "pdmp/one_stage.hpp"
#include "pdmp/rng.hpp"

#include <cmath>

using namespace pdmp;

namespace {

// Minimal drain model with configurable costs and intensity for degenerate
// corner cases.
struct TinyModelOptions {
  std::vector<Action> actions{1.0, 2.0};
  std::function<double(const Vec&, Action)> intensity = [](const Vec&, Action a) { return a; };
  std::function<double(const Vec&, Action)> running = [](const Vec&, Action) { return 0.0; };
  std::function<double(const Vec&, Action)> boundary = [](const Vec&, Action) { return 0.0; };
};

ModelBundle tiny_bundle(const TinyModelOptions& opt) {
  ModelSpec m;
  m.state_dim = 1;
  m.interior_test = [](const Vec& x) { return x[0] > 0.0 && x[0] < 1.0; };
  m.flow_kind = FlowKind::closed_form;
  m.flow_supports_backward = true;
  m.flow = [](const Vec& x, double t) { return vec1(x[0] - t); };
  m.hit_time_solver = [](const Vec& x) { return x[0]; };
  m.cemetery_point = vec1(0.0);
  m.intensity = opt.intensity;
  m.kernel = [](const Vec&, Action) {
    return Distribution({{vec1(0.4), 1.0}, {vec1(0.6), 1.0}});
  };
  m.running_cost = opt.running;
  m.boundary_cost = opt.boundary;
  m.action_set = [actions = opt.actions](const Vec&, bool) { return actions; };

  ModelBundle bundle;
  bundle.id = "tiny";
  bundle.model = std::move(m);
  bundle.grid = StateGrid::uniform_1d(0.05, 0.95, 19, {0.0});
  bundle.growth.g = GridFunction(bundle.grid, 1.0);
  bundle.growth.r_bar = {0.0};
  bundle.growth.b = 1.0;
  bundle.growth.c = 0.25;
  bundle.growth.delta = 0.25;
  bundle.growth.m = 1.0;
  bundle.integrability.lambda_lower = [](const Vec&) { return 0.0; };
  bundle.integrability.f_upper = [](const Vec&) { return 1.0; };
  bundle.integrability.k_lambda = 2.0;
  bundle.quad.t_max = 2.0;
  bundle.quad.decay_rate = 0.25;
  bundle.quad.g_sup = 1.0;
  return bundle;
}

}  // namespace

TEST_CASE("boundary argmin: singleton, quadratic minimum, enumeration oracle") {
  TinyModelOptions singleton;
  singleton.actions = {1.5};
  singleton.boundary = [](const Vec&, Action a) { return 3.0 * a; };
  auto tb = tiny_bundle(singleton);
  GridFunction h(tb.grid, 2.0);
  auto [idx, value] = best_boundary_action(tb.model, h, vec1(0.0));
  CHECK(idx == 0);
  CHECK(value == doctest::Approx(3.0 * 1.5 + 2.0).epsilon(1e-14));

  TinyModelOptions quadratic;
  quadratic.actions = {-1.0, 0.0, 1.0};
  quadratic.boundary = [](const Vec&, Action a) { return a * a; };
  auto tq = tiny_bundle(quadratic);
  GridFunction h0(tq.grid, 0.0);
  auto [qi, qv] = best_boundary_action(tq.model, h0, vec1(0.0));
  CHECK(tq.model.action_set(vec1(0.0), true)[qi] == doctest::Approx(0.0));
  CHECK(qv == doctest::Approx(0.0));

  // Benchmark boundary against explicit enumeration.
  auto a = make_benchmark("model-a");
  GridFunction hb = GridFunction::tabulate(a.grid, [](const Vec& x) { return x[0] * 0.7 + 0.1; });
  auto [bi, bv] = best_boundary_action(a.model, hb, vec1(0.0));
  double manual_best = 1e30;
  std::size_t manual_idx = 0;
  auto actions = a.model.action_set(vec1(0.0), true);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    double v = a.model.boundary_cost(vec1(0.0), actions[i]) +
               kernel_expectation(a.model, hb, vec1(0.0), actions[i]);
    if (v < manual_best) {
      manual_best = v;
      manual_idx = i;
    }
  }
  CHECK(bi == manual_idx);
  CHECK(bv == doctest::Approx(manual_best).epsilon(1e-14));
}

TEST_CASE("hamiltonian argmin: vanishing intensity, tie-break, enumeration oracle") {
  TinyModelOptions no_jumps;
  no_jumps.actions = {0.5, 1.0, 2.0};
  no_jumps.intensity = [](const Vec&, Action) { return 0.0; };
  no_jumps.running = [](const Vec&, Action a) { return (a - 1.0) * (a - 1.0); };
  auto tb = tiny_bundle(no_jumps);
  GridFunction h(tb.grid, 5.0);
  auto [idx, value] = hamiltonian_argmin(tb.model, 1.23, h, vec1(0.5));
  CHECK(tb.model.action_set(vec1(0.5), false)[idx] == doctest::Approx(1.0));
  CHECK(value == doctest::Approx(0.0).epsilon(1e-14));

  // Degenerate Hamiltonian: w = Qh for every action, f = 0; first action wins.
  TinyModelOptions degen;
  degen.actions = {1.0, 2.0};
  auto td = tiny_bundle(degen);
  GridFunction hz(td.grid, 0.0);
  auto [di, dv] = hamiltonian_argmin(td.model, 0.0, hz, vec1(0.5));
  CHECK(di == 0);
  CHECK(dv == doctest::Approx(0.0));

  auto a = make_benchmark("model-a");
  GridFunction hb = GridFunction::tabulate(a.grid, [](const Vec& x) { return 1.0 - 0.5 * x[0]; });
  Vec x = vec1(0.5);
  double w_val = 0.8;
  auto [ai, av] = hamiltonian_argmin(a.model, w_val, hb, x);
  auto acts = a.model.action_set(x, false);
  double manual_best = 1e30;
  std::size_t manual_idx = 0;
  for (std::size_t i = 0; i < acts.size(); ++i) {
    double v = a.model.running_cost(x, acts[i]) -
               a.model.intensity(x, acts[i]) * (w_val - kernel_expectation(a.model, hb, x, acts[i]));
    if (v < manual_best) {
      manual_best = v;
      manual_idx = i;
    }
  }
  CHECK(ai == manual_idx);
  CHECK(av == doctest::Approx(manual_best).epsilon(1e-13));
}

TEST_CASE("one-stage value: zero data and constant transport") {
  TinyModelOptions zero;
  auto tb = tiny_bundle(zero);
  GridFunction h0(tb.grid, 0.0);
  auto r0 = one_stage_value(tb, 0.0, 0.0, h0, vec1(0.5));
  CHECK(r0.value == doctest::Approx(0.0).epsilon(1e-14));

  // With alpha = 0, f = r = 0, the operator transports a constant unchanged.
  GridFunction hk(tb.grid, 3.7);
  auto rk = one_stage_value(tb, 0.0, 0.0, hk, vec1(0.5));
  CHECK(rk.value == doctest::Approx(3.7).epsilon(1e-8));
}

TEST_CASE("one-stage value matches exhaustive path enumeration on a coarse instance") {
  BenchmarkParams params;
  params.id = "model-a";
  params.actions = {0.5, 1.0, 2.0};
  params.nodes_per_unit_time = 20;  // pair width 0.1: seven intervals from x = 0.7
  auto bundle = make_benchmark(params);

  const double x0 = 0.7;
  const double alpha = 0.5;
  GridFunction h0(bundle.grid, 0.0);

  auto result = one_stage_value(bundle, alpha, 0.0, h0, vec1(x0));
  REQUIRE(result.path.actions.size() == 7);

  auto actions = bundle.model.action_set(vec1(x0), false);
  double oracle = 1e30;
  std::vector<std::size_t> digits(7, 0);
  for (std::size_t combo = 0; combo < 2187; ++combo) {
    std::size_t rem = combo;
    ControlPath path;
    path.origin = vec1(x0);
    path.time_nodes = induction_nodes(x0, bundle.quad);
    for (std::size_t k = 0; k < 7; ++k) {
      path.actions.push_back(actions[rem % 3]);
      rem /= 3;
    }
    for (Action ba : bundle.model.action_set(vec1(0.0), true)) {
      path.boundary_action = ba;
      oracle = std::min(oracle, path_stage_value(bundle.model, path, bundle.quad, alpha, 0.0, h0));
    }
  }
  CHECK(result.value == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("one-stage self-consistency: value equals the evaluation of its own path") {
  auto bundle = make_benchmark("model-a");
  GridFunction h = GridFunction::tabulate(bundle.grid, [](const Vec& x) { return 0.3 * x[0]; });
  Rng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    Vec x = bundle.grid->point(rng.index(bundle.grid->size()));
    double alpha = rep % 2 == 0 ? 0.5 : 0.0;
    double rho = rep % 3 == 0 ? 0.2 : 0.0;
    auto result = one_stage_value(bundle, alpha, rho, h, x);
    double reeval = path_stage_value(bundle.model, result.path, bundle.quad, alpha, rho, h);
    CHECK(std::abs(result.value - reeval) <= 1e-6 * (1.0 + g_norm(h, bundle.growth.g)));
  }
}

TEST_CASE("selector optimality: the induction value is a lower bound over feedback paths") {
  auto bundle = make_benchmark("model-a");
  GridFunction h = GridFunction::tabulate(bundle.grid,
                                          [](const Vec& x) { return 0.5 + 0.2 * x[0] * x[0]; });
  const double alpha = 0.3;
  const double rho = 0.1;

  OneStageSolver solver(bundle);
  solver.set_alpha(alpha);
  std::vector<double> w;
  solver.sweep(rho, h, w);

  Rng rng(41);
  std::size_t n_actions = bundle.model.action_set(bundle.grid->point(0), false).size();
  for (int rep = 0; rep < 50; ++rep) {
    FeedbackSelector random;
    for (std::size_t i = 0; i < bundle.grid->size(); ++i)
      random.interior.push_back(static_cast<std::int32_t>(rng.index(n_actions)));
    random.boundary.push_back(static_cast<std::int32_t>(rng.index(n_actions)));

    for (std::size_t i = 0; i < bundle.grid->size(); i += 7) {
      Vec x = bundle.grid->point(i);
      ControlPath path = make_selector_path(bundle.model, *bundle.grid, random, x, bundle.quad);
      double path_value = path_stage_value(bundle.model, path, bundle.quad, alpha, rho, h);
      CHECK(w[i] <= path_value + 1e-9);
    }
  }

  // Achievement: the extracted greedy selector comes close to the optimum.
  FeedbackSelector greedy = extract_selector(bundle, h, w);
  double worst_gap = 0.0;
  for (std::size_t i = 0; i < bundle.grid->size(); ++i) {
    Vec x = bundle.grid->point(i);
    ControlPath path = make_selector_path(bundle.model, *bundle.grid, greedy, x, bundle.quad);
    double path_value = path_stage_value(bundle.model, path, bundle.quad, alpha, rho, h);
    worst_gap = std::max(worst_gap, path_value - w[i]);
  }
  MESSAGE("achievement gap: ", worst_gap);
  CHECK(worst_gap <= 2e-4 * (1.0 + g_norm(h, bundle.growth.g)));
}

TEST_CASE("monotonicity in h and the rho-shift bound") {
  auto bundle = make_benchmark("model-a");
  GridFunction h1 = GridFunction::tabulate(bundle.grid, [](const Vec& x) { return x[0]; });
  GridFunction h2 = GridFunction::tabulate(bundle.grid, [](const Vec& x) { return x[0] + 0.3; });

  OneStageSolver solver(bundle);
  solver.set_alpha(0.2);
  std::vector<double> w1, w2;
  solver.sweep(0.0, h1, w1);
  solver.sweep(0.0, h2, w2);
  for (std::size_t i = 0; i < w1.size(); ++i) CHECK(w1[i] <= w2[i] + 1e-12);

  // Increasing rho decreases the value, by at most (rho2 - rho1) K_lambda.
  std::vector<double> wr1, wr2;
  solver.sweep(0.1, h1, wr1);
  solver.sweep(0.45, h1, wr2);
  for (std::size_t i = 0; i < wr1.size(); ++i) {
    CHECK(wr2[i] <= wr1[i] + 1e-12);
    CHECK(wr1[i] - wr2[i] <= 0.35 * bundle.integrability.k_lambda + 1e-9);
  }
}

TEST_CASE("prepared sweep equals the pointwise induction") {
  for (const char* id : {"model-a", "model-b"}) {
    BenchmarkParams params;
    params.id = id;
    if (std::string(id) == "model-b") {
      params.nodes_per_unit_time = 32;
      params.tail_tol = 1e-6;
    }
    auto bundle = make_benchmark(params);
    GridFunction h = GridFunction::tabulate(bundle.grid,
                                            [](const Vec& x) { return 0.2 * x[0] + 0.1; });
    OneStageSolver solver(bundle);
    solver.set_alpha(0.4);
    std::vector<double> w;
    solver.sweep(0.05, h, w);
    for (std::size_t i = 0; i < bundle.grid->size(); i += 5) {
      auto r = one_stage_value(bundle, 0.4, 0.05, h, bundle.grid->point(i));
      CHECK(w[i] == doctest::Approx(r.value).epsilon(1e-11));
    }
  }
}

TEST_CASE("degenerate tie-break gives the first action everywhere") {
  TinyModelOptions degen;
  degen.actions = {1.0, 2.0};
  auto tb = tiny_bundle(degen);
  GridFunction h0(tb.grid, 0.0);
  OneStageSolver solver(tb);
  solver.set_alpha(0.0);
  std::vector<double> w;
  solver.sweep(0.0, h0, w);
  FeedbackSelector sel = extract_selector(tb, h0, w);
  for (auto idx : sel.interior) CHECK(idx == 0);
  for (auto idx : sel.boundary) CHECK(idx == 0);

  TinyModelOptions singleton;
  singleton.actions = {1.5};
  auto ts = tiny_bundle(singleton);
  GridFunction hs(ts.grid, 0.0);
  OneStageSolver ssolver(ts);
  ssolver.set_alpha(0.0);
  std::vector<double> ws;
  ssolver.sweep(0.0, hs, ws);
  FeedbackSelector unique = extract_selector(ts, hs, ws);
  for (auto idx : unique.interior) CHECK(idx == 0);
}

TEST_CASE("non-finite h is rejected") {
  auto bundle = make_benchmark("model-a");
  GridFunction bad(bundle.grid, 1.0);
  bad.values()[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)one_stage_value(bundle, 0.1, 0.0, bad, vec1(0.5)), ContractViolation);
}
