#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pdmp/benchmarks.hpp"
#include "pdmp/simulator.hpp"

#include <algorithm>
#include <cmath>

using namespace pdmp;

namespace {

// Decay flow on (0, 5) with constant intensity; never reaches the boundary.
ModelBundle constant_rate_bundle(double rate) {
  ModelSpec m;
  m.state_dim = 1;
  m.interior_test = [](const Vec& x) { return x[0] > 0.0 && x[0] < 5.0; };
  m.flow_kind = FlowKind::closed_form;
  m.flow_supports_backward = true;
  m.flow = [](const Vec& x, double t) { return vec1(x[0] * std::exp(-t)); };
  m.hit_time_solver = [](const Vec&) { return kInfiniteTime; };
  m.cemetery_point = vec1(0.0);
  m.intensity = [rate](const Vec&, Action) { return rate; };
  m.kernel = [](const Vec&, Action) {
    return Distribution({{vec1(1.0), 1.0}, {vec1(2.0), 1.0}});
  };
  m.running_cost = [](const Vec& x, Action) { return x[0]; };
  m.boundary_cost = [](const Vec&, Action) { return 0.0; };
  m.action_set = [](const Vec&, bool) { return std::vector<Action>{1.0}; };

  ModelBundle bundle;
  bundle.id = "const-rate";
  bundle.model = std::move(m);
  bundle.grid = StateGrid::uniform_1d(0.1, 4.9, 25);
  bundle.growth.g = GridFunction(bundle.grid, 1.0);
  bundle.growth.b = 0.0;
  bundle.growth.c = 0.25;
  bundle.growth.delta = 0.25;
  bundle.growth.m = 5.0;
  bundle.integrability.lambda_lower = [rate](const Vec&) { return rate; };
  bundle.integrability.f_upper = [](const Vec& x) { return x[0]; };
  bundle.integrability.k_lambda = 1.0 / std::max(rate - 0.25, 0.05);
  bundle.quad.t_max = 60.0;
  bundle.quad.decay_rate = 0.25;
  bundle.quad.g_sup = 1.0;
  bundle.quad.tail_tol = 1e-6;
  return bundle;
}

double ks_distance_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  double d = 0.0;
  std::size_t n = u.size();
  for (std::size_t i = 0; i < n; ++i) {
    double lo = static_cast<double>(i) / n;
    double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, std::abs(u[i] - lo), std::abs(u[i] - hi)});
  }
  return d;
}

}  // namespace

TEST_CASE("sojourn sampling: deterministic boundary hit when the intensity vanishes") {
  BenchmarkParams params;
  params.id = "model-a";
  params.intensity_scale = 0.0;
  auto bundle = make_benchmark(params);
  FeedbackSelector sel = constant_selector(*bundle.grid, 0);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    auto s = sample_sojourn(bundle, vec1(0.62), sel, rng);
    CHECK(s.boundary);
    CHECK(s.time == doctest::Approx(0.62).epsilon(1e-12));
  }
}

TEST_CASE("sojourn sampling reproduces the exponential law at constant intensity") {
  const double rate = 1.3;
  auto bundle = constant_rate_bundle(rate);
  FeedbackSelector sel = constant_selector(*bundle.grid, 0);

  const std::size_t n = 10'000;
  Rng rng(101);
  std::vector<double> u;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto s = sample_sojourn(bundle, vec1(2.0), sel, rng);
    REQUIRE_FALSE(s.censored);
    sum += s.time;
    u.push_back(1.0 - std::exp(-rate * s.time));
  }
  CHECK(sum / n == doctest::Approx(1.0 / rate).epsilon(0.05));
  // Kolmogorov-Smirnov at the 1% level: 1.628 / sqrt(n).
  CHECK(ks_distance_uniform(u) <= 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("sojourn sampling matches the integrated hazard for a state-dependent intensity") {
  auto bundle = make_benchmark("model-a");
  FeedbackSelector sel = constant_selector(*bundle.grid, 1);  // action 1.0
  const double x0 = 0.9;
  const Action act = 1.0;

  // Survival at the boundary atom: exp(-Lambda(x0, t*)), closed form.
  double hazard_star = act * ((1.0 + x0) * x0 - 0.5 * x0 * x0);
  double p_boundary = std::exp(-hazard_star);

  const std::size_t n = 10'000;
  Rng rng(202);
  std::size_t hits = 0;
  std::vector<double> u;
  for (std::size_t i = 0; i < n; ++i) {
    auto s = sample_sojourn(bundle, vec1(x0), sel, rng);
    if (s.boundary) {
      ++hits;
    } else {
      double hz = act * ((1.0 + x0) * s.time - 0.5 * s.time * s.time);
      u.push_back((1.0 - std::exp(-hz)) / (1.0 - p_boundary));
    }
  }
  double sigma = std::sqrt(p_boundary * (1.0 - p_boundary) / n);
  CHECK(std::abs(static_cast<double>(hits) / n - p_boundary) <= 3.0 * sigma);
  CHECK(ks_distance_uniform(u) <= 1.628 / std::sqrt(static_cast<double>(u.size())));
}

TEST_CASE("trajectories without jumps accumulate the pure flow cost") {
  BenchmarkParams params;
  params.id = "model-b";
  params.intensity_scale = 0.0;
  params.t_max = 60.0;
  params.tail_tol = 1e30;  // certificate not meaningful without decay
  auto bundle = make_benchmark(params);
  FeedbackSelector sel = constant_selector(*bundle.grid, 0);

  Rng rng(7);
  const double horizon = 30.0;
  const double x0 = 3.0;
  auto record = simulate_trajectory(bundle, vec1(x0), sel, horizon, 0.0, rng);
  CHECK(record.jump_count == 0);
  CHECK(record.boundary_hit_count == 0);

  // Oracle: fine trapezoid for the decay-flow running cost with a = 1.
  auto f = [&](double s) {
    double x = x0 * std::exp(-s);
    return x * x / (1.0 + x) + 0.1;
  };
  double oracle = 0.0;
  const std::size_t steps = 3'000'000;
  double h = horizon / steps;
  for (std::size_t i = 0; i <= steps; ++i)
    oracle += f(h * static_cast<double>(i)) * (i == 0 || i == steps ? 0.5 : 1.0) * h;
  CHECK(record.running_cost_integral == doctest::Approx(oracle).epsilon(1e-7));
}

TEST_CASE("zero-intensity drain is a deterministic boundary recurrence") {
  BenchmarkParams params;
  params.id = "model-a";
  params.intensity_scale = 0.0;
  params.deterministic_kernel_point = 0.7;
  auto bundle = make_benchmark(params);
  FeedbackSelector sel = constant_selector(*bundle.grid, 0);

  Rng rng(11);
  const double horizon = 10.0;
  auto record = simulate_trajectory(bundle, vec1(0.7), sel, horizon, 0.0, rng);
  // Cycle length 0.7: hits at 0.7, 1.4, ..., 9.8.
  std::size_t expected_hits = 14;
  CHECK(record.boundary_hit_count == expected_hits);
  CHECK(record.jump_count == expected_hits);
  CHECK(record.boundary_cost_sum == doctest::Approx(1.0 * expected_hits));
  for (bool flag : record.boundary_hit_flags) CHECK(flag);
}

TEST_CASE("post-jump state frequencies match the kernel weights") {
  auto bundle = make_benchmark("model-a");
  FeedbackSelector sel = constant_selector(*bundle.grid, 2);
  Rng rng(53);
  std::size_t counts[4] = {0, 0, 0, 0};
  std::size_t total = 0;
  for (int rep = 0; rep < 60; ++rep) {
    auto record = simulate_trajectory(bundle, vec1(0.7), sel, 50.0, 0.0, rng);
    for (const auto& y : record.post_jump_states) {
      int slot = static_cast<int>(std::lround((y[0] - 0.5) / 0.1));
      REQUIRE(slot >= 0);
      REQUIRE(slot < 4);
      counts[slot] += 1;
      ++total;
    }
  }
  double sigma = std::sqrt(0.25 * 0.75 / static_cast<double>(total));
  for (std::size_t c : counts)
    CHECK(std::abs(static_cast<double>(c) / total - 0.25) <= 3.0 * sigma);
}

TEST_CASE("discounted estimates: constant cost and zero cost") {
  BenchmarkParams params;
  params.id = "model-b";
  params.constant_running_cost = 0.3;
  auto bundle = make_benchmark(params);
  FeedbackSelector sel = constant_selector(*bundle.grid, 0);

  auto est = estimate_discounted_cost(bundle, vec1(2.0), sel, 0.5, 50, 999);
  CHECK(std::abs(est.mean - 0.3 / 0.5) <= 3.0 * est.std_error + 2e-4);
  CHECK(est.std_error <= 1e-12);  // deterministic integrand

  BenchmarkParams zero;
  zero.id = "model-a";
  zero.running_cost_scale = 0.0;
  zero.boundary_cost = 0.0;
  auto zb = make_benchmark(zero);
  FeedbackSelector zsel = constant_selector(*zb.grid, 0);
  auto zest = estimate_discounted_cost(zb, vec1(0.5), zsel, 0.5, 40, 1000);
  CHECK(zest.mean == 0.0);
  CHECK(zest.std_error == 0.0);
}

TEST_CASE("average estimates: constant cost exactly, deterministic cycle in closed form") {
  BenchmarkParams params;
  params.id = "model-b";
  params.constant_running_cost = 0.4;
  auto bundle = make_benchmark(params);
  FeedbackSelector sel = constant_selector(*bundle.grid, 0);
  auto est = estimate_average_cost(bundle, vec1(2.0), sel, 150.0, 40, 31);
  CHECK(est.mean == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(std::abs(est.split_half_drift) <= 1e-12);

  BenchmarkParams cyc;
  cyc.id = "model-a";
  cyc.intensity_scale = 0.0;
  cyc.deterministic_kernel_point = 0.7;
  auto cb = make_benchmark(cyc);
  FeedbackSelector csel = constant_selector(*cb.grid, 0);
  auto cest = estimate_average_cost(cb, vec1(0.7), csel, 210.0, 8, 77);
  // One cycle: drain cost 0.7^2/2 + 0.2 * 0.25 * 0.7, boundary cost 1.
  double cycle_average = (0.5 * 0.49 + 0.035 + 1.0) / 0.7;
  CHECK(cest.mean == doctest::Approx(cycle_average).epsilon(0.01));
}

TEST_CASE("jump counts concentrate across independent batches") {
  auto bundle = make_benchmark("model-a");
  FeedbackSelector sel = constant_selector(*bundle.grid, 1);
  auto batch_mean = [&](std::uint64_t seed) {
    double total = 0.0;
    for (std::size_t i = 0; i < 40; ++i) {
      Rng rng(derive_stream_seed(seed, i));
      total += static_cast<double>(
          simulate_trajectory(bundle, vec1(0.7), sel, 100.0, 0.0, rng).jump_count);
    }
    return total / 40.0;
  };
  double m1 = batch_mean(1);
  double m2 = batch_mean(2);
  CHECK(std::abs(m1 - m2) / m1 <= 0.1);
}

TEST_CASE("estimates are reproducible bit for bit under a fixed seed") {
  auto bundle = make_benchmark("model-a");
  FeedbackSelector sel = constant_selector(*bundle.grid, 1);
  auto a = estimate_discounted_cost(bundle, vec1(0.7), sel, 0.5, 200, 4242);
  auto b = estimate_discounted_cost(bundle, vec1(0.7), sel, 0.5, 200, 4242);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  auto c = estimate_average_cost(bundle, vec1(0.7), sel, 120.0, 50, 4242);
  auto d = estimate_average_cost(bundle, vec1(0.7), sel, 120.0, 50, 4242);
  CHECK(c.mean == d.mean);
  CHECK(c.split_half_drift == d.split_half_drift);
}

TEST_CASE("censoring with a positive intensity floor flags witness inconsistency") {
  // Intensity far below the declared floor horizon: censoring at the cap with
  // a positive declared floor is an inconsistency, not a sample.
  auto bundle = constant_rate_bundle(0.01);
  FeedbackSelector sel = constant_selector(*bundle.grid, 0);
  Rng rng(13);
  CHECK_THROWS_AS((void)sample_sojourn(bundle, vec1(2.0), sel, rng), DiagnosticError);
}

TEST_CASE("horizon preconditions and the explosion guard") {
  auto bundle = make_benchmark("model-a");
  FeedbackSelector sel = constant_selector(*bundle.grid, 0);
  CHECK_THROWS_AS((void)estimate_average_cost(bundle, vec1(0.5), sel, 1.0, 4, 1),
                  ContractViolation);

  SimulationOptions tight;
  tight.explosion_guard = 3;
  Rng rng(9);
  CHECK_THROWS_AS((void)simulate_trajectory(bundle, vec1(0.7), sel, 100.0, 0.0, rng, tight),
                  DiagnosticError);
}
