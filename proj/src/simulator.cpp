#include "pdmp/simulator.hpp"

#include "pdmp/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_map>

namespace pdmp {

namespace {

// Simpson value of fn over [0, len] from three samples.
template <typename Fn>
double simpson3(Fn&& fn, double len) {
  return len / 6.0 * (fn(0.0) + 4.0 * fn(0.5 * len) + fn(len));
}

std::uint64_t point_key(const Vec& x) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    std::uint64_t bits;
    double v = x[d];
    std::memcpy(&bits, &v, sizeof(bits));
    h = (h ^ bits) * 0x100000001b3ULL;
  }
  return h;
}

// Cached discretization of the selector-induced flow segment from one origin:
// pair-node hazards and cumulative cost integrals on the same pair grid the
// operator quadrature uses. Size is min(t*, t_max) worth of pairs.
struct SegmentTable {
  // Per pair node k (k = 0..n_pairs): time, cumulative hazard, cumulative
  // plain cost integral, cumulative locally-discounted cost integral.
  std::vector<double> t, hazard, cost, dcost;
  // Per pair: the anchored action and the three intensity samples.
  std::vector<Action> action;
  std::vector<double> lam0, lam1, lam2;
  bool ends_on_boundary = false;
  double t_end = 0.0;
};

class SegmentCache {
 public:
  SegmentCache(const ModelBundle& bundle, const FeedbackSelector& selector, double alpha)
      : bundle_(bundle), selector_(selector), alpha_(alpha) {}

  const SegmentTable& table_for(const Vec& origin) {
    auto [it, inserted] = cache_.try_emplace(point_key(origin));
    if (inserted) build(origin, it->second);
    return it->second;
  }

  double alpha() const { return alpha_; }
  const ModelBundle& bundle() const { return bundle_; }
  const FeedbackSelector& selector() const { return selector_; }

 private:
  void build(const Vec& origin, SegmentTable& table) {
    const ModelSpec& model = bundle_.model;
    double t_star = hit_time(model, origin);
    double t_end = std::min(t_star, bundle_.quad.t_max);
    table.t_end = t_end;
    table.ends_on_boundary = std::isfinite(t_star) && t_star <= bundle_.quad.t_max;

    double pair_width = bundle_.quad.pair_width();
    table.t.push_back(0.0);
    table.hazard.push_back(0.0);
    table.cost.push_back(0.0);
    table.dcost.push_back(0.0);

    double t0 = 0.0;
    while (t0 < t_end - 1e-15) {
      double width = std::min(pair_width, t_end - t0);
      double hh = 0.5 * width;
      Vec x0 = model.flow(origin, t0);
      Vec xm = model.flow(origin, t0 + hh);
      Vec x1 = model.flow(origin, t0 + width);
      Action a = selector_.interior_action(model, *bundle_.grid, x0);
      double l0 = model.intensity(x0, a);
      double l1 = model.intensity(xm, a);
      double l2 = model.intensity(x1, a);
      auto rule = detail::pair_rule(bundle_.quad.rule, hh, l0, l1, l2);

      double f0 = model.running_cost(x0, a);
      double f1 = model.running_cost(xm, a);
      double f2 = model.running_cost(x1, a);
      double plain = width / 6.0 * (f0 + 4.0 * f1 + f2);
      double disc = width / 6.0 *
                    (std::exp(-alpha_ * t0) * f0 +
                     4.0 * std::exp(-alpha_ * (t0 + hh)) * f1 +
                     std::exp(-alpha_ * (t0 + width)) * f2);

      table.action.push_back(a);
      table.lam0.push_back(l0);
      table.lam1.push_back(l1);
      table.lam2.push_back(l2);
      table.t.push_back(t0 + width);
      table.hazard.push_back(table.hazard.back() + rule.d_hazard_end);
      table.cost.push_back(table.cost.back() + plain);
      table.dcost.push_back(table.dcost.back() + disc);
      t0 += width;
    }
  }

  const ModelBundle& bundle_;
  const FeedbackSelector& selector_;
  double alpha_;
  std::unordered_map<std::uint64_t, SegmentTable> cache_;
};

struct SegmentOutcome {
  double time = 0.0;      // sojourn within the segment
  bool jumped = false;    // spontaneous jump fired
  bool boundary = false;  // ended exactly on the boundary
  double plain_cost = 0.0;
  double local_discounted_cost = 0.0;  // discounted with local time zero
};

// Partial costs of a truncated pair [t0, t0 + len] of the segment from origin.
void partial_pair(const ModelBundle& bundle, const Vec& origin, Action a, double t0, double len,
                  double alpha, double& plain, double& disc) {
  const ModelSpec& model = bundle.model;
  auto f_at = [&](double dt) { return model.running_cost(model.flow(origin, t0 + dt), a); };
  plain = simpson3(f_at, len);
  disc = simpson3([&](double dt) { return std::exp(-alpha * (t0 + dt)) * f_at(dt); }, len);
}

// Hazard of the truncated pair prefix, with the intensity interpolated
// linearly between the stored nodes (matching the operator-side hazard
// interpolation).
double partial_hazard(const SegmentTable& table, QuadRule qr, std::size_t pair, double dt) {
  double hh = 0.5 * (table.t[pair + 1] - table.t[pair]);
  double l0 = table.lam0[pair], l1 = table.lam1[pair], l2 = table.lam2[pair];
  auto rule = detail::pair_rule(qr, hh, l0, l1, l2);
  auto piece = [&](double la, double lb, double u) {
    double lam_u = la + (lb - la) * u / hh;
    return 0.5 * u * (la + lam_u);
  };
  if (dt <= hh) return piece(l0, l1, dt);
  return rule.d_hazard_mid + piece(l1, l2, dt - hh);
}

// Inverse of partial_hazard in dt over [0, 2 hh].
double invert_pair_hazard(const SegmentTable& table, QuadRule qr, std::size_t pair,
                          double target) {
  double hh = 0.5 * (table.t[pair + 1] - table.t[pair]);
  double lo = 0.0, hi = 2.0 * hh;
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * std::max(1.0, hh); ++iter) {
    double mid = 0.5 * (lo + hi);
    (partial_hazard(table, qr, pair, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Walks one inter-jump segment from origin using the cached table. cap is the
// remaining time budget; target the exponential clock level.
SegmentOutcome walk_segment(SegmentCache& cache, const Vec& origin, double cap, double target) {
  const SegmentTable& table = cache.table_for(origin);
  const ModelBundle& bundle = cache.bundle();
  double alpha = cache.alpha();
  double seg_end = std::min(cap, table.t_end);

  SegmentOutcome out;

  // Locate the first pair node past the clock target.
  std::size_t n_nodes = table.t.size();
  auto hz_begin = table.hazard.begin();
  std::size_t hi_node =
      static_cast<std::size_t>(std::upper_bound(hz_begin, table.hazard.end(), target) - hz_begin);

  if (hi_node < n_nodes) {
    std::size_t pair = hi_node - 1;
    double dt = invert_pair_hazard(table, bundle.quad.rule, pair, target - table.hazard[pair]);
    double jump_time = table.t[pair] + dt;
    if (jump_time <= seg_end + 1e-15) {
      double plain, disc;
      partial_pair(bundle, origin, table.action[pair], table.t[pair], dt, alpha, plain, disc);
      out.time = jump_time;
      out.jumped = true;
      out.plain_cost = table.cost[pair] + plain;
      out.local_discounted_cost = table.dcost[pair] + disc;
      return out;
    }
  }

  // No jump before the segment end: censored at the cap or boundary hit.
  out.time = seg_end;
  out.boundary = table.ends_on_boundary && seg_end >= table.t_end - 1e-15;
  auto t_begin = table.t.begin();
  std::size_t node =
      static_cast<std::size_t>(std::upper_bound(t_begin, table.t.end(), seg_end) - t_begin) - 1;
  node = std::min(node, n_nodes - 1);
  double plain = table.cost[node], disc = table.dcost[node];
  if (node + 1 < n_nodes && seg_end > table.t[node] + 1e-15) {
    double p, d;
    partial_pair(bundle, origin, table.action[node], table.t[node], seg_end - table.t[node],
                 alpha, p, d);
    plain += p;
    disc += d;
  }
  out.plain_cost = plain;
  out.local_discounted_cost = disc;
  return out;
}

// Plain running cost of the segment prefix [0, upto]; used for the split-half
// statistic.
double segment_cost_until(SegmentCache& cache, const Vec& origin, double upto) {
  const SegmentTable& table = cache.table_for(origin);
  if (upto <= 0.0) return 0.0;
  upto = std::min(upto, table.t_end);
  auto t_begin = table.t.begin();
  std::size_t node =
      static_cast<std::size_t>(std::upper_bound(t_begin, table.t.end(), upto) - t_begin) - 1;
  node = std::min(node, table.t.size() - 1);
  double plain = table.cost[node];
  if (node + 1 < table.t.size() && upto > table.t[node] + 1e-15) {
    double p, d;
    partial_pair(cache.bundle(), origin, table.action[node], table.t[node],
                 upto - table.t[node], 0.0, p, d);
    plain += p;
  }
  return plain;
}

TrajectoryRecord simulate_with_cache(SegmentCache& cache, const Vec& x, double horizon,
                                     Rng& rng, const SimulationOptions& options) {
  const ModelBundle& bundle = cache.bundle();
  const ModelSpec& model = bundle.model;
  double alpha = cache.alpha();

  TrajectoryRecord record;
  record.horizon = horizon;
  double half_mark = 0.5 * horizon;

  Vec y = x;
  double now = 0.0;
  while (now < horizon - 1e-15) {
    double target = rng.exponential();
    SegmentOutcome out = walk_segment(cache, y, horizon - now, target);

    record.running_cost_integral += out.plain_cost;
    record.discounted_running += std::exp(-alpha * now) * out.local_discounted_cost;
    if (now < half_mark)
      record.cost_at_half += out.time <= half_mark - now
                                 ? out.plain_cost
                                 : segment_cost_until(cache, y, half_mark - now);

    now += out.time;
    if (!out.jumped && !out.boundary) break;  // censored at the horizon

    Vec pre = model.flow(y, out.time);
    Action a;
    if (out.boundary) {
      a = cache.selector().boundary_action(model, *bundle.grid, pre);
      double r = model.boundary_cost(pre, a);
      record.boundary_cost_sum += r;
      record.discounted_boundary += std::exp(-alpha * now) * r;
      if (now <= half_mark) record.cost_at_half += r;
      record.boundary_hit_count += 1;
    } else {
      a = cache.selector().interior_action(model, *bundle.grid, pre);
    }

    Distribution q = model.kernel(pre, a);
    double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = q.atoms().size() - 1;
    for (std::size_t i = 0; i < q.atoms().size(); ++i) {
      acc += q.atoms()[i].weight;
      if (u < acc) {
        pick = i;
        break;
      }
    }
    y = q.atoms()[pick].point;

    record.jump_times.push_back(now);
    record.post_jump_states.push_back(y);
    record.boundary_hit_flags.push_back(out.boundary);
    record.cumulative_costs.push_back(record.running_cost_integral + record.boundary_cost_sum);
    record.jump_count += 1;
    if (record.jump_count > options.explosion_guard)
      throw DiagnosticError("simulate_trajectory: jump count exceeded the explosion guard; "
                            "jump times may accumulate");
  }
  return record;
}

}  // namespace

SojournSample sample_sojourn(const ModelBundle& bundle, const Vec& x,
                             const FeedbackSelector& selector, Rng& rng, double max_time) {
  if (!bundle.model.interior_test(x))
    throw ContractViolation("sample_sojourn: start point must be interior");
  bool capped_by_caller = max_time >= 0.0;
  double cap = capped_by_caller ? max_time : bundle.quad.t_max;

  SegmentCache cache(bundle, selector, 0.0);
  SegmentOutcome out = walk_segment(cache, x, cap, rng.exponential());

  SojournSample sample;
  sample.time = out.time;
  sample.boundary = out.boundary;
  sample.censored = !out.jumped && !out.boundary;
  if (sample.censored && !capped_by_caller && bundle.integrability.lambda_lower &&
      bundle.integrability.lambda_lower(x) > 0.0)
    throw DiagnosticError(
        "sample_sojourn: censored at the simulation cap although the intensity floor is "
        "positive; the declared integrability witness is inconsistent");
  return sample;
}

TrajectoryRecord simulate_trajectory(const ModelBundle& bundle, const Vec& x,
                                     const FeedbackSelector& selector, double horizon,
                                     double alpha, Rng& rng, const SimulationOptions& options) {
  if (!(horizon > 0.0)) throw ContractViolation("simulate_trajectory: horizon must be positive");
  SegmentCache cache(bundle, selector, alpha);
  return simulate_with_cache(cache, x, horizon, rng, options);
}

double discount_truncation_horizon(const ModelBundle& bundle, double alpha,
                                   double bias_target) {
  if (!(alpha > 0.0)) throw ContractViolation("discounted estimates require alpha > 0");
  double f_cap = 0.0;
  for (std::size_t i = 0; i < bundle.grid->size(); ++i)
    f_cap = std::max(f_cap, bundle.integrability.f_upper(bundle.grid->point(i)));
  double r_cap = 0.0;
  double t_min = kInfiniteTime;
  if (!bundle.grid->boundary_points().empty()) {
    for (const Vec& z : bundle.grid->boundary_points())
      for (Action a : bundle.model.action_set(z, true))
        r_cap = std::max(r_cap, bundle.model.boundary_cost(z, a));
    Vec x0 = bundle.grid->point(0);
    Distribution reachable = bundle.model.kernel(x0, bundle.model.action_set(x0, false)[0]);
    for (const auto& atom : reachable.atoms())
      t_min = std::min(t_min, hit_time(bundle.model, atom.point));
  }
  double rate_cap = f_cap + (std::isfinite(t_min) && t_min > 0.0 ? r_cap / t_min : 0.0);
  rate_cap = std::max(rate_cap, 1e-12);
  double t_sim = std::log(rate_cap / (alpha * bias_target)) / alpha;
  return std::max(5.0, t_sim);
}

namespace {

struct Welford {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double v) {
    ++n;
    double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double std_error() const {
    return n > 1 ? std::sqrt(m2 / (static_cast<double>(n) * (static_cast<double>(n) - 1)))
                 : 0.0;
  }
};

}  // namespace

CostEstimate estimate_discounted_cost(const ModelBundle& bundle, const Vec& x,
                                      const FeedbackSelector& selector, double alpha,
                                      std::size_t n_traj, std::uint64_t seed,
                                      const SimulationOptions& options) {
  double t_sim = discount_truncation_horizon(bundle, alpha, options.bias_target);
  SegmentCache cache(bundle, selector, alpha);
  Welford acc;
  for (std::size_t i = 0; i < n_traj; ++i) {
    Rng rng(derive_stream_seed(seed, i));
    TrajectoryRecord record = simulate_with_cache(cache, x, t_sim, rng, options);
    acc.add(record.discounted_running + record.discounted_boundary);
  }
  CostEstimate out;
  out.mean = acc.mean;
  out.std_error = acc.std_error();
  out.replications = n_traj;
  out.horizon = t_sim;
  out.truncation_bias = options.bias_target;
  out.seed = seed;
  return out;
}

CostEstimate estimate_average_cost(const ModelBundle& bundle, const Vec& x,
                                   const FeedbackSelector& selector, double horizon,
                                   std::size_t n_traj, std::uint64_t seed,
                                   const SimulationOptions& options) {
  // The horizon must dwarf the sojourn scale of the model.
  std::vector<double> scales;
  for (std::size_t i = 0; i < bundle.grid->size(); ++i) {
    Vec p = bundle.grid->point(i);
    double lam = bundle.integrability.lambda_lower ? bundle.integrability.lambda_lower(p) : 0.0;
    double scale = std::min(hit_time(bundle.model, p), lam > 0.0 ? 1.0 / lam : kInfiniteTime);
    scales.push_back(std::min(scale, bundle.quad.t_max));
  }
  std::nth_element(scales.begin(), scales.begin() + scales.size() / 2, scales.end());
  double sojourn_scale = scales[scales.size() / 2];
  if (horizon < 100.0 * sojourn_scale)
    throw ContractViolation("estimate_average_cost: horizon must be at least 100 sojourn scales");

  SegmentCache cache(bundle, selector, 0.0);
  Welford acc, first_half, second_half;
  for (std::size_t i = 0; i < n_traj; ++i) {
    Rng rng(derive_stream_seed(seed, i));
    TrajectoryRecord record = simulate_with_cache(cache, x, horizon, rng, options);
    double total = record.running_cost_integral + record.boundary_cost_sum;
    acc.add(total / horizon);
    first_half.add(record.cost_at_half / (0.5 * horizon));
    second_half.add((total - record.cost_at_half) / (0.5 * horizon));
  }
  CostEstimate out;
  out.mean = acc.mean;
  out.std_error = acc.std_error();
  out.replications = n_traj;
  out.horizon = horizon;
  out.split_half_drift = second_half.mean - first_half.mean;
  out.seed = seed;
  return out;
}

}  // namespace pdmp
