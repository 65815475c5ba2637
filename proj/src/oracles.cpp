#include "tampsim/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tampsim/region.hpp"
#include "tampsim/rng.hpp"
#include "tampsim/schedulers.hpp"
#include "tampsim/sim_engine.hpp"
#include "tampsim/stochastic_env.hpp"
#include "tampsim/volume_optimizer.hpp"

namespace tampsim {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

double uniform(SplitMix64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

ScenarioKind random_kind(SplitMix64& rng) {
  return uniform01(rng) < 0.5 ? ScenarioKind::kIntersection : ScenarioKind::kCorridor;
}

int sensors_for(const ScenarioConfig& cfg, ScenarioKind kind) {
  for (const auto& r : cfg.regions) {
    if (r.kind == kind) return static_cast<int>(r.sensors.size());
  }
  return kind == ScenarioKind::kIntersection ? 4 : 2;
}

TaskDelayDistribution delay_at(const ScenarioConfig& cfg, int n, double b_mb, double rate) {
  const EnvParams& env = cfg.env;
  return TaskDelayDistribution(env.extraction, env.detection, n,
                               region_transmission_ms(b_mb, rate, env.compression_factor),
                               env.tau_ms);
}

std::vector<double> objective_on_grid(const PenaltyModel& m, const RefreshCase& c,
                                      const std::vector<double>& grid) {
  std::vector<double> out;
  out.reserve(grid.size());
  for (double h : grid) out.push_back(p2_objective(m, h, c.d_bar, c.b_mb, c.e_F));
  return out;
}

}  // namespace

std::vector<RefreshCase> random_refresh_cases(const ScenarioConfig& cfg, int count,
                                              std::uint64_t seed) {
  auto rng = stream_for(seed, 0, 0, StreamPurpose::kSynthetic);
  std::vector<RefreshCase> out;
  for (int i = 0; i < count; ++i) {
    RefreshCase c;
    c.kind = random_kind(rng);
    c.b_mb = uniform(rng, cfg.bounds.b_min_mb, cfg.bounds.b_max_mb);
    double rate = uniform(rng, cfg.env.rate.lo_mbps, cfg.env.rate.hi_mbps);
    int n = sensors_for(cfg, c.kind);
    auto delay = delay_at(cfg, n, c.b_mb, rate);
    double mean_slots = delay.mean_ms() / cfg.env.tau_ms;
    c.d_bar = uniform(rng, 0.5, 3.0 * mean_slots);
    c.e_F = expected_F_of_delay(cfg.model_for(c.kind), c.b_mb, delay).value;
    out.push_back(c);
  }
  return out;
}

std::vector<double> refresh_age_grid(int points, double step) {
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = step * (i + 1);
  return grid;
}

int count_local_minima(const std::vector<double>& values) {
  std::vector<double> v;
  for (double x : values) {
    if (v.empty() || x != v.back()) v.push_back(x);
  }
  int minima = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    bool left = i == 0 || v[i - 1] > v[i];
    bool right = i + 1 == v.size() || v[i + 1] > v[i];
    if (left && right) ++minima;
  }
  return minima;
}

bool sublevel_set_is_interval(const std::vector<double>& values, double level) {
  int runs = 0;
  bool inside = false;
  for (double x : values) {
    bool in = x <= level;
    if (in && !inside) ++runs;
    inside = in;
  }
  return runs <= 1;
}

OracleCheck check_renewal_match(const ScenarioConfig& cfg) {
  OracleCheck out{"renewal_match", true, ""};
  double worst = 0.0;
  for (ScenarioKind kind : {ScenarioKind::kCorridor, ScenarioKind::kIntersection}) {
    const PenaltyModel& m = cfg.model_for(kind);
    RenewalResult r = renewal_oracle(m, 5, 2.0, 2, 10'000);
    double rel = std::abs(r.simulated - r.renewal) / r.renewal;
    worst = std::max(worst, rel);
    if (!(rel < 0.005)) out.passed = false;

    RenewalResult flat = renewal_oracle(m, 1, 2.0, 0, 1'000);
    double f1 = m.penalty(1.0, 2.0);
    if (std::abs(flat.renewal - f1) > 1e-12 || std::abs(flat.simulated - f1) > 1e-12) {
      out.passed = false;
    }
  }
  out.detail = fmt("max relative gap %.3g (limit 0.005)", worst);
  return out;
}

OracleCheck check_renewal_lower_bound(const ScenarioConfig& cfg, int count, std::uint64_t seed) {
  OracleCheck out{"renewal_lower_bound", true, ""};
  auto rng = stream_for(seed, 1, 0, StreamPurpose::kSynthetic);
  int violations = 0;
  double min_margin = 1e300;
  for (int i = 0; i < count; ++i) {
    const PenaltyModel& m = cfg.model_for(random_kind(rng));
    long period = 1 + static_cast<long>(uniform01(rng) * 40.0);
    long delay = static_cast<long>(uniform01(rng) * static_cast<double>(period + 1));
    delay = std::min(delay, period);
    double b = uniform(rng, cfg.bounds.b_min_mb, cfg.bounds.b_max_mb);
    RenewalResult r = renewal_oracle(m, period, b, delay, 10'000);
    double margin = r.renewal - r.lower_bound;
    min_margin = std::min(min_margin, margin);
    if (margin < 0.0) ++violations;
    if (std::abs(r.lower_bound - r.lower_bound_interval) > 1e-12) ++violations;
  }
  out.passed = violations == 0;
  out.detail = fmt("%g violations over %g policies, min margin %.3g", violations, count, min_margin);
  return out;
}

OracleCheck check_quasi_convexity(const ScenarioConfig& cfg, int count, int levels,
                                  std::uint64_t seed) {
  OracleCheck out{"quasi_convexity", true, ""};
  auto cases = random_refresh_cases(cfg, count, seed);
  auto grid = refresh_age_grid();
  auto rng = stream_for(seed, 2, 0, StreamPurpose::kSynthetic);
  int bad = 0;
  int interior = 0;
  for (const auto& c : cases) {
    auto v = objective_on_grid(cfg.model_for(c.kind), c, grid);
    if (count_local_minima(v) != 1) ++bad;
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (lo != v.begin()) ++interior;
    for (int j = 0; j < levels; ++j) {
      double level = uniform(rng, *lo, *hi);
      if (!sublevel_set_is_interval(v, level)) ++bad;
    }
  }
  out.passed = bad == 0;
  out.detail = fmt("%g failures over %g cases (%g with an interior minimum)", bad, count, interior);
  return out;
}

OracleCheck check_kkt_equivalence(const ScenarioConfig& cfg, int count, std::uint64_t seed) {
  OracleCheck out{"kkt_equivalence", true, ""};
  auto cases = random_refresh_cases(cfg, count, seed);
  auto grid = refresh_age_grid();
  int bad = 0;
  long worst = 0;
  for (const auto& c : cases) {
    const PenaltyModel& m = cfg.model_for(c.kind);
    auto v = objective_on_grid(m, c, grid);
    long arg = std::min_element(v.begin(), v.end()) - v.begin();
    long change = static_cast<long>(grid.size()) - 1;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (m.utility_index(grid[j], c.b_mb, c.d_bar, c.e_F) >= 0.0) {
        change = static_cast<long>(j);
        break;
      }
    }
    long gap = std::abs(arg - change);
    worst = std::max(worst, gap);
    if (gap > 1) ++bad;
  }
  out.passed = bad == 0;
  out.detail = fmt("%g failures over %g cases, worst gap %g grid steps", bad, count,
                   static_cast<double>(worst));
  return out;
}

OracleCheck check_sign_equivalence(const ScenarioConfig& cfg, int states, std::uint64_t seed) {
  OracleCheck out{"sign_equivalence", true, ""};
  auto rng = stream_for(seed, 3, 0, StreamPurpose::kSynthetic);
  int mismatches = 0;
  int chosen = 0;
  for (int i = 0; i < states; ++i) {
    ScenarioKind kind = random_kind(rng);
    RegionSpec spec;
    spec.kind = kind;
    int n = sensors_for(cfg, kind);
    for (int s = 0; s < n; ++s) spec.sensors.push_back({s, 1.0});
    spec.gamma_mb = 2.0;
    spec.v = std::pow(10.0, uniform(rng, -5.0, -1.0));
    RegionState region(0, spec, cfg.bounds.b_max_mb, uniform(rng, 1.0, 10.0));
    region.set_aoi(1 + static_cast<long>(uniform01(rng) * 200.0));
    region.set_queue(uniform01(rng) < 0.1 ? 0.0 : uniform(rng, 0.0, 20.0));
    const double rate = uniform(rng, cfg.env.rate.lo_mbps, cfg.env.rate.hi_mbps);
    const PenaltyModel& model = cfg.model_for(kind);

    PriorityEntry e = tamp_priority(region, model, rate, cfg.env, cfg.bounds, cfg.e_f_method);
    const double bracket = e.utility - region.v() * region.queue() * e.b_star;
    const int u_star = bracket * 1.0 >= bracket * 0.0 ? 1 : 0;

    std::vector<RegionState> regions{region};
    std::vector<double> rates{rate};
    std::vector<PenaltyModel> models{model};
    SchedulingContext ctx;
    ctx.regions = regions;
    ctx.offered_rate = rates;
    ctx.models = models;
    ctx.env = &cfg.env;
    ctx.bounds = &cfg.bounds;
    ctx.split = &cfg.split;
    ctx.capacity_m = 1;
    ctx.bandwidth_total = cfg.bandwidth_total;
    ctx.e_f_method = cfg.e_f_method;
    TampScheduler scheduler;
    Decision d = scheduler.decide(ctx);

    if (d.u[0] != u_star || u_star != (e.pi >= 0.0 ? 1 : 0)) ++mismatches;
    chosen += u_star;
  }
  out.passed = mismatches == 0;
  out.detail = fmt("%g mismatches over %g states (%g scheduled)", mismatches, states, chosen);
  return out;
}

OracleCheck check_cumulative_quadrature(const ScenarioConfig& cfg, int count, std::uint64_t seed) {
  using boost::math::quadrature::gauss_kronrod;
  OracleCheck out{"cumulative_quadrature", true, ""};
  auto rng = stream_for(seed, 4, 0, StreamPurpose::kSynthetic);
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const PenaltyModel& m = cfg.model_for(random_kind(rng));
    const double h = uniform(rng, 0.0, 300.0);
    const double b = uniform(rng, cfg.bounds.b_min_mb, cfg.bounds.b_max_mb);
    auto f = [&](double x) { return m.penalty(x, b); };
    // Integrate the compensation window and the tail separately.
    const double kink = m.compensation().window_s * 1000.0 / m.tau_ms();
    double quad = 0.0;
    double split = std::min(h, kink);
    if (split > 0.0) quad += gauss_kronrod<double, 31>::integrate(f, 0.0, split, 20, 1e-14);
    if (h > split) quad += gauss_kronrod<double, 31>::integrate(f, split, h, 20, 1e-14);
    worst = std::max(worst, std::abs(quad - m.cumulative_penalty(h, b)));
  }
  out.passed = worst <= 1e-6;
  out.detail = fmt("max abs error %.3g (limit 1e-6)", worst);
  return out;
}

OracleCheck check_cumulative_derivative(const ScenarioConfig& cfg, int count, std::uint64_t seed) {
  OracleCheck out{"cumulative_derivative", true, ""};
  auto rng = stream_for(seed, 5, 0, StreamPurpose::kSynthetic);
  const double step = 1e-4;
  double worst = 0.0;
  int done = 0;
  while (done < count) {
    const PenaltyModel& m = cfg.model_for(random_kind(rng));
    const double h = uniform(rng, 0.5, 300.0);
    const double b = uniform(rng, cfg.bounds.b_min_mb, cfg.bounds.b_max_mb);
    const double kink = m.compensation().window_s * 1000.0 / m.tau_ms();
    if (std::abs(h - kink) < 10.0 * step) continue;
    double fd = (m.cumulative_penalty(h + step, b) - m.cumulative_penalty(h - step, b)) / (2.0 * step);
    worst = std::max(worst, std::abs(fd - m.penalty(h, b)));
    ++done;
  }
  out.passed = worst <= 1e-5;
  out.detail = fmt("max abs error %.3g (limit 1e-5)", worst);
  return out;
}

OracleCheck check_expectation_methods(const ScenarioConfig& cfg, int count, std::uint64_t seed) {
  OracleCheck out{"expectation_methods", true, ""};
  auto rng = stream_for(seed, 6, 0, StreamPurpose::kSynthetic);
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    ScenarioKind kind = random_kind(rng);
    const PenaltyModel& m = cfg.model_for(kind);
    const double b = uniform(rng, cfg.bounds.b_min_mb, cfg.bounds.b_max_mb);
    const double rate = uniform(rng, cfg.env.rate.lo_mbps, cfg.env.rate.hi_mbps);
    auto delay = delay_at(cfg, sensors_for(cfg, kind), b, rate);
    double pmf = expected_F_of_delay(m, b, delay, ExpectationMethod::kDelayPmf).value;
    double mc = expected_F_of_delay(m, b, delay, ExpectationMethod::kMonteCarlo, 100'000,
                                    seed + static_cast<std::uint64_t>(i))
                    .value;
    worst = std::max(worst, std::abs(pmf - mc) / pmf);
  }
  out.passed = worst < 0.01;
  out.detail = fmt("max relative gap %.3g (limit 0.01)", worst);
  return out;
}

std::vector<OracleCheck> run_oracle_suite(const ScenarioConfig& cfg, std::uint64_t seed) {
  return {
      check_renewal_match(cfg),
      check_renewal_lower_bound(cfg, 50, seed),
      check_quasi_convexity(cfg, 20, 10, seed),
      check_kkt_equivalence(cfg, 20, seed),
      check_sign_equivalence(cfg, 10'000, seed),
      check_cumulative_quadrature(cfg, 50, seed),
      check_cumulative_derivative(cfg, 50, seed),
      check_expectation_methods(cfg, 10, seed),
  };
}

}  // namespace tampsim
