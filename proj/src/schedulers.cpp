#include "tampsim/schedulers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tampsim/errors.hpp"

namespace tampsim {

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::kTamp: return "tamp";
    case SchedulerKind::kAgePrio: return "age_prio";
    case SchedulerKind::kRatePrio: return "rate_prio";
    case SchedulerKind::kGea: return "gea";
    case SchedulerKind::kMaxWeight: return "max_weight";
  }
  return "?";
}

SchedulerKind scheduler_kind_from_string(std::string_view name) {
  for (auto k : {SchedulerKind::kTamp, SchedulerKind::kAgePrio, SchedulerKind::kRatePrio,
                 SchedulerKind::kGea, SchedulerKind::kMaxWeight}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("scheduler", "unknown scheduler '" + std::string(name) +
                                     "' (tamp | age_prio | rate_prio | gea | max_weight)");
}

bool is_baseline(SchedulerKind kind) { return kind != SchedulerKind::kTamp; }

void SplitSettings::validate() const {
  if (!(sensor_b_min_mb >= 0.0)) throw ConfigError("sensor_b_min_mb", "must be >= 0");
  if (!(sensor_b_max_mb > sensor_b_min_mb)) throw ConfigError("sensor_b_max_mb", "must exceed sensor_b_min_mb");
  if (!(xi_tol_mb > 0.0)) throw ConfigError("xi_tol_mb", "must be > 0");
  if (max_iterations < 1) throw ConfigError("split_max_iterations", "must be >= 1");
}

SplitResult split_volume(double b_region_mb, std::span<const SensorSpec> sensors,
                         const SplitSettings& settings) {
  if (!(b_region_mb > 0.0)) throw DomainError("regional volume must be positive");
  if (sensors.empty()) throw DomainError("region has no sensors");
  double weight_sum = 0.0;
  for (const auto& s : sensors) {
    if (!(s.saliency_weight >= 0.0)) throw DomainError("saliency weights must be >= 0");
    weight_sum += s.saliency_weight;
  }
  if (!(weight_sum > 0.0)) throw DomainError("saliency weights sum to zero");

  const double lo = settings.sensor_b_min_mb;
  const double hi = settings.sensor_b_max_mb;
  double min_weight = 1.0;
  for (const auto& s : sensors) {
    if (s.saliency_weight > 0.0) min_weight = std::min(min_weight, s.saliency_weight / weight_sum);
  }
  const double scale = hi / min_weight;

  SplitResult out;
  out.b_sensor.resize(sensors.size());
  auto fill = [&](double theta) {
    double total = 0.0;
    for (std::size_t i = 0; i < sensors.size(); ++i) {
      double w = sensors[i].saliency_weight / weight_sum;
      out.b_sensor[i] = std::clamp(w * scale * (1.0 - theta), lo, hi);
      total += out.b_sensor[i];
    }
    return total;
  };

  const double most = fill(0.0);
  const double least = fill(1.0);
  double target = b_region_mb;
  if (target > most || target < least) {
    out.clipped = true;
    target = std::clamp(target, least, most);
  }
  out.target_mb = target;

  // Retained volume falls as theta rises.
  double t_lo = 0.0, t_hi = 1.0;
  double total = 0.0;
  for (out.iterations = 0; out.iterations < settings.max_iterations; ++out.iterations) {
    double theta = 0.5 * (t_lo + t_hi);
    total = fill(theta);
    if (std::abs(total - target) <= settings.xi_tol_mb) break;
    if (total > target) {
      t_lo = theta;
    } else {
      t_hi = theta;
    }
  }

  // Spread the remaining residual over sensors not pinned at a bound.
  double residual = target - total;
  double free_mass = 0.0;
  for (double b : out.b_sensor) {
    if (b > lo && b < hi) free_mass += b;
  }
  if (free_mass > 0.0) {
    for (double& b : out.b_sensor) {
      if (b > lo && b < hi) b = std::clamp(b + residual * b / free_mass, lo, hi);
    }
  }
  return out;
}

std::vector<double> allocate_sensor_bandwidth(std::span<const double> b_sensor_mb,
                                              double region_share) {
  std::vector<double> shares(b_sensor_mb.size(), 0.0);
  if (shares.empty()) return shares;
  double total = 0.0;
  for (double b : b_sensor_mb) {
    if (b < 0.0) throw DomainError("sensor volume must be >= 0");
    total += b;
  }
  for (std::size_t i = 0; i < shares.size(); ++i) {
    shares[i] = total > 0.0 ? region_share * b_sensor_mb[i] / total
                            : region_share / static_cast<double>(shares.size());
  }
  return shares;
}

PriorityEntry tamp_priority(const RegionState& region, const PenaltyModel& model,
                            double rate_mbps, const EnvParams& env, const VolumeBounds& bounds,
                            ExpectationMethod method) {
  if (!region.idle()) throw StateError("priority requested for an active region");
  const double h = static_cast<double>(region.aoi());
  const int n = region.sensor_count();
  VolumeChoice choice = optimal_volume(model, h, rate_mbps, bounds, env, n);

  TaskDelayDistribution delay(env.extraction, env.detection, n,
                              region_transmission_ms(choice.b_star, rate_mbps, env.compression_factor),
                              env.tau_ms);
  double e_F = expected_F_of_delay(model, choice.b_star, delay, method, 20'000,
                                   env.seed ^ static_cast<std::uint64_t>(region.id()))
                   .value;
  double u = model.utility_index(h, choice.b_star, region.d_bar_est(), e_F);

  PriorityEntry e;
  e.region = region.id();
  e.b_star = choice.b_star;
  e.utility = u;
  e.pi = u - region.v() * region.queue() * choice.b_star;
  return e;
}

double gea_priority(const RegionState& region, double rate_mbps, double b_fixed_mb,
                    const EnvParams& env) {
  // All terms in slots; the slot length contributes one slot.
  return static_cast<double>(region.aoi()) + 1.0 -
         expected_task_delay_slots(env, region.sensor_count(), b_fixed_mb, rate_mbps);
}

double max_weight_priority(const RegionState& region, const PenaltyModel& model, double b_fixed_mb) {
  const double d_bar = std::max(region.d_bar_est(), 1e-9);
  const double h = static_cast<double>(region.aoi());
  double weight = model.cumulative_penalty(h + d_bar, b_fixed_mb) - model.cumulative_penalty(d_bar, b_fixed_mb);
  return weight / d_bar - region.v() * region.queue() * b_fixed_mb;
}

Decision assemble_decision(const SchedulingContext& ctx, std::vector<PriorityEntry> candidates) {
  const std::size_t a = ctx.regions.size();
  Decision d;
  d.u.assign(a, 0);
  d.b_region.assign(a, 0.0);
  d.b_sensor.assign(a, {});
  d.B_share.assign(a, 0.0);
  d.split_clipped.assign(a, false);

  int active = 0;
  for (const auto& r : ctx.regions) active += r.idle() ? 0 : 1;
  const int m_rem = std::max(0, ctx.capacity_m - active);

  std::sort(candidates.begin(), candidates.end(), [](const PriorityEntry& x, const PriorityEntry& y) {
    if (x.pi != y.pi) return x.pi > y.pi;
    return x.region < y.region;
  });
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(m_rem), candidates.size());
  for (std::size_t i = 0; i < take; ++i) {
    const auto& e = candidates[i];
    const auto idx = static_cast<std::size_t>(e.region);
    d.selected.push_back(e.region);
    d.u[idx] = 1;
    SplitResult split = split_volume(e.b_star, ctx.regions[idx].sensors(), *ctx.split);
    d.b_sensor[idx] = std::move(split.b_sensor);
    d.split_clipped[idx] = split.clipped;
    d.b_region[idx] = std::accumulate(d.b_sensor[idx].begin(), d.b_sensor[idx].end(), 0.0);
  }
  const double share = ctx.bandwidth_total / ctx.capacity_m;
  for (std::size_t i = 0; i < a; ++i) {
    if (!ctx.regions[i].idle() || d.u[i]) d.B_share[i] = share;
  }
  return d;
}

Decision TampScheduler::decide(const SchedulingContext& ctx) {
  last_.clear();
  std::vector<PriorityEntry> candidates;
  for (const auto& region : ctx.regions) {
    if (!region.idle()) continue;
    const auto idx = static_cast<std::size_t>(region.id());
    PriorityEntry e = tamp_priority(region, ctx.models[idx], ctx.offered_rate[idx], *ctx.env,
                                    *ctx.bounds, ctx.e_f_method);
    last_.push_back(e);
    if (e.pi >= 0.0) candidates.push_back(e);
  }
  return assemble_decision(ctx, std::move(candidates));
}

BaselineScheduler::BaselineScheduler(SchedulerKind kind, double b_fixed_mb)
    : kind_(kind), b_fixed_(b_fixed_mb) {
  if (!is_baseline(kind)) throw ConfigError("scheduler", "not a baseline scheduler");
  if (!(b_fixed_mb > 0.0)) throw ConfigError("b_fixed_mb", "must be > 0");
}

Decision BaselineScheduler::decide(const SchedulingContext& ctx) {
  std::vector<PriorityEntry> candidates;
  for (const auto& region : ctx.regions) {
    if (!region.idle()) continue;
    const auto idx = static_cast<std::size_t>(region.id());
    PriorityEntry e;
    e.region = region.id();
    e.b_star = b_fixed_;
    switch (kind_) {
      case SchedulerKind::kAgePrio:
        e.pi = static_cast<double>(region.aoi());
        break;
      case SchedulerKind::kRatePrio:
        e.pi = ctx.offered_rate[idx];
        break;
      case SchedulerKind::kGea:
        e.pi = gea_priority(region, ctx.offered_rate[idx], b_fixed_, *ctx.env);
        break;
      case SchedulerKind::kMaxWeight:
        e.pi = max_weight_priority(region, ctx.models[idx], b_fixed_);
        break;
      case SchedulerKind::kTamp:
        break;
    }
    candidates.push_back(e);
  }
  return assemble_decision(ctx, std::move(candidates));
}

std::unique_ptr<Scheduler> make_scheduler(SchedulerKind kind, double b_fixed_mb) {
  if (kind == SchedulerKind::kTamp) return std::make_unique<TampScheduler>();
  return std::make_unique<BaselineScheduler>(kind, b_fixed_mb);
}

}  // namespace tampsim
