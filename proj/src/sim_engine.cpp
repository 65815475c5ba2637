#include "tampsim/sim_engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "tampsim/errors.hpp"
#include "tampsim/rng.hpp"

namespace tampsim {

namespace {

constexpr double kBandwidthSlack = 1e-9;

struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  int n = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double stderr_of_mean() const {
    if (n < 2) return 0.0;
    double m = mean();
    double var = std::max(0.0, (sum_sq - n * m * m) / (n - 1));
    return std::sqrt(var / n);
  }
};

}  // namespace

RunSummary run(const ScenarioConfig& cfg, const SlotObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n_regions = cfg.regions.size();
  const long horizon = cfg.horizon;
  const EnvParams& env = cfg.env;

  std::vector<RegionState> regions;
  std::vector<PenaltyModel> models;
  regions.reserve(n_regions);
  models.reserve(n_regions);
  const double b_mid = 0.5 * (cfg.bounds.b_min_mb + cfg.bounds.b_max_mb);
  for (std::size_t a = 0; a < n_regions; ++a) {
    const RegionSpec& spec = cfg.regions[a];
    double d0 = expected_task_delay_slots(env, static_cast<int>(spec.sensors.size()), b_mid,
                                          env.rate.mean());
    regions.emplace_back(static_cast<int>(a), spec, cfg.bounds.b_max_mb, d0);
    models.push_back(cfg.model_for(spec.kind));
  }

  auto scheduler = make_scheduler(cfg.scheduler, cfg.b_fixed_mb);

  RunSummary out;
  out.scheduler = cfg.scheduler;
  out.b_fixed_mb = is_baseline(cfg.scheduler) ? cfg.b_fixed_mb : 0.0;
  out.seed = env.seed;
  out.horizon = horizon;
  out.warmup = cfg.warmup;
  out.queue_trajectories.assign(n_regions, std::vector<double>(static_cast<std::size_t>(horizon)));
  out.volume_series.assign(n_regions, std::vector<double>(static_cast<std::size_t>(horizon)));
  out.ap_time_series.assign(static_cast<std::size_t>(horizon), 0.0);
  std::vector<double> volume_sum(n_regions, 0.0);

  std::vector<double> offered(n_regions);
  double ap_sum = 0.0;
  double penalty_sum = 0.0;
  double rho_sum = 0.0;
  long samples = 0;

  SchedulingContext ctx;
  ctx.regions = regions;
  ctx.offered_rate = offered;
  ctx.models = models;
  ctx.env = &env;
  ctx.bounds = &cfg.bounds;
  ctx.split = &cfg.split;
  ctx.capacity_m = cfg.capacity_m;
  ctx.bandwidth_total = cfg.bandwidth_total;
  ctx.e_f_method = cfg.e_f_method;

  for (long k = 0; k < horizon; ++k) {
    // Completions first, so regions finishing now are idle for this slot.
    if (k > 0) {
      for (auto& r : regions) {
        if (auto done = r.tick()) r.complete(*done);
      }
    }

    for (std::size_t a = 0; a < n_regions; ++a) {
      auto rng = stream_for(env.seed, a, static_cast<std::uint64_t>(k), StreamPurpose::kRate);
      offered[a] = env.rate.sample(rng);
    }

    ctx.slot = k;
    Decision decision = scheduler->decide(ctx);

    for (int a : decision.selected) {
      const auto idx = static_cast<std::size_t>(a);
      RegionState& r = regions[idx];
      if (!r.idle()) throw InvariantViolation(k, a, "scheduled region was not idle");
      const int n = r.sensor_count();
      auto ext_rng = stream_for(env.seed, idx, static_cast<std::uint64_t>(k), StreamPurpose::kExtraction);
      auto det_rng = stream_for(env.seed, idx, static_cast<std::uint64_t>(k), StreamPurpose::kDetection);
      double ext = sample_region_extraction_delay(ext_rng, env.extraction, n);
      double det = env.detection.sample(det_rng);

      TaskRecord task;
      task.start_slot = k;
      task.b_region = decision.b_region[idx];
      task.b_per_sensor = decision.b_sensor[idx];
      task.B_per_sensor = allocate_sensor_bandwidth(task.b_per_sensor, decision.B_share[idx]);
      task.rate_mbps = offered[idx];
      // The region's rate is spread over its sensors in proportion to their
      // bandwidth, which equalises the per-sensor transmission times.
      std::vector<double> sensor_rate(task.B_per_sensor.size());
      for (std::size_t i = 0; i < sensor_rate.size(); ++i) {
        sensor_rate[i] = offered[idx] * task.B_per_sensor[i] / decision.B_share[idx];
      }
      double tr = 0.0;
      if (task.b_region > 0.0) {
        std::vector<double> b_used, r_used;
        for (std::size_t i = 0; i < sensor_rate.size(); ++i) {
          if (task.b_per_sensor[i] > 0.0) {
            b_used.push_back(task.b_per_sensor[i]);
            r_used.push_back(sensor_rate[i]);
          }
        }
        tr = transmission_delay_ms(b_used, r_used, env.compression_factor);
      }
      task.delays = total_task_delay(ext, tr, det, env.tau_ms);
      task.finish_slot = k + task.delays.total_slots;
      r.begin_task(std::move(task));
      ++out.tasks_started;
      if (decision.split_clipped[idx]) ++out.split_clips;
    }

    int active = 0;
    double bandwidth = 0.0;
    for (std::size_t a = 0; a < n_regions; ++a) {
      if (!regions[a].idle()) {
        ++active;
        bandwidth += decision.B_share[a];
      }
    }
    if (active > cfg.capacity_m) throw InvariantViolation(k, -1, "active set exceeds capacity");
    if (bandwidth > cfg.bandwidth_total * (1.0 + kBandwidthSlack)) {
      throw InvariantViolation(k, -1, "bandwidth allocation exceeds the total");
    }

    double ap_slot = 0.0;
    int ap_count = 0;
    for (std::size_t a = 0; a < n_regions; ++a) {
      RegionState& r = regions[a];
      const double b = decision.b_region[a];
      double q = r.update_virtual_queue(b);
      long h = r.step_aoi(nullptr);
      if (!(q >= 0.0)) throw InvariantViolation(k, static_cast<int>(a), "negative virtual queue");
      if (h < 1) throw InvariantViolation(k, static_cast<int>(a), "AoI below one slot");
      volume_sum[a] += b;
      out.queue_trajectories[a][static_cast<std::size_t>(k)] = q;
      out.volume_series[a][static_cast<std::size_t>(k)] = b;

      SlotRecord rec{k, static_cast<int>(a), h, q, decision.u[a], b, std::nullopt, std::nullopt};
      if (cfg.cold_start == ColdStart::kBMax || r.completions() > 0) {
        const PenaltyModel& m = models[a];
        double ap = r.instantaneous_ap(m);
        double pen = r.instantaneous_penalty(m);
        rec.ap = ap;
        rec.penalty = pen;
        ap_slot += ap;
        ++ap_count;
        if (k >= cfg.warmup) {
          ap_sum += ap;
          penalty_sum += pen;
          rho_sum += m.rho_max();
          ++samples;
        }
      }
      if (observer) observer(rec);
    }
    out.ap_time_series[static_cast<std::size_t>(k)] = ap_count ? ap_slot / ap_count : 0.0;
  }

  if (samples > 0) {
    out.mean_ap = ap_sum / static_cast<double>(samples);
    out.mean_penalty = penalty_sum / static_cast<double>(samples);
    out.mean_rho_max = rho_sum / static_cast<double>(samples);
  }
  out.budget_violation = -std::numeric_limits<double>::infinity();
  out.max_identity_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n_regions; ++a) {
    const double k_total = static_cast<double>(horizon);
    const double avg = volume_sum[a] / k_total;
    const double gamma = regions[a].gamma();
    const double q_final = regions[a].queue();
    out.per_region_avg_volume.push_back(avg);
    out.gamma.push_back(gamma);
    out.final_queue.push_back(q_final);
    out.budget_violation = std::max(out.budget_violation, (avg - gamma) / gamma);
    const double gap = avg - (gamma + q_final / k_total);
    out.max_identity_gap = std::max(out.max_identity_gap, gap);
    if (gap > 1e-9) {
      throw InvariantViolation(horizon - 1, static_cast<int>(a),
                               "average volume exceeds budget plus final queue / K");
    }
  }
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

long first_sustained_compliance_slot(const RunSummary& s, double tolerance) {
  const long horizon = s.horizon;
  if (s.volume_series.empty() || horizon == 0) return horizon;
  const double budget = std::accumulate(s.gamma.begin(), s.gamma.end(), 0.0);
  std::vector<double> running(static_cast<std::size_t>(horizon));
  double total = 0.0;
  for (long k = 0; k < horizon; ++k) {
    for (const auto& series : s.volume_series) total += series[static_cast<std::size_t>(k)];
    running[static_cast<std::size_t>(k)] = total / (budget * static_cast<double>(k + 1));
  }
  long first = horizon;
  for (long k = horizon - 1; k >= 0; --k) {
    if (running[static_cast<std::size_t>(k)] > 1.0 + tolerance) break;
    first = k;
  }
  return first;
}

RenewalResult renewal_oracle(const PenaltyModel& model, long period, double b_mb, long delay,
                             long horizon) {
  if (period < 1) throw DomainError("period must be >= 1");
  if (delay < 0) throw DomainError("delay must be >= 0");
  if (delay > period) throw DomainError("delay must not exceed the period");
  if (horizon < 1) throw DomainError("horizon must be >= 1");

  RegionSpec spec;
  spec.kind = model.kind();
  spec.sensors = {SensorSpec{0, 1.0}};
  RegionState region(0, spec, b_mb, static_cast<double>(delay));

  double sum = 0.0;
  for (long k = 0; k < horizon; ++k) {
    if (k > 0) {
      if (auto done = region.tick()) region.complete(*done);
    }
    if (k % period == 0 && region.idle()) {
      if (delay == 0) {
        // Completes within the issuing slot: the update is fresh at slot end.
        region.set_aoi(0);
      } else {
        TaskRecord task;
        task.start_slot = k;
        task.b_region = b_mb;
        task.delays.total_slots = delay;
        task.finish_slot = k + delay;
        region.begin_task(std::move(task));
      }
    }
    region.step_aoi(nullptr);
    sum += region.instantaneous_penalty(model);
  }

  const double p = static_cast<double>(period);
  const double d = static_cast<double>(delay);
  const double f_d = model.discrete_cumulative(delay, b_mb);
  RenewalResult out;
  out.simulated = sum / static_cast<double>(horizon);
  out.renewal = (model.discrete_cumulative(period + delay, b_mb) - f_d) / p;
  out.lower_bound = (model.cumulative_penalty(p + d, b_mb) - f_d) / p;
  const double h = p - 1.0;
  out.lower_bound_interval = (model.cumulative_penalty(h + d + 1.0, b_mb) - f_d) / (h + 1.0);
  return out;
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kRateHi: return "rate_hi";
    case SweepAxis::kGamma: return "gamma";
    case SweepAxis::kExtDelayMean: return "ext_delay_mean";
    case SweepAxis::kCapacityM: return "capacity_m";
    case SweepAxis::kVParam: return "v_param";
    case SweepAxis::kBFixed: return "b_fixed";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(std::string_view name) {
  for (SweepAxis a : {SweepAxis::kRateHi, SweepAxis::kGamma, SweepAxis::kExtDelayMean,
                      SweepAxis::kCapacityM, SweepAxis::kVParam, SweepAxis::kBFixed}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("axis", "unknown sweep axis '" + std::string(name) + "'");
}

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("values", "must not be empty");
  if (schedulers.empty()) throw ConfigError("schedulers", "must not be empty");
  if (replications < 1) throw ConfigError("replications", "must be >= 1");
  if (jobs < 1) throw ConfigError("jobs", "must be >= 1");
  if (b_fixed_candidates.empty()) throw ConfigError("b_fixed", "must not be empty");
}

ConfigMap sweep_cell_config(const SweepSpec& spec, double value, SchedulerKind scheduler,
                            double b_fixed_mb, int replication) {
  ConfigMap m = spec.base;
  const ConfigMap& defaults = default_config();
  auto base_value = [&](const std::string& key) {
    auto it = m.find(key);
    return it != m.end() ? it->second : defaults.at(key);
  };
  const std::string v = format_number(value);
  switch (spec.axis) {
    case SweepAxis::kRateHi: m["rate_hi_mbps"] = v; break;
    case SweepAxis::kGamma: m["gamma_mb"] = v; break;
    case SweepAxis::kExtDelayMean: {
      double shift = std::stod(base_value("ext_shift_ms"));
      if (value < shift) throw ConfigError("values", "extraction mean below its shift");
      m["ext_scale_ms"] = format_number(value - shift);
      break;
    }
    case SweepAxis::kCapacityM: m["capacity_m"] = format_number(std::round(value)); break;
    case SweepAxis::kVParam: m["v"] = v; break;
    case SweepAxis::kBFixed: break;
  }
  m["scheduler"] = std::string(to_string(scheduler));
  if (is_baseline(scheduler)) m["b_fixed_mb"] = format_number(b_fixed_mb);
  long seed = std::stol(base_value("seed"));
  m["seed"] = std::to_string(seed + replication);
  return m;
}

SweepResult sweep(const SweepSpec& spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();

  struct Cell {
    double value;
    SchedulerKind scheduler;
    double b_fixed;
  };
  std::vector<Cell> cells;
  for (double value : spec.values) {
    for (SchedulerKind s : spec.schedulers) {
      if (!is_baseline(s)) {
        cells.push_back({value, s, 0.0});
      } else if (spec.axis == SweepAxis::kBFixed) {
        cells.push_back({value, s, value});
      } else {
        for (double b : spec.b_fixed_candidates) cells.push_back({value, s, b});
      }
    }
  }

  // Validate every cell up front so config errors surface before any run.
  std::vector<ScenarioConfig> configs;
  std::vector<SweepRun> runs;
  for (const Cell& c : cells) {
    for (int rep = 0; rep < spec.replications; ++rep) {
      configs.push_back(parse_and_validate(sweep_cell_config(spec, c.value, c.scheduler, c.b_fixed, rep)));
      SweepRun r;
      r.value = c.value;
      r.scheduler = c.scheduler;
      r.b_fixed_mb = c.b_fixed;
      r.replication = rep;
      runs.push_back(std::move(r));
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= runs.size()) return;
      try {
        RunSummary s = run(configs[i]);
        if (!spec.keep_series) {
          s.queue_trajectories.clear();
          s.volume_series.clear();
          s.ap_time_series.clear();
        }
        runs[i].summary = std::move(s);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = runs.size();
      }
    }
  };
  const int jobs = std::min<int>(spec.jobs, static_cast<int>(runs.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  SweepResult result;
  std::size_t offset = 0;
  for (const Cell& c : cells) {
    Accumulator ap, pen, vol, comp;
    SweepRow row;
    row.value = c.value;
    row.scheduler = c.scheduler;
    row.b_fixed_mb = c.b_fixed;
    row.budget_violation = -std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < spec.replications; ++rep, ++offset) {
      const RunSummary& s = runs[offset].summary;
      ap.add(s.mean_ap);
      pen.add(s.mean_penalty);
      double v = std::accumulate(s.per_region_avg_volume.begin(), s.per_region_avg_volume.end(), 0.0);
      vol.add(v / static_cast<double>(std::max<std::size_t>(1, s.per_region_avg_volume.size())));
      if (spec.keep_series) comp.add(static_cast<double>(first_sustained_compliance_slot(s)));
      row.budget_violation = std::max(row.budget_violation, s.budget_violation);
      row.wall_time_s += s.wall_time_s;
    }
    row.runs = spec.replications;
    row.mean_ap = ap.mean();
    row.stderr_ap = ap.stderr_of_mean();
    row.mean_penalty = pen.mean();
    row.stderr_penalty = pen.stderr_of_mean();
    row.mean_volume = vol.mean();
    row.compliance_slot = spec.keep_series ? comp.mean() : std::nan("");
    result.rows.push_back(row);
  }

  // Best fixed volume per (value, baseline); ties keep the first candidate.
  std::map<std::pair<double, int>, std::size_t> best;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const SweepRow& r = result.rows[i];
    if (!is_baseline(r.scheduler) || spec.axis == SweepAxis::kBFixed) continue;
    auto key = std::make_pair(r.value, static_cast<int>(r.scheduler));
    auto it = best.find(key);
    if (it == best.end() || r.mean_ap > result.rows[it->second].mean_ap) best[key] = i;
  }
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    SweepRow& r = result.rows[i];
    if (!is_baseline(r.scheduler) || spec.axis == SweepAxis::kBFixed) continue;
    r.selected = best[std::make_pair(r.value, static_cast<int>(r.scheduler))] == i;
  }

  result.runs = std::move(runs);
  ScenarioConfig base = parse_and_validate(spec.base);
  result.config_hash = base.hash();
  result.base_seed = base.seed();
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_header_comment(std::ostream& out, const std::string& config_hash, std::uint64_t seed) {
  out << "# config_hash=" << config_hash << " seed=" << seed << "\n";
}

SlotCsvWriter::SlotCsvWriter(std::ostream& out, const ScenarioConfig& cfg) : out_(&out) {
  write_header_comment(out, cfg.hash(), cfg.seed());
  out << "slot,region,h,Q,scheduled,b,ap,penalty\n";
}

void SlotCsvWriter::operator()(const SlotRecord& r) {
  *out_ << r.slot << ',' << r.region << ',' << r.h << ',' << format_number(r.q) << ','
        << r.scheduled << ',' << format_number(r.b) << ','
        << (r.ap ? format_number(*r.ap) : "") << ','
        << (r.penalty ? format_number(*r.penalty) : "") << '\n';
}

void write_summary_csv(std::ostream& out, const ScenarioConfig& cfg,
                       const std::vector<RunSummary>& runs) {
  write_header_comment(out, cfg.hash(), cfg.seed());
  out << "scheduler,b_fixed_mb,seed,horizon,warmup,mean_ap,mean_penalty,mean_volume,"
         "max_avg_volume,budget_violation,max_final_queue,tasks_started,compliance_slot\n";
  for (const RunSummary& s : runs) {
    double total = std::accumulate(s.per_region_avg_volume.begin(), s.per_region_avg_volume.end(), 0.0);
    double mean_volume = s.per_region_avg_volume.empty() ? 0.0 : total / s.per_region_avg_volume.size();
    double max_volume = s.per_region_avg_volume.empty()
                            ? 0.0
                            : *std::max_element(s.per_region_avg_volume.begin(), s.per_region_avg_volume.end());
    double max_q = s.final_queue.empty() ? 0.0 : *std::max_element(s.final_queue.begin(), s.final_queue.end());
    out << to_string(s.scheduler) << ',' << (is_baseline(s.scheduler) ? format_number(s.b_fixed_mb) : "")
        << ',' << s.seed << ',' << s.horizon << ',' << s.warmup << ',' << format_number(s.mean_ap)
        << ',' << format_number(s.mean_penalty) << ',' << format_number(mean_volume) << ','
        << format_number(max_volume) << ',' << format_number(s.budget_violation) << ','
        << format_number(max_q) << ',' << s.tasks_started << ','
        << first_sustained_compliance_slot(s) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepSpec& spec, const SweepResult& result) {
  write_header_comment(out, result.config_hash, result.base_seed);
  out << "axis,value,scheduler,b_fixed_mb,selected,runs,mean_ap,stderr_ap,mean_penalty,"
         "stderr_penalty,mean_volume,budget_violation,compliance_slot\n";
  for (const SweepRow& r : result.rows) {
    out << to_string(spec.axis) << ',' << format_number(r.value) << ',' << to_string(r.scheduler)
        << ',' << (is_baseline(r.scheduler) ? format_number(r.b_fixed_mb) : "") << ','
        << (r.selected ? 1 : 0) << ',' << r.runs << ',' << format_number(r.mean_ap) << ','
        << format_number(r.stderr_ap) << ',' << format_number(r.mean_penalty) << ','
        << format_number(r.stderr_penalty) << ',' << format_number(r.mean_volume) << ','
        << format_number(r.budget_violation) << ',' << format_number(r.compliance_slot) << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const SweepSpec& spec, const SweepResult& result,
                          long stride) {
  write_header_comment(out, result.config_hash, result.base_seed);
  out << "axis,value,scheduler,b_fixed_mb,slot,mean_queue,running_volume,mean_ap\n";
  if (stride < 1) stride = 1;
  for (const SweepRun& run : result.runs) {
    if (run.replication != 0) continue;
    const RunSummary& s = run.summary;
    if (s.queue_trajectories.empty()) continue;
    const std::size_t n = s.queue_trajectories.size();
    double cumulative = 0.0;
    for (long k = 0; k < s.horizon; ++k) {
      const auto idx = static_cast<std::size_t>(k);
      double q = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        q += s.queue_trajectories[a][idx];
        cumulative += s.volume_series[a][idx];
      }
      if (k % stride != 0 && k != s.horizon - 1) continue;
      out << to_string(spec.axis) << ',' << format_number(run.value) << ','
          << to_string(run.scheduler) << ','
          << (is_baseline(run.scheduler) ? format_number(run.b_fixed_mb) : "") << ',' << k << ','
          << format_number(q / n) << ','
          << format_number(cumulative / (static_cast<double>(n) * (k + 1))) << ','
          << format_number(s.ap_time_series[idx]) << '\n';
    }
  }
}

}  // namespace tampsim
