#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "tampsim/config.hpp"
#include "tampsim/penalty_model.hpp"
#include "tampsim/schedulers.hpp"

namespace tampsim {

/// One row of the per-slot trace. `h` and `ap` are taken after the AoI
/// advance at the end of the slot; `q` is the queue after this slot's charge.
struct SlotRecord {
  long slot = 0;
  int region = 0;
  long h = 0;
  double q = 0.0;
  int scheduled = 0;
  double b = 0.0;
  std::optional<double> ap;  // empty while a cold-start region is excluded
  std::optional<double> penalty;
};

using SlotObserver = std::function<void(const SlotRecord&)>;

struct RunSummary {
  SchedulerKind scheduler = SchedulerKind::kTamp;
  double b_fixed_mb = 0.0;  // 0 for TAMP
  std::uint64_t seed = 0;
  long horizon = 0;
  long warmup = 0;

  double mean_ap = 0.0;       // slots >= warmup, all recorded regions
  double mean_penalty = 0.0;
  double mean_rho_max = 0.0;  // same averaging, for the AP + penalty bookkeeping
  std::vector<double> per_region_avg_volume;  // sum_k b / K
  std::vector<double> gamma;
  std::vector<double> final_queue;
  std::vector<std::vector<double>> queue_trajectories;  // [region][slot]
  std::vector<std::vector<double>> volume_series;       // [region][slot]
  std::vector<double> ap_time_series;                   // region mean per slot
  double budget_violation = 0.0;  // max over regions of (avg volume - gamma) / gamma
  double max_identity_gap = 0.0;  // max of avg volume - (gamma + Q_K / K)
  long tasks_started = 0;
  long split_clips = 0;
  double wall_time_s = 0.0;
};

/// Runs the slot loop for `cfg`. Throws InvariantViolation with the slot and
/// region if a decision or state breaks a simulation invariant.
RunSummary run(const ScenarioConfig& cfg, const SlotObserver& observer = {});

/// First slot from which the aggregate running-average volume stays within
/// (1 + tolerance) of the aggregate budget until the horizon. Returns the
/// horizon if the run never settles.
long first_sustained_compliance_slot(const RunSummary& summary, double tolerance = 0.05);

struct RenewalResult {
  double simulated = 0.0;  // time-average penalty of the slot loop
  double renewal = 0.0;    // [F(P + d) - F(d)] / P
  double lower_bound = 0.0;           // [F~(P + d) - F(d)] / P, decision-time AoI P
  double lower_bound_interval = 0.0;  // [F~(h + d + 1) - F(d)] / (h + 1), h = P - 1
};

/// Single region refreshed every `period` slots with volume `b_mb` and a
/// deterministic delay of `delay` slots (0 completes within the slot).
RenewalResult renewal_oracle(const PenaltyModel& model, long period, double b_mb, long delay,
                             long horizon);

enum class SweepAxis { kRateHi, kGamma, kExtDelayMean, kCapacityM, kVParam, kBFixed };

std::string_view to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(std::string_view name);

struct SweepSpec {
  SweepAxis axis = SweepAxis::kRateHi;
  std::vector<double> values;
  std::vector<SchedulerKind> schedulers;
  int replications = 10;
  ConfigMap base;
  std::vector<double> b_fixed_candidates{8.0, 14.0};
  int jobs = 1;
  bool keep_series = false;

  void validate() const;  // throws ConfigError
};

/// Reads a sweep description. Top-level keys: axis, values, schedulers,
/// replications, b_fixed, keep_series, jobs; everything under `base` is a
/// configuration override applied to every cell.
SweepSpec parse_sweep_spec(const std::string& text);
SweepSpec load_sweep_spec(const std::filesystem::path& path);

/// Slim per-run result kept by sweeps.
struct SweepRun {
  double value = 0.0;
  SchedulerKind scheduler = SchedulerKind::kTamp;
  double b_fixed_mb = 0.0;
  int replication = 0;
  RunSummary summary;  // series dropped unless keep_series
};

struct SweepRow {
  double value = 0.0;
  SchedulerKind scheduler = SchedulerKind::kTamp;
  double b_fixed_mb = 0.0;
  int runs = 0;
  double mean_ap = 0.0;
  double stderr_ap = 0.0;
  double mean_penalty = 0.0;
  double stderr_penalty = 0.0;
  double mean_volume = 0.0;
  double budget_violation = 0.0;  // worst over replications
  double compliance_slot = 0.0;   // mean over replications
  double wall_time_s = 0.0;       // summed over replications
  bool selected = true;  // best b_fixed for its (value, scheduler)
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepRun> runs;
  double wall_time_s = 0.0;
  std::string config_hash;  // hash of the base configuration
  std::uint64_t base_seed = 0;
};

/// Cross product of axis values, schedulers, baseline volumes and
/// replications. Replication r uses seed base + r for every cell, so the
/// offered randomness is shared across schedulers.
SweepResult sweep(const SweepSpec& spec);

/// Config map for one sweep cell.
ConfigMap sweep_cell_config(const SweepSpec& spec, double value, SchedulerKind scheduler,
                            double b_fixed_mb, int replication);

// CSV output. Every file opens with "# config_hash=<hex> seed=<n>".

std::string format_number(double v);
void write_header_comment(std::ostream& out, const std::string& config_hash, std::uint64_t seed);

class SlotCsvWriter {
 public:
  SlotCsvWriter(std::ostream& out, const ScenarioConfig& cfg);
  void operator()(const SlotRecord& r);

 private:
  std::ostream* out_;
};

void write_summary_csv(std::ostream& out, const ScenarioConfig& cfg,
                       const std::vector<RunSummary>& runs);
void write_sweep_csv(std::ostream& out, const SweepSpec& spec, const SweepResult& result);
/// Downsampled queue / running-volume / AP trajectories of replication 0.
void write_trajectory_csv(std::ostream& out, const SweepSpec& spec, const SweepResult& result,
                          long stride = 10);

}  // namespace tampsim
