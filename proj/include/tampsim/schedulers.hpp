#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "tampsim/penalty_model.hpp"
#include "tampsim/region.hpp"
#include "tampsim/stochastic_env.hpp"
#include "tampsim/volume_optimizer.hpp"

namespace tampsim {

enum class SchedulerKind { kTamp, kAgePrio, kRatePrio, kGea, kMaxWeight };

std::string_view to_string(SchedulerKind kind);
SchedulerKind scheduler_kind_from_string(std::string_view name);
bool is_baseline(SchedulerKind kind);

/// Per-sensor volume bounds and the threshold-search tolerance.
struct SplitSettings {
  double sensor_b_min_mb = 0.05;
  double sensor_b_max_mb = 16.0;
  double xi_tol_mb = 0.01;
  int max_iterations = 40;

  void validate() const;
};

struct SplitResult {
  std::vector<double> b_sensor;
  double target_mb = 0.0;  // total actually aimed for, after clipping
  bool clipped = false;    // requested total was infeasible
  int iterations = 0;
};

/// Distributes a regional volume across sensors by searching a confidence
/// threshold theta in [0, 1]: sensor n keeps clamp(w_n * S * (1 - theta))
/// within the per-sensor bounds, with w normalised and S chosen so that
/// theta = 0 saturates every weighted sensor.
SplitResult split_volume(double b_region_mb, std::span<const SensorSpec> sensors,
                         const SplitSettings& settings);

/// Bandwidth shares proportional to volume so every sensor finishes
/// transmitting at the same time. All-zero volumes get an equal split.
std::vector<double> allocate_sensor_bandwidth(std::span<const double> b_sensor_mb,
                                              double region_share);

struct Decision {
  std::vector<int> u;
  std::vector<double> b_region;
  std::vector<std::vector<double>> b_sensor;
  std::vector<double> B_share;
  std::vector<int> selected;
  std::vector<bool> split_clipped;
};

struct PriorityEntry {
  int region = 0;
  double pi = 0.0;
  double b_star = 0.0;
  double utility = 0.0;
};

/// Everything a scheduler may look at in slot k. Rates are the per-region
/// rates a task started this slot would see.
struct SchedulingContext {
  long slot = 0;
  std::span<const RegionState> regions;
  std::span<const double> offered_rate;
  std::span<const PenaltyModel> models;  // one per region
  const EnvParams* env = nullptr;
  const VolumeBounds* bounds = nullptr;
  const SplitSettings* split = nullptr;
  int capacity_m = 1;
  double bandwidth_total = 1.0;
  ExpectationMethod e_f_method = ExpectationMethod::kDelayPmf;
};

/// Pi = U(h, b*) - V Q b*, with b* from the per-slot volume problem and U
/// from the region's delay estimate and E[F(d, b*)].
PriorityEntry tamp_priority(const RegionState& region, const PenaltyModel& model,
                            double rate_mbps, const EnvParams& env, const VolumeBounds& bounds,
                            ExpectationMethod method = ExpectationMethod::kDelayPmf);

/// Baseline ranking metrics.
double gea_priority(const RegionState& region, double rate_mbps, double b_fixed_mb,
                    const EnvParams& env);
double max_weight_priority(const RegionState& region, const PenaltyModel& model, double b_fixed_mb);

/// Selects the top min(M_rem, |candidates|) entries (score descending, id
/// ascending on ties) and fills in volumes, the split and bandwidth shares.
Decision assemble_decision(const SchedulingContext& ctx, std::vector<PriorityEntry> candidates);

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual SchedulerKind kind() const = 0;
  virtual Decision decide(const SchedulingContext& ctx) = 0;
};

class TampScheduler final : public Scheduler {
 public:
  SchedulerKind kind() const override { return SchedulerKind::kTamp; }
  Decision decide(const SchedulingContext& ctx) override;

  /// Priorities of all idle regions computed in the last call to decide.
  const std::vector<PriorityEntry>& last_priorities() const { return last_; }

 private:
  std::vector<PriorityEntry> last_;
};

/// Age-Prio, Rate-Prio, GEA and Max-Weight: fixed volume, always fill the
/// free capacity.
class BaselineScheduler final : public Scheduler {
 public:
  BaselineScheduler(SchedulerKind kind, double b_fixed_mb);
  SchedulerKind kind() const override { return kind_; }
  Decision decide(const SchedulingContext& ctx) override;

 private:
  SchedulerKind kind_;
  double b_fixed_;
};

std::unique_ptr<Scheduler> make_scheduler(SchedulerKind kind, double b_fixed_mb);

}  // namespace tampsim
