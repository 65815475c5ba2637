#pragma once

#include <optional>
#include <vector>

#include "tampsim/penalty_model.hpp"
#include "tampsim/stochastic_env.hpp"

namespace tampsim {

struct SensorSpec {
  int id = 0;
  double saliency_weight = 1.0;
};

struct TaskRecord {
  long start_slot = 0;
  long finish_slot = 0;
  double b_region = 0.0;
  std::vector<double> b_per_sensor;
  std::vector<double> B_per_sensor;
  double rate_mbps = 0.0;
  DelayBreakdown delays;
};

/// Static description of one region in the roster.
struct RegionSpec {
  ScenarioKind kind = ScenarioKind::kCorridor;
  std::vector<SensorSpec> sensors;
  double gamma_mb = 2.0;  // per-slot volume budget
  double v = 1e-3;        // drift/penalty trade-off
};

/// Mutable per-region state driven by the slot loop.
class RegionState {
 public:
  static constexpr double kDelayEmaWeight = 0.1;

  RegionState(int id, RegionSpec spec, double initial_volume_mb, double initial_d_bar);

  int id() const noexcept { return id_; }
  ScenarioKind kind() const noexcept { return spec_.kind; }
  const RegionSpec& spec() const noexcept { return spec_; }
  const std::vector<SensorSpec>& sensors() const noexcept { return spec_.sensors; }
  int sensor_count() const noexcept { return static_cast<int>(spec_.sensors.size()); }
  double gamma() const noexcept { return spec_.gamma_mb; }
  double v() const noexcept { return spec_.v; }

  long aoi() const noexcept { return h_; }
  double queue() const noexcept { return q_; }
  double last_completed_volume() const noexcept { return last_volume_; }
  double d_bar_est() const noexcept { return d_bar_; }
  long completions() const noexcept { return completions_; }

  bool idle() const noexcept { return !active_.has_value(); }
  const std::optional<TaskRecord>& active_task() const noexcept { return active_; }
  long remaining_slots() const noexcept { return remaining_; }

  /// Reset to the completed task's delay, otherwise increment.
  /// The completed task must be the one currently held by this region.
  long step_aoi(const TaskRecord* completed);

  /// Q <- max(Q + b - gamma, 0).
  double update_virtual_queue(double b_this_slot);

  /// Idle -> Active. Throws StateError if already active.
  void begin_task(TaskRecord task);

  /// Counts one slot off the active task. Returns the task once its last
  /// slot has elapsed; the region stays Active until `complete` is called.
  std::optional<TaskRecord> tick();

  /// Active -> Idle: resets AoI, records the task volume and delay.
  void complete(const TaskRecord& task);

  /// Surrogate AP at the current AoI, using the volume of the last
  /// completed task.
  double instantaneous_ap(const PenaltyModel& model) const;
  double instantaneous_penalty(const PenaltyModel& model) const;

  void set_aoi(long h) { h_ = h; }
  void set_queue(double q) { q_ = q; }

 private:
  int id_;
  RegionSpec spec_;
  long h_ = 1;
  double q_ = 0.0;
  double last_volume_;
  double d_bar_;
  std::optional<TaskRecord> active_;
  long remaining_ = 0;
  long completions_ = 0;
};

}  // namespace tampsim
