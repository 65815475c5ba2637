#include "tampsim/region.hpp"

#include <algorithm>

#include "tampsim/errors.hpp"

namespace tampsim {

RegionState::RegionState(int id, RegionSpec spec, double initial_volume_mb, double initial_d_bar)
    : id_(id), spec_(std::move(spec)), last_volume_(initial_volume_mb), d_bar_(initial_d_bar) {
  if (spec_.sensors.empty()) throw ConfigError("sensors", "region needs at least one sensor");
  double weight = 0.0;
  for (const auto& s : spec_.sensors) {
    if (!(s.saliency_weight >= 0.0)) throw ConfigError("weights", "saliency weights must be >= 0");
    weight += s.saliency_weight;
  }
  if (!(weight > 0.0)) throw ConfigError("weights", "saliency weights must not all be zero");
}

long RegionState::step_aoi(const TaskRecord* completed) {
  if (completed) {
    if (!active_) throw StateError("completion signalled for an idle region");
    h_ = completed->delays.total_slots;
  } else {
    ++h_;
  }
  return h_;
}

double RegionState::update_virtual_queue(double b_this_slot) {
  if (b_this_slot < 0.0) throw DomainError("scheduled volume must be >= 0");
  q_ = std::max(q_ + b_this_slot - spec_.gamma_mb, 0.0);
  return q_;
}

void RegionState::begin_task(TaskRecord task) {
  if (active_) throw StateError("region " + std::to_string(id_) + " already has an active task");
  if (task.delays.total_slots < 1) throw StateError("task must last at least one slot");
  remaining_ = task.delays.total_slots;
  active_ = std::move(task);
}

std::optional<TaskRecord> RegionState::tick() {
  if (!active_ || remaining_ == 0) return std::nullopt;
  if (--remaining_ == 0) return active_;
  return std::nullopt;
}

void RegionState::complete(const TaskRecord& task) {
  step_aoi(&task);
  last_volume_ = task.b_region;
  d_bar_ = (1.0 - kDelayEmaWeight) * d_bar_ +
           kDelayEmaWeight * static_cast<double>(task.delays.total_slots);
  active_.reset();
  remaining_ = 0;
  ++completions_;
}

double RegionState::instantaneous_ap(const PenaltyModel& model) const {
  double h_s = static_cast<double>(h_) * model.tau_ms() / 1000.0;
  return model.ap_value(h_s, volume_log2_bytes(last_volume_));
}

double RegionState::instantaneous_penalty(const PenaltyModel& model) const {
  return model.penalty(static_cast<double>(h_), last_volume_);
}

}  // namespace tampsim
