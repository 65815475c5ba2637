#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tampsim/rng.hpp"

namespace tampsim {

/// Shifted exponential: shift + Exp(mean = scale). scale == 0 is a point mass.
struct ShiftedExp {
  double shift_ms = 2.0;
  double scale_ms = 8.0;

  double mean() const { return shift_ms + scale_ms; }
  double cdf(double x_ms) const;

  template <class Engine>
  double sample(Engine& rng) const {
    if (scale_ms == 0.0) return shift_ms;
    // 1 - u lies in (0, 1], so the log is finite.
    return shift_ms - scale_ms * std::log(1.0 - uniform01(rng));
  }
};

struct RateDist {
  double lo_mbps = 1.0;
  double hi_mbps = 20.0;

  double mean() const { return 0.5 * (lo_mbps + hi_mbps); }

  template <class Engine>
  double sample(Engine& rng) const {
    return lo_mbps + (hi_mbps - lo_mbps) * uniform01(rng);
  }
};

struct DelayBreakdown {
  double ext_ms = 0.0;
  double tr_ms = 0.0;
  double det_ms = 0.0;
  double total_ms = 0.0;
  long total_slots = 1;
};

/// Random environment shared by all regions of a run.
struct EnvParams {
  ShiftedExp extraction;
  ShiftedExp detection;
  RateDist rate;
  double compression_factor = 32.0;
  double tau_ms = 10.0;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

/// Harmonic number H_n.
double harmonic(int n);

/// E[max of n i.i.d. draws] = shift + scale * H_n.
double expected_extraction_max_ms(const ShiftedExp& dist, int n_sensors);

/// Region extraction delay: the slowest of `n_sensors` parallel sensors.
template <class Engine>
double sample_region_extraction_delay(Engine& rng, const ShiftedExp& dist, int n_sensors) {
  double worst = 0.0;
  for (int i = 0; i < n_sensors; ++i) worst = std::max(worst, dist.sample(rng));
  return worst;
}

/// Slowest sensor's transmission time in ms: max over n of (b_n / c) / r_n,
/// with b in megabits and r in Mbps. Throws DomainError on non-positive rates
/// or mismatched lengths.
double transmission_delay_ms(std::span<const double> b_mb, std::span<const double> r_mbps,
                             double compression_factor = 32.0);

/// Transmission time in ms of a whole region's volume over rate `r_mbps`.
double region_transmission_ms(double b_mb, double r_mbps, double compression_factor);

/// Sum of the phase delays, rounded up to whole slots (at least one).
DelayBreakdown total_task_delay(double ext_ms, double tr_ms, double det_ms, double tau_ms);

/// Continuous expected task delay in slots (no ceiling).
double expected_task_delay_slots(const EnvParams& env, int n_sensors, double b_mb, double r_mbps);

/// Distribution of the slotted task delay ceil((ext_max + tr + det) / tau)
/// for a fixed transmission time.
class TaskDelayDistribution {
 public:
  TaskDelayDistribution(ShiftedExp extraction, ShiftedExp detection, int n_sensors, double tr_ms,
                        double tau_ms);

  static TaskDelayDistribution deterministic(long slots, double tau_ms);

  /// P(physical delay <= t_ms).
  double cdf_ms(double t_ms) const;
  /// pmf over slots: element i is P(delay == i slots). Element 0 is always 0.
  /// The tail is cut once the remaining mass falls below `tail_eps`.
  std::vector<double> slot_pmf(double tail_eps = 1e-12) const;
  double mean_ms() const;

  template <class Engine>
  long sample_slots(Engine& rng) const {
    double ext = sample_region_extraction_delay(rng, extraction_, n_sensors_);
    double det = detection_.sample(rng);
    return total_task_delay(ext, tr_ms_, det, tau_ms_).total_slots;
  }

 private:
  ShiftedExp extraction_;
  ShiftedExp detection_;
  int n_sensors_;
  double tr_ms_;
  double tau_ms_;
};

}  // namespace tampsim
