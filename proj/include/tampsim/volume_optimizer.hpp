#pragma once

#include <cstdint>
#include <string_view>

#include "tampsim/penalty_model.hpp"
#include "tampsim/stochastic_env.hpp"

namespace tampsim {

/// Regional volume bounds (megabits) and search settings.
struct VolumeBounds {
  double b_min_mb = 0.5;
  double b_max_mb = 16.0;
  int grid_points = 64;
  double golden_tol_mb = 1e-3;

  void validate() const;  // throws ConfigError
};

enum class ExpectationMethod { kDelayPmf, kMonteCarlo };

std::string_view to_string(ExpectationMethod method);
ExpectationMethod expectation_method_from_string(std::string_view name);

struct ExpectedCumulative {
  double value = 0.0;
  ExpectationMethod method = ExpectationMethod::kDelayPmf;
};

/// E[F(d, b)] over the slotted delay distribution.
ExpectedCumulative expected_F_of_delay(const PenaltyModel& model, double b_mb,
                                       const TaskDelayDistribution& delay,
                                       ExpectationMethod method = ExpectationMethod::kDelayPmf,
                                       int n_mc = 100'000, std::uint64_t mc_seed = 1);

/// (1/h) [F~(h + d, b) - F(d, b)], with F interpolated linearly for
/// non-integer d.
double per_slot_objective(const PenaltyModel& model, double h, double d, double b_mb);

struct VolumeChoice {
  double b_star = 0.0;
  double objective = 0.0;
  double expected_delay_slots = 0.0;
};

/// Minimises the per-slot objective over [b_min, b_max] with the delay
/// coupled to b through the expected task delay at `rate_mbps`. Coarse grid
/// followed by golden-section refinement around the best grid point.
VolumeChoice optimal_volume(const PenaltyModel& model, double h, double rate_mbps,
                            const VolumeBounds& bounds, const EnvParams& env, int n_sensors);

/// (1/h) (F~(h + d_bar, b) - e_F_d).
double p2_objective(const PenaltyModel& model, double h, double d_bar, double b_mb, double e_F_d);

}  // namespace tampsim
