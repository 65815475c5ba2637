#include "tampsim/volume_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tampsim/errors.hpp"
#include "tampsim/golden_section.hpp"
#include "tampsim/rng.hpp"

namespace tampsim {

void VolumeBounds::validate() const {
  if (!(b_min_mb > 0.0)) throw ConfigError("b_min_mb", "must be > 0");
  if (!(b_max_mb > b_min_mb)) throw ConfigError("b_max_mb", "must exceed b_min_mb");
  if (grid_points < 2) throw ConfigError("grid_points", "must be >= 2");
  if (!(golden_tol_mb > 0.0)) throw ConfigError("golden_tol_mb", "must be > 0");
}

std::string_view to_string(ExpectationMethod method) {
  return method == ExpectationMethod::kDelayPmf ? "pmf" : "monte_carlo";
}

ExpectationMethod expectation_method_from_string(std::string_view name) {
  if (name == "pmf") return ExpectationMethod::kDelayPmf;
  if (name == "monte_carlo") return ExpectationMethod::kMonteCarlo;
  throw ConfigError("e_f_method", "expected 'pmf' or 'monte_carlo', got '" + std::string(name) + "'");
}

ExpectedCumulative expected_F_of_delay(const PenaltyModel& model, double b_mb,
                                       const TaskDelayDistribution& delay,
                                       ExpectationMethod method, int n_mc, std::uint64_t mc_seed) {
  // F(0..k), grown in chunks as larger delays show up.
  std::vector<double> cumulative = model.discrete_cumulative_table(64, b_mb);
  auto F = [&](long d) {
    if (static_cast<long>(cumulative.size()) <= d)
      cumulative = model.discrete_cumulative_table(std::max(d, 2 * static_cast<long>(cumulative.size())), b_mb);
    return cumulative[static_cast<std::size_t>(d)];
  };

  if (method == ExpectationMethod::kDelayPmf) {
    std::vector<double> pmf = delay.slot_pmf();
    double sum = 0.0;
    for (std::size_t k = 1; k < pmf.size(); ++k) sum += pmf[k] * F(static_cast<long>(k));
    return {sum, method};
  }

  if (n_mc < 1) throw DomainError("Monte Carlo needs at least one draw");
  auto rng = stream_for(mc_seed, 0, 0, StreamPurpose::kMonteCarlo);
  double sum = 0.0;
  for (int i = 0; i < n_mc; ++i) sum += F(delay.sample_slots(rng));
  return {sum / n_mc, method};
}

double per_slot_objective(const PenaltyModel& model, double h, double d, double b_mb) {
  if (!(h > 0.0)) throw DomainError("per-slot objective needs h > 0");
  return (model.cumulative_penalty(h + d, b_mb) - model.discrete_cumulative_interp(d, b_mb)) / h;
}

VolumeChoice optimal_volume(const PenaltyModel& model, double h, double rate_mbps,
                            const VolumeBounds& bounds, const EnvParams& env, int n_sensors) {
  if (!(h >= 1.0)) throw DomainError("optimal volume needs h >= 1");
  if (!(rate_mbps > 0.0)) throw DomainError("rate must be positive");

  auto objective = [&](double b) {
    double d = expected_task_delay_slots(env, n_sensors, b, rate_mbps);
    return per_slot_objective(model, h, d, b);
  };

  const int n = bounds.grid_points;
  const double step = (bounds.b_max_mb - bounds.b_min_mb) / (n - 1);
  int best_i = 0;
  double best_v = objective(bounds.b_min_mb);
  for (int i = 1; i < n; ++i) {
    double b = i == n - 1 ? bounds.b_max_mb : bounds.b_min_mb + i * step;
    double v = objective(b);
    if (v < best_v) {
      best_v = v;
      best_i = i;
    }
  }

  double lo = bounds.b_min_mb + std::max(best_i - 1, 0) * step;
  double hi = std::min(bounds.b_min_mb + (best_i + 1) * step, bounds.b_max_mb);
  ScalarMinimum refined = golden_section_minimize(objective, lo, hi, bounds.golden_tol_mb);

  VolumeChoice out;
  if (refined.value < best_v) {
    out.b_star = refined.x;
    out.objective = refined.value;
  } else {
    out.b_star = best_i == n - 1 ? bounds.b_max_mb : bounds.b_min_mb + best_i * step;
    out.objective = best_v;
  }
  out.expected_delay_slots = expected_task_delay_slots(env, n_sensors, out.b_star, rate_mbps);
  return out;
}

double p2_objective(const PenaltyModel& model, double h, double d_bar, double b_mb, double e_F_d) {
  if (!(h > 0.0)) throw DomainError("P2 objective needs h > 0");
  return (model.cumulative_penalty(h + d_bar, b_mb) - e_F_d) / h;
}

}  // namespace tampsim
