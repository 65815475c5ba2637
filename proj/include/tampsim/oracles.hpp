#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tampsim/config.hpp"
#include "tampsim/penalty_model.hpp"

namespace tampsim {

struct OracleCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// One random instance of the refresh-age problem for a fixed volume.
struct RefreshCase {
  ScenarioKind kind = ScenarioKind::kCorridor;
  double b_mb = 0.0;
  double d_bar = 0.0;
  double e_F = 0.0;
};

/// Random (model, b, d_bar) instances drawn from the configured surfaces.
/// E[F(d, b)] comes from the task delay distribution at a random rate.
std::vector<RefreshCase> random_refresh_cases(const ScenarioConfig& cfg, int count,
                                              std::uint64_t seed);

/// Evenly spaced refresh ages (slots) used by the shape checks.
std::vector<double> refresh_age_grid(int points = 512, double step = 0.5);

/// Local minima of a sampled sequence, counting plateaus once and the
/// endpoints when the sequence rises away from them.
int count_local_minima(const std::vector<double>& values);

/// True when {i : values[i] <= level} is a single run of indices.
bool sublevel_set_is_interval(const std::vector<double>& values, double level);

// Individual batteries. Each returns one check with a short numeric summary.

/// Periodic single-region policy (period 5, delay 2, 10^4 slots) against the
/// renewal value, within 0.5 %. The degenerate period-1 / delay-0 case must
/// give f(1, b) on both sides.
OracleCheck check_renewal_match(const ScenarioConfig& cfg);
/// `count` random periodic policies: simulation within 0.5 % of the renewal
/// value and neither falls below the integral lower bound.
OracleCheck check_renewal_lower_bound(const ScenarioConfig& cfg, int count, std::uint64_t seed);
/// One local minimum on the grid and interval sublevel sets.
OracleCheck check_quasi_convexity(const ScenarioConfig& cfg, int count, int levels,
                                  std::uint64_t seed);
/// Grid minimiser of the refresh-age objective versus the first age with U >= 0.
OracleCheck check_kkt_equivalence(const ScenarioConfig& cfg, int count, std::uint64_t seed);
/// Random region states: the scheduler's choice for a single idle region
/// equals the maximiser over u in {0, 1} of (U - V Q b*) u, ties to u = 1.
OracleCheck check_sign_equivalence(const ScenarioConfig& cfg, int states, std::uint64_t seed);
/// Closed-form cumulative penalty versus adaptive quadrature (1e-6).
OracleCheck check_cumulative_quadrature(const ScenarioConfig& cfg, int count, std::uint64_t seed);
/// Central finite difference of the cumulative penalty versus f (1e-5).
OracleCheck check_cumulative_derivative(const ScenarioConfig& cfg, int count, std::uint64_t seed);
/// E[F(d, b)] from the pmf versus 10^5 Monte Carlo draws (1 % relative).
OracleCheck check_expectation_methods(const ScenarioConfig& cfg, int count, std::uint64_t seed);

/// Every battery above with its default sizes.
std::vector<OracleCheck> run_oracle_suite(const ScenarioConfig& cfg, std::uint64_t seed);

}  // namespace tampsim
