#include "doctest.h"

#include <cmath>
#include <random>

#include "tampsim/config.hpp"
#include "tampsim/errors.hpp"
#include "tampsim/golden_section.hpp"
#include "tampsim/oracles.hpp"
#include "tampsim/volume_optimizer.hpp"

using namespace tampsim;

namespace {

const ScenarioConfig& defaults() {
  static const ScenarioConfig cfg = parse_and_validate();
  return cfg;
}

TaskDelayDistribution delay_at(double b, double rate, int n = 2) {
  const EnvParams& env = defaults().env;
  return TaskDelayDistribution(env.extraction, env.detection, n,
                               region_transmission_ms(b, rate, env.compression_factor), env.tau_ms);
}

double dense_argmin(const PenaltyModel& m, double h, double rate, int n, int points) {
  const auto& bd = defaults().bounds;
  double best_b = bd.b_min_mb, best = 1e300;
  for (int i = 0; i < points; ++i) {
    double b = bd.b_min_mb + (bd.b_max_mb - bd.b_min_mb) * i / (points - 1);
    double v = per_slot_objective(m, h, expected_task_delay_slots(defaults().env, n, b, rate), b);
    if (v < best) {
      best = v;
      best_b = b;
    }
  }
  return best_b;
}

}  // namespace

TEST_CASE("golden-section search") {
  auto f = [](double x) { return (x - 1.3) * (x - 1.3) + 2.0; };
  ScalarMinimum m = golden_section_minimize(f, 0.0, 4.0, 1e-9);
  CHECK(m.x == doctest::Approx(1.3).epsilon(1e-6));
  CHECK(m.value == doctest::Approx(2.0));

  auto rising = [](double x) { return x; };
  CHECK(golden_section_minimize(rising, 2.0, 5.0, 1e-6).x == 2.0);
  CHECK(golden_section_minimize(rising, 5.0, 2.0, 1e-6).x == 2.0);
}

TEST_CASE("expected cumulative penalty over the delay") {
  const PenaltyModel& m = defaults().model_for(ScenarioKind::kCorridor);

  SUBCASE("point mass") {
    auto point = TaskDelayDistribution::deterministic(3, 10.0);
    CHECK(expected_F_of_delay(m, 4.0, point).value == doctest::Approx(m.discrete_cumulative(3, 4.0)).epsilon(1e-14));
    auto mc = expected_F_of_delay(m, 4.0, point, ExpectationMethod::kMonteCarlo, 1000, 3);
    CHECK(mc.value == doctest::Approx(m.discrete_cumulative(3, 4.0)).epsilon(1e-14));
    CHECK(mc.method == ExpectationMethod::kMonteCarlo);
  }

  SUBCASE("pmf against Monte Carlo") {
    for (auto kind : {ScenarioKind::kCorridor, ScenarioKind::kIntersection}) {
      const PenaltyModel& mk = defaults().model_for(kind);
      int n = kind == ScenarioKind::kIntersection ? 4 : 2;
      for (double b : {0.5, 4.0, 16.0}) {
        for (double rate : {1.0, 10.0}) {
          auto dist = delay_at(b, rate, n);
          double pmf = expected_F_of_delay(mk, b, dist).value;
          double mc = expected_F_of_delay(mk, b, dist, ExpectationMethod::kMonteCarlo, 100000, 9).value;
          CHECK(std::abs(pmf - mc) / pmf < 0.01);
        }
      }
    }
  }

  SUBCASE("smaller volume costs more at equal delay") {
    auto dist = delay_at(4.0, 10.0);
    CHECK(expected_F_of_delay(m, 0.5, dist).value > expected_F_of_delay(m, 16.0, dist).value);
  }

  CHECK_THROWS_AS(expected_F_of_delay(m, 4.0, delay_at(4.0, 10.0), ExpectationMethod::kMonteCarlo, 0),
                  DomainError);
}

TEST_CASE("per-slot objective") {
  const PenaltyModel& m = defaults().model_for(ScenarioKind::kIntersection);

  SUBCASE("plateau for large h") {
    double plateau = m.penalty(1e9, 2.0);
    CHECK(std::abs(per_slot_objective(m, 1e7, 3.0, 2.0) - plateau) < 1e-5);
  }

  SUBCASE("discrete-sum counterpart within the step bound") {
    for (long d : {1L, 3L, 7L}) {
      for (long h : {1L, 5L, 20L, 80L}) {
        double discrete = (m.discrete_cumulative(h + d, 3.0) - m.discrete_cumulative(d, 3.0)) / h;
        double bound = m.penalty(static_cast<double>(h + d), 3.0) / h;
        CHECK(std::abs(per_slot_objective(m, h, d, 3.0) - discrete) <= bound + 1e-12);
      }
    }
  }

  SUBCASE("non-increasing in volume at fixed delay") {
    for (double h : {2.0, 10.0, 50.0}) {
      double prev = per_slot_objective(m, h, 3.0, 0.5);
      for (double b = 1.0; b <= 16.0; b += 0.5) {
        double v = per_slot_objective(m, h, 3.0, b);
        CHECK(v <= prev + 1e-15);
        prev = v;
      }
    }
  }

  CHECK_THROWS_AS(per_slot_objective(m, 0.0, 3.0, 2.0), DomainError);
}

TEST_CASE("optimal volume") {
  const auto& cfg = defaults();
  const auto& bd = cfg.bounds;
  const double grid_step = (bd.b_max_mb - bd.b_min_mb) / (bd.grid_points - 1);

  SUBCASE("free transmission picks the largest volume") {
    for (auto kind : {ScenarioKind::kCorridor, ScenarioKind::kIntersection}) {
      VolumeChoice c = optimal_volume(cfg.model_for(kind), 10.0, 1e12, bd, cfg.env, 2);
      CHECK(c.b_star == doctest::Approx(bd.b_max_mb).epsilon(1e-9));
    }
  }

  SUBCASE("grid plus golden section against a dense scan") {
    for (auto kind : {ScenarioKind::kCorridor, ScenarioKind::kIntersection}) {
      const PenaltyModel& m = cfg.model_for(kind);
      int n = kind == ScenarioKind::kIntersection ? 4 : 2;
      for (double h : {1.0, 5.0, 20.0, 100.0}) {
        for (double rate : {1.0, 3.0, 10.0, 20.0}) {
          VolumeChoice c = optimal_volume(m, h, rate, bd, cfg.env, n);
          double dense = dense_argmin(m, h, rate, n, 4096);
          CHECK(std::abs(c.b_star - dense) <= grid_step);
          double dense_value =
              per_slot_objective(m, h, expected_task_delay_slots(cfg.env, n, dense, rate), dense);
          CHECK(c.objective <= dense_value * (1.0 + 1e-9));
          CHECK(c.expected_delay_slots ==
                doctest::Approx(expected_task_delay_slots(cfg.env, n, c.b_star, rate)));
        }
      }
    }
  }

  SUBCASE("faster links afford at least as much volume") {
    for (auto kind : {ScenarioKind::kCorridor, ScenarioKind::kIntersection}) {
      const PenaltyModel& m = cfg.model_for(kind);
      int n = kind == ScenarioKind::kIntersection ? 4 : 2;
      for (double h : {1.0, 5.0, 20.0, 100.0}) {
        CHECK(dense_argmin(m, h, 1.0, n, 4096) <= dense_argmin(m, h, 20.0, n, 4096));
        CHECK(optimal_volume(m, h, 1.0, bd, cfg.env, n).b_star <=
              optimal_volume(m, h, 20.0, bd, cfg.env, n).b_star + grid_step);
      }
    }
  }

  CHECK_THROWS_AS(optimal_volume(cfg.model_for(ScenarioKind::kCorridor), 0.5, 10.0, bd, cfg.env, 2),
                  DomainError);
  CHECK_THROWS_AS(optimal_volume(cfg.model_for(ScenarioKind::kCorridor), 5.0, 0.0, bd, cfg.env, 2),
                  DomainError);
}

TEST_CASE("refresh-age objective") {
  const auto& cfg = defaults();
  auto cases = random_refresh_cases(cfg, 20, 77);
  auto grid = refresh_age_grid();
  const double step = grid[1] - grid[0];

  SUBCASE("one local minimum per case") {
    int interior = 0;
    for (const auto& c : cases) {
      const PenaltyModel& m = cfg.model_for(c.kind);
      std::vector<double> v;
      for (double h : grid) v.push_back(p2_objective(m, h, c.d_bar, c.b_mb, c.e_F));
      CHECK(count_local_minima(v) == 1);
      if (std::min_element(v.begin(), v.end()) != v.begin()) ++interior;
    }
    CHECK(interior > 0);
  }

  SUBCASE("utility is small at the grid minimiser") {
    for (const auto& c : cases) {
      const PenaltyModel& m = cfg.model_for(c.kind);
      std::vector<double> v;
      for (double h : grid) v.push_back(p2_objective(m, h, c.d_bar, c.b_mb, c.e_F));
      auto j = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
      if (j == 0 || j + 1 == grid.size()) continue;
      // U is the h-derivative, so it is bounded by the neighbouring slopes.
      double left = (v[j] - v[j - 1]) / step, right = (v[j + 1] - v[j]) / step;
      double u = m.utility_index(grid[j], c.b_mb, c.d_bar, c.e_F);
      double tol = std::max(std::abs(left), std::abs(right)) + 1e-12;
      CHECK(std::abs(u) <= tol);
    }
  }

  SUBCASE("blows up near zero when the estimate dominates") {
    const PenaltyModel& m = cfg.model_for(ScenarioKind::kCorridor);
    double d_bar = 20.0, e_F = m.discrete_cumulative(3, 4.0);
    REQUIRE(m.cumulative_penalty(d_bar, 4.0) - e_F > 0.0);
    double prev = p2_objective(m, 1.0, d_bar, 4.0, e_F);
    for (double h : {1e-1, 1e-2, 1e-4, 1e-6}) {
      double v = p2_objective(m, h, d_bar, 4.0, e_F);
      CHECK(v > prev);
      prev = v;
    }
    CHECK(prev > 1e5);
  }

  CHECK_THROWS_AS(p2_objective(cfg.model_for(ScenarioKind::kCorridor), 0.0, 1.0, 1.0, 0.0), DomainError);
}

TEST_CASE("helper checks") {
  CHECK(count_local_minima({3, 2, 1, 2, 3}) == 1);
  CHECK(count_local_minima({1, 2, 3}) == 1);
  CHECK(count_local_minima({3, 1, 3, 1, 3}) == 2);
  CHECK(count_local_minima({2, 1, 1, 1, 2}) == 1);
  CHECK(sublevel_set_is_interval({3, 2, 1, 2, 3}, 2.0));
  CHECK_FALSE(sublevel_set_is_interval({3, 1, 3, 1, 3}, 2.0));
}

TEST_CASE("bounds and method names") {
  VolumeBounds b;
  CHECK_NOTHROW(b.validate());
  b.b_max_mb = 0.1;
  CHECK_THROWS_AS(b.validate(), ConfigError);
  CHECK(expectation_method_from_string("monte_carlo") == ExpectationMethod::kMonteCarlo);
  CHECK(to_string(ExpectationMethod::kDelayPmf) == "pmf");
  CHECK_THROWS_AS(expectation_method_from_string("exact"), ConfigError);
}
