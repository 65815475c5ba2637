#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "tampsim/errors.hpp"
#include "tampsim/penalty_fit.hpp"

using namespace tampsim;

namespace {

std::vector<FitSample> grid_samples(const PenaltyModel& m, double noise, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> eps(0.0, noise);
  std::vector<FitSample> out;
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 12; ++j) {
      double h_s = 0.05 * i;
      double b_log = 15.5 + 0.5 * j;
      double ap = m.raw_ap(h_s, b_log);
      if (noise > 0) ap = std::clamp(ap + eps(rng), 0.0, 1.0);
      out.push_back({h_s, b_log, ap});
    }
  }
  return out;
}

void check_relative(double got, double want, double tol) {
  CHECK(std::abs(got - want) <= tol * std::abs(want));
}

}  // namespace

TEST_CASE("noise-free intersection samples recover the parameters") {
  IntersectionParams truth = default_intersection_params();
  auto samples = grid_samples(PenaltyModel(truth, 1.0, 10.0), 0.0, 1);
  FitResult fit = fit_model(samples, ScenarioKind::kIntersection);
  auto p = std::get<IntersectionParams>(fit.params);
  check_relative(p.alpha, truth.alpha, 1e-3);
  check_relative(p.beta, truth.beta, 1e-3);
  check_relative(p.gamma, truth.gamma, 1e-3);
  check_relative(p.delta, truth.delta, 1e-3);
  check_relative(p.epsilon, truth.epsilon, 1e-3);
  CHECK(fit.rmse < 1e-8);
  CHECK(fit.starts_tried > 1);
}

TEST_CASE("noise-free corridor samples recover the parameters") {
  CorridorParams truth = default_corridor_params();
  auto samples = grid_samples(PenaltyModel(truth, 1.0, 10.0), 0.0, 1);
  FitResult fit = fit_model(samples, ScenarioKind::kCorridor);
  auto p = std::get<CorridorParams>(fit.params);
  check_relative(p.kappa, truth.kappa, 1e-3);
  check_relative(p.lambda, truth.lambda, 1e-3);
  check_relative(p.lambda0, truth.lambda0, 1e-3);
  check_relative(p.nu, truth.nu, 1e-3);
  check_relative(p.mu, truth.mu, 1e-3);
}

TEST_CASE("noisy samples fit to the noise level") {
  SUBCASE("intersection") {
    auto samples = grid_samples(PenaltyModel(default_intersection_params(), 1.0, 10.0), 0.01, 7);
    CHECK(fit_model(samples, ScenarioKind::kIntersection).rmse <= 0.02);
  }
  SUBCASE("corridor") {
    auto samples = grid_samples(PenaltyModel(default_corridor_params(), 1.0, 10.0), 0.01, 8);
    CHECK(fit_model(samples, ScenarioKind::kCorridor).rmse <= 0.02);
  }
}

TEST_CASE("degenerate sample sets are rejected") {
  std::vector<FitSample> three = {{0.0, 16.0, 0.5}, {0.1, 17.0, 0.45}, {0.2, 18.0, 0.4}};
  CHECK_THROWS_AS(fit_model(three, ScenarioKind::kCorridor), FitError);

  std::vector<FitSample> flat_volume;
  for (int i = 0; i < 20; ++i) flat_volume.push_back({0.05 * i, 18.0, 0.5 - 0.01 * i});
  CHECK_THROWS_AS(fit_model(flat_volume, ScenarioKind::kIntersection), FitError);

  std::vector<FitSample> out_of_range;
  for (int i = 0; i < 20; ++i) out_of_range.push_back({0.05 * i, 16.0 + i * 0.2, 1.5});
  CHECK_THROWS_AS(fit_model(out_of_range, ScenarioKind::kCorridor), FitError);
}

TEST_CASE("sample csv reader") {
  std::istringstream good("# measured\nh_s,b_log,ap\n0,16,0.7\n0.1,17.5,0.65\r\n");
  auto s = read_fit_samples(good);
  REQUIRE(s.size() == 2);
  CHECK(s[1].h_s == 0.1);
  CHECK(s[1].b_log == 17.5);
  CHECK(s[1].ap == 0.65);

  std::istringstream no_header("0,16,0.7\n");
  CHECK_THROWS_AS(read_fit_samples(no_header), FitError);
  std::istringstream short_row("h_s,b_log,ap\n0,16\n");
  CHECK_THROWS_AS(read_fit_samples(short_row), FitError);
  std::istringstream long_row("h_s,b_log,ap\n0,16,0.7,1\n");
  CHECK_THROWS_AS(read_fit_samples(long_row), FitError);
  std::istringstream text("h_s,b_log,ap\n0,x,0.7\n");
  CHECK_THROWS_AS(read_fit_samples(text), FitError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_fit_samples(empty), FitError);
}
