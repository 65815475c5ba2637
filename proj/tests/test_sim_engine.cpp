#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "tampsim/config.hpp"
#include "tampsim/errors.hpp"
#include "tampsim/sim_engine.hpp"

using namespace tampsim;

namespace {

std::string slot_csv(const ScenarioConfig& cfg, RunSummary* summary = nullptr) {
  std::ostringstream out;
  SlotCsvWriter writer(out, cfg);
  RunSummary s = run(cfg, [&](const SlotRecord& r) { writer(r); });
  if (summary) *summary = std::move(s);
  return out.str();
}

std::string first_line(const std::string& text, int skip = 0) {
  std::istringstream in(text);
  std::string line;
  for (int i = 0; i <= skip; ++i) std::getline(in, line);
  return line;
}

SweepSpec small_sweep() {
  SweepSpec spec;
  spec.axis = SweepAxis::kRateHi;
  spec.values = {5.0, 20.0};
  spec.schedulers = {SchedulerKind::kTamp, SchedulerKind::kAgePrio};
  spec.replications = 2;
  spec.base = {{"horizon", "300"}, {"warmup", "50"}, {"regions", "6"}, {"capacity_m", "2"}};
  spec.b_fixed_candidates = {2.0, 8.0};
  return spec;
}

}  // namespace

TEST_CASE("saturated capacity refreshes every region every slot") {
  ScenarioConfig cfg = parse_and_validate({{"horizon", "10"},
                                           {"warmup", "0"},
                                           {"regions", "4"},
                                           {"capacity_m", "4"},
                                           {"rate_lo_mbps", "1e12"},
                                           {"rate_hi_mbps", "1e12"},
                                           {"ext_shift_ms", "0"},
                                           {"ext_scale_ms", "0"},
                                           {"det_shift_ms", "0"},
                                           {"det_scale_ms", "0"},
                                           {"v", "0"}});
  std::vector<SlotRecord> records;
  RunSummary s = run(cfg, [&](const SlotRecord& r) { records.push_back(r); });
  REQUIRE(records.size() == 40);
  for (const auto& r : records) {
    CHECK(r.scheduled == 1);
    // Reset to the one-slot delay on completion, then one slot of ageing.
    CHECK(r.h == 2);
  }
  CHECK(s.tasks_started == 40);
}

TEST_CASE("default scenario") {
  ScenarioConfig cfg = parse_and_validate();
  RunSummary s = run(cfg);
  CHECK(s.horizon == 5000);
  CHECK(s.wall_time_s < 60.0);
  CHECK(s.mean_ap >= 0.0);
  CHECK(s.mean_ap <= 1.05);
  CHECK(s.mean_ap + s.mean_penalty == doctest::Approx(s.mean_rho_max).epsilon(1e-9));
  CHECK(s.per_region_avg_volume.size() == 20);
  for (std::size_t a = 0; a < 20; ++a) {
    CHECK(s.per_region_avg_volume[a] >= 0.0);
    CHECK(s.per_region_avg_volume[a] <= s.gamma[a] + s.final_queue[a] / 5000.0 + 1e-9);
  }
  CHECK(s.max_identity_gap <= 1e-9);
  CHECK(s.budget_violation <= 0.05);
  CHECK(s.queue_trajectories.size() == 20);
  CHECK(s.queue_trajectories[0].size() == 5000);
  CHECK(s.ap_time_series.size() == 5000);
}

TEST_CASE("runs are reproducible per seed") {
  ScenarioConfig cfg = parse_and_validate({{"horizon", "400"}, {"seed", "7"}});
  RunSummary a, b;
  std::string first = slot_csv(cfg, &a);
  std::string second = slot_csv(cfg, &b);
  CHECK(first == second);
  CHECK(a.mean_ap == b.mean_ap);
  CHECK(a.per_region_avg_volume == b.per_region_avg_volume);
  CHECK(a.queue_trajectories == b.queue_trajectories);

  ScenarioConfig other = parse_and_validate({{"horizon", "400"}, {"seed", "8"}});
  CHECK(slot_csv(other) != first);
}

TEST_CASE("cold-start exclusion leaves AP empty until the first completion") {
  ScenarioConfig cfg = parse_and_validate({{"horizon", "50"}, {"warmup", "0"}, {"cold_start", "exclude"}});
  bool saw_empty = false;
  run(cfg, [&](const SlotRecord& r) {
    if (!r.ap) saw_empty = true;
    CHECK(r.ap.has_value() == r.penalty.has_value());
  });
  CHECK(saw_empty);
}

TEST_CASE("slot CSV layout") {
  ScenarioConfig cfg = parse_and_validate({{"horizon", "5"}, {"warmup", "0"}, {"seed", "3"}});
  std::string text = slot_csv(cfg);
  CHECK(first_line(text) == "# config_hash=" + cfg.hash() + " seed=3");
  CHECK(first_line(text, 1) == "slot,region,h,Q,scheduled,b,ap,penalty");
  CHECK(first_line(text, 2).rfind("0,0,", 0) == 0);

  std::ostringstream summary;
  write_summary_csv(summary, cfg, {run(cfg)});
  CHECK(first_line(summary.str(), 1) ==
        "scheduler,b_fixed_mb,seed,horizon,warmup,mean_ap,mean_penalty,mean_volume,max_avg_volume,"
        "budget_violation,max_final_queue,tasks_started,compliance_slot");
  CHECK(first_line(summary.str(), 2).rfind("tamp,,3,5,0,", 0) == 0);

  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(std::nan("")) == "");
}

TEST_CASE("first sustained compliance slot") {
  RunSummary s;
  s.horizon = 6;
  s.gamma = {1.0};
  s.volume_series = {{4.0, 0.0, 0.0, 0.0, 0.0, 0.0}};
  // Running averages: 4, 2, 1.33, 1, 0.8, 0.67.
  CHECK(first_sustained_compliance_slot(s, 0.05) == 3);
  CHECK(first_sustained_compliance_slot(s, 0.5) == 2);
  s.volume_series = {{0.0, 0.0, 0.0, 0.0, 0.0, 9.0}};
  CHECK(first_sustained_compliance_slot(s, 0.05) == 6);
}

TEST_CASE("renewal oracle") {
  ScenarioConfig cfg = parse_and_validate();
  for (auto kind : {ScenarioKind::kCorridor, ScenarioKind::kIntersection}) {
    const PenaltyModel& m = cfg.model_for(kind);
    RenewalResult r = renewal_oracle(m, 5, 2.0, 2, 10000);
    CHECK(std::abs(r.simulated - r.renewal) / r.renewal < 0.005);
    double direct = (m.discrete_cumulative(7, 2.0) - m.discrete_cumulative(2, 2.0)) / 5.0;
    CHECK(r.renewal == doctest::Approx(direct).epsilon(1e-14));

    RenewalResult flat = renewal_oracle(m, 1, 2.0, 0, 1000);
    CHECK(flat.renewal == doctest::Approx(m.penalty(1.0, 2.0)).epsilon(1e-14));
    CHECK(flat.simulated == doctest::Approx(m.penalty(1.0, 2.0)).epsilon(1e-14));
  }

  SUBCASE("integral lower bound") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 50; ++i) {
      const PenaltyModel& m = cfg.model_for(i % 2 ? ScenarioKind::kCorridor : ScenarioKind::kIntersection);
      long period = 1 + static_cast<long>(rng() % 40);
      long delay = static_cast<long>(rng() % static_cast<unsigned long>(period + 1));
      double b = 0.5 + 15.5 * std::uniform_real_distribution<double>(0, 1)(rng);
      RenewalResult r = renewal_oracle(m, period, b, delay, 2000);
      CHECK(r.renewal >= r.lower_bound);
      CHECK(r.lower_bound == doctest::Approx(r.lower_bound_interval).epsilon(1e-12));
    }
  }

  const PenaltyModel& m = cfg.model_for(ScenarioKind::kCorridor);
  CHECK_THROWS_AS(renewal_oracle(m, 3, 2.0, 4, 100), DomainError);
  CHECK_THROWS_AS(renewal_oracle(m, 0, 2.0, 0, 100), DomainError);
}

TEST_CASE("sweep cells") {
  SweepSpec spec = small_sweep();
  ConfigMap cell = sweep_cell_config(spec, 20.0, SchedulerKind::kAgePrio, 8.0, 3);
  CHECK(cell.at("rate_hi_mbps") == "20");
  CHECK(cell.at("scheduler") == "age_prio");
  CHECK(cell.at("b_fixed_mb") == "8");
  CHECK(cell.at("seed") == "4");
  CHECK(cell.at("horizon") == "300");

  spec.axis = SweepAxis::kExtDelayMean;
  CHECK(sweep_cell_config(spec, 12.0, SchedulerKind::kTamp, 0.0, 0).at("ext_scale_ms") == "10");
  CHECK_THROWS_AS(sweep_cell_config(spec, 1.0, SchedulerKind::kTamp, 0.0, 0), ConfigError);
  spec.axis = SweepAxis::kCapacityM;
  CHECK(sweep_cell_config(spec, 3.0, SchedulerKind::kTamp, 0.0, 0).at("capacity_m") == "3");

  CHECK(sweep_axis_from_string("v_param") == SweepAxis::kVParam);
  CHECK_THROWS_AS(sweep_axis_from_string("colour"), ConfigError);

  SweepSpec bad = small_sweep();
  bad.values.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = small_sweep();
  bad.replications = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sweep aggregation and determinism") {
  SweepSpec spec = small_sweep();
  SweepResult one = sweep(spec);
  // TAMP once per value, Age-Prio once per candidate volume.
  REQUIRE(one.rows.size() == 6);
  CHECK(one.runs.size() == 12);
  for (const auto& r : one.rows) CHECK(r.runs == 2);
  for (double v : spec.values) {
    int selected = 0;
    double best = -1.0;
    for (const auto& r : one.rows) {
      if (r.value != v || r.scheduler != SchedulerKind::kAgePrio) continue;
      selected += r.selected;
      best = std::max(best, r.mean_ap);
    }
    CHECK(selected == 1);
    for (const auto& r : one.rows) {
      if (r.value == v && r.scheduler == SchedulerKind::kAgePrio && r.selected) CHECK(r.mean_ap == best);
    }
  }

  // Replication r runs seed base + r in every cell.
  for (const auto& run : one.runs) CHECK(run.summary.seed == 1 + static_cast<std::uint64_t>(run.replication));

  spec.jobs = 3;
  SweepResult three = sweep(spec);
  std::ostringstream a, b;
  write_sweep_csv(a, spec, one);
  write_sweep_csv(b, spec, three);
  CHECK(a.str() == b.str());
  CHECK(first_line(a.str(), 1) ==
        "axis,value,scheduler,b_fixed_mb,selected,runs,mean_ap,stderr_ap,mean_penalty,"
        "stderr_penalty,mean_volume,budget_violation,compliance_slot");
}

TEST_CASE("trajectory output keeps replication zero") {
  SweepSpec spec = small_sweep();
  spec.axis = SweepAxis::kVParam;
  spec.values = {1e-3};
  spec.schedulers = {SchedulerKind::kTamp};
  spec.keep_series = true;
  SweepResult r = sweep(spec);
  CHECK(!std::isnan(r.rows[0].compliance_slot));
  std::ostringstream out;
  write_trajectory_csv(out, spec, r, 10);
  std::string text = out.str();
  CHECK(first_line(text, 1) == "axis,value,scheduler,b_fixed_mb,slot,mean_queue,running_volume,mean_ap");
  CHECK(first_line(text, 2).rfind("v_param,0.001,tamp,,0,", 0) == 0);
  // Slots 0, 10, ..., 290 plus the final slot.
  CHECK(std::count(text.begin(), text.end(), '\n') == 2 + 30 + 1);
}

TEST_CASE("sweep description files") {
  SweepSpec spec = parse_sweep_spec(
      "axis: gamma\n"
      "values: [0.5, 1, 2]\n"
      "schedulers: [tamp, gea]\n"
      "replications: 3\n"
      "b_fixed: [4]\n"
      "keep_series: true\n"
      "base:\n"
      "  horizon: 800\n"
      "  roster: heterogeneous\n");
  CHECK(spec.axis == SweepAxis::kGamma);
  CHECK(spec.values == std::vector<double>{0.5, 1.0, 2.0});
  CHECK(spec.schedulers == std::vector<SchedulerKind>{SchedulerKind::kTamp, SchedulerKind::kGea});
  CHECK(spec.replications == 3);
  CHECK(spec.b_fixed_candidates == std::vector<double>{4.0});
  CHECK(spec.keep_series);
  CHECK(spec.base.at("roster") == "heterogeneous");

  CHECK_THROWS_AS(parse_sweep_spec("values: [1]\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec("axis: gamma\nvalues: [1]\ncolour: red\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec("axis: gamma\nvalues: [1]\nbase:\n  warp: 9\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec("axis: gamma\nvalues: [x]\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec("axis: gamma\nvalues: [1]\nreplications: 1.5\n"), ConfigError);
}

TEST_CASE("invariant violations carry their location") {
  InvariantViolation e(12, 3, "negative virtual queue");
  CHECK(e.slot() == 12);
  CHECK(e.region() == 3);
  CHECK(std::string(e.what()) == "slot 12, region 3: negative virtual queue");
}
