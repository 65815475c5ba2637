#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tampsim/penalty_model.hpp"
#include "tampsim/region.hpp"
#include "tampsim/schedulers.hpp"
#include "tampsim/stochastic_env.hpp"
#include "tampsim/volume_optimizer.hpp"

namespace tampsim {

/// Flat dotted key -> value text.
using ConfigMap = std::map<std::string, std::string>;

enum class RosterPreset { kHomogeneous, kHeterogeneous };
enum class ColdStart { kBMax, kExclude };

/// Fully defaulted and validated scenario.
struct ScenarioConfig {
  int region_count = 20;
  RosterPreset roster = RosterPreset::kHomogeneous;
  int capacity_m = 5;
  double bandwidth_total = 20.0;
  long horizon = 5000;
  long warmup = 200;
  ColdStart cold_start = ColdStart::kBMax;

  EnvParams env;
  VolumeBounds bounds;
  SplitSettings split;

  SchedulerKind scheduler = SchedulerKind::kTamp;
  double b_fixed_mb = 8.0;
  ExpectationMethod e_f_method = ExpectationMethod::kDelayPmf;

  std::vector<RegionSpec> regions;
  /// Calibrated surface per scenario kind, indexed by ScenarioKind.
  std::vector<PenaltyModel> models;

  std::string output;
  /// Every key with its effective value; the source of the config hash.
  ConfigMap canonical;

  const PenaltyModel& model_for(ScenarioKind kind) const {
    return models[static_cast<std::size_t>(kind)];
  }
  /// Short hex digest of the canonical key set.
  std::string hash() const;
  std::uint64_t seed() const { return env.seed; }
};

/// Defaults for every recognised key.
const ConfigMap& default_config();

/// Parses a structured-text file (YAML). Nested maps flatten into dotted
/// keys; sequences become comma-separated values.
ConfigMap load_config_file(const std::filesystem::path& path);
ConfigMap parse_config_text(const std::string& text);

/// Merges `overrides` over the defaults (later entries win), rejects unknown
/// keys and out-of-range values with a ConfigError naming the key.
ScenarioConfig parse_and_validate(const ConfigMap& overrides = {});

/// Applies `key=value` on top of `base`. Throws ConfigError on a malformed
/// assignment.
void apply_assignment(ConfigMap& base, const std::string& assignment);

/// Canonical text dump (sorted `key: value` lines).
std::string dump_config(const ConfigMap& map);

}  // namespace tampsim
