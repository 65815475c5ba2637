#include "tampsim/config.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tampsim/errors.hpp"

namespace tampsim {

namespace {

const ConfigMap kDefaults = {
    {"regions", "20"},
    {"roster", "homogeneous"},
    {"capacity_m", "5"},
    {"tau_ms", "10"},
    {"bandwidth_total", "20"},
    {"gamma_mb", "2"},
    {"v", "0.001"},
    {"horizon", "5000"},
    {"warmup", "200"},
    {"seed", "1"},
    {"cold_start", "b_max"},
    {"scheduler", "tamp"},
    {"b_fixed_mb", "8"},
    {"xi_tol_mb", "0.01"},
    {"sensor_b_min_mb", "0.05"},
    {"sensor_b_max_mb", "16"},
    {"ext_shift_ms", "2"},
    {"ext_scale_ms", "8"},
    {"det_shift_ms", "2"},
    {"det_scale_ms", "8"},
    {"rate_lo_mbps", "1"},
    {"rate_hi_mbps", "20"},
    {"compression_factor", "32"},
    {"b_min_mb", "0.5"},
    {"b_max_mb", "16"},
    {"grid_points", "64"},
    {"golden_tol_mb", "0.001"},
    {"e_f_method", "pmf"},
    {"corridor.sensors", "2"},
    {"corridor.weights", "0.6,0.4"},
    {"intersection.sensors", "4"},
    {"intersection.weights", "0.35,0.3,0.2,0.15"},
    {"penalty.intersection.alpha", "0.4"},
    {"penalty.intersection.beta", "1.5"},
    {"penalty.intersection.gamma", "600"},
    {"penalty.intersection.delta", "0.5"},
    {"penalty.intersection.epsilon", "0.36"},
    {"penalty.intersection.rho_max", "auto"},
    {"penalty.corridor.kappa", "0.8"},
    {"penalty.corridor.lambda", "1.2"},
    {"penalty.corridor.lambda0", "16.5"},
    {"penalty.corridor.nu", "3"},
    {"penalty.corridor.mu", "0.05"},
    {"penalty.corridor.rho_max", "auto"},
    {"penalty.compensation_window_s", "0.1"},
    {"penalty.compensation_cap_ap", "0.02"},
    {"output", ""},
};

const char* const kRegionFields[] = {"kind", "sensors", "weights", "gamma_mb", "v"};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool is_region_key(const std::string& key) {
  if (key.rfind("region.", 0) != 0) return false;
  auto dot = key.find('.', 7);
  if (dot == std::string::npos || dot == 7) return false;
  for (std::size_t i = 7; i < dot; ++i) {
    if (key[i] < '0' || key[i] > '9') return false;
  }
  std::string field = key.substr(dot + 1);
  for (const char* f : kRegionFields) {
    if (field == f) return true;
  }
  return false;
}

double to_double(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  if (t.empty()) throw ConfigError(key, "expected a number");
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw ConfigError(key, "expected a number, got '" + t + "'");
  }
  return v;
}

long to_long(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  char* end = nullptr;
  long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw ConfigError(key, "expected an integer, got '" + t + "'");
  }
  return v;
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError(key, "expected a comma-separated list");
  return out;
}

class Reader {
 public:
  explicit Reader(const ConfigMap& m) : m_(m) {}

  const std::string& text(const std::string& key) const {
    auto it = m_.find(key);
    if (it == m_.end()) throw ConfigError(key, "missing");
    return it->second;
  }
  double number(const std::string& key) const { return to_double(key, text(key)); }
  long integer(const std::string& key) const { return to_long(key, text(key)); }

  double positive(const std::string& key) const {
    double v = number(key);
    if (!(v > 0.0)) throw ConfigError(key, "must be > 0");
    return v;
  }
  double nonneg(const std::string& key) const {
    double v = number(key);
    if (!(v >= 0.0)) throw ConfigError(key, "must be >= 0");
    return v;
  }
  long at_least(const std::string& key, long lo) const {
    long v = integer(key);
    if (v < lo) throw ConfigError(key, "must be >= " + std::to_string(lo));
    return v;
  }
  bool has(const std::string& key) const { return m_.count(key) > 0; }

 private:
  const ConfigMap& m_;
};

template <class F>
auto rethrow_as(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    if (e.key() == key || e.key().empty()) throw;
    std::string what = e.what();
    throw ConfigError(key, what.substr(e.key().size() + 2));
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

std::vector<SensorSpec> make_sensors(const std::string& key, long count,
                                     const std::vector<double>* weights) {
  if (count < 1) throw ConfigError(key, "a region needs at least one sensor");
  std::vector<SensorSpec> sensors;
  for (long i = 0; i < count; ++i) {
    double w = weights ? (*weights)[static_cast<std::size_t>(i)] : 1.0;
    if (!(w >= 0.0)) throw ConfigError(key, "saliency weights must be >= 0");
    sensors.push_back({static_cast<int>(i), w});
  }
  return sensors;
}

PenaltyModel build_model(const Reader& r, ScenarioKind kind, double tau_ms,
                         const LatencyCompensation& comp, double b_min_mb, double b_max_mb) {
  const std::string prefix = "penalty." + std::string(to_string(kind)) + ".";
  SurfaceParams params;
  if (kind == ScenarioKind::kIntersection) {
    params = IntersectionParams{r.nonneg(prefix + "alpha"), r.nonneg(prefix + "beta"),
                                r.nonneg(prefix + "gamma"), r.nonneg(prefix + "delta"),
                                r.nonneg(prefix + "epsilon")};
  } else {
    CorridorParams c{r.nonneg(prefix + "kappa"), r.positive(prefix + "lambda"),
                     r.number(prefix + "lambda0"), r.nonneg(prefix + "nu"), r.nonneg(prefix + "mu")};
    if (!(c.kappa > c.mu)) throw ConfigError(prefix + "kappa", "must exceed mu");
    params = c;
  }
  const std::string rho_key = prefix + "rho_max";
  PenaltyModel model = rethrow_as(rho_key, [&] {
    std::string rho = trim(r.text(rho_key));
    if (rho == "auto") {
      return PenaltyModel(params, 1.0, tau_ms, comp).calibrated_to(b_max_mb);
    }
    double v = to_double(rho_key, rho);
    if (!(v > 0.0 && v <= 1.0)) throw ConfigError(rho_key, "must lie in (0, 1]");
    return PenaltyModel(params, v, tau_ms, comp);
  });
  try {
    model.check_domain(b_min_mb, b_max_mb);
  } catch (const DomainError& e) {
    std::string what = e.what();
    throw ConfigError(what.find("rho_max") != std::string::npos ? rho_key : prefix.substr(0, prefix.size() - 1), what);
  }
  return model;
}

void flatten(const YAML::Node& node, const std::string& prefix, ConfigMap& out) {
  switch (node.Type()) {
    case YAML::NodeType::Map:
      for (const auto& kv : node) {
        std::string key = kv.first.as<std::string>();
        flatten(kv.second, prefix.empty() ? key : prefix + "." + key, out);
      }
      break;
    case YAML::NodeType::Sequence: {
      std::string joined;
      for (std::size_t i = 0; i < node.size(); ++i) {
        if (!node[i].IsScalar()) throw ConfigError(prefix, "lists may only hold scalars");
        if (i) joined += ",";
        joined += node[i].as<std::string>();
      }
      out[prefix] = joined;
      break;
    }
    case YAML::NodeType::Scalar:
      out[prefix] = node.as<std::string>();
      break;
    case YAML::NodeType::Null:
      if (!prefix.empty()) out[prefix] = "";
      break;
    default:
      break;
  }
}

}  // namespace

const ConfigMap& default_config() { return kDefaults; }

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  try {
    YAML::Node root = YAML::Load(text);
    if (root.IsNull()) return out;
    if (!root.IsMap()) throw ConfigError("", "top level must be a mapping");
    flatten(root, "", out);
  } catch (const YAML::Exception& e) {
    throw ConfigError("", std::string("parse error: ") + e.what());
  }
  return out;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_assignment(ConfigMap& base, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(assignment, "expected key=value");
  }
  base[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

std::string dump_config(const ConfigMap& map) {
  std::string out;
  for (const auto& [k, v] : map) out += k + ": " + v + "\n";
  return out;
}

std::string ScenarioConfig::hash() const {
  ConfigMap keyed = canonical;
  keyed.erase("output");
  std::string text = dump_config(keyed);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
  char hex[17];
  for (int i = 0; i < 8; ++i) std::snprintf(hex + 2 * i, 3, "%02x", digest[i]);
  return std::string(hex, 16);
}

ScenarioConfig parse_and_validate(const ConfigMap& overrides) {
  ConfigMap merged = kDefaults;
  for (const auto& [key, value] : overrides) {
    if (!kDefaults.count(key) && !is_region_key(key)) throw ConfigError(key, "unknown key");
    merged[key] = value;
  }
  Reader r(merged);
  ScenarioConfig cfg;

  cfg.region_count = static_cast<int>(r.at_least("regions", 1));
  cfg.capacity_m = static_cast<int>(r.at_least("capacity_m", 1));
  if (cfg.capacity_m > cfg.region_count) throw ConfigError("capacity_m", "must not exceed regions");
  cfg.bandwidth_total = r.positive("bandwidth_total");
  cfg.horizon = r.at_least("horizon", 1);
  cfg.warmup = r.at_least("warmup", 0);
  if (cfg.warmup >= cfg.horizon) throw ConfigError("warmup", "must be smaller than horizon");

  const std::string& roster = r.text("roster");
  if (roster == "homogeneous") {
    cfg.roster = RosterPreset::kHomogeneous;
  } else if (roster == "heterogeneous") {
    cfg.roster = RosterPreset::kHeterogeneous;
  } else {
    throw ConfigError("roster", "expected homogeneous or heterogeneous");
  }
  const std::string& cold = r.text("cold_start");
  if (cold == "b_max") {
    cfg.cold_start = ColdStart::kBMax;
  } else if (cold == "exclude") {
    cfg.cold_start = ColdStart::kExclude;
  } else {
    throw ConfigError("cold_start", "expected b_max or exclude");
  }

  long seed = r.at_least("seed", 0);
  cfg.env.seed = static_cast<std::uint64_t>(seed);
  cfg.env.tau_ms = r.positive("tau_ms");
  cfg.env.extraction = {r.nonneg("ext_shift_ms"), r.nonneg("ext_scale_ms")};
  cfg.env.detection = {r.nonneg("det_shift_ms"), r.nonneg("det_scale_ms")};
  cfg.env.rate = {r.positive("rate_lo_mbps"), r.positive("rate_hi_mbps")};
  cfg.env.compression_factor = r.positive("compression_factor");
  cfg.env.validate();

  cfg.bounds.b_min_mb = r.positive("b_min_mb");
  cfg.bounds.b_max_mb = r.positive("b_max_mb");
  cfg.bounds.grid_points = static_cast<int>(r.at_least("grid_points", 2));
  cfg.bounds.golden_tol_mb = r.positive("golden_tol_mb");
  cfg.bounds.validate();

  cfg.split.sensor_b_min_mb = r.nonneg("sensor_b_min_mb");
  cfg.split.sensor_b_max_mb = r.positive("sensor_b_max_mb");
  cfg.split.xi_tol_mb = r.positive("xi_tol_mb");
  cfg.split.validate();

  cfg.scheduler = rethrow_as("scheduler", [&] { return scheduler_kind_from_string(r.text("scheduler")); });
  cfg.b_fixed_mb = r.positive("b_fixed_mb");
  cfg.e_f_method =
      rethrow_as("e_f_method", [&] { return expectation_method_from_string(r.text("e_f_method")); });

  LatencyCompensation comp{r.nonneg("penalty.compensation_window_s"),
                           r.nonneg("penalty.compensation_cap_ap")};
  cfg.models.clear();
  for (ScenarioKind kind : {ScenarioKind::kIntersection, ScenarioKind::kCorridor}) {
    cfg.models.push_back(build_model(r, kind, cfg.env.tau_ms, comp, cfg.bounds.b_min_mb, cfg.bounds.b_max_mb));
  }

  // Kind-level sensor presets. Without explicit weights a changed sensor
  // count falls back to equal weights.
  auto preset = [&](ScenarioKind kind) {
    std::string base(to_string(kind));
    long count = r.at_least(base + ".sensors", 1);
    std::vector<double> weights = to_list(base + ".weights", r.text(base + ".weights"));
    bool explicit_weights = overrides.count(base + ".weights") > 0;
    if (static_cast<long>(weights.size()) != count) {
      if (explicit_weights) throw ConfigError(base + ".weights", "needs one weight per sensor");
      return make_sensors(base + ".sensors", count, nullptr);
    }
    return make_sensors(base + ".weights", count, &weights);
  };
  const auto corridor_sensors = preset(ScenarioKind::kCorridor);
  const auto intersection_sensors = preset(ScenarioKind::kIntersection);

  double gamma = r.positive("gamma_mb");
  double v = r.nonneg("v");
  cfg.regions.clear();
  for (int a = 0; a < cfg.region_count; ++a) {
    RegionSpec spec;
    spec.kind = (cfg.roster == RosterPreset::kHeterogeneous && a % 2 == 1)
                    ? ScenarioKind::kIntersection
                    : ScenarioKind::kCorridor;
    const std::string prefix = "region." + std::to_string(a) + ".";
    if (r.has(prefix + "kind")) {
      spec.kind = rethrow_as(prefix + "kind", [&] { return scenario_kind_from_string(r.text(prefix + "kind")); });
    }
    spec.sensors = spec.kind == ScenarioKind::kCorridor ? corridor_sensors : intersection_sensors;
    if (r.has(prefix + "sensors") || r.has(prefix + "weights")) {
      long count = r.has(prefix + "sensors") ? r.at_least(prefix + "sensors", 1)
                                             : static_cast<long>(spec.sensors.size());
      if (r.has(prefix + "weights")) {
        auto w = to_list(prefix + "weights", r.text(prefix + "weights"));
        if (static_cast<long>(w.size()) != count) {
          throw ConfigError(prefix + "weights", "needs one weight per sensor");
        }
        spec.sensors = make_sensors(prefix + "weights", count, &w);
      } else {
        spec.sensors = make_sensors(prefix + "sensors", count, nullptr);
      }
    }
    double wsum = 0.0;
    for (const auto& s : spec.sensors) wsum += s.saliency_weight;
    if (!(wsum > 0.0)) throw ConfigError(prefix + "weights", "weights must not all be zero");
    spec.gamma_mb = r.has(prefix + "gamma_mb") ? r.positive(prefix + "gamma_mb") : gamma;
    spec.v = r.has(prefix + "v") ? r.nonneg(prefix + "v") : v;
    cfg.regions.push_back(std::move(spec));
  }
  for (const auto& [key, value] : merged) {
    if (!is_region_key(key)) continue;
    long idx = to_long(key, key.substr(7, key.find('.', 7) - 7));
    if (idx >= cfg.region_count) throw ConfigError(key, "region index out of range");
  }

  cfg.output = r.text("output");
  cfg.canonical = std::move(merged);
  return cfg;
}

}  // namespace tampsim
