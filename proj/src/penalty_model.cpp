#include "tampsim/penalty_model.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "tampsim/errors.hpp"

namespace tampsim {
namespace {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(const std::map<std::string, std::string>& block, const std::string& key) {
  auto it = block.find(key);
  if (it == block.end()) throw ConfigError(key, "missing");
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "not a number: '" + it->second + "'");
  }
}

// (1 - exp(-x)) / x with the x -> 0 limit.
double one_minus_exp_over(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return -std::expm1(-x) / x;
}

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  return kind == ScenarioKind::kIntersection ? "intersection" : "corridor";
}

ScenarioKind scenario_kind_from_string(std::string_view name) {
  if (name == "intersection") return ScenarioKind::kIntersection;
  if (name == "corridor") return ScenarioKind::kCorridor;
  throw ConfigError("kind", "unknown scenario kind '" + std::string(name) + "'");
}

double volume_log2_bytes(double b_mb) {
  if (!(b_mb > 0.0)) throw DomainError("communication volume must be positive");
  return std::log2(b_mb * 1e6 / 8.0);
}

PenaltyModel::PenaltyModel(SurfaceParams params, double rho_max, double tau_ms,
                           LatencyCompensation compensation)
    : params_(params), rho_max_(rho_max), tau_ms_(tau_ms), compensation_(compensation) {
  if (!(tau_ms_ > 0.0)) throw DomainError("tau_ms must be positive");
  if (!(compensation_.window_s >= 0.0)) throw DomainError("compensation window must be >= 0");
  if (!(compensation_.cap_ap >= 0.0)) throw DomainError("compensation cap must be >= 0");
  if (!(rho_max_ > 0.0 && rho_max_ <= 1.0)) throw DomainError("rho_max must lie in (0, 1]");
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, IntersectionParams>) {
          if (p.alpha < 0 || p.beta < 0 || p.gamma < 0 || p.delta < 0 || p.epsilon < 0)
            throw DomainError("intersection parameters must be nonnegative");
        } else {
          if (p.kappa < 0 || p.lambda < 0 || p.lambda0 < 0 || p.nu < 0 || p.mu < 0)
            throw DomainError("corridor parameters must be nonnegative");
          if (!(p.lambda > 0)) throw DomainError("corridor lambda must be positive");
          if (!(p.kappa > p.mu)) throw DomainError("corridor kappa must exceed mu");
        }
      },
      params_);
}

PenaltyModel PenaltyModel::calibrated_to(double b_max_mb) const {
  PenaltyModel out = *this;
  out.rho_max_ = 1.0;  // placeholder so ap_value does not depend on the old value
  double top = out.ap_value(0.0, volume_log2_bytes(b_max_mb));
  if (!(top > 0.0 && top <= 1.0))
    throw DomainError("AP at zero AoI and b_max must lie in (0, 1] to calibrate rho_max");
  out.rho_max_ = top;
  return out;
}

ScenarioKind PenaltyModel::kind() const noexcept {
  return std::holds_alternative<IntersectionParams>(params_) ? ScenarioKind::kIntersection
                                                             : ScenarioKind::kCorridor;
}

PenaltyModel::Curve PenaltyModel::curve_at(double b_log) const {
  if (const auto* p = std::get_if<IntersectionParams>(&params_)) {
    return {p->epsilon - p->gamma * std::exp(-p->delta * b_log), p->alpha, p->beta};
  }
  const auto& p = std::get<CorridorParams>(params_);
  double sigmoid = 1.0 / (1.0 + std::exp(-p.lambda * (b_log - p.lambda0)));
  return {0.0, p.kappa * sigmoid - p.mu, p.nu};
}

PenaltyModel::Shaped PenaltyModel::shape_at(double b_log) const {
  Curve c = curve_at(b_log);
  const double w = compensation_.window_s;
  const double cap = compensation_.cap_ap;
  if (w <= 0.0 || c.amplitude <= 0.0 || c.rate <= 0.0) return {c, false, 0.0};
  double natural_drop = -c.amplitude * std::expm1(-c.rate * w);
  if (natural_drop <= cap) return {c, false, 0.0};
  // AoI at which the fitted curve has dropped by exactly `cap`.
  double offset = -std::log1p(-cap / c.amplitude) / c.rate;
  return {c, true, offset};
}

double PenaltyModel::shaped_ap(const Shaped& s, double h_s) const {
  const Curve& c = s.curve;
  if (!s.compensated) return c.floor + c.amplitude * std::exp(-c.rate * h_s);
  const double w = compensation_.window_s;
  if (h_s <= w) return c.floor + c.amplitude - compensation_.cap_ap * h_s / w;
  return c.floor + c.amplitude * std::exp(-c.rate * (h_s - w + s.offset_s));
}

double PenaltyModel::raw_ap(double h_s, double b_log) const {
  Curve c = curve_at(b_log);
  return c.floor + c.amplitude * std::exp(-c.rate * h_s);
}

double PenaltyModel::ap_value(double h_s, double b_log) const {
  if (std::isnan(h_s) || h_s < 0.0) throw DomainError("AoI must be a nonnegative number");
  if (std::isnan(b_log)) throw DomainError("volume must be a number");
  return std::max(0.0, shaped_ap(shape_at(b_log), h_s));
}

double PenaltyModel::penalty(double h, double b_mb) const {
  if (std::isnan(h) || h < 0.0) throw DomainError("AoI must be a nonnegative number");
  return shaped_penalty(shape_at(volume_log2_bytes(b_mb)), h);
}

double PenaltyModel::cumulative_penalty(double h, double b_mb) const {
  if (std::isnan(h) || h < 0.0) throw DomainError("AoI must be a nonnegative number");
  const Shaped s = shape_at(volume_log2_bytes(b_mb));
  const Curve& c = s.curve;
  const double slot_s = tau_ms_ / 1000.0;
  const double decay = c.rate * slot_s;  // per slot
  const double level = rho_max_ - c.floor;

  // Integral over [0, x] slots of A1 * exp(-decay * x).
  auto tail = [&](double x) { return c.amplitude * x * one_minus_exp_over(decay * x); };

  if (!s.compensated) return level * h - tail(h);

  const double window = compensation_.window_s / slot_s;  // in slots
  const double cap = compensation_.cap_ap;
  const double start = level - c.amplitude;  // penalty at h = 0
  if (h <= window) return start * h + cap * h * h / (2.0 * window);
  const double inside = start * window + cap * window / 2.0;
  const double x = h - window;
  return inside + level * x -
         std::exp(-c.rate * s.offset_s) * c.amplitude * x * one_minus_exp_over(decay * x);
}

double PenaltyModel::shaped_penalty(const Shaped& s, double h) const {
  double ap = std::max(0.0, shaped_ap(s, h * tau_ms_ / 1000.0));
  return std::max(0.0, rho_max_ - ap);
}

double PenaltyModel::discrete_cumulative(long d, double b_mb) const {
  if (d < 0) throw DomainError("delay must be nonnegative");
  const Shaped s = shape_at(volume_log2_bytes(b_mb));
  double sum = 0.0;
  for (long x = 0; x <= d; ++x) sum += shaped_penalty(s, static_cast<double>(x));
  return sum;
}

double PenaltyModel::discrete_cumulative_interp(double d, double b_mb) const {
  if (std::isnan(d) || d < 0.0) throw DomainError("delay must be nonnegative");
  const Shaped s = shape_at(volume_log2_bytes(b_mb));
  const long lo = static_cast<long>(std::floor(d));
  const double frac = d - static_cast<double>(lo);
  double sum = 0.0;
  for (long x = 0; x <= lo; ++x) sum += shaped_penalty(s, static_cast<double>(x));
  if (frac == 0.0) return sum;
  return sum + frac * shaped_penalty(s, static_cast<double>(lo + 1));
}

std::vector<double> PenaltyModel::discrete_cumulative_table(long d_max, double b_mb) const {
  if (d_max < 0) throw DomainError("delay must be nonnegative");
  const Shaped s = shape_at(volume_log2_bytes(b_mb));
  std::vector<double> out(static_cast<std::size_t>(d_max) + 1);
  double sum = 0.0;
  for (long x = 0; x <= d_max; ++x) {
    sum += shaped_penalty(s, static_cast<double>(x));
    out[static_cast<std::size_t>(x)] = sum;
  }
  return out;
}

double PenaltyModel::utility_index(double h, double b_mb, double d_bar, double e_F_d) const {
  if (!(h > 0.0)) throw DomainError("utility index needs h > 0");
  if (std::isnan(d_bar) || d_bar < 0.0) throw DomainError("d_bar must be nonnegative");
  double x = h + d_bar;
  return (h * penalty(x, b_mb) - (cumulative_penalty(x, b_mb) - e_F_d)) / (h * h);
}

void PenaltyModel::check_domain(double b_min_mb, double b_max_mb) const {
  if (!(b_min_mb > 0.0 && b_min_mb < b_max_mb)) throw DomainError("need 0 < b_min < b_max");
  // Both surfaces are non-decreasing in b for nonnegative parameters, so the
  // extremes sit at the volume bounds.
  Curve lo = curve_at(volume_log2_bytes(b_min_mb));
  Curve hi = curve_at(volume_log2_bytes(b_max_mb));
  if (lo.floor < 0.0 || lo.floor + lo.amplitude < 0.0)
    throw DomainError("AP surface is negative at b_min");
  if (hi.floor + hi.amplitude > rho_max_ + 1e-12)
    throw DomainError("AP at zero AoI and b_max exceeds rho_max");
}

std::map<std::string, std::string> PenaltyModel::to_block() const {
  std::map<std::string, std::string> out;
  out["kind"] = std::string(to_string(kind()));
  if (const auto* p = std::get_if<IntersectionParams>(&params_)) {
    out["alpha"] = format_number(p->alpha);
    out["beta"] = format_number(p->beta);
    out["gamma"] = format_number(p->gamma);
    out["delta"] = format_number(p->delta);
    out["epsilon"] = format_number(p->epsilon);
  } else {
    const auto& c = std::get<CorridorParams>(params_);
    out["kappa"] = format_number(c.kappa);
    out["lambda"] = format_number(c.lambda);
    out["lambda0"] = format_number(c.lambda0);
    out["nu"] = format_number(c.nu);
    out["mu"] = format_number(c.mu);
  }
  out["rho_max"] = format_number(rho_max_);
  out["tau_ms"] = format_number(tau_ms_);
  out["compensation_window_s"] = format_number(compensation_.window_s);
  out["compensation_cap_ap"] = format_number(compensation_.cap_ap);
  return out;
}

PenaltyModel PenaltyModel::from_block(const std::map<std::string, std::string>& block) {
  auto kind_it = block.find("kind");
  if (kind_it == block.end()) throw ConfigError("kind", "missing");
  ScenarioKind kind = scenario_kind_from_string(kind_it->second);

  std::set<std::string> allowed = {"kind", "rho_max", "tau_ms", "compensation_window_s",
                                   "compensation_cap_ap"};
  SurfaceParams params;
  if (kind == ScenarioKind::kIntersection) {
    allowed.insert({"alpha", "beta", "gamma", "delta", "epsilon"});
    params = IntersectionParams{parse_number(block, "alpha"), parse_number(block, "beta"),
                                parse_number(block, "gamma"), parse_number(block, "delta"),
                                parse_number(block, "epsilon")};
  } else {
    allowed.insert({"kappa", "lambda", "lambda0", "nu", "mu"});
    params = CorridorParams{parse_number(block, "kappa"), parse_number(block, "lambda"),
                            parse_number(block, "lambda0"), parse_number(block, "nu"),
                            parse_number(block, "mu")};
  }
  for (const auto& [key, value] : block) {
    if (!allowed.count(key)) throw ConfigError(key, "unknown model key");
  }
  LatencyCompensation comp;
  if (block.count("compensation_window_s")) comp.window_s = parse_number(block, "compensation_window_s");
  if (block.count("compensation_cap_ap")) comp.cap_ap = parse_number(block, "compensation_cap_ap");
  double tau = block.count("tau_ms") ? parse_number(block, "tau_ms") : 10.0;
  try {
    return PenaltyModel(params, parse_number(block, "rho_max"), tau, comp);
  } catch (const DomainError& e) {
    throw ConfigError("", e.what());
  }
}

IntersectionParams default_intersection_params() {
  return {.alpha = 0.40, .beta = 1.5, .gamma = 600.0, .delta = 0.5, .epsilon = 0.36};
}

CorridorParams default_corridor_params() {
  return {.kappa = 0.80, .lambda = 1.2, .lambda0 = 16.5, .nu = 3.0, .mu = 0.05};
}

}  // namespace tampsim
