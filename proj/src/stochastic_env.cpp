#include "tampsim/stochastic_env.hpp"

#include <cmath>

#include "tampsim/errors.hpp"

namespace tampsim {
namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// P(max of n Exp(scale) <= x), x measured after the shift.
double max_exp_cdf(double x, double scale, int n) {
  if (x < 0.0) return 0.0;
  if (scale == 0.0) return 1.0;
  return std::pow(-std::expm1(-x / scale), n);
}

}  // namespace

double ShiftedExp::cdf(double x_ms) const {
  if (x_ms < shift_ms) return 0.0;
  if (scale_ms == 0.0) return 1.0;
  return -std::expm1(-(x_ms - shift_ms) / scale_ms);
}

void EnvParams::validate() const {
  auto check = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(key, what);
  };
  check(extraction.shift_ms >= 0.0, "ext_shift_ms", "must be >= 0");
  check(extraction.scale_ms >= 0.0, "ext_scale_ms", "must be >= 0");
  check(detection.shift_ms >= 0.0, "det_shift_ms", "must be >= 0");
  check(detection.scale_ms >= 0.0, "det_scale_ms", "must be >= 0");
  check(rate.lo_mbps > 0.0, "rate_lo_mbps", "must be > 0");
  check(rate.hi_mbps >= rate.lo_mbps, "rate_hi_mbps", "must be >= rate_lo_mbps");
  check(compression_factor > 0.0, "compression_factor", "must be > 0");
  check(tau_ms > 0.0, "tau_ms", "must be > 0");
}

double harmonic(int n) {
  double h = 0.0;
  for (int i = 1; i <= n; ++i) h += 1.0 / i;
  return h;
}

double expected_extraction_max_ms(const ShiftedExp& dist, int n_sensors) {
  return dist.shift_ms + dist.scale_ms * harmonic(n_sensors);
}

double transmission_delay_ms(std::span<const double> b_mb, std::span<const double> r_mbps,
                             double compression_factor) {
  if (b_mb.size() != r_mbps.size()) throw DomainError("volume and rate lists differ in length");
  if (!(compression_factor > 0.0)) throw DomainError("compression factor must be positive");
  double worst = 0.0;
  for (std::size_t i = 0; i < b_mb.size(); ++i) {
    if (!(r_mbps[i] > 0.0)) throw DomainError("transmission rate must be positive");
    worst = std::max(worst, (b_mb[i] / compression_factor) / r_mbps[i] * 1000.0);
  }
  return worst;
}

double region_transmission_ms(double b_mb, double r_mbps, double compression_factor) {
  if (!(r_mbps > 0.0)) throw DomainError("transmission rate must be positive");
  return (b_mb / compression_factor) / r_mbps * 1000.0;
}

DelayBreakdown total_task_delay(double ext_ms, double tr_ms, double det_ms, double tau_ms) {
  DelayBreakdown d;
  d.ext_ms = ext_ms;
  d.tr_ms = tr_ms;
  d.det_ms = det_ms;
  d.total_ms = ext_ms + tr_ms + det_ms;
  d.total_slots = std::max(1L, static_cast<long>(std::ceil(d.total_ms / tau_ms)));
  return d;
}

double expected_task_delay_slots(const EnvParams& env, int n_sensors, double b_mb, double r_mbps) {
  double tr = b_mb > 0.0 ? region_transmission_ms(b_mb, r_mbps, env.compression_factor) : 0.0;
  double ms = expected_extraction_max_ms(env.extraction, n_sensors) + tr + env.detection.mean();
  return ms / env.tau_ms;
}

TaskDelayDistribution::TaskDelayDistribution(ShiftedExp extraction, ShiftedExp detection,
                                             int n_sensors, double tr_ms, double tau_ms)
    : extraction_(extraction),
      detection_(detection),
      n_sensors_(n_sensors),
      tr_ms_(tr_ms),
      tau_ms_(tau_ms) {
  if (n_sensors_ < 1) throw DomainError("need at least one sensor");
  if (!(tau_ms_ > 0.0)) throw DomainError("tau_ms must be positive");
  if (!(tr_ms_ >= 0.0)) throw DomainError("transmission time must be >= 0");
}

TaskDelayDistribution TaskDelayDistribution::deterministic(long slots, double tau_ms) {
  // A point mass at exactly `slots * tau` ms rounds up to `slots`.
  return TaskDelayDistribution(ShiftedExp{0.0, 0.0}, ShiftedExp{0.0, 0.0}, 1,
                               static_cast<double>(slots) * tau_ms, tau_ms);
}

double TaskDelayDistribution::mean_ms() const {
  return expected_extraction_max_ms(extraction_, n_sensors_) + tr_ms_ + detection_.mean();
}

double TaskDelayDistribution::cdf_ms(double t_ms) const {
  const double s = t_ms - extraction_.shift_ms - detection_.shift_ms - tr_ms_;
  if (s < 0.0) return 0.0;
  const double se = extraction_.scale_ms;
  const double sd = detection_.scale_ms;
  const int n = n_sensors_;
  if (sd == 0.0) return max_exp_cdf(s, se, n);
  if (se == 0.0) return -std::expm1(-s / sd);

  if (n > 12) {
    // Alternating binomial sum loses precision; integrate numerically.
    const int steps = 4000;
    const double h = s / steps;
    double acc = 0.0;
    for (int i = 0; i <= steps; ++i) {
      double y = i * h;
      double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * max_exp_cdf(s - y, se, n) * std::exp(-y / sd) / sd;
    }
    return std::clamp(acc * h / 3.0, 0.0, 1.0);
  }

  // (1 - e^{-x/se})^n expanded binomially and convolved with the detection
  // density term by term.
  double total = -std::expm1(-s / sd);
  for (int j = 1; j <= n; ++j) {
    double c = j / se - 1.0 / sd;
    double term;
    if (std::abs(c * s) < 1.0) {
      term = std::abs(c) < 1e-300 ? s * std::exp(-j * s / se)
                                  : std::exp(-j * s / se) * std::expm1(c * s) / c;
    } else {
      term = (std::exp(-s / sd) - std::exp(-j * s / se)) / c;
    }
    total += binomial(n, j) * ((j % 2) ? -1.0 : 1.0) * term / sd;
  }
  return std::clamp(total, 0.0, 1.0);
}

std::vector<double> TaskDelayDistribution::slot_pmf(double tail_eps) const {
  std::vector<double> pmf{0.0};
  double prev = 0.0;
  for (long k = 1; k < 1'000'000; ++k) {
    double cdf = cdf_ms(static_cast<double>(k) * tau_ms_);
    pmf.push_back(std::max(0.0, cdf - prev));
    prev = cdf;
    if (1.0 - cdf <= tail_eps) break;
  }
  return pmf;
}

}  // namespace tampsim
