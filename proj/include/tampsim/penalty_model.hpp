#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tampsim {

enum class ScenarioKind { kIntersection, kCorridor };

std::string_view to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(std::string_view name);

/// Dual-exponential AP surface:
///   rho1 = alpha * exp(-beta * h_s) - gamma * exp(-delta * b_log) + epsilon
struct IntersectionParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;
};

/// Sigmoid-exponential AP surface:
///   rho2 = (kappa / (1 + exp(-lambda * (b_log - lambda0))) - mu) * exp(-nu * h_s)
struct CorridorParams {
  double kappa = 0.0;
  double lambda = 0.0;
  double lambda0 = 0.0;
  double nu = 0.0;
  double mu = 0.0;
};

using SurfaceParams = std::variant<IntersectionParams, CorridorParams>;

/// Linear blend applied to the first `window_s` seconds of AoI: AP falls
/// linearly by at most `cap_ap` across the window, after which the fitted
/// curve resumes, shifted in AoI so the result is continuous.
struct LatencyCompensation {
  double window_s = 0.1;
  double cap_ap = 0.02;
};

/// log2 of a volume in megabits expressed in bytes.
double volume_log2_bytes(double b_mb);

/// Fitted AP surface plus the penalty forms derived from it.
///
/// AoI arguments named `h` are in slots (real-valued where the continuous
/// interpolation is meant); volumes named `b` are in megabits. The
/// underlying surface is always `A0(b) + A1(b) * exp(-k * h_s)`, which gives
/// closed forms for the cumulative penalty of both scenario kinds.
class PenaltyModel {
 public:
  PenaltyModel(SurfaceParams params, double rho_max, double tau_ms,
               LatencyCompensation compensation = {});

  /// Same surface with rho_max set to the AP at zero AoI and `b_max_mb`,
  /// so that penalty(0, b_max) == 0 exactly.
  PenaltyModel calibrated_to(double b_max_mb) const;

  ScenarioKind kind() const noexcept;
  const SurfaceParams& params() const noexcept { return params_; }
  double rho_max() const noexcept { return rho_max_; }
  double tau_ms() const noexcept { return tau_ms_; }
  const LatencyCompensation& compensation() const noexcept { return compensation_; }

  /// Compensated AP at AoI `h_s` seconds and volume `b_log` (log2 bytes),
  /// clamped below at 0.
  double ap_value(double h_s, double b_log) const;
  /// Fitted surface without compensation or clamping.
  double raw_ap(double h_s, double b_log) const;

  /// f~(h, b) = rho_max - AP, clamped at 0.
  double penalty(double h, double b_mb) const;
  /// F~(h, b) = integral of f~ over [0, h].
  double cumulative_penalty(double h, double b_mb) const;
  /// F(d, b) = sum of f~(x, b) for x = 0..d.
  double discrete_cumulative(long d, double b_mb) const;
  /// F extended to real d by linear interpolation between integers.
  double discrete_cumulative_interp(double d, double b_mb) const;
  /// F(0..d_max, b) in one pass.
  std::vector<double> discrete_cumulative_table(long d_max, double b_mb) const;

  /// U(h, b) = (h f~(h + d_bar) - (F~(h + d_bar) - e_F_d)) / h^2.
  double utility_index(double h, double b_mb, double d_bar, double e_F_d) const;

  /// Throws DomainError if the surface would need clamping anywhere on
  /// [b_min, b_max] x [0, inf): negative AP, or AP above rho_max.
  void check_domain(double b_min_mb, double b_max_mb) const;

  /// Flat key/value block: kind, alpha..mu, rho_max, tau_ms,
  /// compensation_window_s, compensation_cap_ap.
  std::map<std::string, std::string> to_block() const;
  static PenaltyModel from_block(const std::map<std::string, std::string>& block);

 private:
  struct Curve {
    double floor;      // A0
    double amplitude;  // A1
    double rate;       // k, per second
  };
  struct Shaped {
    Curve curve;
    bool compensated;
    double offset_s;  // AoI shift applied after the window
  };

  Curve curve_at(double b_log) const;
  Shaped shape_at(double b_log) const;
  double shaped_ap(const Shaped& s, double h_s) const;
  double shaped_penalty(const Shaped& s, double h) const;

  SurfaceParams params_;
  double rho_max_;
  double tau_ms_;
  LatencyCompensation compensation_;
};

/// Calibration placeholders: synthetic surfaces with the qualitative shape of
/// the measured intersection and corridor data.
IntersectionParams default_intersection_params();
CorridorParams default_corridor_params();

}  // namespace tampsim
