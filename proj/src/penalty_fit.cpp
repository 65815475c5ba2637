#include "tampsim/penalty_fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <unsupported/Eigen/NonLinearOptimization>
#include <vector>

#include "tampsim/errors.hpp"

namespace tampsim {
namespace {

// The volume term gamma * exp(-delta * b_log) is fitted as
// exp(g - delta * (b_log - center)) so that g and delta are not nearly
// collinear over the narrow b_log range.
struct IntersectionResidual {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  std::span<const FitSample> samples;
  double center;

  int inputs() const { return 5; }
  int values() const { return static_cast<int>(samples.size()); }

  // x = [alpha, beta, g, delta, epsilon]
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      double model = x[0] * std::exp(-x[1] * s.h_s) - std::exp(x[2] - x[3] * (s.b_log - center)) + x[4];
      fvec[static_cast<Eigen::Index>(i)] = model - s.ap;
    }
    return 0;
  }

  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& fjac) const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      auto r = static_cast<Eigen::Index>(i);
      double e_h = std::exp(-x[1] * s.h_s);
      double e_b = std::exp(x[2] - x[3] * (s.b_log - center));
      fjac(r, 0) = e_h;
      fjac(r, 1) = -x[0] * s.h_s * e_h;
      fjac(r, 2) = -e_b;
      fjac(r, 3) = (s.b_log - center) * e_b;
      fjac(r, 4) = 1.0;
    }
    return 0;
  }
};

struct CorridorResidual {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  std::span<const FitSample> samples;

  int inputs() const { return 5; }
  int values() const { return static_cast<int>(samples.size()); }

  // x = [kappa, lambda, lambda0, nu, mu]
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      double sig = 1.0 / (1.0 + std::exp(-x[1] * (s.b_log - x[2])));
      fvec[static_cast<Eigen::Index>(i)] = (x[0] * sig - x[4]) * std::exp(-x[3] * s.h_s) - s.ap;
    }
    return 0;
  }

  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& fjac) const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      auto r = static_cast<Eigen::Index>(i);
      double sig = 1.0 / (1.0 + std::exp(-x[1] * (s.b_log - x[2])));
      double dsig = sig * (1.0 - sig);
      double decay = std::exp(-x[3] * s.h_s);
      double amp = x[0] * sig - x[4];
      fjac(r, 0) = sig * decay;
      fjac(r, 1) = x[0] * dsig * (s.b_log - x[2]) * decay;
      fjac(r, 2) = -x[0] * dsig * x[1] * decay;
      fjac(r, 3) = -s.h_s * amp * decay;
      fjac(r, 4) = -decay;
    }
    return 0;
  }
};

template <class Functor>
double minimize(Functor& f, Eigen::VectorXd& x) {
  Eigen::LevenbergMarquardt<Functor> lm(f);
  lm.parameters.maxfev = 4000;
  lm.parameters.xtol = 1e-15;
  lm.parameters.ftol = 1e-15;
  lm.minimize(x);
  Eigen::VectorXd r(f.values());
  f(x, r);
  if (!r.allFinite() || !x.allFinite()) return std::numeric_limits<double>::infinity();
  return std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

void check_sample_set(std::span<const FitSample> samples) {
  if (samples.size() < 10) throw FitError("need at least 10 samples, got " + std::to_string(samples.size()));
  auto [hmin, hmax] = std::minmax_element(samples.begin(), samples.end(),
                                          [](const auto& a, const auto& b) { return a.h_s < b.h_s; });
  auto [bmin, bmax] = std::minmax_element(samples.begin(), samples.end(),
                                          [](const auto& a, const auto& b) { return a.b_log < b.b_log; });
  if (hmax->h_s - hmin->h_s <= 0.0) throw FitError("samples do not vary in AoI");
  if (bmax->b_log - bmin->b_log <= 0.0) throw FitError("samples do not vary in volume");
  for (const auto& s : samples) {
    if (!(s.h_s >= 0.0) || !std::isfinite(s.b_log) || !(s.ap >= 0.0 && s.ap <= 1.0))
      throw FitError("sample outside domain (h_s >= 0, ap in [0,1])");
  }
}

}  // namespace

std::vector<FitSample> read_fit_samples(std::istream& in) {
  std::vector<FitSample> out;
  std::string line;
  bool header = false;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "h_s,b_log,ap") throw FitError("expected header 'h_s,b_log,ap', got '" + line + "'");
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    double v[3];
    int n = 0;
    while (n < 3 && std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v[n] = std::stod(cell, &used);
        if (used != cell.size()) n = 4;
      } catch (const std::exception&) {
        n = 4;
      }
      if (n == 4) break;
      ++n;
    }
    if (n != 3 || std::getline(ss, cell, ',')) {
      throw FitError("line " + std::to_string(line_no) + ": expected three numbers");
    }
    out.push_back({v[0], v[1], v[2]});
  }
  if (!header) throw FitError("empty sample file");
  return out;
}

FitResult fit_model(std::span<const FitSample> samples, ScenarioKind kind) {
  check_sample_set(samples);

  double ap_lo = 1.0, ap_hi = 0.0, b_lo = samples[0].b_log, b_hi = samples[0].b_log;
  for (const auto& s : samples) {
    ap_lo = std::min(ap_lo, s.ap);
    ap_hi = std::max(ap_hi, s.ap);
    b_lo = std::min(b_lo, s.b_log);
    b_hi = std::max(b_hi, s.b_log);
  }
  const double center = 0.5 * (b_lo + b_hi);

  std::optional<FitResult> best;
  int tried = 0;
  auto consider = [&](SurfaceParams params, double rmse) {
    if (!std::isfinite(rmse)) return;
    if (!best || rmse < best->rmse) best = FitResult{params, rmse, 0};
  };

  if (kind == ScenarioKind::kIntersection) {
    IntersectionResidual f{samples, center};
    for (double beta : {0.5, 2.0, 8.0}) {
      for (double delta : {0.2, 0.6, 1.5}) {
        for (double share : {0.3, 0.7}) {
          Eigen::VectorXd x(5);
          double span = std::max(ap_hi - ap_lo, 1e-3);
          x << share * span, beta, std::log(0.5 * span), delta, ap_lo + 0.5 * span;
          double rmse = minimize(f, x);
          ++tried;
          IntersectionParams p{x[0], x[1], std::exp(x[2] + x[3] * center), x[3], x[4]};
          if (p.alpha < 0 || p.beta < 0 || p.gamma < 0 || p.delta < 0 || p.epsilon < 0) continue;
          consider(p, rmse);
        }
      }
    }
  } else {
    CorridorResidual f{samples};
    for (double lambda : {0.5, 1.5, 4.0}) {
      for (double mid : {center - 1.5, center, center + 1.5}) {
        for (double nu : {1.0, 4.0, 12.0}) {
          Eigen::VectorXd x(5);
          x << std::max(ap_hi, 1e-3) * 1.1, lambda, mid, nu, 0.05 * std::max(ap_hi, 1e-3);
          double rmse = minimize(f, x);
          ++tried;
          CorridorParams p{x[0], x[1], x[2], x[3], x[4]};
          if (p.kappa < 0 || p.lambda <= 0 || p.lambda0 < 0 || p.nu < 0 || p.mu < 0) continue;
          if (!(p.kappa > p.mu)) continue;
          consider(p, rmse);
        }
      }
    }
  }

  if (!best) throw FitError("no start converged to nonnegative parameters");
  best->starts_tried = tried;
  return *best;
}

}  // namespace tampsim
