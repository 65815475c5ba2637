#pragma once

#include <cmath>
#include <utility>

namespace tampsim {

struct ScalarMinimum {
  double x;
  double value;
};

/// Golden-section search for the minimum of a unimodal `f` on [lo, hi].
/// Stops when the bracket is narrower than `tol` or after `max_iter`
/// reductions. Returns the best point evaluated, endpoints included.
template <class F>
ScalarMinimum golden_section_minimize(F&& f, double lo, double hi, double tol, int max_iter = 200) {
  constexpr double kInvPhi = 0.6180339887498948482;
  if (hi < lo) std::swap(lo, hi);

  ScalarMinimum best{lo, f(lo)};
  auto keep = [&best](double x, double v) {
    if (v < best.value) best = {x, v};
  };
  keep(hi, f(hi));

  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  keep(c, fc);
  keep(d, fd);
  for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
      keep(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
      keep(d, fd);
    }
  }
  return best;
}

}  // namespace tampsim
