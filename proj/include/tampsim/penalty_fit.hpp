#pragma once

#include <istream>
#include <span>
#include <vector>

#include "tampsim/penalty_model.hpp"

namespace tampsim {

struct FitSample {
  double h_s = 0.0;    // AoI, seconds
  double b_log = 0.0;  // volume, log2(bytes)
  double ap = 0.0;
};

struct FitResult {
  SurfaceParams params;
  double rmse = 0.0;
  int starts_tried = 0;
};

/// Reads `h_s,b_log,ap` rows. Lines starting with '#' are skipped and the
/// header row is required. Throws FitError naming the bad line.
std::vector<FitSample> read_fit_samples(std::istream& in);

/// Least-squares fit of the surface family for `kind` (multi-start
/// Levenberg-Marquardt). Throws FitError on fewer than 10 samples, samples
/// that do not vary along both axes, or when no start converges to a
/// parameter set satisfying the model invariants.
FitResult fit_model(std::span<const FitSample> samples, ScenarioKind kind);

}  // namespace tampsim
