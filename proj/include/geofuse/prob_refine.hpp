#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "geofuse/raster.hpp"

namespace geofuse {

// CIELAB composite of one date (L* in [0,100], a*/b* roughly [-128,128]).
struct LabImage {
  RasterGrid L, a, b;
};

// Channelwise sRGB (D65) -> CIELAB. Inputs must be in [0,1]; the caller maps
// near-infrared/red/green bands onto the r/g/b slots.
LabImage rgb_to_cielab(const RasterGrid& r, const RasterGrid& g, const RasterGrid& b);
std::array<double, 3> rgb_to_cielab(double r, double g, double b);

// Per-class height bandwidth: 0.35 x (max - min) of the masked nDSM values,
// floored at kSigmaFloor for a degenerate range.
double class_height_bandwidth(const RasterGrid& ndsm, const BoolGrid& mask);

// The combined spatial x spectral x height Gaussian weight.
double w3d_weight(double dx, double dy, const std::array<double, 3>& lab_center,
                  const std::array<double, 3>& lab_neighbor, double ndsm_center,
                  double ndsm_neighbor, double sigma_s, double sigma_r, double sigma_h);

// Per-class, per-date probability grids in [0,1]. maps[c][t] holds class c at
// date index t.
struct ProbabilityStack {
  std::vector<std::string> classes;
  std::vector<std::string> dates;
  std::vector<std::vector<RasterGrid>> maps;

  int width() const;
  int height() const;
  void check() const;
};

struct RefineParams {
  double sigma_s = 3.0;  // pixels
  double sigma_r = 5.0;  // CIELAB units
  std::map<std::string, double> sigma_h;  // class -> meters; required per class
  int window = 5;
  double convergence = 0.05;  // relative-change stop threshold
  int max_iter = 20;
  bool renormalize = false;  // per-pixel class renormalization after each pass

  void check() const;
};

struct RefineResult {
  ProbabilityStack probs;
  int iterations = 0;
  // Max relative change per iteration, across all classes and dates.
  std::vector<double> history;
};

// Iterative probability refinement. The weight field is a pure function of
// the (fixed) spectral and height inputs, so it is computed once per class
// and reused across iterations; updates are Jacobi-style over the previous
// iterate. Iteration stops when the max relative change over valid pixels
// drops below `convergence`, or at max_iter.
RefineResult refine_probabilities(const ProbabilityStack& probs,
                                  const std::vector<LabImage>& lab,
                                  const TemporalStack& ndsm, const RefineParams& params);

// Per-pixel argmax labeling at one date; ties break to the lowest class
// index; pixels with no valid probability get kNoLabel.
LabelGrid classify_argmax(const ProbabilityStack& probs, size_t date_index);

}  // namespace geofuse
