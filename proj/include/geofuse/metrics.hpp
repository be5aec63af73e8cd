#pragma once

#include <array>
#include <map>
#include <vector>

#include "geofuse/raster.hpp"

namespace geofuse {

struct ConfusionCounts {
  size_t tp = 0, tn = 0, fp = 0, fn = 0;
  size_t positives() const { return tp + fn; }
  size_t negatives() const { return tn + fp; }
};

ConfusionCounts confusion(const BoolGrid& pred_mask, const BoolGrid& gt_mask);

// Root mean squared error over jointly valid pixels.
double rmse(const RasterGrid& pred, const RasterGrid& gt);

// Valid-pixel fraction, as a percentage.
double completeness(const RasterGrid& pred);

struct Prf1 {
  double recall = 0.0, precision = 0.0, f1 = 0.0;
  bool degenerate = false;  // a division-by-zero case was clamped to 0
};

// Recall/precision/F1. In normalized mode the confusion counts are replaced
// by class rates (tp/P, fp/N) before computing precision, removing the
// class-imbalance sampling bias; recall is unaffected by the normalization.
Prf1 prf1(const BoolGrid& pred_mask, const BoolGrid& gt_mask, bool normalized = true);
Prf1 prf1_from_counts(const ConfusionCounts& counts, bool normalized = true);
Prf1 prf1_from_rates(double recall, double precision);

// Otsu threshold over a 256-bin histogram: the cut t in [0,255] maximizing
// between-class variance of [0..t] vs [t+1..255]; ties take the lowest t.
int otsu_threshold(const std::array<double, 256>& histogram);
// Grid variant: valid samples are clamped to [0,255] and binned by rounding.
int otsu_threshold(const RasterGrid& values);

// Image-differencing change detection: per-pixel Euclidean norm of the band
// differences between the two dates, min-max scaled to 8 bits, Otsu
// thresholded; above-threshold pixels flag change. A constant difference
// image yields an all-no-change mask.
BoolGrid change_mask(const std::vector<RasterGrid>& bands_a,
                     const std::vector<RasterGrid>& bands_b);

struct RobustFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
  int iterations = 0;
};

// Straight-line fit by iteratively reweighted least squares with bisquare
// weights (tuning constant 4.685, MAD scale). R^2 = (s0^2 - s1^2) / s0^2
// where both sums of squares use the final robust weights, so points the fit
// rejected do not count against it.
RobustFit robust_r2(const std::vector<double>& x, const std::vector<double>& y);
// Plain least squares, for comparison.
RobustFit ols_fit(const std::vector<double>& x, const std::vector<double>& y);

struct AccuracyResult {
  double overall = 0.0;                 // fraction of jointly labeled pixels correct
  std::map<int32_t, double> per_class;  // gt class -> recall within that class
};

AccuracyResult accuracy(const LabelGrid& pred, const LabelGrid& gt);

}  // namespace geofuse
