#pragma once

#include <map>
#include <string>

#include "geofuse/raster.hpp"

namespace geofuse {

struct ShiftEstimate {
  int dx = 0;
  int dy = 0;
  double dz = 0.0;
  size_t inlier_count = 0;
  double rmse_after = 0.0;
};

// Integer-shift DSM co-registration by exhaustive search over the radius.
// Height residuals beyond outlier_threshold (after the robust dz) are
// discarded. The returned shift, applied to the target, aligns it to the
// reference.
ShiftEstimate coregister_dsm(const RasterGrid& target, const RasterGrid& reference,
                             double outlier_threshold = 6.0, int search_radius = 5);

// aligned(x, y) = target(x - dx, y - dy) + dz; uncovered pixels are nodata.
RasterGrid apply_shift(const RasterGrid& target, const ShiftEstimate& shift);

// Object heights above ground via top-hat by morphological reconstruction:
// the background is the reconstruction-by-dilation of
// max(dsm - max_object_height, scene minimum) under the dsm, and
// nDSM = dsm - background. Objects taller than max_object_height clip to it.
RasterGrid ndsm_tophat(const RasterGrid& dsm, double max_object_height = 30.0);

// (nir - red) / (nir + red); zero denominator yields nodata.
RasterGrid ndvi(const RasterGrid& nir, const RasterGrid& red);

struct MaskThresholds {
  double ndvi_veg = 0.3;   // vegetation cut on NDVI
  double h_tree = 2.0;     // meters
  double h_building = 3.0; // meters
};

// Rule-based masks: tree = veg & tall, grass = veg & low,
// building = non-veg & tall, ground_road = remainder. Disjoint and covering.
ClassMaskSet derive_class_masks(const RasterGrid& ndvi, const RasterGrid& ndsm,
                                const MaskThresholds& thresholds);

// Per class: mean over masked pixels of the per-pixel temporal standard
// deviation. Classes whose mask selects no usable pixel are omitted.
std::map<std::string, double> class_uncertainty(const TemporalStack& stack,
                                                const ClassMaskSet& masks);

// Per-pixel temporal median; even counts average the two central values.
RasterGrid median_fuse(const TemporalStack& stack);

// Median over the (spatial disk x temporal) samples sharing the pixel's
// class label. Pixels not covered by any mask fall back to the temporal
// median.
RasterGrid adaptive_median_fuse(const TemporalStack& stack, const ClassMaskSet& masks,
                                int radius = 7);

// Single-linkage 1-D clustering of the window x dates samples (merge while
// the gap between sorted neighbors is below link_threshold); the winning
// cluster has the largest cardinality, ties broken by smaller mean absolute
// deviation from its median, then by lower median. Output is the winning
// cluster's median.
RasterGrid kmedian_cluster_fuse(const TemporalStack& stack, int window = 5,
                                double link_threshold = 10.0);

// Residual-weighted temporal average: w_i = exp(-r_i^2 / (2 sigma_w^2)) with
// r_i the deviation from the reference (temporal median when null).
RasterGrid weighted_average_fuse(const TemporalStack& stack,
                                 const RasterGrid* reference = nullptr, double sigma_w = 3.0);

struct FusionBandwidths {
  double sigma_r = 30.0;  // ortho intensity units
  double sigma_s = 5.0;   // pixels
  std::map<std::string, double> sigma_h = {
      {"building", 3.0}, {"ground_road", 3.0}, {"tree", 7.0}, {"grass", 7.0}, {"water", 7.0}};
  int window = 5;

  void check() const;
};

// Adaptive semantic spatiotemporal fusion: Gaussian weights in ortho
// intensity, space, and deviation from the per-pixel temporal median, with
// the height bandwidth selected by the class mask at the output pixel.
// Samples h(k, l, t) are aggregated; zero total weight falls back to the
// temporal median.
RasterGrid adaptive_st_fuse(const TemporalStack& stack, const RasterGrid& ortho,
                            const ClassMaskSet& masks, const FusionBandwidths& bw);

}  // namespace geofuse
