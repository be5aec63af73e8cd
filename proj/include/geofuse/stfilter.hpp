#pragma once

#include "geofuse/raster.hpp"

namespace geofuse {

// Parameters of the 3D spatiotemporal homogenization filter. Inputs are
// expected normalized to [0,1] per band so the sigma_Ts scale matches the
// documented 0-0.9 sweep range. sigma_Ts = 0 selects the pure per-date
// bilateral path.
struct StFilterParams {
  double sigma_x = 3.0;
  double sigma_s = 0.19;
  double sigma_Ts = 0.2;
  int window = 5;

  void check() const;
};

// Edge-preserving bilateral filter: weights
//   exp(-|dx|^2 / (2 sigma_x^2) - |dI|^2 / (2 sigma_s^2))
// over a clipped window, renormalized over the valid contributors.
// An all-nodata window (or nodata center) yields a nodata pixel.
RasterGrid bilateral_filter(const RasterGrid& grid, double sigma_x, double sigma_s, int window);

// 3D spatiotemporal filter over one band. For the output at (i_x, i_t) the
// weight of sample (j_x, j_t) is
//   exp(-|j_x-i_x|^2/(2 sx^2)) * exp(-|I(j_x,i_t)-I(i_x,i_t)|^2/(2 ss^2))
//     * exp(-|I(i_x,j_t)-I(i_x,i_t)|^2/(2 sTs^2))
// and the aggregated value is I(j_x, j_t). Weights renormalize to sum 1.
// Bands never mix; the temporal-position bandwidth is fixed at infinity.
TemporalStack stfilter(const TemporalStack& stack, const StFilterParams& params);
MultiBandStack stfilter(const MultiBandStack& stack, const StFilterParams& params);

// Per-pixel population standard deviation across dates (valid samples only).
// Requires >= 2 dates.
RasterGrid temporal_variance_profile(const TemporalStack& stack);

}  // namespace geofuse
