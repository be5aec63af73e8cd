#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "geofuse/raster.hpp"

namespace geofuse {

// Census bitstring, up to 128 bits (window <= 11).
struct CensusCode {
  std::array<uint64_t, 2> bits{0, 0};

  void set(int pos) { bits[pos >> 6] |= (uint64_t{1} << (pos & 63)); }
  int hamming(const CensusCode& o) const;
};

struct CensusGrid {
  int width = 0, height = 0, window = 0;
  std::vector<CensusCode> codes;

  const CensusCode& at(int x, int y) const {
    return codes[static_cast<size_t>(y) * width + x];
  }
};

// Census transform: bit k of the code covers window position k (row-major
// over the window, center excluded) and is 1 iff that neighbor is strictly
// larger than the center. Out-of-frame positions keep bit 0, so border codes
// stay positionally aligned with interior codes.
CensusGrid census_transform(const RasterGrid& image, int window = 9);

struct CostVolume {
  int width = 0, height = 0, dmax = 0;
  std::vector<float> costs;

  CostVolume() = default;
  CostVolume(int w, int h, int d)
      : width(w), height(h), dmax(d),
        costs(static_cast<size_t>(w) * h * d, 0.0f) {}

  float at(int x, int y, int d) const {
    return costs[(static_cast<size_t>(y) * width + x) * dmax + d];
  }
  float& at(int x, int y, int d) {
    return costs[(static_cast<size_t>(y) * width + x) * dmax + d];
  }
};

// C(x, y, d) = hamming(census_left(x, y), census_right(x - d, y)); matches
// falling off the left edge cost the window^2 sentinel.
CostVolume census_cost_volume(const RasterGrid& left, const RasterGrid& right, int dmax,
                              int window = 9);

struct SgmResult {
  CostVolume aggregated;   // S = sum over directions of L_r
  RasterGrid disparity;    // argmin_d S, lowest-d tie-break
  RasterGrid energy;       // min_d S
};

// Semi-global aggregation: per direction,
//   L_r(x,d) = C(x,d) + min{L_r(x-r,d), L_r(x-r,d±1)+P1, min_i L_r(x-r,i)+P2}
//              - min_k L_r(x-r,k)
// with L_r = C at path starts. directions must be 4 or 8.
SgmResult sgm_aggregate(const CostVolume& cost, double p1 = 10.0, double p2 = 120.0,
                        int directions = 8);

// mask_energy = energy < threshold; mask_edge passes through the edge grid.
std::pair<BoolGrid, BoolGrid> confidence_masks(const RasterGrid& energy, const BoolGrid& edges,
                                               double energy_threshold = 2500.0);

// Standard Canny: Gaussian smoothing, Sobel gradients, non-maximum
// suppression, and hysteresis thresholding on the gradient magnitude.
BoolGrid canny_edges(const RasterGrid& image, double low, double high,
                     double gaussian_sigma = 1.0);

// Quadratic within delta, linear beyond.
double huber(double residual, double delta);

struct LossWeights {
  double w1 = 0.1, w2 = 0.45, w3 = 0.45;
  double huber_delta = 1.0;
  double energy_threshold = 2500.0;

  void check() const;
};

struct TargetLoss {
  double total = 0.0, loss1 = 0.0, loss2 = 0.0, loss3 = 0.0;
  bool empty_energy_mask = false;
  bool empty_edge_mask = false;
};

// loss1 = mean Huber over all jointly valid pixels; loss2/loss3 restrict to
// the energy/edge masks; total = w1*loss1 + w2*loss2 + w3*loss3. An empty
// mask zeroes its term and sets the warning flag.
TargetLoss weighted_target_loss(const RasterGrid& pred, const RasterGrid& census_disp,
                                const BoolGrid& mask_energy, const BoolGrid& mask_edge,
                                const LossWeights& w);

// height = scale * disparity (synthetic-rig substitute for triangulation).
RasterGrid disparity_to_height(const RasterGrid& disparity, double scale);

}  // namespace geofuse
