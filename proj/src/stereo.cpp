#include "geofuse/stereo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>

#include "geofuse/parallel.hpp"

namespace geofuse {

int CensusCode::hamming(const CensusCode& o) const {
  return std::popcount(bits[0] ^ o.bits[0]) + std::popcount(bits[1] ^ o.bits[1]);
}

CensusGrid census_transform(const RasterGrid& image, int window) {
  if (window < 1 || window % 2 == 0) throw DataError("census_transform: window must be odd");
  if (window > 11) throw DataError("census_transform: window > 11 exceeds 128 bits");
  const int r = window / 2;
  CensusGrid out;
  out.width = image.width();
  out.height = image.height();
  out.window = window;
  out.codes.assign(static_cast<size_t>(out.width) * out.height, CensusCode{});
  parallel_rows(out.height, [&](int y) {
    for (int x = 0; x < out.width; ++x) {
      CensusCode& code = out.codes[static_cast<size_t>(y) * out.width + x];
      const float c = image.at(x, y);
      int pos = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = x + dx, ny = y + dy;
          if (image.in_bounds(nx, ny) && image.valid(nx, ny) && std::isfinite(c) &&
              image.at(nx, ny) > c)
            code.set(pos);
          ++pos;
        }
    }
  });
  return out;
}

CostVolume census_cost_volume(const RasterGrid& left, const RasterGrid& right, int dmax,
                              int window) {
  if (!left.same_shape(right)) throw DimensionError("census_cost_volume: dimension mismatch");
  if (dmax < 1) throw DataError("census_cost_volume: dmax must be >= 1");
  const CensusGrid cl = census_transform(left, window);
  const CensusGrid cr = census_transform(right, window);
  const float sentinel = static_cast<float>(window) * window;
  CostVolume vol(left.width(), left.height(), dmax);
  parallel_rows(left.height(), [&](int y) {
    for (int x = 0; x < left.width(); ++x)
      for (int d = 0; d < dmax; ++d)
        vol.at(x, y, d) = x - d < 0
                              ? sentinel
                              : static_cast<float>(cl.at(x, y).hamming(cr.at(x - d, y)));
  });
  return vol;
}

namespace {

const std::array<std::pair<int, int>, 8> kDirections{{{1, 0},
                                                      {-1, 0},
                                                      {0, 1},
                                                      {0, -1},
                                                      {1, 1},
                                                      {-1, -1},
                                                      {1, -1},
                                                      {-1, 1}}};

// One directional pass of the scanline recurrence, accumulating into S.
void sgm_direction(const CostVolume& cost, double p1, double p2, int rx, int ry,
                   std::vector<double>& S) {
  const int w = cost.width, h = cost.height, dmax = cost.dmax;
  std::vector<double> L(static_cast<size_t>(w) * h * dmax, 0.0);
  auto lval = [&](int x, int y, int d) -> double& {
    return L[(static_cast<size_t>(y) * w + x) * dmax + d];
  };

  // Scan order guarantees the predecessor along (rx, ry) is already done.
  const int x0 = rx >= 0 ? 0 : w - 1, x1 = rx >= 0 ? w : -1, xs = rx >= 0 ? 1 : -1;
  const int y0 = ry >= 0 ? 0 : h - 1, y1 = ry >= 0 ? h : -1, ys = ry >= 0 ? 1 : -1;
  for (int y = y0; y != y1; y += ys) {
    for (int x = x0; x != x1; x += xs) {
      const int px = x - rx, py = y - ry;
      const bool has_prev = px >= 0 && px < w && py >= 0 && py < h;
      if (!has_prev) {
        for (int d = 0; d < dmax; ++d) lval(x, y, d) = cost.at(x, y, d);
        continue;
      }
      double prev_min = lval(px, py, 0);
      for (int d = 1; d < dmax; ++d) prev_min = std::min(prev_min, lval(px, py, d));
      for (int d = 0; d < dmax; ++d) {
        double best = lval(px, py, d);
        if (d > 0) best = std::min(best, lval(px, py, d - 1) + p1);
        if (d + 1 < dmax) best = std::min(best, lval(px, py, d + 1) + p1);
        best = std::min(best, prev_min + p2);
        lval(x, y, d) = cost.at(x, y, d) + best - prev_min;
      }
    }
  }
  for (size_t i = 0; i < S.size(); ++i) S[i] += L[i];
}

}  // namespace

SgmResult sgm_aggregate(const CostVolume& cost, double p1, double p2, int directions) {
  if (directions != 4 && directions != 8)
    throw DataError("sgm_aggregate: directions must be 4 or 8");
  if (p1 < 0 || p2 < p1) throw DataError("sgm_aggregate: requires P2 >= P1 >= 0");

  const int w = cost.width, h = cost.height, dmax = cost.dmax;
  std::vector<double> S(static_cast<size_t>(w) * h * dmax, 0.0);
  for (int i = 0; i < directions; ++i)
    sgm_direction(cost, p1, p2, kDirections[i].first, kDirections[i].second, S);

  SgmResult result;
  result.aggregated = CostVolume(w, h, dmax);
  result.disparity = RasterGrid(w, h, 0.0f);
  result.energy = RasterGrid(w, h, 0.0f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int best_d = 0;
      double best_s = S[(static_cast<size_t>(y) * w + x) * dmax];
      for (int d = 0; d < dmax; ++d) {
        const double s = S[(static_cast<size_t>(y) * w + x) * dmax + d];
        result.aggregated.at(x, y, d) = static_cast<float>(s);
        if (s < best_s) {
          best_s = s;
          best_d = d;
        }
      }
      result.disparity.at(x, y) = static_cast<float>(best_d);
      result.energy.at(x, y) = result.aggregated.at(x, y, best_d);
    }
  return result;
}

std::pair<BoolGrid, BoolGrid> confidence_masks(const RasterGrid& energy, const BoolGrid& edges,
                                               double energy_threshold) {
  if (energy.width() != edges.width() || energy.height() != edges.height())
    throw DimensionError("confidence_masks: dimension mismatch");
  BoolGrid mask_energy(energy.width(), energy.height());
  for (int y = 0; y < energy.height(); ++y)
    for (int x = 0; x < energy.width(); ++x)
      mask_energy.set(x, y, energy.valid(x, y) && energy.at(x, y) < energy_threshold);
  return {mask_energy, edges};
}

BoolGrid canny_edges(const RasterGrid& image, double low, double high, double gaussian_sigma) {
  if (!(high >= low && low > 0)) throw DataError("canny_edges: requires high >= low > 0");
  const int w = image.width(), h = image.height();

  // Separable Gaussian smoothing (nodata treated as absent).
  const int kr = std::max(1, static_cast<int>(std::ceil(3.0 * gaussian_sigma)));
  std::vector<double> kernel(2 * kr + 1);
  double ksum = 0.0;
  for (int i = -kr; i <= kr; ++i) {
    kernel[i + kr] = std::exp(-0.5 * i * i / (gaussian_sigma * gaussian_sigma));
    ksum += kernel[i + kr];
  }
  for (double& k : kernel) k /= ksum;

  std::vector<double> tmp(static_cast<size_t>(w) * h, 0.0), smooth(tmp);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0, wsum = 0.0;
      for (int i = -kr; i <= kr; ++i) {
        const int nx = std::clamp(x + i, 0, w - 1);
        if (!image.valid(nx, y)) continue;
        s += kernel[i + kr] * image.at(nx, y);
        wsum += kernel[i + kr];
      }
      tmp[static_cast<size_t>(y) * w + x] = wsum > 0 ? s / wsum : 0.0;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -kr; i <= kr; ++i) {
        const int ny = std::clamp(y + i, 0, h - 1);
        s += kernel[i + kr] * tmp[static_cast<size_t>(ny) * w + x];
      }
      smooth[static_cast<size_t>(y) * w + x] = s;
    }

  // Sobel gradients.
  std::vector<double> mag(static_cast<size_t>(w) * h, 0.0);
  std::vector<double> gx_v(mag), gy_v(mag);
  auto sv = [&](int x, int y) {
    return smooth[static_cast<size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = (sv(x + 1, y - 1) + 2 * sv(x + 1, y) + sv(x + 1, y + 1)) -
                        (sv(x - 1, y - 1) + 2 * sv(x - 1, y) + sv(x - 1, y + 1));
      const double gy = (sv(x - 1, y + 1) + 2 * sv(x, y + 1) + sv(x + 1, y + 1)) -
                        (sv(x - 1, y - 1) + 2 * sv(x, y - 1) + sv(x + 1, y - 1));
      gx_v[static_cast<size_t>(y) * w + x] = gx;
      gy_v[static_cast<size_t>(y) * w + x] = gy;
      mag[static_cast<size_t>(y) * w + x] = std::hypot(gx, gy);
    }

  // Non-maximum suppression over 4 quantized gradient directions; a strict
  // comparison on the leading neighbor keeps ridges one pixel wide.
  std::vector<uint8_t> nms(static_cast<size_t>(w) * h, 0);
  auto mv = [&](int x, int y) {
    return x < 0 || x >= w || y < 0 || y >= h ? 0.0 : mag[static_cast<size_t>(y) * w + x];
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double m = mag[static_cast<size_t>(y) * w + x];
      if (m < low) continue;
      const double gx = gx_v[static_cast<size_t>(y) * w + x];
      const double gy = gy_v[static_cast<size_t>(y) * w + x];
      const double angle = std::atan2(gy, gx);
      const double deg = std::fmod(angle * 180.0 / M_PI + 180.0, 180.0);
      int dx1, dy1;
      if (deg < 22.5 || deg >= 157.5) {
        dx1 = 1; dy1 = 0;
      } else if (deg < 67.5) {
        dx1 = 1; dy1 = 1;
      } else if (deg < 112.5) {
        dx1 = 0; dy1 = 1;
      } else {
        dx1 = -1; dy1 = 1;
      }
      if (m > mv(x + dx1, y + dy1) && m >= mv(x - dx1, y - dy1))
        nms[static_cast<size_t>(y) * w + x] = 1;
    }

  // Hysteresis: grow from strong pixels through weak ones (8-connected).
  BoolGrid edges(w, h);
  std::vector<uint8_t> state(static_cast<size_t>(w) * h, 0);  // 1 = weak, 2 = strong
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!nms[static_cast<size_t>(y) * w + x]) continue;
      const double m = mag[static_cast<size_t>(y) * w + x];
      if (m >= high) {
        state[static_cast<size_t>(y) * w + x] = 2;
        edges.set(x, y, true);
        queue.emplace_back(x, y);
      } else if (m >= low) {
        state[static_cast<size_t>(y) * w + x] = 1;
      }
    }
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        uint8_t& st = state[static_cast<size_t>(ny) * w + nx];
        if (st == 1) {
          st = 2;
          edges.set(nx, ny, true);
          queue.emplace_back(nx, ny);
        }
      }
  }
  return edges;
}

double huber(double residual, double delta) {
  if (delta <= 0) throw DataError("huber: delta must be > 0");
  const double a = std::abs(residual);
  return a <= delta ? 0.5 * residual * residual : delta * (a - 0.5 * delta);
}

void LossWeights::check() const {
  if (w1 < 0 || w2 < 0 || w3 < 0 || w1 + w2 + w3 <= 0)
    throw DataError("LossWeights: weights must be non-negative with positive sum");
  if (huber_delta <= 0) throw DataError("LossWeights: huber_delta must be > 0");
}

TargetLoss weighted_target_loss(const RasterGrid& pred, const RasterGrid& census_disp,
                                const BoolGrid& mask_energy, const BoolGrid& mask_edge,
                                const LossWeights& w) {
  w.check();
  if (!pred.same_shape(census_disp))
    throw DimensionError("weighted_target_loss: dimension mismatch");
  if (mask_energy.width() != pred.width() || mask_edge.width() != pred.width() ||
      mask_energy.height() != pred.height() || mask_edge.height() != pred.height())
    throw DimensionError("weighted_target_loss: mask dimension mismatch");

  double sum_all = 0.0, sum_energy = 0.0, sum_edge = 0.0;
  size_t n_all = 0, n_energy = 0, n_edge = 0;
  for (int y = 0; y < pred.height(); ++y)
    for (int x = 0; x < pred.width(); ++x) {
      if (!pred.valid(x, y) || !census_disp.valid(x, y)) continue;
      const double l = huber(static_cast<double>(pred.at(x, y)) - census_disp.at(x, y),
                             w.huber_delta);
      sum_all += l;
      ++n_all;
      if (mask_energy.at(x, y)) {
        sum_energy += l;
        ++n_energy;
      }
      if (mask_edge.at(x, y)) {
        sum_edge += l;
        ++n_edge;
      }
    }
  if (n_all == 0) throw DataError("weighted_target_loss: no jointly valid pixel");

  TargetLoss out;
  out.loss1 = sum_all / static_cast<double>(n_all);
  out.empty_energy_mask = n_energy == 0;
  out.empty_edge_mask = n_edge == 0;
  out.loss2 = n_energy == 0 ? 0.0 : sum_energy / static_cast<double>(n_energy);
  out.loss3 = n_edge == 0 ? 0.0 : sum_edge / static_cast<double>(n_edge);
  out.total = w.w1 * out.loss1 + w.w2 * out.loss2 + w.w3 * out.loss3;
  return out;
}

RasterGrid disparity_to_height(const RasterGrid& disparity, double scale) {
  if (scale <= 0) throw DataError("disparity_to_height: scale must be > 0");
  RasterGrid out = disparity;
  for (float& v : out.samples())
    if (std::isfinite(v)) v = static_cast<float>(v * scale);
  return out;
}

}  // namespace geofuse
