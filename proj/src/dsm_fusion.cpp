#include "geofuse/dsm_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geofuse/parallel.hpp"

namespace geofuse {

namespace {

double median_of_sorted(const std::vector<double>& v) {
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double median_inplace(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  return median_of_sorted(v);
}

}  // namespace

ShiftEstimate coregister_dsm(const RasterGrid& target, const RasterGrid& reference,
                             double outlier_threshold, int search_radius) {
  if (!target.same_shape(reference))
    throw DimensionError("coregister_dsm: dimension mismatch");
  if (search_radius < 0) throw DataError("coregister_dsm: negative search radius");

  const int w = reference.width(), h = reference.height();
  bool found = false;
  ShiftEstimate best;
  double best_cost = 0.0;
  int best_l1 = 0;

  std::vector<double> diffs;
  diffs.reserve(static_cast<size_t>(w) * h);

  for (int dy = -search_radius; dy <= search_radius; ++dy) {
    for (int dx = -search_radius; dx <= search_radius; ++dx) {
      diffs.clear();
      for (int y = 0; y < h; ++y) {
        const int ty = y - dy;
        if (ty < 0 || ty >= h) continue;
        for (int x = 0; x < w; ++x) {
          const int tx = x - dx;
          if (tx < 0 || tx >= w) continue;
          if (!reference.valid(x, y) || !target.valid(tx, ty)) continue;
          diffs.push_back(static_cast<double>(reference.at(x, y)) - target.at(tx, ty));
        }
      }
      if (diffs.size() < 100) continue;

      // Robust dz: median start, then the mean of the residual-gated inliers.
      std::vector<double> sorted = diffs;
      double dz = median_inplace(sorted);
      size_t inliers = 0;
      for (int pass = 0; pass < 2; ++pass) {
        double sum = 0.0;
        inliers = 0;
        for (double d : diffs) {
          if (std::abs(d - dz) <= outlier_threshold) {
            sum += d;
            ++inliers;
          }
        }
        if (inliers == 0) break;
        dz = sum / inliers;
      }
      if (inliers == 0) continue;

      // Truncated squared loss: inlier residuals count as-is, outliers cost
      // the threshold squared; normalized per compared pixel.
      double cost = 0.0, sq = 0.0;
      for (double d : diffs) {
        const double r = d - dz;
        if (std::abs(r) <= outlier_threshold) {
          cost += r * r;
          sq += r * r;
        } else {
          cost += outlier_threshold * outlier_threshold;
        }
      }
      cost /= static_cast<double>(diffs.size());
      const int l1 = std::abs(dx) + std::abs(dy);
      if (!found || cost < best_cost ||
          (cost == best_cost && (l1 < best_l1 || (l1 == best_l1 && (dy < best.dy ||
           (dy == best.dy && dx < best.dx)))))) {
        found = true;
        best_cost = cost;
        best_l1 = l1;
        best.dx = dx;
        best.dy = dy;
        best.dz = dz;
        best.inlier_count = inliers;
        best.rmse_after = std::sqrt(sq / static_cast<double>(inliers));
      }
    }
  }
  if (!found) throw DataError("coregister_dsm: insufficient overlap (< 100 valid pixels)");
  return best;
}

RasterGrid apply_shift(const RasterGrid& target, const ShiftEstimate& shift) {
  RasterGrid out(target.width(), target.height(), kNoData);
  for (int y = 0; y < target.height(); ++y)
    for (int x = 0; x < target.width(); ++x) {
      const int tx = x - shift.dx, ty = y - shift.dy;
      if (!target.in_bounds(tx, ty) || !target.valid(tx, ty)) continue;
      out.at(x, y) = static_cast<float>(target.at(tx, ty) + shift.dz);
    }
  return out;
}

RasterGrid ndsm_tophat(const RasterGrid& dsm, double max_object_height) {
  if (max_object_height < 0) throw DataError("ndsm_tophat: negative max_object_height");
  const int w = dsm.width(), h = dsm.height();
  const auto [lo, hi] = dsm.valid_range();
  (void)hi;

  // Marker floored at the scene minimum so open ground regrows to the
  // surface; above-ground objects are left max_object_height below it.
  RasterGrid marker(w, h, kNoData);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (dsm.valid(x, y))
        marker.at(x, y) = std::max(dsm.at(x, y) - static_cast<float>(max_object_height), lo);

  // Reconstruction by dilation under the dsm: hybrid raster/anti-raster
  // sweeps until a fixpoint.
  bool changed = true;
  while (changed) {
    changed = false;
    auto relax = [&](int x, int y, int nx, int ny) {
      if (!dsm.in_bounds(nx, ny)) return;
      const float nv = marker.at(nx, ny);
      if (!std::isfinite(nv)) return;
      const float cap = dsm.at(x, y);
      const float cand = std::min(nv, cap);
      if (cand > marker.at(x, y)) {
        marker.at(x, y) = cand;
        changed = true;
      }
    };
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!dsm.valid(x, y)) continue;
        relax(x, y, x - 1, y);
        relax(x, y, x, y - 1);
        relax(x, y, x - 1, y - 1);
        relax(x, y, x + 1, y - 1);
      }
    for (int y = h - 1; y >= 0; --y)
      for (int x = w - 1; x >= 0; --x) {
        if (!dsm.valid(x, y)) continue;
        relax(x, y, x + 1, y);
        relax(x, y, x, y + 1);
        relax(x, y, x + 1, y + 1);
        relax(x, y, x - 1, y + 1);
      }
  }

  RasterGrid out(w, h, kNoData);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (dsm.valid(x, y)) out.at(x, y) = std::max(0.0f, dsm.at(x, y) - marker.at(x, y));
  return out;
}

RasterGrid ndvi(const RasterGrid& nir, const RasterGrid& red) {
  if (!nir.same_shape(red)) throw DimensionError("ndvi: dimension mismatch");
  RasterGrid out(nir.width(), nir.height(), kNoData);
  for (int y = 0; y < nir.height(); ++y)
    for (int x = 0; x < nir.width(); ++x) {
      if (!nir.valid(x, y) || !red.valid(x, y)) continue;
      const double n = nir.at(x, y), r = red.at(x, y);
      const double denom = n + r;
      if (denom == 0.0) continue;
      out.at(x, y) = static_cast<float>((n - r) / denom);
    }
  return out;
}

ClassMaskSet derive_class_masks(const RasterGrid& ndvi, const RasterGrid& ndsm,
                                const MaskThresholds& thresholds) {
  if (!ndvi.same_shape(ndsm)) throw DimensionError("derive_class_masks: dimension mismatch");
  const int w = ndvi.width(), h = ndvi.height();
  ClassMaskSet set;
  set.masks = {{"tree", BoolGrid(w, h)},
               {"grass", BoolGrid(w, h)},
               {"building", BoolGrid(w, h)},
               {"ground_road", BoolGrid(w, h)}};
  BoolGrid& tree = set.masks[0].second;
  BoolGrid& grass = set.masks[1].second;
  BoolGrid& building = set.masks[2].second;
  BoolGrid& ground = set.masks[3].second;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = ndvi.valid(x, y) ? ndvi.at(x, y) : 0.0;
      const double z = ndsm.valid(x, y) ? ndsm.at(x, y) : 0.0;
      const bool veg = v > thresholds.ndvi_veg;
      if (veg && z > thresholds.h_tree)
        tree.set(x, y, true);
      else if (veg)
        grass.set(x, y, true);
      else if (z > thresholds.h_building)
        building.set(x, y, true);
      else
        ground.set(x, y, true);
    }
  return set;
}

std::map<std::string, double> class_uncertainty(const TemporalStack& stack,
                                                const ClassMaskSet& masks) {
  stack.check();
  if (stack.count() < 2) throw DataError("class_uncertainty: needs >= 2 dates");
  std::map<std::string, double> out;
  for (const auto& [name, mask] : masks.masks) {
    double sum = 0.0;
    size_t n = 0;
    for (int y = 0; y < stack.height(); ++y)
      for (int x = 0; x < stack.width(); ++x) {
        if (!mask.at(x, y)) continue;
        double s = 0.0, s2 = 0.0;
        int k = 0;
        for (const RasterGrid& g : stack.grids) {
          if (!g.valid(x, y)) continue;
          const double v = g.at(x, y);
          s += v;
          s2 += v * v;
          ++k;
        }
        if (k < 2) continue;
        const double mean = s / k;
        sum += std::sqrt(std::max(0.0, s2 / k - mean * mean));
        ++n;
      }
    if (n > 0) out[name] = sum / static_cast<double>(n);
  }
  return out;
}

RasterGrid median_fuse(const TemporalStack& stack) {
  stack.check();
  const int w = stack.width(), h = stack.height();
  RasterGrid out(w, h, kNoData);
  parallel_rows(h, [&](int y) {
    std::vector<double> vals;
    for (int x = 0; x < w; ++x) {
      vals.clear();
      for (const RasterGrid& g : stack.grids)
        if (g.valid(x, y)) vals.push_back(g.at(x, y));
      if (vals.empty()) continue;
      out.at(x, y) = static_cast<float>(median_inplace(vals));
    }
  });
  return out;
}

RasterGrid adaptive_median_fuse(const TemporalStack& stack, const ClassMaskSet& masks,
                                int radius) {
  stack.check();
  if (radius < 0) throw DataError("adaptive_median_fuse: negative radius");
  const int w = stack.width(), h = stack.height();
  const RasterGrid fallback = median_fuse(stack);
  RasterGrid out(w, h, kNoData);
  parallel_rows(h, [&](int y) {
    std::vector<double> vals;
    for (int x = 0; x < w; ++x) {
      const std::string* cls = masks.class_at(x, y);
      if (cls == nullptr) {
        out.at(x, y) = fallback.at(x, y);  // uncovered: temporal median
        continue;
      }
      const BoolGrid& mask = *masks.find(*cls);
      vals.clear();
      for (int dy = -radius; dy <= radius; ++dy) {
        const int ny = y + dy;
        if (ny < 0 || ny >= h) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          const int nx = x + dx;
          if (nx < 0 || nx >= w) continue;
          if (dx * dx + dy * dy > radius * radius) continue;  // disk window
          if (!mask.at(nx, ny)) continue;
          for (const RasterGrid& g : stack.grids)
            if (g.valid(nx, ny)) vals.push_back(g.at(nx, ny));
        }
      }
      if (vals.empty()) continue;
      out.at(x, y) = static_cast<float>(median_inplace(vals));
    }
  });
  return out;
}

namespace {

struct Cluster {
  size_t begin = 0, end = 0;  // half-open range into the sorted sample array
  double median = 0.0;
  double mad = 0.0;  // mean absolute deviation from the cluster median
  size_t size() const { return end - begin; }
};

}  // namespace

RasterGrid kmedian_cluster_fuse(const TemporalStack& stack, int window, double link_threshold) {
  stack.check();
  if (window < 1 || window % 2 == 0) throw DataError("kmedian_cluster_fuse: window must be odd");
  if (link_threshold <= 0) throw DataError("kmedian_cluster_fuse: non-positive link threshold");
  const int w = stack.width(), h = stack.height();
  const int r = window / 2;
  RasterGrid out(w, h, kNoData);
  parallel_rows(h, [&](int y) {
    std::vector<double> vals;
    std::vector<Cluster> clusters;
    for (int x = 0; x < w; ++x) {
      vals.clear();
      for (int dy = -r; dy <= r; ++dy) {
        const int ny = y + dy;
        if (ny < 0 || ny >= h) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int nx = x + dx;
          if (nx < 0 || nx >= w) continue;
          for (const RasterGrid& g : stack.grids)
            if (g.valid(nx, ny)) vals.push_back(g.at(nx, ny));
        }
      }
      if (vals.empty()) continue;
      std::sort(vals.begin(), vals.end());

      // Single-linkage on sorted 1-D values: split where the gap reaches the
      // threshold.
      clusters.clear();
      size_t begin = 0;
      for (size_t i = 1; i <= vals.size(); ++i) {
        if (i == vals.size() || vals[i] - vals[i - 1] >= link_threshold) {
          Cluster c;
          c.begin = begin;
          c.end = i;
          std::vector<double> sub(vals.begin() + begin, vals.begin() + i);
          c.median = median_of_sorted(sub);
          double dev = 0.0;
          for (double v : sub) dev += std::abs(v - c.median);
          c.mad = dev / static_cast<double>(sub.size());
          clusters.push_back(c);
          begin = i;
        }
      }

      // Winning cluster: largest cardinality, then most consistent (lowest
      // mean absolute deviation), then lower median.
      const Cluster* best = &clusters.front();
      for (const Cluster& c : clusters) {
        if (c.size() > best->size() ||
            (c.size() == best->size() &&
             (c.mad < best->mad || (c.mad == best->mad && c.median < best->median))))
          best = &c;
      }
      out.at(x, y) = static_cast<float>(best->median);
    }
  });
  return out;
}

RasterGrid weighted_average_fuse(const TemporalStack& stack, const RasterGrid* reference,
                                 double sigma_w) {
  stack.check();
  RasterGrid ref = reference != nullptr ? *reference : median_fuse(stack);
  if (!ref.same_shape(stack.grids.front()))
    throw DimensionError("weighted_average_fuse: reference dimension mismatch");
  const int w = stack.width(), h = stack.height();
  RasterGrid out(w, h, kNoData);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (!ref.valid(x, y)) continue;
      const double rv = ref.at(x, y);
      double wsum = 0.0, vsum = 0.0;
      for (const RasterGrid& g : stack.grids) {
        if (!g.valid(x, y)) continue;
        const double v = g.at(x, y);
        const double res = v - rv;
        const double wgt = gauss(res * res, sigma_w);
        wsum += wgt;
        vsum += wgt * v;
      }
      // All samples far from the reference: keep the reference value.
      out.at(x, y) = wsum < 1e-12 ? static_cast<float>(rv)
                                  : static_cast<float>(vsum / wsum);
    }
  });
  return out;
}

void FusionBandwidths::check() const {
  if (window < 1 || window % 2 == 0) throw DataError("FusionBandwidths: window must be odd");
  if (sigma_r <= 0 || sigma_s <= 0) throw DataError("FusionBandwidths: bandwidths must be > 0");
  for (const auto& [c, s] : sigma_h)
    if (s <= 0) throw DataError("FusionBandwidths: sigma_h for '" + c + "' must be > 0");
}

RasterGrid adaptive_st_fuse(const TemporalStack& stack, const RasterGrid& ortho,
                            const ClassMaskSet& masks, const FusionBandwidths& bw) {
  stack.check();
  bw.check();
  if (!ortho.same_shape(stack.grids.front()))
    throw DimensionError("adaptive_st_fuse: ortho dimension mismatch");
  const int w = stack.width(), h = stack.height();
  const int r = bw.window / 2;
  const RasterGrid h_med = median_fuse(stack);
  RasterGrid out(w, h, kNoData);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (!h_med.valid(x, y)) continue;
      const std::string* cls = masks.class_at(x, y);
      double sigma_h = bw.sigma_s;  // placeholder, replaced below
      if (cls != nullptr) {
        const auto it = bw.sigma_h.find(*cls);
        if (it == bw.sigma_h.end())
          throw DataError("adaptive_st_fuse: missing sigma_h for class '" + *cls + "'");
        sigma_h = it->second;
      } else {
        throw DataError("adaptive_st_fuse: masks do not cover pixel");
      }
      const double med = h_med.at(x, y);
      const bool ortho_c_valid = ortho.valid(x, y);
      const double ortho_c = ortho_c_valid ? ortho.at(x, y) : 0.0;
      double wsum = 0.0, vsum = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int ny = y + dy;
        if (ny < 0 || ny >= h) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int nx = x + dx;
          if (nx < 0 || nx >= w) continue;
          if (!ortho_c_valid || !ortho.valid(nx, ny)) continue;
          const double di = ortho_c - ortho.at(nx, ny);
          const double spatial2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
          const double wr_ws = gauss(di * di, bw.sigma_r) * gauss(spatial2, bw.sigma_s);
          for (const RasterGrid& g : stack.grids) {
            if (!g.valid(nx, ny)) continue;
            const double hv = g.at(nx, ny);
            const double dh = med - hv;
            const double wgt = wr_ws * gauss(dh * dh, sigma_h);
            wsum += wgt;
            vsum += wgt * hv;
          }
        }
      }
      // Zero total weight: fall back to the temporal median.
      out.at(x, y) = wsum > 0.0 ? static_cast<float>(vsum / wsum) : static_cast<float>(med);
    }
  });
  return out;
}

}  // namespace geofuse
