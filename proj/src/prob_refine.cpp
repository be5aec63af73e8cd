#include "geofuse/prob_refine.hpp"

#include <algorithm>
#include <cmath>

#include "geofuse/parallel.hpp"

namespace geofuse {

namespace {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double kDelta = 6.0 / 29.0;
  return t > kDelta * kDelta * kDelta ? std::cbrt(t)
                                      : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

}  // namespace

std::array<double, 3> rgb_to_cielab(double r, double g, double b) {
  const double rl = srgb_to_linear(r);
  const double gl = srgb_to_linear(g);
  const double bl = srgb_to_linear(b);
  // sRGB -> XYZ, D65 white.
  const double X = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  const double Y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  const double Z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
  constexpr double Xn = 0.95047, Yn = 1.0, Zn = 1.08883;
  const double fx = lab_f(X / Xn), fy = lab_f(Y / Yn), fz = lab_f(Z / Zn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabImage rgb_to_cielab(const RasterGrid& r, const RasterGrid& g, const RasterGrid& b) {
  if (!r.same_shape(g) || !r.same_shape(b))
    throw DimensionError("rgb_to_cielab: channel dimension mismatch");
  LabImage out{RasterGrid(r.width(), r.height(), kNoData),
               RasterGrid(r.width(), r.height(), kNoData),
               RasterGrid(r.width(), r.height(), kNoData)};
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) {
      if (!r.valid(x, y) || !g.valid(x, y) || !b.valid(x, y)) continue;
      const double rv = r.at(x, y), gv = g.at(x, y), bv = b.at(x, y);
      if (rv < 0.0 || rv > 1.0 || gv < 0.0 || gv > 1.0 || bv < 0.0 || bv > 1.0)
        throw DataError("rgb_to_cielab: input outside [0,1]");
      const auto lab = rgb_to_cielab(rv, gv, bv);
      out.L.at(x, y) = static_cast<float>(lab[0]);
      out.a.at(x, y) = static_cast<float>(lab[1]);
      out.b.at(x, y) = static_cast<float>(lab[2]);
    }
  return out;
}

double class_height_bandwidth(const RasterGrid& ndsm, const BoolGrid& mask) {
  if (ndsm.width() != mask.width() || ndsm.height() != mask.height())
    throw DimensionError("class_height_bandwidth: mask dimension mismatch");
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  bool any = false;
  for (int y = 0; y < ndsm.height(); ++y)
    for (int x = 0; x < ndsm.width(); ++x) {
      if (!mask.at(x, y) || !ndsm.valid(x, y)) continue;
      any = true;
      lo = std::min(lo, static_cast<double>(ndsm.at(x, y)));
      hi = std::max(hi, static_cast<double>(ndsm.at(x, y)));
    }
  if (!any) throw DataError("class_height_bandwidth: mask selects no valid pixel");
  return floored_sigma(0.35 * (hi - lo));
}

double w3d_weight(double dx, double dy, const std::array<double, 3>& lab_center,
                  const std::array<double, 3>& lab_neighbor, double ndsm_center,
                  double ndsm_neighbor, double sigma_s, double sigma_r, double sigma_h) {
  const double spatial2 = dx * dx + dy * dy;
  double lab2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = lab_center[i] - lab_neighbor[i];
    lab2 += d * d;
  }
  const double dh = ndsm_center - ndsm_neighbor;
  return gauss(spatial2, sigma_s) * gauss(lab2, sigma_r) * gauss(dh * dh, sigma_h);
}

int ProbabilityStack::width() const {
  return maps.empty() || maps.front().empty() ? 0 : maps.front().front().width();
}
int ProbabilityStack::height() const {
  return maps.empty() || maps.front().empty() ? 0 : maps.front().front().height();
}

void ProbabilityStack::check() const {
  if (classes.empty() || classes.size() != maps.size())
    throw DataError("ProbabilityStack: classes/maps mismatch");
  for (const auto& per_class : maps) {
    if (per_class.size() != dates.size())
      throw DataError("ProbabilityStack: date count mismatch");
    for (const RasterGrid& g : per_class) {
      if (g.width() != width() || g.height() != height())
        throw DimensionError("ProbabilityStack: grid dimension mismatch");
      for (float v : g.samples()) {
        if (!std::isfinite(v)) continue;
        if (v < 0.0f || v > 1.0f) throw DataError("ProbabilityStack: probability outside [0,1]");
      }
    }
  }
}

void RefineParams::check() const {
  if (window < 1 || window % 2 == 0) throw DataError("RefineParams: window must be odd");
  if (convergence <= 0.0 || convergence >= 1.0)
    throw DataError("RefineParams: convergence must be in (0,1)");
  if (max_iter < 1) throw DataError("RefineParams: max_iter must be >= 1");
}

namespace {

// Per-pixel list of contributing (flattened sample offset, weight) pairs.
using WeightCell = std::vector<std::pair<uint32_t, float>>;

}  // namespace

RefineResult refine_probabilities(const ProbabilityStack& probs,
                                  const std::vector<LabImage>& lab,
                                  const TemporalStack& ndsm, const RefineParams& params) {
  probs.check();
  params.check();
  const int w = probs.width(), h = probs.height();
  const size_t T = probs.dates.size();
  const size_t plane = static_cast<size_t>(w) * h;
  if (lab.size() != T || ndsm.count() != T)
    throw DataError("refine_probabilities: stack date counts differ");
  if (ndsm.width() != w || ndsm.height() != h)
    throw DimensionError("refine_probabilities: ndsm dimension mismatch");
  for (const LabImage& li : lab)
    if (li.L.width() != w || li.L.height() != h)
      throw DimensionError("refine_probabilities: lab dimension mismatch");

  const int r = params.window / 2;
  const double eps_p = 1e-6;
  const size_t n_classes = probs.classes.size();

  // W3D is a pure function of the spectral and height inputs, so it is
  // computed once per class and reused across iterations. Classes differ
  // only in sigma_h.
  std::vector<double> sigma_h(n_classes);
  for (size_t c = 0; c < n_classes; ++c) {
    const auto it = params.sigma_h.find(probs.classes[c]);
    if (it == params.sigma_h.end())
      throw DataError("refine_probabilities: missing sigma_h for class '" + probs.classes[c] + "'");
    sigma_h[c] = it->second;
  }

  std::vector<std::vector<WeightCell>> weights(n_classes,
                                               std::vector<WeightCell>(T * plane));
  for (size_t c = 0; c < n_classes; ++c) {
    for (size_t tm = 0; tm < T; ++tm) {
      parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
          WeightCell& cell = weights[c][tm * plane + static_cast<size_t>(y) * w + x];
          if (!lab[tm].L.valid(x, y) || !ndsm.grids[tm].valid(x, y)) continue;
          const std::array<double, 3> lab_c{lab[tm].L.at(x, y), lab[tm].a.at(x, y),
                                            lab[tm].b.at(x, y)};
          const double h_c = ndsm.grids[tm].at(x, y);
          for (size_t tn = 0; tn < T; ++tn) {
            for (int dy = -r; dy <= r; ++dy) {
              const int ny = y + dy;
              if (ny < 0 || ny >= h) continue;
              for (int dx = -r; dx <= r; ++dx) {
                const int nx = x + dx;
                if (nx < 0 || nx >= w) continue;
                if (!lab[tn].L.valid(nx, ny) || !ndsm.grids[tn].valid(nx, ny)) continue;
                const std::array<double, 3> lab_n{lab[tn].L.at(nx, ny), lab[tn].a.at(nx, ny),
                                                  lab[tn].b.at(nx, ny)};
                const double wgt =
                    w3d_weight(dx, dy, lab_c, lab_n, h_c, ndsm.grids[tn].at(nx, ny),
                               params.sigma_s, params.sigma_r, sigma_h[c]);
                cell.emplace_back(static_cast<uint32_t>(tn * plane + ny * w + nx),
                                  static_cast<float>(wgt));
              }
            }
          }
        }
      });
    }
  }

  // Flattened per-class iterates over (date, pixel).
  std::vector<std::vector<float>> prev(n_classes, std::vector<float>(T * plane));
  std::vector<std::vector<float>> next(n_classes, std::vector<float>(T * plane));
  for (size_t c = 0; c < n_classes; ++c)
    for (size_t t = 0; t < T; ++t)
      std::copy(probs.maps[c][t].samples().begin(), probs.maps[c][t].samples().end(),
                prev[c].begin() + t * plane);

  RefineResult result;
  result.probs = probs;

  int iter = 0;
  for (; iter < params.max_iter; ++iter) {
    double max_rel = 0.0;
    for (size_t c = 0; c < n_classes; ++c) {
      std::vector<double> row_change(h, 0.0);
      for (size_t tm = 0; tm < T; ++tm) {
        parallel_rows(h, [&](int y) {
          for (int x = 0; x < w; ++x) {
            const size_t idx = tm * plane + static_cast<size_t>(y) * w + x;
            const WeightCell& cell = weights[c][idx];
            if (cell.empty() || !std::isfinite(prev[c][idx])) {
              next[c][idx] = prev[c][idx];
              continue;
            }
            double wsum = 0.0, vsum = 0.0;
            for (const auto& [off, wgt] : cell) {
              const float p = prev[c][off];
              if (!std::isfinite(p)) continue;
              wsum += wgt;
              vsum += static_cast<double>(wgt) * p;
            }
            if (wsum <= 0.0) {
              next[c][idx] = prev[c][idx];
              continue;
            }
            const double pk = vsum / wsum;
            if (!std::isfinite(pk))
              throw DataError("refine_probabilities: non-finite probability");
            next[c][idx] = static_cast<float>(pk);
            const double rel = std::abs(pk - prev[c][idx]) / std::max(pk, eps_p);
            row_change[y] = std::max(row_change[y], rel);
          }
        });
      }
      for (double v : row_change) max_rel = std::max(max_rel, v);
    }

    if (params.renormalize) {
      for (size_t i = 0; i < T * plane; ++i) {
        double sum = 0.0;
        for (size_t c = 0; c < n_classes; ++c)
          if (std::isfinite(next[c][i])) sum += next[c][i];
        if (sum <= 0.0) continue;
        for (size_t c = 0; c < n_classes; ++c)
          if (std::isfinite(next[c][i])) next[c][i] = static_cast<float>(next[c][i] / sum);
      }
    }

    std::swap(prev, next);
    result.history.push_back(max_rel);
    if (max_rel < params.convergence) {
      ++iter;
      break;
    }
  }

  result.iterations = std::min(iter == 0 ? 1 : iter, params.max_iter);
  for (size_t c = 0; c < n_classes; ++c)
    for (size_t t = 0; t < T; ++t)
      std::copy(prev[c].begin() + t * plane, prev[c].begin() + (t + 1) * plane,
                result.probs.maps[c][t].samples().begin());
  return result;
}

LabelGrid classify_argmax(const ProbabilityStack& probs, size_t date_index) {
  if (probs.classes.empty()) throw DataError("classify_argmax: no classes");
  if (date_index >= probs.dates.size()) throw DataError("classify_argmax: date index out of range");
  const int w = probs.width(), h = probs.height();
  LabelGrid out(w, h, kNoLabel);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int best = kNoLabel;
      float best_p = -1.0f;
      for (size_t c = 0; c < probs.classes.size(); ++c) {
        const float p = probs.maps[c][date_index].at(x, y);
        if (!std::isfinite(p)) continue;
        if (p > best_p) {
          best_p = p;
          best = static_cast<int>(c);
        }
      }
      out.at(x, y) = best;
    }
  return out;
}

}  // namespace geofuse
