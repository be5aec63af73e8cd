#include "geofuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace geofuse {

ConfusionCounts confusion(const BoolGrid& pred_mask, const BoolGrid& gt_mask) {
  if (!pred_mask.same_shape(gt_mask)) throw DimensionError("confusion: dimension mismatch");
  ConfusionCounts c;
  for (int y = 0; y < gt_mask.height(); ++y)
    for (int x = 0; x < gt_mask.width(); ++x) {
      const bool p = pred_mask.at(x, y), g = gt_mask.at(x, y);
      if (p && g)
        ++c.tp;
      else if (p && !g)
        ++c.fp;
      else if (!p && g)
        ++c.fn;
      else
        ++c.tn;
    }
  return c;
}

double rmse(const RasterGrid& pred, const RasterGrid& gt) {
  if (!pred.same_shape(gt)) throw DimensionError("rmse: dimension mismatch");
  double sum = 0.0;
  size_t n = 0;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x) {
      if (!pred.valid(x, y) || !gt.valid(x, y)) continue;
      const double d = static_cast<double>(pred.at(x, y)) - gt.at(x, y);
      sum += d * d;
      ++n;
    }
  if (n == 0) throw DataError("rmse: no jointly valid pixel");
  return std::sqrt(sum / static_cast<double>(n));
}

double completeness(const RasterGrid& pred) {
  if (pred.size() == 0) return 0.0;
  return 100.0 * static_cast<double>(pred.valid_count()) / static_cast<double>(pred.size());
}

Prf1 prf1_from_rates(double recall, double precision) {
  Prf1 out;
  out.recall = recall;
  out.precision = precision;
  if (recall + precision > 0.0)
    out.f1 = 2.0 * recall * precision / (recall + precision);
  else
    out.degenerate = true;
  return out;
}

Prf1 prf1_from_counts(const ConfusionCounts& c, bool normalized) {
  Prf1 out;
  const size_t P = c.positives(), N = c.negatives();
  if (P == 0) {
    out.degenerate = true;
  } else {
    out.recall = static_cast<double>(c.tp) / static_cast<double>(P);
  }
  if (normalized) {
    if (P == 0 || N == 0) {
      out.degenerate = true;
    } else {
      const double tp_rate = static_cast<double>(c.tp) / static_cast<double>(P);
      const double fp_rate = static_cast<double>(c.fp) / static_cast<double>(N);
      if (tp_rate + fp_rate > 0.0) out.precision = tp_rate / (tp_rate + fp_rate);
      else out.degenerate = true;
    }
  } else {
    if (c.tp + c.fp > 0) out.precision = static_cast<double>(c.tp) / (c.tp + c.fp);
    else out.degenerate = true;
  }
  const Prf1 f = prf1_from_rates(out.recall, out.precision);
  out.f1 = f.f1;
  out.degenerate = out.degenerate || f.degenerate;
  return out;
}

Prf1 prf1(const BoolGrid& pred_mask, const BoolGrid& gt_mask, bool normalized) {
  return prf1_from_counts(confusion(pred_mask, gt_mask), normalized);
}

int otsu_threshold(const std::array<double, 256>& histogram) {
  double total = 0.0, total_mean = 0.0;
  int distinct = 0;
  for (int i = 0; i < 256; ++i) {
    total += histogram[i];
    total_mean += i * histogram[i];
    if (histogram[i] > 0) ++distinct;
  }
  if (distinct < 2) throw DataError("otsu_threshold: fewer than two distinct values");
  total_mean /= total;

  int best_t = 0;
  double best_var = -1.0;
  double w0 = 0.0, sum0 = 0.0;
  for (int t = 0; t < 256; ++t) {
    w0 += histogram[t];
    sum0 += t * histogram[t];
    const double w1 = total - w0;
    if (w0 <= 0.0 || w1 <= 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (total * total_mean - sum0) / w1;
    const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best_var) {  // strict: ties keep the lowest threshold
      best_var = between;
      best_t = t;
    }
  }
  return best_t;
}

int otsu_threshold(const RasterGrid& values) {
  std::array<double, 256> hist{};
  for (float v : values.samples()) {
    if (!std::isfinite(v)) continue;
    const int bin = std::clamp(static_cast<int>(std::lround(v)), 0, 255);
    hist[bin] += 1.0;
  }
  return otsu_threshold(hist);
}

BoolGrid change_mask(const std::vector<RasterGrid>& bands_a,
                     const std::vector<RasterGrid>& bands_b) {
  if (bands_a.empty() || bands_a.size() != bands_b.size())
    throw DataError("change_mask: band count mismatch");
  const int w = bands_a.front().width(), h = bands_a.front().height();
  for (size_t i = 0; i < bands_a.size(); ++i)
    if (!bands_a[i].same_shape(bands_a.front()) || !bands_b[i].same_shape(bands_a.front()))
      throw DimensionError("change_mask: band dimension mismatch");

  RasterGrid diff(w, h, kNoData);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double sum2 = 0.0;
      bool ok = true;
      for (size_t i = 0; i < bands_a.size(); ++i) {
        if (!bands_a[i].valid(x, y) || !bands_b[i].valid(x, y)) {
          ok = false;
          break;
        }
        const double d = static_cast<double>(bands_a[i].at(x, y)) - bands_b[i].at(x, y);
        sum2 += d * d;
      }
      if (ok) diff.at(x, y) = static_cast<float>(std::sqrt(sum2));
    }

  BoolGrid mask(w, h);
  std::pair<float, float> range;
  try {
    range = diff.valid_range();
  } catch (const DataError&) {
    return mask;  // no valid difference: nothing to flag
  }
  if (range.first == range.second) return mask;  // constant difference: no change

  const double span = static_cast<double>(range.second) - range.first;
  RasterGrid scaled(w, h, kNoData);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (diff.valid(x, y))
        scaled.at(x, y) = static_cast<float>(255.0 * (diff.at(x, y) - range.first) / span);
  const int t = otsu_threshold(scaled);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (scaled.valid(x, y) && std::lround(scaled.at(x, y)) > t) mask.set(x, y, true);
  return mask;
}

namespace {

RobustFit weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& w) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  const double denom = sw * sxx - sx * sx;
  if (std::abs(denom) < 1e-30 || sw <= 0) throw DataError("line fit: degenerate x values");
  RobustFit fit;
  fit.slope = (sw * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / sw;
  return fit;
}

double weighted_r2(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& w, const RobustFit& fit) {
  double sw = 0, sy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sy += w[i] * y[i];
  }
  const double ybar = sy / sw;
  double s0 = 0, s1 = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    s0 += w[i] * (y[i] - ybar) * (y[i] - ybar);
    s1 += w[i] * r * r;
  }
  if (s0 <= 0) return 0.0;
  return (s0 - s1) / s0;
}

}  // namespace

RobustFit ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw DataError("ols_fit: needs >= 3 (x, y) points");
  std::vector<double> w(x.size(), 1.0);
  RobustFit fit = weighted_line_fit(x, y, w);
  fit.r2 = weighted_r2(x, y, w, fit);
  return fit;
}

RobustFit robust_r2(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw DataError("robust_r2: needs >= 3 (x, y) points");
  const size_t n = x.size();
  constexpr double kTuning = 4.685;
  constexpr int kMaxIter = 50;
  constexpr double kTol = 1e-8;

  std::vector<double> w(n, 1.0);
  RobustFit fit = weighted_line_fit(x, y, w);
  std::vector<double> resid(n);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    for (size_t i = 0; i < n; ++i) resid[i] = y[i] - (fit.intercept + fit.slope * x[i]);
    // MAD scale estimate.
    std::vector<double> ar(n);
    for (size_t i = 0; i < n; ++i) ar[i] = std::abs(resid[i]);
    std::nth_element(ar.begin(), ar.begin() + n / 2, ar.end());
    double scale = ar[n / 2] / 0.6745;
    if (scale < 1e-12) {
      fit.iterations = iter;
      break;  // exact fit
    }
    for (size_t i = 0; i < n; ++i) {
      const double u = resid[i] / (kTuning * scale);
      w[i] = std::abs(u) < 1.0 ? (1 - u * u) * (1 - u * u) : 0.0;
    }
    const RobustFit next = weighted_line_fit(x, y, w);
    const double change =
        std::abs(next.slope - fit.slope) + std::abs(next.intercept - fit.intercept);
    fit.slope = next.slope;
    fit.intercept = next.intercept;
    fit.iterations = iter + 1;
    if (change < kTol) break;
  }
  fit.r2 = weighted_r2(x, y, w, fit);
  return fit;
}

AccuracyResult accuracy(const LabelGrid& pred, const LabelGrid& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height())
    throw DimensionError("accuracy: dimension mismatch");
  size_t correct = 0, total = 0;
  std::map<int32_t, std::pair<size_t, size_t>> per;  // gt class -> (correct, count)
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x) {
      const int32_t g = gt.at(x, y), p = pred.at(x, y);
      if (g == kNoLabel || p == kNoLabel) continue;
      ++total;
      auto& [c, n] = per[g];
      ++n;
      if (p == g) {
        ++correct;
        ++c;
      }
    }
  if (total == 0) throw DataError("accuracy: no jointly labeled pixel");
  AccuracyResult out;
  out.overall = static_cast<double>(correct) / static_cast<double>(total);
  for (const auto& [cls, cn] : per)
    out.per_class[cls] = static_cast<double>(cn.first) / static_cast<double>(cn.second);
  return out;
}

}  // namespace geofuse
