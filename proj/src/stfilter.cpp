#include "geofuse/stfilter.hpp"

#include <algorithm>
#include <cmath>

#include "geofuse/parallel.hpp"

namespace geofuse {

void StFilterParams::check() const {
  if (window < 1 || window % 2 == 0) throw DataError("StFilterParams: window must be odd");
  if (sigma_x <= 0 || sigma_s <= 0) throw DataError("StFilterParams: sigma_x/sigma_s must be > 0");
  if (sigma_Ts < 0) throw DataError("StFilterParams: sigma_Ts must be >= 0");
}

RasterGrid bilateral_filter(const RasterGrid& grid, double sigma_x, double sigma_s, int window) {
  if (window < 1 || window % 2 == 0) throw DataError("bilateral_filter: window must be odd");
  const int r = window / 2;
  RasterGrid out(grid.width(), grid.height(), kNoData);
  parallel_rows(grid.height(), [&](int y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (!grid.valid(x, y)) continue;
      const double c = grid.at(x, y);
      double wsum = 0.0, vsum = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int ny = y + dy;
        if (ny < 0 || ny >= grid.height()) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int nx = x + dx;
          if (nx < 0 || nx >= grid.width()) continue;
          if (!grid.valid(nx, ny)) continue;
          const double v = grid.at(nx, ny);
          const double d2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
          const double di = v - c;
          const double w = gauss(d2, sigma_x) * gauss(di * di, sigma_s);
          wsum += w;
          vsum += w * v;
        }
      }
      if (wsum > 0.0) out.at(x, y) = static_cast<float>(vsum / wsum);
    }
  });
  return out;
}

TemporalStack stfilter(const TemporalStack& stack, const StFilterParams& params) {
  stack.check();
  params.check();

  TemporalStack out;
  out.dates = stack.dates;
  out.band = stack.band;

  // sigma_Ts = 0 degenerates to an independent 2D bilateral filter per date.
  if (params.sigma_Ts == 0.0) {
    for (const RasterGrid& g : stack.grids)
      out.grids.push_back(bilateral_filter(g, params.sigma_x, params.sigma_s, params.window));
    return out;
  }

  const int w = stack.width(), h = stack.height();
  const int r = params.window / 2;
  const size_t T = stack.count();
  out.grids.assign(T, RasterGrid(w, h, kNoData));

  for (size_t it = 0; it < T; ++it) {
    const RasterGrid& center_grid = stack.grids[it];
    RasterGrid& dst = out.grids[it];
    parallel_rows(h, [&](int y) {
      std::vector<double> tw(T);
      for (int x = 0; x < w; ++x) {
        if (!center_grid.valid(x, y)) continue;
        const double c = center_grid.at(x, y);
        // Temporal factor: compares the center pixel's value at each date
        // against its value at the output date.
        for (size_t jt = 0; jt < T; ++jt) {
          if (jt == it) {
            tw[jt] = 1.0;
          } else if (stack.grids[jt].valid(x, y)) {
            const double dt = static_cast<double>(stack.grids[jt].at(x, y)) - c;
            tw[jt] = gauss(dt * dt, params.sigma_Ts);
          } else {
            tw[jt] = 0.0;
          }
        }
        double wsum = 0.0, vsum = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          const int ny = y + dy;
          if (ny < 0 || ny >= h) continue;
          for (int dx = -r; dx <= r; ++dx) {
            const int nx = x + dx;
            if (nx < 0 || nx >= w) continue;
            if (!center_grid.valid(nx, ny)) continue;
            const double d2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
            const double di = static_cast<double>(center_grid.at(nx, ny)) - c;
            const double sw = gauss(d2, params.sigma_x) * gauss(di * di, params.sigma_s);
            for (size_t jt = 0; jt < T; ++jt) {
              if (tw[jt] == 0.0) continue;
              if (!stack.grids[jt].valid(nx, ny)) continue;
              const double wgt = sw * tw[jt];
              wsum += wgt;
              vsum += wgt * stack.grids[jt].at(nx, ny);
            }
          }
        }
        if (wsum > 0.0) dst.at(x, y) = static_cast<float>(vsum / wsum);
      }
    });
  }
  return out;
}

MultiBandStack stfilter(const MultiBandStack& stack, const StFilterParams& params) {
  stack.check();
  MultiBandStack out;
  for (const auto& [name, band] : stack.bands) out.bands[name] = stfilter(band, params);
  return out;
}

RasterGrid temporal_variance_profile(const TemporalStack& stack) {
  stack.check();
  if (stack.count() < 2) throw DataError("temporal_variance_profile: needs >= 2 dates");
  const int w = stack.width(), h = stack.height();
  RasterGrid out(w, h, kNoData);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double sum = 0.0, sum2 = 0.0;
      int n = 0;
      for (const RasterGrid& g : stack.grids) {
        if (!g.valid(x, y)) continue;
        const double v = g.at(x, y);
        sum += v;
        sum2 += v * v;
        ++n;
      }
      if (n == 0) continue;
      const double mean = sum / n;
      const double var = std::max(0.0, sum2 / n - mean * mean);
      out.at(x, y) = static_cast<float>(std::sqrt(var));
    }
  });
  return out;
}

}  // namespace geofuse
