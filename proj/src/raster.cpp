#include "geofuse/raster.hpp"

#include <algorithm>

namespace geofuse {

size_t RasterGrid::valid_count() const {
  size_t n = 0;
  for (float v : samples_)
    if (std::isfinite(v)) ++n;
  return n;
}

std::pair<float, float> RasterGrid::valid_range() const {
  float lo = std::numeric_limits<float>::max();
  float hi = std::numeric_limits<float>::lowest();
  bool any = false;
  for (float v : samples_) {
    if (!std::isfinite(v)) continue;
    any = true;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!any) throw DataError("valid_range: grid has no valid sample");
  return {lo, hi};
}

size_t BoolGrid::count() const {
  size_t n = 0;
  for (uint8_t c : cells_)
    if (c) ++n;
  return n;
}

void TemporalStack::check() const {
  if (grids.empty()) throw DataError("TemporalStack: empty");
  if (dates.size() != grids.size())
    throw DataError("TemporalStack: dates/grids count mismatch");
  for (size_t i = 0; i < grids.size(); ++i) {
    if (!grids[i].same_shape(grids.front()))
      throw DimensionError("TemporalStack: grid " + std::to_string(i) + " dimension mismatch");
    if (i > 0 && !(dates[i - 1] < dates[i]))
      throw DataError("TemporalStack: dates not strictly increasing at index " + std::to_string(i));
  }
}

void MultiBandStack::check() const {
  if (bands.empty()) throw DataError("MultiBandStack: empty");
  const TemporalStack& first = bands.begin()->second;
  first.check();
  for (const auto& [name, stack] : bands) {
    stack.check();
    if (stack.dates != first.dates)
      throw DataError("MultiBandStack: band '" + name + "' dates differ");
    if (stack.width() != first.width() || stack.height() != first.height())
      throw DimensionError("MultiBandStack: band '" + name + "' dimensions differ");
  }
}

const BoolGrid* ClassMaskSet::find(const std::string& name) const {
  for (const auto& [n, g] : masks)
    if (n == name) return &g;
  return nullptr;
}

bool ClassMaskSet::covers(int x, int y) const {
  for (const auto& [n, g] : masks)
    if (g.at(x, y)) return true;
  return false;
}

const std::string* ClassMaskSet::class_at(int x, int y) const {
  for (const auto& [n, g] : masks)
    if (g.at(x, y)) return &n;
  return nullptr;
}

void ClassMaskSet::check() const {
  if (masks.empty()) return;
  const BoolGrid& first = masks.front().second;
  for (const auto& [name, g] : masks)
    if (!g.same_shape(first))
      throw DimensionError("ClassMaskSet: mask '" + name + "' dimension mismatch");
  if (!overlapping) {
    for (int y = 0; y < first.height(); ++y)
      for (int x = 0; x < first.width(); ++x) {
        int hits = 0;
        for (const auto& [name, g] : masks)
          if (g.at(x, y)) ++hits;
        if (hits > 1) throw DataError("ClassMaskSet: overlapping masks without overlapping flag");
      }
  }
}

void BandwidthSet::check() const {
  if (window < 1 || window % 2 == 0) throw DataError("BandwidthSet: window must be odd and >= 1");
  if (sigma_x <= 0 || sigma_s <= 0) throw DataError("BandwidthSet: bandwidths must be > 0");
  if (sigma_Ts < 0) throw DataError("BandwidthSet: sigma_Ts must be >= 0");
  for (const auto& [c, s] : sigma_h)
    if (s <= 0) throw DataError("BandwidthSet: sigma_h for '" + c + "' must be > 0");
}

NormalizeResult normalize_unit(const RasterGrid& grid) {
  auto [lo, hi] = grid.valid_range();  // throws on all-nodata
  NormalizeResult out;
  out.lo = lo;
  out.hi = hi;
  out.grid = grid;
  if (lo == hi) {
    out.constant_input = true;
    for (float& v : out.grid.samples())
      if (std::isfinite(v)) v = 0.0f;
    return out;
  }
  const double span = static_cast<double>(hi) - lo;
  for (float& v : out.grid.samples())
    if (std::isfinite(v)) v = static_cast<float>((v - lo) / span);
  return out;
}

RasterGrid denormalize(const RasterGrid& grid, float lo, float hi) {
  RasterGrid out = grid;
  const double span = static_cast<double>(hi) - lo;
  for (float& v : out.samples())
    if (std::isfinite(v)) v = static_cast<float>(v * span + lo);
  return out;
}

ValidationReport validate_stack(const TemporalStack& stack) {
  ValidationReport report;
  if (stack.grids.empty()) {
    report.findings.push_back({ValidationFinding::Kind::EmptyStack, "stack has no grids"});
    return report;
  }
  if (stack.dates.size() != stack.grids.size())
    report.findings.push_back(
        {ValidationFinding::Kind::UnsortedDates, "dates/grids count mismatch"});
  for (size_t i = 0; i < stack.grids.size(); ++i) {
    const RasterGrid& g = stack.grids[i];
    if (!g.same_shape(stack.grids.front()))
      report.findings.push_back({ValidationFinding::Kind::DimensionMismatch,
                                 "grid " + std::to_string(i) + " is " + std::to_string(g.width()) +
                                     "x" + std::to_string(g.height())});
    report.nodata_fraction.push_back(
        g.size() == 0 ? 0.0 : 1.0 - static_cast<double>(g.valid_count()) / g.size());
  }
  for (size_t i = 1; i < stack.dates.size() && i < stack.grids.size(); ++i)
    if (!(stack.dates[i - 1] < stack.dates[i]))
      report.findings.push_back({ValidationFinding::Kind::UnsortedDates,
                                 "date " + std::to_string(i) + " ('" + stack.dates[i] +
                                     "') not after '" + stack.dates[i - 1] + "'"});
  return report;
}

}  // namespace geofuse
