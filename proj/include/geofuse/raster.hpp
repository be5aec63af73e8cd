#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace geofuse {

// Nodata sentinel: any non-finite sample is nodata.
inline constexpr float kNoData = std::numeric_limits<float>::quiet_NaN();

// Floor applied to every Gaussian bandwidth to avoid division by zero.
inline constexpr double kSigmaFloor = 1e-6;

inline double floored_sigma(double sigma) {
  return sigma < kSigmaFloor ? kSigmaFloor : sigma;
}

// All Gaussian kernels in the toolkit use exp(-d^2 / (2 sigma^2)).
inline double gauss(double d2, double sigma) {
  const double s = floored_sigma(sigma);
  return std::exp(-d2 / (2.0 * s * s));
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// 2D grid of 32-bit samples, row-major, NaN = nodata.
class RasterGrid {
 public:
  RasterGrid() = default;
  RasterGrid(int width, int height, float fill = 0.0f)
      : width_(width), height_(height),
        samples_(static_cast<size_t>(width) * height, fill) {
    if (width <= 0 || height <= 0) throw DimensionError("RasterGrid: non-positive dimensions");
  }
  RasterGrid(int width, int height, std::vector<float> samples)
      : width_(width), height_(height), samples_(std::move(samples)) {
    if (width <= 0 || height <= 0) throw DimensionError("RasterGrid: non-positive dimensions");
    if (samples_.size() != static_cast<size_t>(width) * height)
      throw DimensionError("RasterGrid: samples length != width*height");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  float at(int x, int y) const { return samples_[static_cast<size_t>(y) * width_ + x]; }
  float& at(int x, int y) { return samples_[static_cast<size_t>(y) * width_ + x]; }

  bool valid(int x, int y) const { return std::isfinite(at(x, y)); }
  static bool is_valid(float v) { return std::isfinite(v); }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }
  bool same_shape(const RasterGrid& o) const {
    return width_ == o.width_ && height_ == o.height_;
  }

  const std::vector<float>& samples() const { return samples_; }
  std::vector<float>& samples() { return samples_; }

  size_t valid_count() const;
  // (min, max) over valid samples; throws DataError if all nodata.
  std::pair<float, float> valid_range() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> samples_;
};

// Boolean grid used for masks.
class BoolGrid {
 public:
  BoolGrid() = default;
  BoolGrid(int width, int height, bool fill = false)
      : width_(width), height_(height),
        cells_(static_cast<size_t>(width) * height, fill ? 1 : 0) {
    if (width <= 0 || height <= 0) throw DimensionError("BoolGrid: non-positive dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  size_t size() const { return cells_.size(); }

  bool at(int x, int y) const { return cells_[static_cast<size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v) { cells_[static_cast<size_t>(y) * width_ + x] = v ? 1 : 0; }

  bool same_shape(const BoolGrid& o) const {
    return width_ == o.width_ && height_ == o.height_;
  }
  size_t count() const;

  const std::vector<uint8_t>& cells() const { return cells_; }
  std::vector<uint8_t>& cells() { return cells_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> cells_;
};

// Integer label grid; kNoLabel marks pixels without a label.
inline constexpr int32_t kNoLabel = -1;

class LabelGrid {
 public:
  LabelGrid() = default;
  LabelGrid(int width, int height, int32_t fill = kNoLabel)
      : width_(width), height_(height),
        labels_(static_cast<size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  size_t size() const { return labels_.size(); }

  int32_t at(int x, int y) const { return labels_[static_cast<size_t>(y) * width_ + x]; }
  int32_t& at(int x, int y) { return labels_[static_cast<size_t>(y) * width_ + x]; }

  const std::vector<int32_t>& labels() const { return labels_; }
  std::vector<int32_t>& labels() { return labels_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<int32_t> labels_;
};

// Ordered sequence of co-registered grids sharing one band identity.
// Dates are ISO-8601 strings; lexicographic order is chronological order.
struct TemporalStack {
  std::vector<RasterGrid> grids;
  std::vector<std::string> dates;
  std::string band;

  size_t count() const { return grids.size(); }
  int width() const { return grids.empty() ? 0 : grids.front().width(); }
  int height() const { return grids.empty() ? 0 : grids.front().height(); }

  // Throws on any invariant violation (use validate_stack for a report).
  void check() const;
};

// Named map band id -> TemporalStack sharing dates and dimensions.
struct MultiBandStack {
  std::map<std::string, TemporalStack> bands;

  void check() const;
};

// Named boolean class masks. Masks must be disjoint unless `overlapping`.
struct ClassMaskSet {
  std::vector<std::pair<std::string, BoolGrid>> masks;
  bool overlapping = false;

  const BoolGrid* find(const std::string& name) const;
  bool covers(int x, int y) const;
  // Class name at (x, y), or empty string if uncovered.
  const std::string* class_at(int x, int y) const;
  void check() const;
};

// Named bandwidths shared by the filtering modules. The temporal-position
// bandwidth of the spatiotemporal filter is fixed at infinity (all dates
// contribute regardless of acquisition distance) and is deliberately not a
// parameter here.
struct BandwidthSet {
  double sigma_x = 3.0;    // pixels
  double sigma_s = 0.19;   // sample units
  double sigma_Ts = 0.2;   // normalized reflectance units
  std::map<std::string, double> sigma_h;  // class -> meters
  int window = 5;          // odd pixel count

  void check() const;
};

struct NormalizeResult {
  RasterGrid grid;
  float lo = 0.0f;
  float hi = 0.0f;
  bool constant_input = false;  // max == min; grid is all zero
};

// Affine map of valid samples onto [0,1]; nodata preserved.
NormalizeResult normalize_unit(const RasterGrid& grid);
RasterGrid denormalize(const RasterGrid& grid, float lo, float hi);

struct ValidationFinding {
  enum class Kind { DimensionMismatch, UnsortedDates, EmptyStack, NonFinite };
  Kind kind;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationFinding> findings;
  std::vector<double> nodata_fraction;  // one entry per grid
  bool ok() const { return findings.empty(); }
};

ValidationReport validate_stack(const TemporalStack& stack);

}  // namespace geofuse
