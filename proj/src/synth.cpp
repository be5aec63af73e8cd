#include "geofuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace geofuse {

namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Stream ids. Every generated quantity has a fixed stream, so changing one
// scene element cannot reshuffle the draws of another.
enum Stream : uint64_t {
  kStreamBuildings = 1,
  kStreamTrees = 2,
  kStreamNoise = 3,
  kStreamOutliers = 4,
  kStreamDrift = 5,
  kStreamTexture = 6,
  kStreamProbs = 7,
  kStreamCorrupt = 8,
};

std::string date_string(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-01", 2020 + index / 12, index % 12 + 1);
  return buf;
}

std::vector<std::string> date_list(int count) {
  std::vector<std::string> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(date_string(i));
  return out;
}

// First floor(count) distinct indices of a partially shuffled [0, n).
std::vector<size_t> sample_indices(size_t n, size_t count, Rng& rng) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  for (size_t i = 0; i < count && i < n; ++i) {
    const size_t j = i + static_cast<size_t>(rng.next() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(std::min(count, n));
  return idx;
}

struct Layout {
  RasterGrid gt_dsm;
  LabelGrid labels;  // 0 building, 1 tree, 2 grass, 3 ground_road
  ClassMaskSet masks;
};

constexpr int kBuilding = 0, kTree = 1, kGrass = 2, kGroundRoad = 3;
const char* const kClassNames[4] = {"building", "tree", "grass", "ground_road"};

Layout build_layout(const SceneSpec& spec) {
  const int w = spec.width, h = spec.height;
  Layout lay;
  lay.gt_dsm = RasterGrid(w, h, static_cast<float>(spec.ground_level));
  lay.labels = LabelGrid(w, h, kGrass);

  // Horizontal road strip through the middle.
  const int road_lo = h / 2 - 2, road_hi = h / 2 + 2;
  for (int y = std::max(0, road_lo); y < std::min(h, road_hi); ++y)
    for (int x = 0; x < w; ++x) lay.labels.at(x, y) = kGroundRoad;

  Rng brng(spec.seed, kStreamBuildings);
  for (int i = 0; i < spec.buildings.count; ++i) {
    const int bw = brng.uniform_int(spec.buildings.min_size, spec.buildings.max_size);
    const int bh = brng.uniform_int(spec.buildings.min_size, spec.buildings.max_size);
    const int x0 = brng.uniform_int(0, std::max(0, w - bw));
    const int y0 = brng.uniform_int(0, std::max(0, h - bh));
    const double ht = brng.uniform(spec.buildings.min_height, spec.buildings.max_height);
    for (int y = y0; y < std::min(h, y0 + bh); ++y)
      for (int x = x0; x < std::min(w, x0 + bw); ++x) {
        lay.labels.at(x, y) = kBuilding;
        lay.gt_dsm.at(x, y) = static_cast<float>(spec.ground_level + ht);
      }
  }

  Rng trng(spec.seed, kStreamTrees);
  for (int i = 0; i < spec.trees.count; ++i) {
    const int rx = trng.uniform_int(spec.trees.min_size, spec.trees.max_size) / 2;
    const int ry = trng.uniform_int(spec.trees.min_size, spec.trees.max_size) / 2;
    const int cx = trng.uniform_int(rx, std::max(rx, w - 1 - rx));
    const int cy = trng.uniform_int(ry, std::max(ry, h - 1 - ry));
    const double ht = trng.uniform(spec.trees.min_height, spec.trees.max_height);
    for (int y = std::max(0, cy - ry); y <= std::min(h - 1, cy + ry); ++y)
      for (int x = std::max(0, cx - rx); x <= std::min(w - 1, cx + rx); ++x) {
        const double nx = rx > 0 ? static_cast<double>(x - cx) / rx : 0.0;
        const double ny = ry > 0 ? static_cast<double>(y - cy) / ry : 0.0;
        const double r2 = nx * nx + ny * ny;
        if (r2 > 1.0 || lay.labels.at(x, y) == kBuilding) continue;
        lay.labels.at(x, y) = kTree;
        // Canopy dome, not a flat slab.
        lay.gt_dsm.at(x, y) =
            static_cast<float>(spec.ground_level + ht * std::sqrt(1.0 - r2));
      }
  }

  for (int c = 0; c < 4; ++c) {
    BoolGrid mask(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (lay.labels.at(x, y) == c) mask.set(x, y, true);
    lay.masks.masks.emplace_back(kClassNames[c], std::move(mask));
  }
  return lay;
}

}  // namespace

Rng::Rng(uint64_t seed, uint64_t stream) : state_(seed + stream * kGolden) {
  next();  // decorrelate nearby (seed, stream) pairs
}

uint64_t Rng::next() {
  state_ += kGolden;
  uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
  if (hi <= lo) return lo;
  return lo + static_cast<int>(next() % static_cast<uint64_t>(hi - lo + 1));
}

double Rng::gaussian(double mean, double sigma) {
  if (have_spare_) {
    have_spare_ = false;
    return mean + sigma * spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return mean + sigma * r * std::cos(theta);
}

void SceneSpec::check() const {
  if (width <= 0 || height <= 0) throw DimensionError("SceneSpec: non-positive dimensions");
  if (dates < 1) throw DataError("SceneSpec: needs at least one date");
  if (outlier_fraction < 0.0 || outlier_fraction > 1.0)
    throw DataError("SceneSpec: outlier_fraction outside [0,1]");
  for (const auto& [cls, sigma] : noise_sigma)
    if (sigma < 0.0) throw DataError("SceneSpec: negative noise sigma for " + cls);
}

DsmScene synth_dsm_scene(const SceneSpec& spec) {
  spec.check();
  Layout lay = build_layout(spec);
  const int w = spec.width, h = spec.height;

  DsmScene scene;
  scene.stack.band = "dsm";
  scene.stack.dates = date_list(spec.dates);

  Rng noise(spec.seed, kStreamNoise);
  Rng outliers(spec.seed, kStreamOutliers);
  const size_t n_outliers =
      static_cast<size_t>(spec.outlier_fraction * static_cast<double>(w) * h);
  for (int t = 0; t < spec.dates; ++t) {
    RasterGrid grid(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const auto it = spec.noise_sigma.find(kClassNames[lay.labels.at(x, y)]);
        const double sigma = it == spec.noise_sigma.end() ? 0.0 : it->second;
        grid.at(x, y) = static_cast<float>(lay.gt_dsm.at(x, y) + noise.gaussian(0.0, sigma));
      }
    for (size_t idx : sample_indices(static_cast<size_t>(w) * h, n_outliers, outliers)) {
      const int x = static_cast<int>(idx % w), y = static_cast<int>(idx / w);
      grid.at(x, y) =
          static_cast<float>(lay.gt_dsm.at(x, y) + spec.outlier_magnitude);
    }
    scene.stack.grids.push_back(std::move(grid));
  }

  scene.gt_dsm = std::move(lay.gt_dsm);
  scene.labels = std::move(lay.labels);
  scene.masks = std::move(lay.masks);
  return scene;
}

SpectralScene synth_spectral_stack(const SceneSpec& spec) {
  spec.check();
  Layout lay = build_layout(spec);
  const int w = spec.width, h = spec.height;

  // Base reflectances per class, rows in kClassNames order.
  const char* const band_names[3] = {"nir", "red", "green"};
  const double base[4][3] = {
      {0.30, 0.40, 0.35},  // building
      {0.70, 0.10, 0.20},  // tree
      {0.60, 0.15, 0.30},  // grass
      {0.25, 0.25, 0.25},  // ground_road
  };

  SpectralScene scene;
  const std::vector<std::string> dates = date_list(spec.dates);

  Rng drift(spec.seed, kStreamDrift);
  std::vector<std::pair<double, double>> gain_offset(spec.dates);
  for (auto& [gain, offset] : gain_offset) {
    gain = drift.uniform(spec.drift_gain_min, spec.drift_gain_max);
    offset = drift.uniform(spec.drift_offset_min, spec.drift_offset_max);
  }

  Rng noise(spec.seed, kStreamNoise);
  for (int b = 0; b < 3; ++b) {
    TemporalStack stack;
    stack.band = band_names[b];
    stack.dates = dates;
    for (int t = 0; t < spec.dates; ++t) {
      RasterGrid grid(w, h);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double v = gain_offset[t].first * base[lay.labels.at(x, y)][b] +
                           gain_offset[t].second + noise.gaussian(0.0, 0.02);
          grid.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      stack.grids.push_back(std::move(grid));
    }
    scene.stack.bands.emplace(band_names[b], std::move(stack));
  }

  scene.labels = std::move(lay.labels);
  scene.masks = std::move(lay.masks);
  return scene;
}

StereoScene synth_stereo_pair(const SceneSpec& spec, int disparity) {
  spec.check();
  if (disparity < 0) throw DataError("synth_stereo_pair: negative disparity");
  const int w = spec.width, h = spec.height;
  if (disparity >= w) throw DataError("synth_stereo_pair: disparity >= width");

  // One extended texture of width w + d; left and right are column windows
  // of it, so right(x) = left(x + d) holds exactly where both exist.
  Rng texture(spec.seed, kStreamTexture);
  RasterGrid ext(w + disparity, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w + disparity; ++x) {
      const double smooth = 40.0 * std::sin(0.21 * x) * std::cos(0.17 * y);
      ext.at(x, y) = static_cast<float>(128.0 + smooth + texture.uniform(-60.0, 60.0));
    }

  StereoScene scene;
  scene.left = RasterGrid(w, h);
  scene.right = RasterGrid(w, h);
  scene.gt_disparity = RasterGrid(w, h, kNoData);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      scene.left.at(x, y) = ext.at(x, y);
      scene.right.at(x, y) = ext.at(x + disparity, y);
      // Left pixel x matches right pixel x - d; x < d has no match.
      if (x >= disparity) scene.gt_disparity.at(x, y) = static_cast<float>(disparity);
    }
  return scene;
}

ProbabilityStack synth_probability_stack(const LabelGrid& labels,
                                         const std::vector<std::string>& classes,
                                         const std::vector<std::string>& dates, double peak,
                                         uint64_t seed) {
  if (classes.size() < 2) throw DataError("synth_probability_stack: needs >= 2 classes");
  if (peak <= 1.0 / static_cast<double>(classes.size()) || peak >= 1.0)
    throw DataError("synth_probability_stack: peak must exceed the uniform probability");
  const int w = labels.width(), h = labels.height();
  const size_t k = classes.size();
  const double rest = (1.0 - peak) / static_cast<double>(k - 1);

  ProbabilityStack out;
  out.classes = classes;
  out.dates = dates;
  out.maps.assign(k, {});

  Rng rng(seed, kStreamProbs);
  for (size_t c = 0; c < k; ++c)
    for (size_t t = 0; t < dates.size(); ++t) out.maps[c].emplace_back(w, h);
  for (size_t t = 0; t < dates.size(); ++t)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int32_t lab = labels.at(x, y);
        std::vector<double> p(k);
        double sum = 0.0;
        for (size_t c = 0; c < k; ++c) {
          const double base =
              lab == kNoLabel ? 1.0 / static_cast<double>(k)
                              : (static_cast<size_t>(lab) == c ? peak : rest);
          p[c] = std::max(1e-4, base + rng.uniform(-0.02, 0.02));
          sum += p[c];
        }
        for (size_t c = 0; c < k; ++c)
          out.maps[c][t].at(x, y) = static_cast<float>(p[c] / sum);
      }
  return out;
}

ProbabilityStack corrupt_probabilities(const ProbabilityStack& probs, double fraction,
                                       uint64_t seed) {
  probs.check();
  if (fraction < 0.0 || fraction > 1.0)
    throw DataError("corrupt_probabilities: fraction outside [0,1]");
  if (probs.classes.size() < 2)
    throw DataError("corrupt_probabilities: needs >= 2 classes");

  ProbabilityStack out = probs;
  const int w = probs.width(), h = probs.height();
  const size_t n = static_cast<size_t>(w) * h;
  const size_t n_corrupt = static_cast<size_t>(fraction * static_cast<double>(n));
  const size_t k = probs.classes.size();

  Rng rng(seed, kStreamCorrupt);
  for (size_t t = 0; t < probs.dates.size(); ++t) {
    for (size_t idx : sample_indices(n, n_corrupt, rng)) {
      const int x = static_cast<int>(idx % w), y = static_cast<int>(idx / w);
      size_t top = 0;
      bool any = false;
      for (size_t c = 0; c < k; ++c) {
        if (!out.maps[c][t].valid(x, y)) continue;
        if (!any || out.maps[c][t].at(x, y) > out.maps[top][t].at(x, y)) top = c;
        any = true;
      }
      if (!any) continue;
      size_t other = static_cast<size_t>(rng.next() % (k - 1));
      if (other >= top) ++other;
      std::swap(out.maps[top][t].at(x, y), out.maps[other][t].at(x, y));
    }
  }
  return out;
}

}  // namespace geofuse
