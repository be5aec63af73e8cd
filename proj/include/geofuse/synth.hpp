#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geofuse/prob_refine.hpp"
#include "geofuse/raster.hpp"

namespace geofuse {

// Deterministic generator: splitmix64 state transition with Box-Muller
// normals. Each scene element draws from its own stream derived from
// (seed, stream id), so adding one element class never perturbs the others.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}
  Rng(uint64_t seed, uint64_t stream);

  uint64_t next();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  int uniform_int(int lo, int hi);       // [lo, hi] inclusive
  double gaussian(double mean, double sigma);

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct BlockSpec {
  int count = 0;
  double min_height = 0.0, max_height = 0.0;  // meters
  int min_size = 8, max_size = 16;            // pixels per side
};

struct SceneSpec {
  int width = 64, height = 64;
  uint64_t seed = 1;
  BlockSpec buildings{2, 10.0, 20.0, 10, 18};
  BlockSpec trees{2, 4.0, 9.0, 8, 14};
  double ground_level = 100.0;  // meters
  std::map<std::string, double> noise_sigma = {
      {"building", 2.0}, {"tree", 4.0}, {"grass", 1.0}, {"ground_road", 1.0}};
  double outlier_fraction = 0.0;
  double outlier_magnitude = 50.0;  // meters, added to the true height
  int dates = 3;
  double drift_gain_min = 1.0, drift_gain_max = 1.0;   // per-date gain range
  double drift_offset_min = 0.0, drift_offset_max = 0.0;

  void check() const;
};

struct DsmScene {
  RasterGrid gt_dsm;
  ClassMaskSet masks;
  LabelGrid labels;  // index into masks order
  TemporalStack stack;
};

// DSM scene: flat ground plus rectangular buildings and elliptical tree
// blobs, with per-class Gaussian noise and uniformly placed gross outliers
// per date. Fully determined by spec.seed.
DsmScene synth_dsm_scene(const SceneSpec& spec);

struct SpectralScene {
  MultiBandStack stack;  // bands "nir", "red", "green", values in [0,1]
  LabelGrid labels;
  ClassMaskSet masks;
};

// Multitemporal spectral stack with per-date radiometric gain/offset drift
// over class-dependent base reflectances.
SpectralScene synth_spectral_stack(const SceneSpec& spec);

struct StereoScene {
  RasterGrid left, right;
  RasterGrid gt_disparity;  // on the left image; occluded pixels nodata
};

// Rectified pair: right(x) = left(x + d). Textured background guarantees
// census discriminability; pixels whose source falls off-frame are occluded.
StereoScene synth_stereo_pair(const SceneSpec& spec, int disparity);

// Initial classifier-like probabilities from ground-truth labels: the true
// class gets `peak`, the rest split the remainder, plus seeded jitter.
ProbabilityStack synth_probability_stack(const LabelGrid& labels,
                                         const std::vector<std::string>& classes,
                                         const std::vector<std::string>& dates, double peak,
                                         uint64_t seed);

// Swaps the top-class probability with a random other class at exactly
// floor(fraction * pixels) positions per date.
ProbabilityStack corrupt_probabilities(const ProbabilityStack& probs, double fraction,
                                       uint64_t seed);

}  // namespace geofuse
