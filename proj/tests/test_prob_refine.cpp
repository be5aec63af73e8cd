#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "geofuse/prob_refine.hpp"
#include "geofuse/raster.hpp"
#include "geofuse/synth.hpp"

using namespace geofuse;

namespace {

// A small scene: constant lab and ndsm inputs per date so weights are easy
// to reason about, with configurable probability maps.
struct Fixture {
  std::vector<LabImage> lab;
  TemporalStack ndsm;
  ProbabilityStack probs;
  RefineParams params;

  Fixture(int w, int h, int dates, int classes) {
    for (int t = 0; t < dates; ++t) {
      lab.push_back(LabImage{RasterGrid(w, h, 50.0f), RasterGrid(w, h, 0.0f),
                             RasterGrid(w, h, 0.0f)});
      ndsm.grids.emplace_back(w, h, 2.0f);
      char buf[16];
      std::snprintf(buf, sizeof(buf), "2020-%02d-01", t + 1);
      ndsm.dates.push_back(buf);
    }
    ndsm.band = "ndsm";
    probs.dates = ndsm.dates;
    for (int c = 0; c < classes; ++c) {
      probs.classes.push_back("class" + std::to_string(c));
      probs.maps.emplace_back();
      for (int t = 0; t < dates; ++t)
        probs.maps.back().emplace_back(w, h, 1.0f / classes);
      params.sigma_h[probs.classes.back()] = 3.0;
    }
  }
};

}  // namespace

TEST_CASE("cielab: black, white, and frozen golden value") {
  const auto black = rgb_to_cielab(0.0, 0.0, 0.0);
  CHECK(black[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(black[1] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(black[2] == doctest::Approx(0.0).epsilon(1e-6));

  const auto white = rgb_to_cielab(1.0, 1.0, 1.0);
  CHECK(white[0] == doctest::Approx(100.0).epsilon(1e-4));
  CHECK(std::abs(white[1]) < 0.01);
  CHECK(std::abs(white[2]) < 0.01);

  // Golden triple frozen from an independent reference implementation.
  const auto v = rgb_to_cielab(0.5, 0.2, 0.2);
  CHECK(v[0] == doctest::Approx(32.1650).epsilon(1e-3));
  CHECK(v[1] == doctest::Approx(33.1344).epsilon(1e-3));
  CHECK(v[2] == doctest::Approx(16.8123).epsilon(1e-3));
}

TEST_CASE("cielab grid variant rejects out-of-range input") {
  RasterGrid r(2, 1, 0.5f), g(2, 1, 0.5f), b(2, 1, 0.5f);
  CHECK_NOTHROW(rgb_to_cielab(r, g, b));
  r.at(0, 0) = 1.5f;
  CHECK_THROWS_AS(rgb_to_cielab(r, g, b), DataError);
  r.at(0, 0) = kNoData;  // nodata propagates instead of erroring
  const LabImage out = rgb_to_cielab(r, g, b);
  CHECK_FALSE(out.L.valid(0, 0));
  CHECK(out.L.valid(1, 0));
}

TEST_CASE("class height bandwidth is 0.35 x masked range") {
  RasterGrid ndsm(4, 1);
  ndsm.at(0, 0) = 2.0f;
  ndsm.at(1, 0) = 12.0f;
  ndsm.at(2, 0) = 100.0f;  // outside the mask
  ndsm.at(3, 0) = 7.0f;
  BoolGrid mask(4, 1);
  mask.set(0, 0, true);
  mask.set(1, 0, true);
  mask.set(3, 0, true);
  CHECK(class_height_bandwidth(ndsm, mask) == doctest::Approx(3.5));

  SUBCASE("table cross-check: range 17.09 m gives 5.98 m") {
    ndsm.at(0, 0) = 0.0f;
    ndsm.at(1, 0) = 17.09f;
    CHECK(class_height_bandwidth(ndsm, mask) == doctest::Approx(5.98).epsilon(0.01 / 5.98));
  }
  SUBCASE("constant masked values hit the bandwidth floor") {
    for (int x = 0; x < 4; ++x) ndsm.at(x, 0) = 5.0f;
    CHECK(class_height_bandwidth(ndsm, mask) == kSigmaFloor);
  }
  SUBCASE("empty mask rejected") {
    CHECK_THROWS_AS(class_height_bandwidth(ndsm, BoolGrid(4, 1)), DataError);
  }
}

TEST_CASE("w3d weight factorization") {
  const std::array<double, 3> lab0{50.0, 0.0, 0.0};
  CHECK(w3d_weight(0, 0, lab0, lab0, 2.0, 2.0, 3.0, 5.0, 3.0) == doctest::Approx(1.0));

  SUBCASE("one-sigma spatial offset") {
    CHECK(w3d_weight(3.0, 0.0, lab0, lab0, 2.0, 2.0, 3.0, 5.0, 3.0) ==
          doctest::Approx(std::exp(-0.5)));
  }
  SUBCASE("mixed offsets multiply factorwise") {
    const std::array<double, 3> lab1{55.0, 2.0, -1.0};
    const double spatial = std::exp(-(1.0 + 4.0) / (2 * 3.0 * 3.0));
    const double spectral = std::exp(-(25.0 + 4.0 + 1.0) / (2 * 5.0 * 5.0));
    const double height = std::exp(-(1.5 * 1.5) / (2 * 3.0 * 3.0));
    CHECK(w3d_weight(1.0, 2.0, lab0, lab1, 2.0, 3.5, 3.0, 5.0, 3.0) ==
          doctest::Approx(spatial * spectral * height));
  }
}

TEST_CASE("refinement fixed point: constant stacks converge immediately") {
  Fixture f(6, 6, 3, 2);
  for (int t = 0; t < 3; ++t) {
    for (float& v : f.probs.maps[0][t].samples()) v = 0.8f;
    for (float& v : f.probs.maps[1][t].samples()) v = 0.2f;
  }
  const RefineResult r = refine_probabilities(f.probs, f.lab, f.ndsm, f.params);
  CHECK(r.iterations == 1);
  REQUIRE(r.history.size() == 1);
  CHECK(r.history[0] < 1e-6);
  for (float v : r.probs.maps[0][1].samples()) CHECK(v == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("refinement outputs stay inside [0,1]") {
  Fixture f(8, 8, 2, 3);
  Rng rng(5);
  for (auto& per_class : f.probs.maps)
    for (RasterGrid& g : per_class)
      for (float& v : g.samples()) v = static_cast<float>(rng.uniform());
  const RefineResult r = refine_probabilities(f.probs, f.lab, f.ndsm, f.params);
  CHECK(r.iterations <= f.params.max_iter);
  for (const auto& per_class : r.probs.maps)
    for (const RasterGrid& g : per_class)
      for (float v : g.samples()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
      }
}

TEST_CASE("one Jacobi step equals the direct weighted average") {
  // max_iter 1 exposes a single update; compare to a brute-force evaluation
  // of the window x dates sum with independently recomputed weights.
  const int w = 5, h = 5, T = 2;
  Fixture f(w, h, T, 1);
  Rng rng(17);
  for (RasterGrid& g : f.probs.maps[0])
    for (float& v : g.samples()) v = static_cast<float>(rng.uniform());
  // Non-constant guidance so weights vary.
  for (int t = 0; t < T; ++t)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        f.lab[t].L.at(x, y) = static_cast<float>(40 + 5 * x + 2 * y + 3 * t);
        f.ndsm.grids[t].at(x, y) = static_cast<float>((x + y + t) % 4);
      }
  RefineParams p = f.params;
  p.max_iter = 1;
  const RefineResult r = refine_probabilities(f.probs, f.lab, f.ndsm, p);

  const int rad = p.window / 2;
  for (int tm = 0; tm < T; ++tm)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::array<double, 3> lab_c{f.lab[tm].L.at(x, y), f.lab[tm].a.at(x, y),
                                          f.lab[tm].b.at(x, y)};
        double wsum = 0.0, vsum = 0.0;
        for (int tn = 0; tn < T; ++tn)
          for (int ny = std::max(0, y - rad); ny <= std::min(h - 1, y + rad); ++ny)
            for (int nx = std::max(0, x - rad); nx <= std::min(w - 1, x + rad); ++nx) {
              const std::array<double, 3> lab_n{f.lab[tn].L.at(nx, ny), f.lab[tn].a.at(nx, ny),
                                                f.lab[tn].b.at(nx, ny)};
              const double wgt = static_cast<float>(
                  w3d_weight(nx - x, ny - y, lab_c, lab_n, f.ndsm.grids[tm].at(x, y),
                             f.ndsm.grids[tn].at(nx, ny), p.sigma_s, p.sigma_r, 3.0));
              wsum += wgt;
              vsum += wgt * f.probs.maps[0][tn].at(nx, ny);
            }
        CHECK(r.probs.maps[0][tm].at(x, y) == doctest::Approx(vsum / wsum).epsilon(1e-6));
      }
}

TEST_CASE("monotone consensus: a dominant class keeps gaining probability") {
  Fixture f(8, 8, 3, 2);
  Rng rng(23);
  for (int t = 0; t < 3; ++t)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        const float p = static_cast<float>(0.6 + 0.3 * rng.uniform());
        f.probs.maps[0][t].at(x, y) = p;
        f.probs.maps[1][t].at(x, y) = 1.0f - p;
      }
  RefineParams p = f.params;
  p.convergence = 0.001;
  // Updates are convex combinations of dominant-class values, so that
  // class's worst pixel can only improve across iterations.
  double prev_min = 0.0;
  for (int iters = 1; iters <= 5; ++iters) {
    RefineParams pi = p;
    pi.max_iter = iters;
    const RefineResult r = refine_probabilities(f.probs, f.lab, f.ndsm, pi);
    double lo = 1.0, mean = 0.0;
    for (float v : r.probs.maps[0][0].samples()) {
      lo = std::min(lo, static_cast<double>(v));
      mean += v;
    }
    mean /= 64.0;
    CHECK(lo >= prev_min - 1e-9);
    CHECK(mean >= 0.6);  // dominance persists
    prev_min = lo;
  }
}

TEST_CASE("renormalization keeps per-pixel class sums at one") {
  Fixture f(6, 6, 2, 3);
  Rng rng(29);
  for (auto& per_class : f.probs.maps)
    for (RasterGrid& g : per_class)
      for (float& v : g.samples()) v = static_cast<float>(rng.uniform(0.1, 0.9));
  RefineParams p = f.params;
  p.renormalize = true;
  p.max_iter = 3;
  p.convergence = 0.0001;
  const RefineResult r = refine_probabilities(f.probs, f.lab, f.ndsm, p);
  for (size_t t = 0; t < 2; ++t)
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) {
        double sum = 0.0;
        for (size_t c = 0; c < 3; ++c) sum += r.probs.maps[c][t].at(x, y);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
      }
}

TEST_CASE("missing class bandwidth is rejected") {
  Fixture f(4, 4, 2, 2);
  f.params.sigma_h.erase("class1");
  CHECK_THROWS_AS(refine_probabilities(f.probs, f.lab, f.ndsm, f.params), DataError);
}

TEST_CASE("mismatched stacks are rejected") {
  Fixture f(4, 4, 2, 2);
  SUBCASE("ndsm dimension") {
    f.ndsm.grids[0] = RasterGrid(3, 4, 2.0f);
    f.ndsm.grids[1] = RasterGrid(3, 4, 2.0f);
    CHECK_THROWS_AS(refine_probabilities(f.probs, f.lab, f.ndsm, f.params), DimensionError);
  }
  SUBCASE("date count") {
    f.lab.pop_back();
    CHECK_THROWS_AS(refine_probabilities(f.probs, f.lab, f.ndsm, f.params), DataError);
  }
  SUBCASE("probability out of range") {
    f.probs.maps[0][0].at(0, 0) = 1.5f;
    CHECK_THROWS_AS(refine_probabilities(f.probs, f.lab, f.ndsm, f.params), DataError);
  }
}

TEST_CASE("classify_argmax picks the max with lowest-index ties") {
  ProbabilityStack probs;
  probs.classes = {"a", "b", "c"};
  probs.dates = {"2020-01-01"};
  probs.maps.resize(3);
  for (auto& m : probs.maps) m.emplace_back(2, 2, 0.0f);
  // (0,0): clear winner class 0; (1,0): tie between 0 and 1; (0,1): all
  // nodata; (1,1): winner class 2.
  probs.maps[0][0].at(0, 0) = 0.7f;
  probs.maps[1][0].at(0, 0) = 0.2f;
  probs.maps[2][0].at(0, 0) = 0.1f;
  probs.maps[0][0].at(1, 0) = 0.4f;
  probs.maps[1][0].at(1, 0) = 0.4f;
  probs.maps[2][0].at(1, 0) = 0.2f;
  for (auto& m : probs.maps) m[0].at(0, 1) = kNoData;
  probs.maps[2][0].at(1, 1) = 0.9f;

  const LabelGrid out = classify_argmax(probs, 0);
  CHECK(out.at(0, 0) == 0);
  CHECK(out.at(1, 0) == 0);
  CHECK(out.at(0, 1) == kNoLabel);
  CHECK(out.at(1, 1) == 2);
}

TEST_CASE("argmax is invariant under common positive scaling") {
  Rng rng(37);
  ProbabilityStack probs;
  probs.classes = {"a", "b"};
  probs.dates = {"2020-01-01"};
  probs.maps.resize(2);
  for (auto& m : probs.maps) {
    m.emplace_back(6, 6);
    for (float& v : m[0].samples()) v = static_cast<float>(rng.uniform());
  }
  ProbabilityStack scaled = probs;
  for (auto& m : scaled.maps)
    for (float& v : m[0].samples()) v *= 0.5f;
  const LabelGrid a = classify_argmax(probs, 0);
  const LabelGrid b = classify_argmax(scaled, 0);
  for (size_t i = 0; i < a.labels().size(); ++i) CHECK(a.labels()[i] == b.labels()[i]);
}

TEST_CASE("refinement restores corrupted two-class probabilities") {
  SceneSpec spec;
  spec.width = 24;
  spec.height = 24;
  spec.seed = 404;
  spec.dates = 3;
  const DsmScene scene = synth_dsm_scene(spec);

  // Two-class relabeling: elevated (building or tree) vs ground.
  LabelGrid two(spec.width, spec.height);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x)
      two.at(x, y) = scene.labels.at(x, y) <= 1 ? 0 : 1;

  const std::vector<std::string> classes{"elevated", "ground"};
  const ProbabilityStack clean =
      synth_probability_stack(two, classes, scene.stack.dates, 0.7, 7);
  const ProbabilityStack dirty = corrupt_probabilities(clean, 0.10, 8);

  TemporalStack ndsm;
  ndsm.band = "ndsm";
  ndsm.dates = scene.stack.dates;
  std::vector<LabImage> lab;
  for (int t = 0; t < spec.dates; ++t) {
    RasterGrid g(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x)
        g.at(x, y) = scene.gt_dsm.at(x, y) - 100.0f;
    ndsm.grids.push_back(g);
    // Spectral guidance separates the classes.
    RasterGrid L(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x)
        L.at(x, y) = two.at(x, y) == 0 ? 70.0f : 30.0f;
    lab.push_back(LabImage{L, RasterGrid(spec.width, spec.height, 0.0f),
                           RasterGrid(spec.width, spec.height, 0.0f)});
  }

  RefineParams params;
  params.sigma_h = {{"elevated", 3.0}, {"ground", 3.0}};
  const RefineResult r = refine_probabilities(dirty, lab, ndsm, params);
  CHECK(r.iterations <= params.max_iter);

  // Count corrupted pixels whose argmax was restored at date 0.
  const LabelGrid before = classify_argmax(dirty, 0);
  const LabelGrid after = classify_argmax(r.probs, 0);
  size_t corrupted = 0, restored = 0;
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      if (before.at(x, y) == two.at(x, y)) continue;
      ++corrupted;
      if (after.at(x, y) == two.at(x, y)) ++restored;
    }
  REQUIRE(corrupted > 0);
  CHECK(static_cast<double>(restored) / corrupted >= 0.8);
}
