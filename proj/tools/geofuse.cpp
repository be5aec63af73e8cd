#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "geofuse/dsm_fusion.hpp"
#include "geofuse/io.hpp"
#include "geofuse/metrics.hpp"
#include "geofuse/parallel.hpp"
#include "geofuse/prob_refine.hpp"
#include "geofuse/raster.hpp"
#include "geofuse/stereo.hpp"
#include "geofuse/stfilter.hpp"
#include "geofuse/synth.hpp"

namespace gf = geofuse;
using nlohmann::json;

namespace {

bool g_verbose = false;

void note(const std::string& msg) {
  if (g_verbose) std::cerr << "geofuse: " << msg << "\n";
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw gf::IoError("cannot open config " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw gf::IoError(path + ": invalid JSON: " + e.what());
  }
  return doc;
}

gf::SceneSpec scene_from_config(const json& cfg, uint64_t seed) {
  gf::SceneSpec spec;
  spec.seed = seed;
  spec.width = cfg.value("width", spec.width);
  spec.height = cfg.value("height", spec.height);
  spec.dates = cfg.value("dates", spec.dates);
  spec.ground_level = cfg.value("ground_level", spec.ground_level);
  spec.outlier_fraction = cfg.value("outlier_fraction", spec.outlier_fraction);
  spec.outlier_magnitude = cfg.value("outlier_magnitude", spec.outlier_magnitude);
  if (cfg.contains("noise_sigma"))
    for (const auto& [cls, s] : cfg["noise_sigma"].items())
      spec.noise_sigma[cls] = s.get<double>();
  auto block = [](const json& b, gf::BlockSpec& out) {
    out.count = b.value("count", out.count);
    out.min_height = b.value("min_height", out.min_height);
    out.max_height = b.value("max_height", out.max_height);
    out.min_size = b.value("min_size", out.min_size);
    out.max_size = b.value("max_size", out.max_size);
  };
  if (cfg.contains("buildings")) block(cfg["buildings"], spec.buildings);
  if (cfg.contains("trees")) block(cfg["trees"], spec.trees);
  spec.drift_gain_min = cfg.value("drift_gain_min", spec.drift_gain_min);
  spec.drift_gain_max = cfg.value("drift_gain_max", spec.drift_gain_max);
  spec.drift_offset_min = cfg.value("drift_offset_min", spec.drift_offset_min);
  spec.drift_offset_max = cfg.value("drift_offset_max", spec.drift_offset_max);
  return spec;
}

// Writes a temporal stack as per-date PFMs plus a manifest.
std::string write_stack(const gf::TemporalStack& stack, const std::string& dir,
                        const std::string& prefix,
                        const std::vector<std::pair<std::string, std::string>>& masks = {}) {
  gf::StackManifest m;
  m.band = stack.band;
  for (size_t t = 0; t < stack.count(); ++t) {
    const std::string leaf = prefix + "_" + stack.dates[t] + ".pfm";
    gf::write_pfm(gf::join_path(dir, leaf), stack.grids[t]);
    m.entries.push_back({leaf, stack.dates[t]});
  }
  m.class_masks = masks;
  const std::string path = gf::join_path(dir, prefix + "_stack.json");
  gf::write_manifest(path, m);
  return path;
}

int run_synth(const std::string& out_dir, const std::string& config, uint64_t seed,
              const std::string& kind, const std::vector<std::string>& argv) {
  const json cfg = load_config(config);
  const gf::SceneSpec spec = scene_from_config(cfg, seed);
  std::filesystem::create_directories(out_dir);

  if (kind == "dsm") {
    const gf::DsmScene scene = gf::synth_dsm_scene(spec);
    gf::write_pfm(gf::join_path(out_dir, "gt_dsm.pfm"), scene.gt_dsm);
    gf::write_pgm(gf::join_path(out_dir, "labels.pgm"), gf::labels_to_pgm(scene.labels));
    std::vector<std::pair<std::string, std::string>> mask_paths;
    for (const auto& [name, mask] : scene.masks.masks) {
      const std::string leaf = "mask_" + name + ".pgm";
      gf::write_pgm(gf::join_path(out_dir, leaf), gf::mask_to_pgm(mask));
      mask_paths.emplace_back(name, leaf);
    }
    const std::string manifest = write_stack(scene.stack, out_dir, "dsm", mask_paths);
    note("wrote " + manifest);
  } else if (kind == "stereo") {
    const int disparity = cfg.value("disparity", 3);
    const gf::StereoScene scene = gf::synth_stereo_pair(spec, disparity);
    gf::write_pfm(gf::join_path(out_dir, "left.pfm"), scene.left);
    gf::write_pfm(gf::join_path(out_dir, "right.pfm"), scene.right);
    gf::write_pfm(gf::join_path(out_dir, "gt_disparity.pfm"), scene.gt_disparity);
  } else if (kind == "spectral") {
    const gf::SpectralScene scene = gf::synth_spectral_stack(spec);
    for (const auto& [band, stack] : scene.stack.bands) write_stack(stack, out_dir, band);
    gf::write_pgm(gf::join_path(out_dir, "labels.pgm"), gf::labels_to_pgm(scene.labels));
  } else {
    std::cerr << "geofuse synth: unknown kind '" << kind
              << "' (valid: dsm, spectral, stereo)\n";
    return 1;
  }
  gf::write_run_manifest(gf::join_path(out_dir, "synth"), "synth", argv,
                         json{{"seed", seed}, {"kind", kind}}.dump());
  return 0;
}

int run_stfilter(const std::string& manifest_path, const std::string& out_dir,
                 const std::string& config, const std::vector<std::string>& argv) {
  const json cfg = load_config(config);
  gf::StFilterParams params;
  params.sigma_x = cfg.value("sigma_x", params.sigma_x);
  params.sigma_s = cfg.value("sigma_s", params.sigma_s);
  params.sigma_Ts = cfg.value("sigma_Ts", params.sigma_Ts);
  params.window = cfg.value("window", params.window);

  const gf::StackManifest m = gf::read_manifest(manifest_path);
  const gf::TemporalStack stack = gf::load_stack(m, manifest_path);
  note("filtering " + std::to_string(stack.count()) + " dates");
  const gf::TemporalStack filtered = gf::stfilter(stack, params);

  std::filesystem::create_directories(out_dir);
  const std::string out_manifest = write_stack(filtered, out_dir, "filtered");
  gf::write_run_manifest(out_manifest, "stfilter", argv,
                         json{{"sigma_x", params.sigma_x},
                              {"sigma_s", params.sigma_s},
                              {"sigma_Ts", params.sigma_Ts},
                              {"window", params.window}}
                             .dump());
  return 0;
}

int run_prob_refine(const std::string& config, const std::string& out_dir,
                    const std::vector<std::string>& argv) {
  const json cfg = load_config(config);
  if (!cfg.contains("classes") || !cfg.contains("ndsm_manifest"))
    throw gf::DataError("prob-refine config needs 'classes' and 'ndsm_manifest'");

  gf::ProbabilityStack probs;
  for (const auto& c : cfg["classes"]) {
    const std::string name = c.at("name").get<std::string>();
    const std::string mp = c.at("manifest").get<std::string>();
    const gf::StackManifest m = gf::read_manifest(mp);
    const gf::TemporalStack stack = gf::load_stack(m, mp);
    probs.classes.push_back(name);
    if (probs.dates.empty()) probs.dates = stack.dates;
    probs.maps.push_back(stack.grids);
  }

  const std::string np = cfg["ndsm_manifest"].get<std::string>();
  const gf::TemporalStack ndsm = gf::load_stack(gf::read_manifest(np), np);

  std::vector<gf::LabImage> lab;
  const char* slots[3] = {"nir_manifest", "red_manifest", "green_manifest"};
  std::vector<gf::TemporalStack> rgb;
  for (const char* slot : slots) {
    const std::string p = cfg.at(slot).get<std::string>();
    rgb.push_back(gf::load_stack(gf::read_manifest(p), p));
  }
  for (size_t t = 0; t < probs.dates.size(); ++t)
    lab.push_back(gf::rgb_to_cielab(rgb[0].grids[t], rgb[1].grids[t], rgb[2].grids[t]));

  gf::RefineParams params;
  const json pj = cfg.value("params", json::object());
  params.sigma_s = pj.value("sigma_s", params.sigma_s);
  params.sigma_r = pj.value("sigma_r", params.sigma_r);
  params.window = pj.value("window", params.window);
  params.convergence = pj.value("convergence", params.convergence);
  params.max_iter = pj.value("max_iter", params.max_iter);
  params.renormalize = pj.value("renormalize", params.renormalize);
  if (pj.contains("sigma_h"))
    for (const auto& [cls, s] : pj["sigma_h"].items()) params.sigma_h[cls] = s.get<double>();
  // Unspecified class bandwidths come from the masked nDSM range rule using
  // the current argmax labels at the first date.
  if (params.sigma_h.size() < probs.classes.size()) {
    const gf::LabelGrid labels = gf::classify_argmax(probs, 0);
    for (size_t c = 0; c < probs.classes.size(); ++c) {
      if (params.sigma_h.count(probs.classes[c])) continue;
      gf::BoolGrid mask(labels.width(), labels.height());
      for (int y = 0; y < labels.height(); ++y)
        for (int x = 0; x < labels.width(); ++x)
          mask.set(x, y, labels.at(x, y) == static_cast<int32_t>(c));
      params.sigma_h[probs.classes[c]] =
          gf::class_height_bandwidth(ndsm.grids.front(), mask);
    }
  }

  const gf::RefineResult result = gf::refine_probabilities(probs, lab, ndsm, params);
  note("converged after " + std::to_string(result.iterations) + " iterations");

  std::filesystem::create_directories(out_dir);
  for (size_t c = 0; c < result.probs.classes.size(); ++c) {
    gf::TemporalStack stack;
    stack.band = "prob_" + result.probs.classes[c];
    stack.dates = result.probs.dates;
    stack.grids = result.probs.maps[c];
    write_stack(stack, out_dir, "refined_" + result.probs.classes[c]);
  }
  for (size_t t = 0; t < result.probs.dates.size(); ++t)
    gf::write_pgm(gf::join_path(out_dir, "labels_" + result.probs.dates[t] + ".pgm"),
                  gf::labels_to_pgm(gf::classify_argmax(result.probs, t)));
  gf::write_run_manifest(gf::join_path(out_dir, "prob_refine"), "prob-refine", argv,
                         json{{"iterations", result.iterations}}.dump());
  return 0;
}

int run_dsm_fuse(const std::string& algo, const std::string& manifest_path,
                 const std::string& out_path, const std::string& config,
                 const std::string& ortho_path, const std::vector<std::string>& argv) {
  const json cfg = load_config(config);
  const gf::StackManifest m = gf::read_manifest(manifest_path);
  const gf::TemporalStack stack = gf::load_stack(m, manifest_path);

  gf::RasterGrid fused;
  if (algo == "median") {
    fused = gf::median_fuse(stack);
  } else if (algo == "adaptive-median") {
    const gf::ClassMaskSet masks = gf::load_masks(m, manifest_path);
    fused = gf::adaptive_median_fuse(stack, masks, cfg.value("radius", 7));
  } else if (algo == "kmedian") {
    fused = gf::kmedian_cluster_fuse(stack, cfg.value("window", 5),
                                     cfg.value("link_threshold", 10.0));
  } else if (algo == "waf") {
    fused = gf::weighted_average_fuse(stack, nullptr, cfg.value("sigma_w", 3.0));
  } else if (algo == "adaptive-st") {
    const gf::ClassMaskSet masks = gf::load_masks(m, manifest_path);
    gf::FusionBandwidths bw;
    bw.sigma_r = cfg.value("sigma_r", bw.sigma_r);
    bw.sigma_s = cfg.value("sigma_s", bw.sigma_s);
    bw.window = cfg.value("window", bw.window);
    if (cfg.contains("sigma_h"))
      for (const auto& [cls, s] : cfg["sigma_h"].items()) bw.sigma_h[cls] = s.get<double>();
    gf::RasterGrid ortho =
        ortho_path.empty() ? gf::median_fuse(stack) : gf::read_pfm(ortho_path);
    fused = gf::adaptive_st_fuse(stack, ortho, masks, bw);
  } else {
    std::cerr << "geofuse dsm-fuse: unknown --algo '" << algo
              << "' (valid: median, adaptive-median, kmedian, waf, adaptive-st)\n";
    return 1;
  }

  gf::write_pfm(out_path, fused);
  gf::write_run_manifest(out_path, "dsm-fuse", argv,
                         json{{"algo", algo}, {"manifest", manifest_path}}.dump());
  note("wrote " + out_path);
  return 0;
}

int run_sgm(const std::string& left_path, const std::string& right_path,
            const std::string& out_path, const std::string& config,
            const std::vector<std::string>& argv) {
  const json cfg = load_config(config);
  const gf::RasterGrid left = gf::read_pfm(left_path);
  const gf::RasterGrid right = gf::read_pfm(right_path);
  const int dmax = cfg.value("dmax", 16);
  const int window = cfg.value("window", 9);
  const double p1 = cfg.value("p1", 10.0), p2 = cfg.value("p2", 120.0);
  const int directions = cfg.value("directions", 8);

  const gf::CostVolume cost = gf::census_cost_volume(left, right, dmax, window);
  const gf::SgmResult result = gf::sgm_aggregate(cost, p1, p2, directions);
  gf::write_pfm(out_path, result.disparity);
  gf::write_pfm(out_path + ".energy.pfm", result.energy);
  gf::write_run_manifest(out_path, "sgm", argv,
                         json{{"dmax", dmax},
                              {"window", window},
                              {"p1", p1},
                              {"p2", p2},
                              {"directions", directions}}
                             .dump());
  return 0;
}

int run_change_detect(const std::vector<std::string>& a_paths,
                      const std::vector<std::string>& b_paths, const std::string& out_path,
                      const std::vector<std::string>& argv) {
  std::vector<gf::RasterGrid> a, b;
  for (const auto& p : a_paths) a.push_back(gf::read_pfm(p));
  for (const auto& p : b_paths) b.push_back(gf::read_pfm(p));
  const gf::BoolGrid mask = gf::change_mask(a, b);
  gf::write_pgm(out_path, gf::mask_to_pgm(mask));
  gf::write_run_manifest(out_path, "change-detect", argv, "{}");
  return 0;
}

int run_eval(const std::string& metric, const std::string& pred_path,
             const std::string& gt_path, const std::string& out_path,
             const std::vector<std::string>& argv) {
  std::vector<std::string> header{"metric", "value"};
  std::vector<std::vector<std::string>> rows;
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };

  if (metric == "rmse") {
    rows.push_back({"rmse", num(gf::rmse(gf::read_pfm(pred_path), gf::read_pfm(gt_path)))});
  } else if (metric == "completeness") {
    rows.push_back({"completeness_pct", num(gf::completeness(gf::read_pfm(pred_path)))});
  } else if (metric == "prf1") {
    const gf::Prf1 r = gf::prf1(gf::pgm_to_mask(gf::read_pgm(pred_path)),
                                gf::pgm_to_mask(gf::read_pgm(gt_path)));
    rows.push_back({"recall", num(r.recall)});
    rows.push_back({"precision", num(r.precision)});
    rows.push_back({"f1", num(r.f1)});
  } else if (metric == "accuracy") {
    const gf::AccuracyResult r = gf::accuracy(gf::pgm_to_labels(gf::read_pgm(pred_path)),
                                              gf::pgm_to_labels(gf::read_pgm(gt_path)));
    rows.push_back({"overall", num(r.overall)});
    for (const auto& [cls, v] : r.per_class)
      rows.push_back({"class_" + std::to_string(cls), num(v)});
  } else if (metric == "r2") {
    // Jointly valid pixels of the two rasters serve as the (x, y) sample.
    const gf::RasterGrid pred = gf::read_pfm(pred_path), gt = gf::read_pfm(gt_path);
    if (!pred.same_shape(gt)) throw gf::DimensionError("eval r2: dimension mismatch");
    std::vector<double> xs, ys;
    for (int y = 0; y < gt.height(); ++y)
      for (int x = 0; x < gt.width(); ++x)
        if (pred.valid(x, y) && gt.valid(x, y)) {
          xs.push_back(gt.at(x, y));
          ys.push_back(pred.at(x, y));
        }
    const gf::RobustFit fit = gf::robust_r2(xs, ys);
    rows.push_back({"r2", num(fit.r2)});
    rows.push_back({"slope", num(fit.slope)});
    rows.push_back({"intercept", num(fit.intercept)});
  } else {
    std::cerr << "geofuse eval: unknown --metric '" << metric
              << "' (valid: rmse, prf1, r2, accuracy, completeness)\n";
    return 1;
  }

  gf::write_csv(out_path, header, rows);
  gf::write_run_manifest(out_path, "eval", argv, json{{"metric", metric}}.dump());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geofuse: raster fusion, filtering, and stereo toolkit"};
  app.require_subcommand(1);

  std::string config, manifest, out;
  uint64_t seed = 1;
  int threads = 1;
  app.add_option("--config", config, "JSON parameter file")->capture_default_str();
  app.add_option("--seed", seed, "Generator seed")->capture_default_str();
  app.add_option("--threads", threads, "Worker thread count")->capture_default_str();
  app.add_flag("--verbose", g_verbose, "Progress messages on stderr");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene");
  std::string synth_kind = "dsm";
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--kind", synth_kind, "dsm, spectral, or stereo");

  auto* stf = app.add_subcommand("stfilter", "Spatiotemporal homogenization filter");
  stf->add_option("--manifest", manifest, "Input stack manifest")->required();
  stf->add_option("--out", out, "Output directory")->required();

  auto* refine = app.add_subcommand("prob-refine", "Iterative probability refinement");
  refine->add_option("--out", out, "Output directory")->required();

  auto* fuse = app.add_subcommand("dsm-fuse", "Fuse a DSM stack");
  std::string algo, ortho;
  fuse->add_option("--algo", algo, "median, adaptive-median, kmedian, waf, adaptive-st")
      ->required();
  fuse->add_option("--manifest", manifest, "Input stack manifest")->required();
  fuse->add_option("--out", out, "Output PFM path")->required();
  fuse->add_option("--ortho", ortho, "Ortho intensity PFM (adaptive-st)");

  auto* sgm = app.add_subcommand("sgm", "Census + semi-global stereo matching");
  std::string left, right;
  sgm->add_option("--left", left, "Left image PFM")->required();
  sgm->add_option("--right", right, "Right image PFM")->required();
  sgm->add_option("--out", out, "Output disparity PFM")->required();

  auto* change = app.add_subcommand("change-detect", "Two-date change mask");
  std::vector<std::string> a_paths, b_paths;
  change->add_option("--a", a_paths, "Date A band PFMs")->required();
  change->add_option("--b", b_paths, "Date B band PFMs")->required();
  change->add_option("--out", out, "Output mask PGM")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate predictions");
  std::string metric, pred, gt;
  eval->add_option("--metric", metric, "rmse, prf1, r2, accuracy, completeness")->required();
  eval->add_option("--pred", pred, "Prediction file")->required();
  eval->add_option("--gt", gt, "Ground-truth file");
  eval->add_option("--out", out, "Output CSV path")->required();

  // Lets --config/--seed/--threads/--verbose appear after the subcommand.
  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  gf::set_thread_count(threads);
  const std::vector<std::string> args(argv, argv + argc);
  try {
    if (synth->parsed()) return run_synth(out, config, seed, synth_kind, args);
    if (stf->parsed()) return run_stfilter(manifest, out, config, args);
    if (refine->parsed()) return run_prob_refine(config, out, args);
    if (fuse->parsed()) return run_dsm_fuse(algo, manifest, out, config, ortho, args);
    if (sgm->parsed()) return run_sgm(left, right, out, config, args);
    if (change->parsed()) return run_change_detect(a_paths, b_paths, out, args);
    if (eval->parsed()) return run_eval(metric, pred, gt, out, args);
  } catch (const gf::Error& e) {
    std::cerr << "geofuse: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "geofuse: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
