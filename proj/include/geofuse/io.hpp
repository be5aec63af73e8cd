#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geofuse/raster.hpp"

namespace geofuse {

// PFM grayscale ("Pf"): 32-bit reals, little-endian (scale field -1.0),
// rows stored bottom-up. Round trips are bit-exact; nodata stays nodata.
RasterGrid read_pfm(const std::string& path);
void write_pfm(const std::string& path, const RasterGrid& grid);

// Binary PGM ("P5"), maxval 255 or 65535 (16-bit samples big-endian).
struct PgmImage {
  int width = 0, height = 0;
  int maxval = 255;
  std::vector<uint16_t> pixels;  // row-major, top-down
};

PgmImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const PgmImage& image);

// Masks encode as 0 / 255; labels encode as 16-bit values (kNoLabel -> 0,
// label i -> i + 1).
BoolGrid pgm_to_mask(const PgmImage& image);
PgmImage mask_to_pgm(const BoolGrid& mask);
LabelGrid pgm_to_labels(const PgmImage& image);
PgmImage labels_to_pgm(const LabelGrid& labels);

struct ManifestEntry {
  std::string path;
  std::string date;  // ISO-8601
};

// JSON stack manifest. Raster paths are resolved relative to the manifest
// file's directory.
struct StackManifest {
  int version = 1;
  std::string band;
  std::vector<ManifestEntry> entries;
  std::vector<std::pair<std::string, std::string>> class_masks;  // name -> path
  double pixel_size = 0.0;  // meters; 0 = unspecified
};

StackManifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const StackManifest& manifest);

// Loads every entry (and class masks, if present).
TemporalStack load_stack(const StackManifest& manifest, const std::string& manifest_path);
ClassMaskSet load_masks(const StackManifest& manifest, const std::string& manifest_path);

// CSV report: header row, UTF-8, LF line endings.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Run manifest written beside outputs: inputs, parameters, tool version.
void write_run_manifest(const std::string& out_path, const std::string& subcommand,
                        const std::vector<std::string>& argv,
                        const std::string& params_json);

std::string parent_dir(const std::string& path);
std::string join_path(const std::string& dir, const std::string& leaf);

}  // namespace geofuse
