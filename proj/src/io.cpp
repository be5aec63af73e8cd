#include "geofuse/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace geofuse {

namespace {

static_assert(std::endian::native == std::endian::little,
              "raster I/O assumes a little-endian host");

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw IoError("truncated header");
  return tok;
}

}  // namespace

RasterGrid read_pfm(const std::string& path) {
  std::ifstream in = open_in(path);
  const std::string magic = header_token(in);
  if (magic == "PF") throw IoError(path + ": color PFM is not supported");
  if (magic != "Pf") throw IoError(path + ": bad magic '" + magic + "'");
  int w, h;
  double scale;
  try {
    w = std::stoi(header_token(in));
    h = std::stoi(header_token(in));
    scale = std::stod(header_token(in));
  } catch (const std::exception&) {
    throw IoError(path + ": malformed header");
  }
  if (w <= 0 || h <= 0) throw IoError(path + ": non-positive dimensions");
  if (scale >= 0.0) throw IoError(path + ": big-endian PFM is not supported");

  RasterGrid grid(w, h);
  // PFM rows are bottom-up.
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(&grid.samples()[static_cast<size_t>(y) * w]),
            static_cast<std::streamsize>(w) * 4);
    if (!in) throw IoError(path + ": truncated sample data");
  }
  return grid;
}

void write_pfm(const std::string& path, const RasterGrid& grid) {
  if (grid.empty()) throw IoError("write_pfm: empty grid");
  std::ofstream out = open_out(path);
  out << "Pf\n" << grid.width() << " " << grid.height() << "\n-1.0\n";
  for (int y = grid.height() - 1; y >= 0; --y)
    out.write(reinterpret_cast<const char*>(&grid.samples()[static_cast<size_t>(y) * grid.width()]),
              static_cast<std::streamsize>(grid.width()) * 4);
  if (!out) throw IoError("write_pfm: failed writing " + path);
}

PgmImage read_pgm(const std::string& path) {
  std::ifstream in = open_in(path);
  const std::string magic = header_token(in);
  if (magic != "P5") throw IoError(path + ": bad magic '" + magic + "'");
  PgmImage img;
  try {
    img.width = std::stoi(header_token(in));
    img.height = std::stoi(header_token(in));
    img.maxval = std::stoi(header_token(in));
  } catch (const std::exception&) {
    throw IoError(path + ": malformed header");
  }
  if (img.width <= 0 || img.height <= 0) throw IoError(path + ": non-positive dimensions");
  if (img.maxval != 255 && img.maxval != 65535)
    throw IoError(path + ": unsupported maxval " + std::to_string(img.maxval));

  const size_t n = static_cast<size_t>(img.width) * img.height;
  img.pixels.resize(n);
  if (img.maxval == 255) {
    std::vector<uint8_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (!in) throw IoError(path + ": truncated sample data");
    std::copy(raw.begin(), raw.end(), img.pixels.begin());
  } else {
    std::vector<uint8_t> raw(n * 2);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 2));
    if (!in) throw IoError(path + ": truncated sample data");
    for (size_t i = 0; i < n; ++i)  // 16-bit PGM samples are big-endian
      img.pixels[i] = static_cast<uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  }
  return img;
}

void write_pgm(const std::string& path, const PgmImage& image) {
  if (image.maxval != 255 && image.maxval != 65535)
    throw IoError("write_pgm: unsupported maxval " + std::to_string(image.maxval));
  const size_t n = static_cast<size_t>(image.width) * image.height;
  if (image.pixels.size() != n) throw IoError("write_pgm: pixel count mismatch");
  std::ofstream out = open_out(path);
  out << "P5\n" << image.width << " " << image.height << "\n" << image.maxval << "\n";
  if (image.maxval == 255) {
    std::vector<uint8_t> raw(n);
    for (size_t i = 0; i < n; ++i) raw[i] = static_cast<uint8_t>(image.pixels[i] & 0xFF);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(n));
  } else {
    std::vector<uint8_t> raw(n * 2);
    for (size_t i = 0; i < n; ++i) {
      raw[2 * i] = static_cast<uint8_t>(image.pixels[i] >> 8);
      raw[2 * i + 1] = static_cast<uint8_t>(image.pixels[i] & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(n * 2));
  }
  if (!out) throw IoError("write_pgm: failed writing " + path);
}

BoolGrid pgm_to_mask(const PgmImage& image) {
  BoolGrid mask(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      mask.set(x, y, image.pixels[static_cast<size_t>(y) * image.width + x] != 0);
  return mask;
}

PgmImage mask_to_pgm(const BoolGrid& mask) {
  PgmImage img;
  img.width = mask.width();
  img.height = mask.height();
  img.maxval = 255;
  img.pixels.resize(mask.size());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      img.pixels[static_cast<size_t>(y) * mask.width() + x] = mask.at(x, y) ? 255 : 0;
  return img;
}

LabelGrid pgm_to_labels(const PgmImage& image) {
  LabelGrid labels(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const uint16_t v = image.pixels[static_cast<size_t>(y) * image.width + x];
      labels.at(x, y) = v == 0 ? kNoLabel : static_cast<int32_t>(v) - 1;
    }
  return labels;
}

PgmImage labels_to_pgm(const LabelGrid& labels) {
  PgmImage img;
  img.width = labels.width();
  img.height = labels.height();
  img.maxval = 65535;
  img.pixels.resize(labels.size());
  for (int y = 0; y < labels.height(); ++y)
    for (int x = 0; x < labels.width(); ++x) {
      const int32_t v = labels.at(x, y);
      if (v < kNoLabel || v >= 65535) throw IoError("labels_to_pgm: label out of range");
      img.pixels[static_cast<size_t>(y) * labels.width() + x] =
          v == kNoLabel ? 0 : static_cast<uint16_t>(v + 1);
    }
  return img;
}

StackManifest read_manifest(const std::string& path) {
  std::ifstream in = open_in(path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": invalid JSON: " + e.what());
  }
  StackManifest m;
  try {
    m.version = doc.at("version").get<int>();
    if (m.version != 1) throw IoError(path + ": unrecognized manifest version");
    m.band = doc.value("band", std::string{});
    for (const auto& e : doc.at("entries")) {
      ManifestEntry entry;
      entry.path = e.at("path").get<std::string>();
      entry.date = e.at("date").get<std::string>();
      m.entries.push_back(std::move(entry));
    }
    if (doc.contains("class_masks"))
      for (const auto& [name, p] : doc["class_masks"].items())
        m.class_masks.emplace_back(name, p.get<std::string>());
    m.pixel_size = doc.value("pixel_size", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": manifest field error: " + e.what());
  }
  for (size_t i = 1; i < m.entries.size(); ++i)
    if (!(m.entries[i - 1].date < m.entries[i].date))
      throw IoError(path + ": entry dates must be strictly increasing");
  return m;
}

void write_manifest(const std::string& path, const StackManifest& manifest) {
  nlohmann::json doc;
  doc["version"] = manifest.version;
  doc["band"] = manifest.band;
  doc["entries"] = nlohmann::json::array();
  for (const auto& e : manifest.entries)
    doc["entries"].push_back({{"path", e.path}, {"date", e.date}});
  if (!manifest.class_masks.empty()) {
    nlohmann::json cm = nlohmann::json::object();
    for (const auto& [name, p] : manifest.class_masks) cm[name] = p;
    doc["class_masks"] = cm;
  }
  if (manifest.pixel_size > 0.0) doc["pixel_size"] = manifest.pixel_size;
  std::ofstream out = open_out(path);
  out << doc.dump(2) << "\n";
}

std::string parent_dir(const std::string& path) {
  return std::filesystem::path(path).parent_path().string();
}

std::string join_path(const std::string& dir, const std::string& leaf) {
  if (std::filesystem::path(leaf).is_absolute() || dir.empty()) return leaf;
  return (std::filesystem::path(dir) / leaf).string();
}

TemporalStack load_stack(const StackManifest& manifest, const std::string& manifest_path) {
  const std::string dir = parent_dir(manifest_path);
  TemporalStack stack;
  stack.band = manifest.band;
  for (const auto& e : manifest.entries) {
    stack.grids.push_back(read_pfm(join_path(dir, e.path)));
    stack.dates.push_back(e.date);
  }
  stack.check();
  return stack;
}

ClassMaskSet load_masks(const StackManifest& manifest, const std::string& manifest_path) {
  const std::string dir = parent_dir(manifest_path);
  ClassMaskSet masks;
  for (const auto& [name, p] : manifest.class_masks)
    masks.masks.emplace_back(name, pgm_to_mask(read_pgm(join_path(dir, p))));
  return masks;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out = open_out(path);
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ",";
      // Quote cells containing separators, per RFC 4180.
      if (cells[i].find_first_of(",\"\n") != std::string::npos) {
        out << '"';
        for (char c : cells[i]) {
          if (c == '"') out << '"';
          out << c;
        }
        out << '"';
      } else {
        out << cells[i];
      }
    }
    out << "\n";
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  if (!out) throw IoError("write_csv: failed writing " + path);
}

void write_run_manifest(const std::string& out_path, const std::string& subcommand,
                        const std::vector<std::string>& argv,
                        const std::string& params_json) {
  nlohmann::json doc;
  doc["tool"] = "geofuse";
  doc["version"] = "1.0.0";
  doc["subcommand"] = subcommand;
  doc["argv"] = argv;
  doc["parameters"] = params_json.empty() ? nlohmann::json::object()
                                          : nlohmann::json::parse(params_json);
  const std::string path = out_path + ".run.json";
  std::ofstream out = open_out(path);
  out << doc.dump(2) << "\n";
}

}  // namespace geofuse
