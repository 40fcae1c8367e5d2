/* Copyright 2026 The ChangeForge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

// Synthetic change-detection pairs by cut-and-paste: a background becomes
// the reference image, and the test image is the same background with one
// to five pasted changes (rectangle crops, polygon crops or instance
// cutouts), optionally rotated and edge-feathered. Pairs are written as
// PNGs next to a JSON manifest that also serves real, hand-labelled data.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "changeforge/box.hpp"
#include "changeforge/error.hpp"
#include "changeforge/image.hpp"
#include "changeforge/imageops.hpp"
#include "changeforge/png_io.hpp"
#include "changeforge/rng.hpp"
#include "changeforge/shapes.hpp"

namespace changeforge {

namespace fs = std::filesystem;
using nlohmann::json;

enum class ChangeKind { RegularCrop = 0, InstanceCutout = 1, IrregularCrop = 2 };

inline constexpr std::array<ChangeKind, 3> kAllChangeKinds{
    ChangeKind::RegularCrop, ChangeKind::InstanceCutout, ChangeKind::IrregularCrop};

inline std::string to_string(ChangeKind k) {
  switch (k) {
    case ChangeKind::RegularCrop: return "RegularCrop";
    case ChangeKind::InstanceCutout: return "InstanceCutout";
    case ChangeKind::IrregularCrop: return "IrregularCrop";
  }
  return "?";
}

inline ChangeKind change_kind_from_string(const std::string& s) {
  for (auto k : kAllChangeKinds) {
    if (to_string(k) == s) return k;
  }
  throw ParameterError("unknown change kind '" + s + "'");
}

struct Restrictions {
  bool rotation = true;
  double rotation_min_deg = 0.0;
  double rotation_max_deg = 360.0;
  bool margin_blur = true;
  double blur_sigma_min = 0.8;
  double blur_sigma_max = 1.1;
  bool noise = true;
  double noise_sigma_min = 2.0;
  double noise_sigma_max = 10.0;
  bool jitter = true;
  double jitter_spread = 0.1;
};

struct GenerationConfig {
  std::string name = "custom";
  // Indexed by ChangeKind; must sum to 1.
  std::array<double, 3> kind_weights{1.0, 0.0, 0.0};
  Restrictions restrictions;
  AnchorSpec anchor;
  PolygonRanges polygon;
  int image_size = 512;  // backgrounds are resized to image_size^2
  int max_changes = 5;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::string source_pool_dir;
  std::string instance_pool_dir;

  double weight(ChangeKind k) const { return kind_weights[static_cast<int>(k)]; }

  void validate() const {
    double sum = 0.0;
    for (double w : kind_weights) {
      if (!(w >= 0.0)) throw ParameterError("change kind weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ParameterError("change kind weights must sum to 1");
    if (count < 1) throw ParameterError("count must be at least 1");
    if (image_size < 16) throw ParameterError("image_size must be at least 16");
    if (max_changes < 1) throw ParameterError("max_changes must be at least 1");
    const auto& r = restrictions;
    if (!(r.blur_sigma_min >= 0.0 && r.blur_sigma_max >= r.blur_sigma_min)) {
      throw ParameterError("margin blur sigma range is invalid");
    }
    if (!(r.noise_sigma_min >= 0.0 && r.noise_sigma_max >= r.noise_sigma_min)) {
      throw ParameterError("noise sigma range is invalid");
    }
    if (!(r.jitter_spread >= 0.0 && r.jitter_spread <= 0.5)) {
      throw ParameterError("jitter spread must lie in [0, 0.5]");
    }
    if (!(r.rotation_max_deg >= r.rotation_min_deg)) {
      throw ParameterError("rotation range is invalid");
    }
    anchor.validate();
  }
};

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

inline json to_json(const GenerationConfig& c) {
  json kinds = json::object();
  for (auto k : kAllChangeKinds) kinds[to_string(k)] = c.weight(k);
  json ratios = json::array();
  for (const auto& r : c.anchor.aspect_ratios) ratios.push_back({{"ratio", r.long_side}, {"weight", r.weight}});
  json bins = json::array();
  for (const auto& b : c.anchor.area_bins) bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"weight", b.weight}});
  const auto& r = c.restrictions;
  return {
      {"name", c.name},
      {"change_kinds", kinds},
      {"restrictions",
       {{"rotation", r.rotation},
        {"rotation_range_deg", {r.rotation_min_deg, r.rotation_max_deg}},
        {"margin_blur", r.margin_blur},
        {"margin_blur_sigma", {r.blur_sigma_min, r.blur_sigma_max}},
        {"noise", r.noise},
        {"noise_sigma", {r.noise_sigma_min, r.noise_sigma_max}},
        {"jitter", r.jitter},
        {"jitter_spread", r.jitter_spread}}},
      {"anchor",
       {{"aspect_ratios", ratios}, {"swap_probability", c.anchor.swap_probability}, {"area_bins", bins}}},
      {"polygon",
       {{"n", c.polygon.n},
        {"irregularity", {c.polygon.irregularity_lo, c.polygon.irregularity_hi}},
        {"spikiness", {c.polygon.spikiness_lo, c.polygon.spikiness_hi}}}},
      {"image_size", c.image_size},
      {"max_changes", c.max_changes},
      {"count", c.count},
      {"seed", c.seed},
      {"source_pool_dir", c.source_pool_dir},
      {"instance_pool_dir", c.instance_pool_dir},
  };
}

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ParameterError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) ==
        allowed.end()) {
      throw ParameterError("unknown key '" + key + "' in " + where);
    }
  }
}

inline void read_range(const json& j, const char* key, double& lo, double& hi) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw ParameterError(std::string(key) + " must be [lo, hi]");
  lo = v[0].get<double>();
  hi = v[1].get<double>();
}

}  // namespace detail

// Missing keys keep their defaults; unknown keys are rejected.
inline GenerationConfig generation_config_from_json(const json& j) {
  GenerationConfig c;
  try {
    detail::check_keys(j, {"name", "change_kinds", "restrictions", "anchor", "polygon", "image_size",
                           "max_changes", "count", "seed", "source_pool_dir", "instance_pool_dir"},
                       "generation config");
    c.name = j.value("name", c.name);
    if (j.contains("change_kinds")) {
      c.kind_weights = {0.0, 0.0, 0.0};
      const auto& kinds = j.at("change_kinds");
      if (!kinds.is_object()) throw ParameterError("change_kinds must be an object");
      for (const auto& [key, value] : kinds.items()) {
        c.kind_weights[static_cast<int>(change_kind_from_string(key))] = value.get<double>();
      }
    }
    if (j.contains("restrictions")) {
      const auto& r = j.at("restrictions");
      detail::check_keys(r, {"rotation", "rotation_range_deg", "margin_blur", "margin_blur_sigma", "noise",
                             "noise_sigma", "jitter", "jitter_spread"},
                         "restrictions");
      auto& o = c.restrictions;
      o.rotation = r.value("rotation", o.rotation);
      detail::read_range(r, "rotation_range_deg", o.rotation_min_deg, o.rotation_max_deg);
      o.margin_blur = r.value("margin_blur", o.margin_blur);
      detail::read_range(r, "margin_blur_sigma", o.blur_sigma_min, o.blur_sigma_max);
      o.noise = r.value("noise", o.noise);
      detail::read_range(r, "noise_sigma", o.noise_sigma_min, o.noise_sigma_max);
      o.jitter = r.value("jitter", o.jitter);
      o.jitter_spread = r.value("jitter_spread", o.jitter_spread);
    }
    if (j.contains("anchor")) {
      const auto& a = j.at("anchor");
      detail::check_keys(a, {"aspect_ratios", "swap_probability", "area_bins"}, "anchor");
      if (a.contains("aspect_ratios")) {
        c.anchor.aspect_ratios.clear();
        for (const auto& r : a.at("aspect_ratios")) {
          c.anchor.aspect_ratios.push_back({r.at("ratio").get<int>(), r.at("weight").get<double>()});
        }
      }
      c.anchor.swap_probability = a.value("swap_probability", c.anchor.swap_probability);
      if (a.contains("area_bins")) {
        c.anchor.area_bins.clear();
        for (const auto& b : a.at("area_bins")) {
          c.anchor.area_bins.push_back(
              {b.at("lo").get<double>(), b.at("hi").get<double>(), b.at("weight").get<double>()});
        }
      }
    }
    if (j.contains("polygon")) {
      const auto& p = j.at("polygon");
      detail::check_keys(p, {"n", "irregularity", "spikiness"}, "polygon");
      c.polygon.n = p.value("n", c.polygon.n);
      detail::read_range(p, "irregularity", c.polygon.irregularity_lo, c.polygon.irregularity_hi);
      detail::read_range(p, "spikiness", c.polygon.spikiness_lo, c.polygon.spikiness_hi);
    }
    c.image_size = j.value("image_size", c.image_size);
    c.max_changes = j.value("max_changes", c.max_changes);
    c.count = j.value("count", c.count);
    c.seed = j.value("seed", c.seed);
    c.source_pool_dir = j.value("source_pool_dir", c.source_pool_dir);
    c.instance_pool_dir = j.value("instance_pool_dir", c.instance_pool_dir);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("malformed generation config: ") + e.what());
  }
  c.validate();
  return c;
}

inline GenerationConfig load_generation_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParameterError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return generation_config_from_json(j);
}

// FNV-1a over the canonical (key-sorted) config JSON.
inline std::string parameter_hash(const GenerationConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Image pools
// ---------------------------------------------------------------------------

// PNG files of a directory in lexicographic order, loaded on demand.
class ImagePool {
 public:
  ImagePool() = default;

  explicit ImagePool(const fs::path& dir) : dir_(dir) {
    if (dir.empty()) return;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("image pool '" + dir.string() + "' is not a directory");
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      auto ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (ext == ".png") files_.push_back(entry.path());
    }
    std::sort(files_.begin(), files_.end());
  }

  std::size_t size() const { return files_.size(); }
  bool empty() const { return files_.empty(); }
  const fs::path& file(std::size_t i) const { return files_.at(i); }

  RgbImage load_rgb(std::size_t i) const { return read_png(files_.at(i)); }
  Patch load_rgba(std::size_t i) const { return read_png_rgba(files_.at(i)); }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
};

struct SourcePools {
  ImagePool sources;    // backgrounds and crop sources
  ImagePool instances;  // RGBA cutouts

  static SourcePools from_config(const GenerationConfig& c) {
    return {ImagePool(c.source_pool_dir), ImagePool(c.instance_pool_dir)};
  }
};

// ---------------------------------------------------------------------------
// Pair generation
// ---------------------------------------------------------------------------

struct PairSample {
  RgbImage reference;
  RgbImage test;
  std::vector<ChangeBox> boxes;
  ChangeKind kind = ChangeKind::RegularCrop;
};

inline constexpr int kPlacementRetries = 32;

inline ChangeKind sample_pair_kind(const GenerationConfig& cfg, Rng& rng) {
  return kAllChangeKinds[rng.weighted_index(cfg.kind_weights)];
}

// Random draws all come from the Rng passed to generate(), in a fixed
// order, so a pair is a pure function of (config, pools, seed).
class PairGenerator {
 public:
  PairGenerator(GenerationConfig cfg, const SourcePools& pools)
      : cfg_(std::move(cfg)), pools_(pools), anchors_(cfg_.image_size, cfg_.image_size, cfg_.anchor) {
    cfg_.validate();
    if (pools_.sources.empty()) throw GenerationError("source image pool is empty");
    if (cfg_.weight(ChangeKind::InstanceCutout) > 0.0 && pools_.instances.empty()) {
      throw GenerationError("instance pool is empty but InstanceCutout has positive weight");
    }
  }

  const GenerationConfig& config() const { return cfg_; }

  PairSample generate(Rng& rng) const {
    PairSample out;
    out.kind = sample_pair_kind(cfg_, rng);
    const auto bg_index = static_cast<std::size_t>(rng.uniform_int(0, pools_.sources.size() - 1));
    out.reference = resize_image(pools_.sources.load_rgb(bg_index), cfg_.image_size, cfg_.image_size);
    out.test = out.reference;

    const int changes = static_cast<int>(rng.uniform_int(1, cfg_.max_changes));
    for (int c = 0; c < changes; ++c) {
      bool placed = false;
      for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
        auto patch = make_change(out.kind, rng);
        if (!patch) continue;
        const Rect sup = patch->mask.support();
        const Point at{static_cast<int>(rng.uniform_int(-sup.x, cfg_.image_size - sup.right())),
                       static_cast<int>(rng.uniform_int(-sup.y, cfg_.image_size - sup.bottom()))};
        auto result = composite(out.test, *patch, at);
        out.test = std::move(result.image);
        out.boxes.push_back(ChangeBox::from_rect(result.box));
        placed = true;
      }
      if (!placed) {
        throw GenerationError("could not place a " + to_string(out.kind) + " change within " +
                              std::to_string(kPlacementRetries) + " attempts");
      }
    }

    const auto& r = cfg_.restrictions;
    if (r.noise || r.jitter) {
      RgbImage& side = rng.bernoulli(0.5) ? out.reference : out.test;
      if (r.noise) {
        const double sigma = rng.uniform(r.noise_sigma_min, r.noise_sigma_max);
        side = add_gaussian_noise(side, sigma, rng.next_u64());
      }
      if (r.jitter) side = color_jitter(side, sample_jitter_gains(rng, r.jitter_spread));
    }
    return out;
  }

 private:
  // One candidate change, already rotated and feathered. Returns nothing
  // when the draw is unusable (source too small, box outside the allowed
  // area range, support larger than the image).
  std::optional<Patch> make_change(ChangeKind kind, Rng& rng) const {
    const int size = cfg_.image_size;
    const auto& r = cfg_.restrictions;
    Patch patch;
    if (kind == ChangeKind::InstanceCutout) {
      const auto idx = static_cast<std::size_t>(rng.uniform_int(0, pools_.instances.size() - 1));
      patch = pools_.instances.load_rgba(idx);
    } else {
      const AnchorSample anchor = anchors_.sample(rng);
      const auto idx = static_cast<std::size_t>(rng.uniform_int(0, pools_.sources.size() - 1));
      const RgbImage src = pools_.sources.load_rgb(idx);
      const int w = anchor.rect.w;
      const int h = anchor.rect.h;
      if (w > src.width() || h > src.height()) return std::nullopt;
      const Rect crop{static_cast<int>(rng.uniform_int(0, src.width() - w)),
                      static_cast<int>(rng.uniform_int(0, src.height() - h)), w, h};
      patch = crop_rect(src, crop);
      if (kind == ChangeKind::IrregularCrop) {
        const auto spec = cfg_.polygon.draw(rng, 1.0, {0.0, 0.0});
        const Rect local{0, 0, w, h};
        patch.mask = rasterize_polygon(fit_polygon_to_rect(gen_irregular_polygon(spec, rng), local), local);
      }
    }

    if (r.rotation) {
      patch = rotate_patch(patch, rng.uniform(r.rotation_min_deg, r.rotation_max_deg));
    }

    double sigma = 0.0;
    int margin = 0;
    if (r.margin_blur) {
      sigma = rng.uniform(r.blur_sigma_min, r.blur_sigma_max);
      margin = static_cast<int>(std::ceil(3.0 * sigma));
    }

    if (kind == ChangeKind::InstanceCutout) {
      // Used at source scale unless it cannot fit.
      const int room = size - 2 * margin;
      if (patch.width() > room || patch.height() > room) {
        const double s = std::min(static_cast<double>(room) / patch.width(),
                                  static_cast<double>(room) / patch.height());
        patch = resize_patch(patch, std::max(1, static_cast<int>(patch.width() * s)),
                             std::max(1, static_cast<int>(patch.height() * s)));
      }
    }

    if (margin > 0) {
      patch = pad_patch(patch, margin);
      patch.mask = feather_mask(patch.mask, sigma);
    }

    const Rect sup = patch.mask.support();
    if (sup.w == 0 || sup.w > size || sup.h > size) return std::nullopt;
    if (kind != ChangeKind::InstanceCutout) {
      const double frac = static_cast<double>(sup.area()) / (static_cast<double>(size) * size);
      if (frac < kMinAreaFraction || frac >= kMaxAreaFraction) return std::nullopt;
    }
    return patch;
  }

  static constexpr double kMinAreaFraction = 0.005;
  static constexpr double kMaxAreaFraction = 0.5;

  GenerationConfig cfg_;
  const SourcePools& pools_;
  AnchorSampler anchors_;
};

inline PairSample generate_pair(const GenerationConfig& cfg, const SourcePools& pools, Rng& rng) {
  return PairGenerator(cfg, pools).generate(rng);
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct ImagePairRecord {
  std::string pair_id;
  std::string reference_path;  // relative to the manifest directory unless absolute
  std::string test_path;
  std::vector<ChangeBox> boxes;
  std::string strategy_tag;

  friend bool operator==(const ImagePairRecord&, const ImagePairRecord&) = default;
};

struct Manifest {
  int version = 1;
  std::optional<GenerationConfig> config;
  std::vector<ImagePairRecord> records;
  std::uint64_t seed = 0;
  std::string parameter_hash;
};

inline constexpr int kManifestVersion = 1;

inline json to_json(const ImagePairRecord& r) {
  json boxes = json::array();
  for (const auto& b : r.boxes) boxes.push_back({{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}});
  return {{"pair_id", r.pair_id},
          {"reference_path", r.reference_path},
          {"test_path", r.test_path},
          {"boxes", boxes},
          {"strategy_tag", r.strategy_tag}};
}

inline json to_json(const Manifest& m) {
  json records = json::array();
  for (const auto& r : m.records) records.push_back(to_json(r));
  json out = {{"version", m.version}, {"records", records}};
  if (m.config) {
    out["config"] = to_json(*m.config);
    out["fingerprint"] = {{"seed", m.seed}, {"parameter_hash", m.parameter_hash}};
  }
  return out;
}

inline void write_manifest(const fs::path& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  out << to_json(m).dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest '" + path.string() + "'");
}

inline fs::path resolve_path(const fs::path& root, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : root / path;
}

struct LoadedDataset {
  fs::path root;  // directory holding the manifest
  Manifest manifest;

  const std::vector<ImagePairRecord>& records() const { return manifest.records; }
  fs::path reference_file(const ImagePairRecord& r) const { return resolve_path(root, r.reference_path); }
  fs::path test_file(const ImagePairRecord& r) const { return resolve_path(root, r.test_path); }

  const ImagePairRecord* find(const std::string& pair_id) const {
    for (const auto& r : manifest.records) {
      if (r.pair_id == pair_id) return &r;
    }
    return nullptr;
  }
};

namespace detail {

inline ImagePairRecord parse_record(const json& j, std::size_t index) {
  std::string id = "#" + std::to_string(index);
  try {
    if (!j.is_object()) throw LoadError("record is not an object");
    if (j.contains("pair_id") && j.at("pair_id").is_string()) id = j.at("pair_id").get<std::string>();
    ImagePairRecord r;
    r.pair_id = j.at("pair_id").get<std::string>();
    if (r.pair_id.empty()) throw LoadError("pair_id is empty");
    r.reference_path = j.at("reference_path").get<std::string>();
    r.test_path = j.at("test_path").get<std::string>();
    r.strategy_tag = j.value("strategy_tag", std::string{});
    for (const auto& b : j.at("boxes")) {
      ChangeBox box{b.at("cx").get<double>(), b.at("cy").get<double>(), b.at("w").get<double>(),
                    b.at("h").get<double>()};
      if (!box.valid()) throw LoadError("box with non-positive size");
      r.boxes.push_back(box);
    }
    return r;
  } catch (const json::exception& e) {
    throw LoadError("record '" + id + "': schema violation: " + e.what());
  } catch (const LoadError& e) {
    throw LoadError("record '" + id + "': " + e.what());
  }
}

}  // namespace detail

// Parses and validates a manifest: schema, unique ids, files present, equal
// reference/test dimensions, boxes inside the image. Errors name the
// offending pair.
inline LoadedDataset load_dataset(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw LoadError("cannot open manifest '" + manifest_path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw LoadError("manifest '" + manifest_path.string() + "' is not valid JSON: " + e.what());
  }
  LoadedDataset ds;
  ds.root = manifest_path.parent_path();
  try {
    if (!j.is_object()) throw LoadError("manifest must be a JSON object");
    ds.manifest.version = j.at("version").get<int>();
    if (ds.manifest.version != kManifestVersion) {
      throw LoadError("unsupported manifest version " + std::to_string(ds.manifest.version));
    }
    if (j.contains("config")) {
      try {
        ds.manifest.config = generation_config_from_json(j.at("config"));
      } catch (const ParameterError& e) {
        throw LoadError(std::string("config echo: ") + e.what());
      }
    }
    if (j.contains("fingerprint")) {
      ds.manifest.seed = j.at("fingerprint").at("seed").get<std::uint64_t>();
      ds.manifest.parameter_hash = j.at("fingerprint").at("parameter_hash").get<std::string>();
    }
    const auto& records = j.at("records");
    if (!records.is_array()) throw LoadError("records must be an array");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
      ds.manifest.records.push_back(detail::parse_record(records[i], i));
      if (!seen.insert(ds.manifest.records.back().pair_id).second) {
        throw LoadError("record '" + ds.manifest.records.back().pair_id + "': duplicate pair_id");
      }
    }
  } catch (const json::exception& e) {
    throw LoadError("manifest '" + manifest_path.string() + "': schema violation: " + e.what());
  }

  for (const auto& r : ds.manifest.records) {
    const auto ref = ds.reference_file(r);
    const auto test = ds.test_file(r);
    for (const auto& f : {ref, test}) {
      if (!fs::is_regular_file(f)) {
        throw LoadError("record '" + r.pair_id + "': missing file '" + f.string() + "'");
      }
    }
    ImageSize a, b;
    try {
      a = png_size(ref);
      b = png_size(test);
    } catch (const IoError& e) {
      throw LoadError("record '" + r.pair_id + "': " + e.what());
    }
    if (a.width != b.width || a.height != b.height) {
      throw LoadError("record '" + r.pair_id + "': reference and test dimensions differ");
    }
    for (const auto& box : r.boxes) {
      if (!box.within(a.width, a.height)) {
        throw LoadError("record '" + r.pair_id + "': box outside the image");
      }
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Dataset generation
// ---------------------------------------------------------------------------

inline std::string pair_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu", index);
  return buf;
}

inline std::uint64_t pair_seed(std::uint64_t seed, std::size_t index, int attempt) {
  return derive_seed(derive_seed(seed, index), static_cast<std::uint64_t>(attempt));
}

struct GenerateOptions {
  unsigned workers = 1;
  std::function<void(const std::string&)> log;
};

// Pairs are independent and seeded by (seed, index, attempt), so output is
// identical for any worker count. A pair that fails is redrawn with the
// next attempt seed, up to the placement retry budget.
inline Manifest generate_dataset(const GenerationConfig& cfg, const fs::path& out_dir,
                                 const GenerateOptions& opts = {}) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

  const SourcePools pools = SourcePools::from_config(cfg);
  const PairGenerator generator(cfg, pools);

  std::vector<ImagePairRecord> records(cfg.count);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto log = [&](const std::string& msg) {
    if (!opts.log) return;
    std::lock_guard lock(log_mutex);
    opts.log(msg);
  };

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfg.count) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        std::optional<PairSample> sample;
        for (int attempt = 0; attempt < kPlacementRetries && !sample; ++attempt) {
          Rng rng(pair_seed(cfg.seed, i, attempt));
          try {
            sample = generator.generate(rng);
          } catch (const GenerationError& e) {
            log("pair " + pair_id_for(i) + " attempt " + std::to_string(attempt) + ": " + e.what());
          }
        }
        if (!sample) throw GenerationError("pair " + pair_id_for(i) + " failed after every retry");
        ImagePairRecord rec;
        rec.pair_id = pair_id_for(i);
        rec.reference_path = rec.pair_id + "_ref.png";
        rec.test_path = rec.pair_id + "_test.png";
        rec.boxes = std::move(sample->boxes);
        rec.strategy_tag = cfg.name + ":" + to_string(sample->kind);
        write_png(out_dir / rec.reference_path, sample->reference);
        write_png(out_dir / rec.test_path, sample->test);
        records[i] = std::move(rec);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const unsigned workers = std::max(1u, opts.workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    for (unsigned t = 0; t < workers; ++t) threads.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  Manifest m;
  m.version = kManifestVersion;
  m.config = cfg;
  m.records = std::move(records);
  m.seed = cfg.seed;
  m.parameter_hash = parameter_hash(cfg);
  write_manifest(out_dir / "manifest.json", m);
  return m;
}

}  // namespace changeforge
