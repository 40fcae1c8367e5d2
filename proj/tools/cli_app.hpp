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

// `changeforge` command-line front end. Exit status: 0 success, 1 usage
// error, 2 data error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "changeforge.hpp"

namespace changeforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

namespace detail {

using Color = std::array<std::uint8_t, 3>;

inline void draw_box(RgbImage& img, const ChangeBox& b, Color color, int thickness = 2) {
  const int x0 = std::clamp(static_cast<int>(std::floor(b.x0())), 0, img.width() - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor(b.y0())), 0, img.height() - 1);
  const int x1 = std::clamp(static_cast<int>(std::ceil(b.x1())) - 1, 0, img.width() - 1);
  const int y1 = std::clamp(static_cast<int>(std::ceil(b.y1())) - 1, 0, img.height() - 1);
  auto put = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
    for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[c];
  };
  for (int t = 0; t < thickness; ++t) {
    for (int x = x0; x <= x1; ++x) {
      put(x, y0 + t);
      put(x, y1 - t);
    }
    for (int y = y0; y <= y1; ++y) {
      put(x0 + t, y);
      put(x1 - t, y);
    }
  }
}

inline RgbImage hstack(const std::vector<RgbImage>& panels, int gap = 8) {
  int w = 0, h = 0;
  for (const auto& p : panels) {
    w += p.width();
    h = std::max(h, p.height());
  }
  w += gap * static_cast<int>(panels.size() - 1);
  RgbImage out(w, h, 255);
  int ox = 0;
  for (const auto& p : panels) {
    for (int y = 0; y < p.height(); ++y) {
      for (int x = 0; x < p.width(); ++x) {
        for (int c = 0; c < 3; ++c) out.at(ox + x, y, c) = p.at(x, y, c);
      }
    }
    ox += p.width() + gap;
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << text;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("CHANGEFORGE_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    const auto s = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument("trailing");
    return s;
  } catch (const std::exception&) {
    throw ParameterError(std::string("CHANGEFORGE_SEED is not an unsigned integer: ") + v);
  }
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Synthetic change-detection datasets, center-point map codec and detection metrics",
               "changeforge"};
  app.require_subcommand(1);
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "Increase logging (repeatable)");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset from a JSON config");
  std::string gen_config, gen_out, gen_sources, gen_instances;
  std::optional<std::uint64_t> gen_seed;
  std::optional<std::size_t> gen_count;
  unsigned gen_workers = 1;
  gen->add_option("--config", gen_config, "Generation config (JSON)")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Seed override (else CHANGEFORGE_SEED, else the config)");
  gen->add_option("--count", gen_count, "Number of pairs override");
  gen->add_option("--workers", gen_workers, "Worker threads")->check(CLI::PositiveNumber);
  gen->add_option("--source-pool", gen_sources, "Override source_pool_dir");
  gen->add_option("--instance-pool", gen_instances, "Override instance_pool_dir");

  // encode
  auto* enc = app.add_subcommand("encode", "Encode manifest boxes into target-map files");
  std::string enc_manifest, enc_out;
  enc->add_option("--manifest", enc_manifest, "Dataset manifest")->required();
  enc->add_option("--out", enc_out, "Directory for <pair_id>_{hm,wh,offset}.f32")->required();

  // decode
  auto* dec = app.add_subcommand("decode", "Decode map files into a detections JSON");
  std::string dec_maps, dec_out;
  CodecConfig dec_cfg;
  dec->add_option("--maps", dec_maps, "Directory of <pair_id>_{hm,wh,offset}.f32")->required();
  dec->add_option("--out", dec_out, "Detections JSON (default: stdout)");
  dec->add_option("--threshold", dec_cfg.peak_threshold, "Heatmap peak threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  dec->add_option("--max-detections", dec_cfg.max_detections, "Detections kept per pair")
      ->capture_default_str();

  // eval
  auto* ev = app.add_subcommand("eval", "Score detections against a manifest (AP at an IoU threshold)");
  std::string ev_dets, ev_manifest, ev_out;
  double ev_iou = 0.5;
  ev->add_option("--detections", ev_dets, "Detections JSON")->required();
  ev->add_option("--manifest", ev_manifest, "Dataset manifest")->required();
  ev->add_option("--iou", ev_iou, "IoU threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  ev->add_option("--out", ev_out, "EvalResult JSON (default: stdout)");

  // distance
  auto* dist = app.add_subcommand("distance", "Generalization distance for each row of a results CSV");
  std::string dist_matrix, dist_out;
  dist->add_option("--matrix", dist_matrix, "Results CSV (methods x test sets, AP fractions)")->required();
  dist->add_option("--out", dist_out, "Output CSV (default: stdout)");

  // inspect
  auto* insp = app.add_subcommand("inspect", "Render a pair side by side with its boxes");
  std::string insp_manifest, insp_pair, insp_out, insp_dets;
  insp->add_option("--manifest", insp_manifest, "Dataset manifest")->required();
  insp->add_option("--pair-id", insp_pair, "Pair to render")->required();
  insp->add_option("--out", insp_out, "Output PNG")->required();
  insp->add_option("--detections", insp_dets, "Optional detections JSON for a third panel");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  auto log = [&](int level, const std::string& msg) {
    if (verbosity >= level) err << msg << '\n';
  };

  try {
    if (*gen) {
      auto cfg = load_generation_config(gen_config);
      if (gen_seed) {
        cfg.seed = *gen_seed;
      } else if (auto s = detail::env_seed()) {
        cfg.seed = *s;
      }
      if (gen_count) cfg.count = *gen_count;
      if (!gen_sources.empty()) cfg.source_pool_dir = gen_sources;
      if (!gen_instances.empty()) cfg.instance_pool_dir = gen_instances;
      cfg.validate();
      GenerateOptions opts;
      opts.workers = gen_workers;
      opts.log = [&](const std::string& m) { log(1, m); };
      const auto manifest = generate_dataset(cfg, gen_out, opts);
      log(1, "wrote " + std::to_string(manifest.records.size()) + " pairs to " + gen_out);
      return kExitOk;
    }

    if (*enc) {
      const auto ds = load_dataset(enc_manifest);
      const CodecConfig cfg;
      std::filesystem::create_directories(enc_out);
      for (const auto& r : ds.records()) {
        const auto size = png_size(ds.reference_file(r));
        if (size.width != cfg.input_resolution || size.height != cfg.input_resolution) {
          throw EncodeError("pair '" + r.pair_id + "' is " + std::to_string(size.width) + "x" +
                            std::to_string(size.height) + ", expected " +
                            std::to_string(cfg.input_resolution) + " square");
        }
        EncodeDiagnostics diag;
        const auto maps = encode_targets(r.boxes, cfg, &diag);
        for (const auto& w : diag.warnings) log(0, "warning: pair '" + r.pair_id + "': " + w);
        write_target_maps(enc_out, r.pair_id, maps);
      }
      log(1, "encoded " + std::to_string(ds.records().size()) + " pairs");
      return kExitOk;
    }

    if (*dec) {
      std::vector<std::string> stems;
      if (!std::filesystem::is_directory(dec_maps)) throw IoError("'" + dec_maps + "' is not a directory");
      for (const auto& e : std::filesystem::directory_iterator(dec_maps)) {
        const auto name = e.path().filename().string();
        const std::string suffix = "_hm.f32";
        if (name.size() > suffix.size() && name.ends_with(suffix)) {
          stems.push_back(name.substr(0, name.size() - suffix.size()));
        }
      }
      std::sort(stems.begin(), stems.end());
      std::vector<PairDetection> all;
      for (const auto& stem : stems) {
        const auto maps = read_target_maps(dec_maps, stem);
        for (const auto& d : decode_maps(maps, dec_cfg)) all.push_back({stem, d});
      }
      detail::write_text(dec_out, detections_to_json(all).dump(2) + "\n", out);
      return kExitOk;
    }

    if (*ev) {
      const auto ds = load_dataset(ev_manifest);
      const auto dets = detections_from_json(detail::read_json_file(ev_dets));
      std::vector<PairEval> pairs;
      std::map<std::string, std::size_t> index;
      for (const auto& r : ds.records()) {
        index[r.pair_id] = pairs.size();
        pairs.push_back({r.pair_id, {}, r.boxes});
      }
      for (const auto& d : dets) {
        auto it = index.find(d.pair_id);
        if (it == index.end()) throw EvalError("detection for unknown pair '" + d.pair_id + "'");
        pairs[it->second].detections.push_back(d.detection);
      }
      const auto result = average_precision(pairs, ev_iou);
      detail::write_text(ev_out, to_json(result).dump(2) + "\n", out);
      return kExitOk;
    }

    if (*dist) {
      const auto m = load_results_csv(dist_matrix);
      const auto d = generalization_distance(m);
      std::string text = "method,distance\n";
      for (std::size_t i = 0; i < d.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", d[i]);
        std::string label = m.row_labels[i];
        if (label.find_first_of(",\"") != std::string::npos) {
          std::string quoted = "\"";
          for (char ch : label) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
          label = quoted + "\"";
        }
        text += label + "," + buf + "\n";
      }
      detail::write_text(dist_out, text, out);
      return kExitOk;
    }

    if (*insp) {
      const auto ds = load_dataset(insp_manifest);
      const auto* rec = ds.find(insp_pair);
      if (!rec) throw LoadError("pair '" + insp_pair + "' is not in the manifest");
      RgbImage test = read_png(ds.test_file(*rec));
      const RgbImage ref = read_png(ds.reference_file(*rec));
      std::vector<RgbImage> panels;
      RgbImage annotated = test;
      for (const auto& b : rec->boxes) detail::draw_box(annotated, b, {0, 220, 0});
      panels.push_back(annotated);
      panels.push_back(ref);
      if (!insp_dets.empty()) {
        RgbImage detected = test;
        for (const auto& d : detections_from_json(detail::read_json_file(insp_dets))) {
          if (d.pair_id == insp_pair) detail::draw_box(detected, d.detection.box, {230, 20, 20});
        }
        panels.push_back(detected);
      }
      write_png(insp_out, detail::hstack(panels));
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace changeforge::cli
