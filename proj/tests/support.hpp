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

// Fixtures shared by the unit and acceptance suites.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "changeforge.hpp"

namespace changeforge::testing {

namespace fs = std::filesystem;

// Removes itself on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "cf") {
    static std::uint64_t counter = 0;
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            (tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// value(x, y, c) = (7x + 13y + 29c + seed) mod 256
inline RgbImage gradient_image(int w, int h, int seed = 0) {
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>((x * 7 + y * 13 + c * 29 + seed) & 255);
    }
  }
  return img;
}

// Smooth colored field plus a few rectangles; distinct per seed.
inline RgbImage textured_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  const double fx = rng.uniform(0.01, 0.05), fy = rng.uniform(0.01, 0.05);
  const double phase[3] = {rng.uniform(0, 6.28), rng.uniform(0, 6.28), rng.uniform(0, 6.28)};
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = 128 + 100 * std::sin(fx * x * (c + 1) + fy * y + phase[c]);
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  for (int k = 0; k < 6; ++k) {
    const int rw = static_cast<int>(rng.uniform_int(w / 10, w / 3));
    const int rh = static_cast<int>(rng.uniform_int(h / 10, h / 3));
    const int rx = static_cast<int>(rng.uniform_int(0, w - rw));
    const int ry = static_cast<int>(rng.uniform_int(0, h - rh));
    const std::uint8_t col[3] = {static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                                 static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                                 static_cast<std::uint8_t>(rng.uniform_int(0, 255))};
    for (int y = ry; y < ry + rh; ++y) {
      for (int x = rx; x < rx + rw; ++x) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[c];
      }
    }
  }
  return img;
}

// Opaque ellipse on a transparent field.
inline Patch ellipse_cutout(int w, int h, std::uint64_t seed) {
  Patch p{textured_image(w, h, seed), SoftMask(w, h)};
  const double cx = w / 2.0, cy = h / 2.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = (x + 0.5 - cx) / (w / 2.0), dy = (y + 0.5 - cy) / (h / 2.0);
      if (dx * dx + dy * dy <= 0.9) p.mask.at(x, y) = 1.0f;
    }
  }
  return p;
}

struct Pools {
  fs::path sources;
  fs::path instances;
};

// Writes `n_sources` textured PNGs and `n_instances` RGBA cutouts under root.
inline Pools make_pools(const fs::path& root, int n_sources = 4, int n_instances = 3, int size = 512) {
  Pools pools{root / "sources", root / "instances"};
  fs::create_directories(pools.sources);
  fs::create_directories(pools.instances);
  for (int i = 0; i < n_sources; ++i) {
    write_png(pools.sources / ("src_" + std::to_string(i) + ".png"),
              textured_image(size + 37 * i, size + 11 * i, 1000 + i));
  }
  for (int i = 0; i < n_instances; ++i) {
    write_png_rgba(pools.instances / ("inst_" + std::to_string(i) + ".png"),
                   ellipse_cutout(60 + 25 * i, 90 + 10 * i, 2000 + i));
  }
  return pools;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace changeforge::testing
