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

// Conversion between change boxes and the three center-point maps
// (heatmap, size, sub-cell offset).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "changeforge/box.hpp"
#include "changeforge/error.hpp"

namespace changeforge {

// Dense width x height grid with `Channels` interleaved values per cell.
template <std::size_t Channels>
class MapGrid {
 public:
  static constexpr std::size_t kChannels = Channels;

  MapGrid() = default;
  MapGrid(int width, int height, double fill = 0.0)
      : width_(width), height_(height),
        values_(static_cast<std::size_t>(width) * height * Channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t cells() const { return static_cast<std::size_t>(width_) * height_; }

  double& at(int x, int y, std::size_t c = 0) {
    return values_[(static_cast<std::size_t>(y) * width_ + x) * Channels + c];
  }
  double at(int x, int y, std::size_t c = 0) const {
    return values_[(static_cast<std::size_t>(y) * width_ + x) * Channels + c];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const MapGrid& o) const {
    return width_ == o.width_ && height_ == o.height_;
  }

  friend bool operator==(const MapGrid&, const MapGrid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

using ScalarMap = MapGrid<1>;
using PairMap = MapGrid<2>;

// Ground-truth targets and network predictions share this shape.
struct TargetMaps {
  ScalarMap hm;
  PairMap wh;      // (w, h) in input pixels
  PairMap offset;  // (dx, dy) sub-cell fraction

  static TargetMaps zeros(int resolution) {
    return {ScalarMap(resolution, resolution), PairMap(resolution, resolution),
            PairMap(resolution, resolution)};
  }

  bool consistent() const {
    return hm.width() == wh.width() && hm.height() == wh.height() &&
           hm.width() == offset.width() && hm.height() == offset.height();
  }
};

struct CodecConfig {
  int input_resolution = 512;
  int map_resolution = 128;
  int stride = 4;
  double peak_threshold = 0.3;
  std::size_t max_detections = 100;

  void validate() const {
    if (input_resolution < 1 || map_resolution < 1 || stride < 1 ||
        input_resolution != stride * map_resolution) {
      throw ParameterError("codec needs input_resolution == stride * map_resolution");
    }
    if (!(peak_threshold >= 0.0 && peak_threshold <= 1.0)) {
      throw ParameterError("peak_threshold must lie in [0, 1]");
    }
  }
};

struct Detection {
  ChangeBox box;
  double score = 0.0;
};

// Largest diagonal shift r (in map cells, applied to both axes) for which a
// (w/stride) x (h/stride) box still has IoU >= min_iou with the unshifted
// box. Closed form: IoU = (w-r)(h-r) / (2wh - (w-r)(h-r)), solved for r.
inline double gaussian_radius(double w, double h, int stride = 4,
                              double min_iou = 0.7) {
  const double a = w / stride;
  const double b = h / stride;
  const double keep = 2.0 * min_iou / (1.0 + min_iou);
  const double sum = a + b;
  const double disc = sum * sum - 4.0 * a * b * (1.0 - keep);
  return (sum - std::sqrt(std::max(0.0, disc))) / 2.0;
}

// Heatmap spread in map cells; never below one cell.
inline double gaussian_sigma(double w, double h, int stride = 4) {
  if (!(w > 0.0 && h > 0.0)) throw ParameterError("box size must be positive");
  return std::max(1.0, gaussian_radius(w, h, stride) / 3.0);
}

struct EncodeDiagnostics {
  std::size_t collisions = 0;
  std::vector<std::string> warnings;
};

// Each box puts a unit peak at cell floor(center / stride), a Gaussian of
// gaussian_sigma around it (window radius ceil(3 sigma), merged by maximum),
// and its size and fractional center offset at the peak cell. When two
// boxes share a peak cell the later one owns wh and offset.
inline TargetMaps encode_targets(std::span<const ChangeBox> boxes,
                                 const CodecConfig& cfg,
                                 EncodeDiagnostics* diag = nullptr) {
  cfg.validate();
  const int res = cfg.map_resolution;
  TargetMaps maps = TargetMaps::zeros(res);
  std::vector<char> is_peak(static_cast<std::size_t>(res) * res, 0);

  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const ChangeBox& box = boxes[i];
    if (!box.within(cfg.input_resolution, cfg.input_resolution)) {
      throw EncodeError("box " + std::to_string(i) + " lies outside the " +
                        std::to_string(cfg.input_resolution) + "px input");
    }
    const double fx = box.cx / cfg.stride;
    const double fy = box.cy / cfg.stride;
    const int px = std::min(static_cast<int>(std::floor(fx)), res - 1);
    const int py = std::min(static_cast<int>(std::floor(fy)), res - 1);

    const double sigma = gaussian_sigma(box.w, box.h, cfg.stride);
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    for (int y = std::max(0, py - radius); y <= std::min(res - 1, py + radius); ++y) {
      for (int x = std::max(0, px - radius); x <= std::min(res - 1, px + radius); ++x) {
        const double d2 = double(x - px) * (x - px) + double(y - py) * (y - py);
        const double g = (x == px && y == py) ? 1.0 : std::exp(-d2 / (2.0 * sigma * sigma));
        maps.hm.at(x, y) = std::max(maps.hm.at(x, y), g);
      }
    }

    char& peak = is_peak[static_cast<std::size_t>(py) * res + px];
    if (peak && diag) {
      ++diag->collisions;
      diag->warnings.push_back("boxes collide at peak cell (" +
                               std::to_string(px) + "," + std::to_string(py) +
                               "); box " + std::to_string(i) + " wins");
    }
    peak = 1;
    maps.wh.at(px, py, 0) = box.w;
    maps.wh.at(px, py, 1) = box.h;
    maps.offset.at(px, py, 0) = fx - px;
    maps.offset.at(px, py, 1) = fy - py;
  }
  return maps;
}

inline TargetMaps encode_targets(const std::vector<ChangeBox>& boxes,
                                 const CodecConfig& cfg,
                                 EncodeDiagnostics* diag = nullptr) {
  return encode_targets(std::span<const ChangeBox>(boxes), cfg, diag);
}

// A cell becomes a detection when its heatmap value exceeds the threshold
// and is >= each of its (up to 8) neighbors. Results are ordered by score,
// ties by row-major cell index.
inline std::vector<Detection> decode_maps(const TargetMaps& maps,
                                          const CodecConfig& cfg) {
  cfg.validate();
  const int res = cfg.map_resolution;
  if (!maps.consistent() || maps.hm.width() != res || maps.hm.height() != res) {
    throw ContractError("map dimensions do not match the codec resolution");
  }
  std::vector<Detection> out;
  for (int y = 0; y < res; ++y) {
    for (int x = 0; x < res; ++x) {
      const double v = maps.hm.at(x, y);
      if (!(v > cfg.peak_threshold)) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= res || ny >= res) continue;
          if (maps.hm.at(nx, ny) > v) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;
      Detection d;
      d.box.cx = (x + maps.offset.at(x, y, 0)) * cfg.stride;
      d.box.cy = (y + maps.offset.at(x, y, 1)) * cfg.stride;
      d.box.w = std::max(0.0, maps.wh.at(x, y, 0));
      d.box.h = std::max(0.0, maps.wh.at(x, y, 1));
      d.score = std::clamp(v, 0.0, 1.0);
      out.push_back(d);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    return a.score > b.score;
  });
  if (out.size() > cfg.max_detections) out.resize(cfg.max_detections);
  return out;
}

}  // namespace changeforge
