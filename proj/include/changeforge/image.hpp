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

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "changeforge/error.hpp"

namespace changeforge {

// Axis-aligned pixel rectangle; (x, y) is the top-left corner.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  long long area() const { return static_cast<long long>(w) * h; }

  bool contains(int px, int py) const {
    return px >= x && px < right() && py >= y && py < bottom();
  }

  bool inside(int width, int height) const {
    return x >= 0 && y >= 0 && w >= 1 && h >= 1 && right() <= width &&
           bottom() <= height;
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

// Row-major interleaved 8-bit RGB.
class RgbImage {
 public:
  RgbImage() = default;

  RgbImage(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw ParameterError("image dimensions must be positive, got " +
                           std::to_string(width) + "x" +
                           std::to_string(height));
    }
    pixels_.assign(static_cast<std::size_t>(width) * height * 3, fill);
  }

  RgbImage(int width, int height, std::vector<std::uint8_t> pixels)
      : RgbImage(width, height) {
    if (pixels.size() != pixels_.size()) {
      throw ParameterError("pixel buffer length does not match dimensions");
    }
    pixels_ = std::move(pixels);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t& at(int x, int y, int c) {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }

  std::span<std::uint8_t> data() { return pixels_; }
  std::span<const std::uint8_t> data() const { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Per-pixel coverage in [0, 1].
class SoftMask {
 public:
  SoftMask() = default;

  SoftMask(int width, int height, float fill = 0.0f)
      : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw ParameterError("mask dimensions must be positive");
    }
    alpha_.assign(static_cast<std::size_t>(width) * height,
                  std::clamp(fill, 0.0f, 1.0f));
  }

  int width() const { return width_; }
  int height() const { return height_; }

  float& at(int x, int y) {
    return alpha_[static_cast<std::size_t>(y) * width_ + x];
  }
  float at(int x, int y) const {
    return alpha_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<float> data() { return alpha_; }
  std::span<const float> data() const { return alpha_; }

  double mass() const {
    double total = 0.0;
    for (float a : alpha_) total += a;
    return total;
  }

  // Tight box of pixels with alpha > 0; w == 0 when the mask is empty.
  Rect support() const {
    int x0 = width_, y0 = height_, x1 = -1, y1 = -1;
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        if (at(x, y) > 0.0f) {
          x0 = std::min(x0, x);
          x1 = std::max(x1, x);
          y0 = std::min(y0, y);
          y1 = std::max(y1, y);
        }
      }
    }
    if (x1 < 0) return Rect{0, 0, 0, 0};
    return Rect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
  }

  friend bool operator==(const SoftMask&, const SoftMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> alpha_;
};

// Pasteable content: pixels plus coverage of the same size.
struct Patch {
  RgbImage image;
  SoftMask mask;

  int width() const { return image.width(); }
  int height() const { return image.height(); }

  friend bool operator==(const Patch&, const Patch&) = default;
};

inline Patch make_patch(RgbImage image, SoftMask mask) {
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw ParameterError("patch image and mask dimensions differ");
  }
  return Patch{std::move(image), std::move(mask)};
}

}  // namespace changeforge
