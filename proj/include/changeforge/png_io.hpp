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

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "changeforge/error.hpp"
#include "changeforge/image.hpp"

namespace changeforge {

namespace detail {

struct PngImageGuard {
  png_image image;
  PngImageGuard() {
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImageGuard() { png_image_free(&image); }
  PngImageGuard(const PngImageGuard&) = delete;
  PngImageGuard& operator=(const PngImageGuard&) = delete;
};

inline std::vector<std::uint8_t> read_png_raw(const std::filesystem::path& path,
                                              png_uint_32 format, int& width,
                                              int& height) {
  PngImageGuard guard;
  if (!png_image_begin_read_from_file(&guard.image, path.string().c_str())) {
    throw IoError("cannot read PNG '" + path.string() +
                  "': " + guard.image.message);
  }
  guard.image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(guard.image));
  if (!png_image_finish_read(&guard.image, nullptr, buffer.data(), 0,
                             nullptr)) {
    throw IoError("cannot decode PNG '" + path.string() +
                  "': " + guard.image.message);
  }
  width = static_cast<int>(guard.image.width);
  height = static_cast<int>(guard.image.height);
  return buffer;
}

}  // namespace detail

struct ImageSize {
  int width = 0;
  int height = 0;
};

// Reads only the header.
inline ImageSize png_size(const std::filesystem::path& path) {
  detail::PngImageGuard guard;
  if (!png_image_begin_read_from_file(&guard.image, path.string().c_str())) {
    throw IoError("cannot read PNG '" + path.string() +
                  "': " + guard.image.message);
  }
  return {static_cast<int>(guard.image.width),
          static_cast<int>(guard.image.height)};
}

inline RgbImage read_png(const std::filesystem::path& path) {
  int w = 0, h = 0;
  auto raw = detail::read_png_raw(path, PNG_FORMAT_RGB, w, h);
  return RgbImage(w, h, std::move(raw));
}

// RGBA file as a patch; alpha becomes the mask.
inline Patch read_png_rgba(const std::filesystem::path& path) {
  int w = 0, h = 0;
  auto raw = detail::read_png_raw(path, PNG_FORMAT_RGBA, w, h);
  RgbImage image(w, h);
  SoftMask mask(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 4;
      for (int c = 0; c < 3; ++c) image.at(x, y, c) = raw[i + c];
      mask.at(x, y) = static_cast<float>(raw[i + 3]) / 255.0f;
    }
  }
  return Patch{std::move(image), std::move(mask)};
}

inline void write_png(const std::filesystem::path& path, const RgbImage& img) {
  detail::PngImageGuard guard;
  guard.image.width = static_cast<png_uint_32>(img.width());
  guard.image.height = static_cast<png_uint_32>(img.height());
  guard.image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&guard.image, path.string().c_str(), 0,
                               img.data().data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() +
                  "': " + guard.image.message);
  }
}

// Alpha is quantized to 8 bits.
inline void write_png_rgba(const std::filesystem::path& path, const Patch& p) {
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(p.width()) *
                                p.height() * 4);
  for (int y = 0; y < p.height(); ++y) {
    for (int x = 0; x < p.width(); ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * p.width() + x) * 4;
      for (int c = 0; c < 3; ++c) raw[i + c] = p.image.at(x, y, c);
      raw[i + 3] = static_cast<std::uint8_t>(
          std::lround(std::clamp(p.mask.at(x, y), 0.0f, 1.0f) * 255.0f));
    }
  }
  detail::PngImageGuard guard;
  guard.image.width = static_cast<png_uint_32>(p.width());
  guard.image.height = static_cast<png_uint_32>(p.height());
  guard.image.format = PNG_FORMAT_RGBA;
  if (!png_image_write_to_file(&guard.image, path.string().c_str(), 0,
                               raw.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() +
                  "': " + guard.image.message);
  }
}

}  // namespace changeforge
