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

// Deterministic compositing primitives. Every function is pure: outputs
// depend only on the arguments, and randomness enters through an explicit
// seed or Rng.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "changeforge/error.hpp"
#include "changeforge/image.hpp"
#include "changeforge/rng.hpp"

namespace changeforge {

struct Point {
  int x = 0;
  int y = 0;
};

namespace detail {

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Bilinear sample at continuous pixel-index coordinates (pixel centers sit
// on integers), clamped to the edge.
template <typename Fetch>
double bilinear(Fetch&& fetch, int width, int height, double fx, double fy) {
  fx = std::clamp(fx, 0.0, static_cast<double>(width - 1));
  fy = std::clamp(fy, 0.0, static_cast<double>(height - 1));
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double tx = fx - x0;
  const double ty = fy - y0;
  const double top = fetch(x0, y0) * (1.0 - tx) + fetch(x1, y0) * tx;
  const double bottom = fetch(x0, y1) * (1.0 - tx) + fetch(x1, y1) * tx;
  return top * (1.0 - ty) + bottom * ty;
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    total += k[i + radius];
  }
  for (double& v : k) v /= total;
  return k;
}

}  // namespace detail

// Opaque patch covering the whole image.
inline Patch opaque_patch(RgbImage image) {
  SoftMask mask(image.width(), image.height(), 1.0f);
  return Patch{std::move(image), std::move(mask)};
}

inline Patch crop_rect(const RgbImage& src, const Rect& r) {
  if (!r.inside(src.width(), src.height())) {
    throw BoundsError("crop rect (" + std::to_string(r.x) + "," +
                      std::to_string(r.y) + "," + std::to_string(r.w) + "," +
                      std::to_string(r.h) + ") outside " +
                      std::to_string(src.width()) + "x" +
                      std::to_string(src.height()) + " image");
  }
  RgbImage out(r.w, r.h);
  for (int y = 0; y < r.h; ++y) {
    for (int x = 0; x < r.w; ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = src.at(r.x + x, r.y + y, c);
    }
  }
  return opaque_patch(std::move(out));
}

// Rotates counterclockwise (as displayed, y pointing down) about the patch
// center. Multiples of 90 degrees are exact permutations; other angles use
// inverse mapping with bilinear resampling, and an output pixel belongs to
// the rotated support iff its center maps inside the source rectangle.
inline Patch rotate_patch(const Patch& p, double angle_deg) {
  double a = std::fmod(angle_deg, 360.0);
  if (a < 0.0) a += 360.0;
  const int w = p.width();
  const int h = p.height();

  if (a == 0.0) return p;
  if (a == 90.0 || a == 180.0 || a == 270.0) {
    const bool swap = a != 180.0;
    const int ow = swap ? h : w;
    const int oh = swap ? w : h;
    RgbImage img(ow, oh);
    SoftMask mask(ow, oh);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int nx, ny;
        if (a == 90.0) {
          nx = y;
          ny = w - 1 - x;
        } else if (a == 180.0) {
          nx = w - 1 - x;
          ny = h - 1 - y;
        } else {
          nx = h - 1 - y;
          ny = x;
        }
        for (int c = 0; c < 3; ++c) img.at(nx, ny, c) = p.image.at(x, y, c);
        mask.at(nx, ny) = p.mask.at(x, y);
      }
    }
    return Patch{std::move(img), std::move(mask)};
  }

  const double rad = a * std::numbers::pi / 180.0;
  const double cs = std::cos(rad);
  const double sn = std::sin(rad);
  const int ow = std::max(
      1, static_cast<int>(std::ceil(w * std::abs(cs) + h * std::abs(sn) - 1e-9)));
  const int oh = std::max(
      1, static_cast<int>(std::ceil(w * std::abs(sn) + h * std::abs(cs) - 1e-9)));
  RgbImage img(ow, oh);
  SoftMask mask(ow, oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const double dx = x + 0.5 - ow / 2.0;
      const double dy = y + 0.5 - oh / 2.0;
      const double u = dx * cs - dy * sn + w / 2.0;
      const double v = dx * sn + dy * cs + h / 2.0;
      if (u < 0.0 || u >= w || v < 0.0 || v >= h) continue;
      const double fx = u - 0.5;
      const double fy = v - 0.5;
      for (int c = 0; c < 3; ++c) {
        img.at(x, y, c) = detail::to_byte(detail::bilinear(
            [&](int sx, int sy) { return double(p.image.at(sx, sy, c)); }, w,
            h, fx, fy));
      }
      mask.at(x, y) = static_cast<float>(std::clamp(
          detail::bilinear([&](int sx, int sy) { return double(p.mask.at(sx, sy)); },
                           w, h, fx, fy),
          0.0, 1.0));
    }
  }
  return Patch{std::move(img), std::move(mask)};
}

// Separable convolution with a normalized Gaussian of radius ceil(3*sigma),
// clamp-to-edge at the borders.
inline SoftMask feather_mask(const SoftMask& m, double sigma) {
  if (!(sigma >= 0.0)) {
    throw ParameterError("feather sigma must be non-negative");
  }
  if (sigma == 0.0) return m;
  const auto kernel = detail::gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = m.width();
  const int h = m.height();

  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * m.at(std::clamp(x + k, 0, w - 1), y);
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  SoftMask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] *
               tmp[static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w + x];
      }
      out.at(x, y) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
    }
  }
  return out;
}

// Grows the patch by `margin` on every side: edge-replicated pixels, zero
// coverage. Gives feathering room to spread outward.
inline Patch pad_patch(const Patch& p, int margin) {
  if (margin < 0) throw ParameterError("pad margin must be non-negative");
  if (margin == 0) return p;
  const int w = p.width() + 2 * margin;
  const int h = p.height() + 2 * margin;
  RgbImage img(w, h);
  SoftMask mask(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::clamp(y - margin, 0, p.height() - 1);
    for (int x = 0; x < w; ++x) {
      const int sx = std::clamp(x - margin, 0, p.width() - 1);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = p.image.at(sx, sy, c);
      if (x >= margin && x < margin + p.width() && y >= margin &&
          y < margin + p.height()) {
        mask.at(x, y) = p.mask.at(sx, sy);
      }
    }
  }
  return Patch{std::move(img), std::move(mask)};
}

inline RgbImage resize_image(const RgbImage& img, int width, int height) {
  if (width == img.width() && height == img.height()) return img;
  RgbImage out(width, height);
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const double fy = (y + 0.5) * sy - 0.5;
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = detail::to_byte(detail::bilinear(
            [&](int ix, int iy) { return double(img.at(ix, iy, c)); },
            img.width(), img.height(), fx, fy));
      }
    }
  }
  return out;
}

inline Patch resize_patch(const Patch& p, int width, int height) {
  if (width == p.width() && height == p.height()) return p;
  SoftMask mask(width, height);
  const double sx = static_cast<double>(p.width()) / width;
  const double sy = static_cast<double>(p.height()) / height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      mask.at(x, y) = static_cast<float>(std::clamp(
          detail::bilinear([&](int ix, int iy) { return double(p.mask.at(ix, iy)); },
                           p.width(), p.height(), (x + 0.5) * sx - 0.5,
                           (y + 0.5) * sy - 0.5),
          0.0, 1.0));
    }
  }
  return Patch{resize_image(p.image, width, height), std::move(mask)};
}

struct CompositeResult {
  RgbImage image;
  // Tight box of the pasted pixels with alpha > 0, in background coordinates.
  Rect box;
};

// Alpha-blends `p` with its top-left corner at `at`. Only the mask support
// must land inside the background; fully transparent margins may hang over.
inline CompositeResult composite(const RgbImage& background, const Patch& p,
                                 Point at) {
  if (p.image.width() != p.mask.width() || p.image.height() != p.mask.height()) {
    throw ParameterError("patch image and mask dimensions differ");
  }
  const Rect sup = p.mask.support();
  if (sup.w == 0) throw PlacementError("patch has empty support; no change");
  const Rect placed{at.x + sup.x, at.y + sup.y, sup.w, sup.h};
  if (!placed.inside(background.width(), background.height())) {
    throw PlacementError("pasted support exceeds background bounds");
  }
  RgbImage out = background;
  for (int y = sup.y; y < sup.bottom(); ++y) {
    for (int x = sup.x; x < sup.right(); ++x) {
      const double a = p.mask.at(x, y);
      if (a <= 0.0) continue;
      const int bx = at.x + x;
      const int by = at.y + y;
      for (int c = 0; c < 3; ++c) {
        out.at(bx, by, c) = detail::to_byte(a * p.image.at(x, y, c) +
                                            (1.0 - a) * background.at(bx, by, c));
      }
    }
  }
  return {std::move(out), placed};
}

// Per-channel additive zero-mean Gaussian noise, rounded and clamped.
inline RgbImage add_gaussian_noise(const RgbImage& img, double sigma,
                                   std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ParameterError("noise sigma must be non-negative");
  if (sigma == 0.0) return img;
  Rng rng(seed);
  RgbImage out = img;
  for (auto& v : out.data()) v = detail::to_byte(v + rng.normal(0.0, sigma));
  return out;
}

using ChannelGains = std::array<double, 3>;

inline RgbImage color_jitter(const RgbImage& img, const ChannelGains& gains) {
  for (double g : gains) {
    if (!(g >= 0.5 && g <= 1.5)) {
      throw ParameterError("jitter gain " + std::to_string(g) +
                           " outside [0.5, 1.5]");
    }
  }
  RgbImage out = img;
  auto px = out.data();
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = detail::to_byte(px[i] * gains[i % 3]);
  }
  return out;
}

// Independent per-channel gains uniform in [1 - spread, 1 + spread].
inline ChannelGains sample_jitter_gains(Rng& rng, double spread = 0.1) {
  return {rng.uniform(1.0 - spread, 1.0 + spread),
          rng.uniform(1.0 - spread, 1.0 + spread),
          rng.uniform(1.0 - spread, 1.0 + spread)};
}

}  // namespace changeforge
