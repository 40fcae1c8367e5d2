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

// Change-geometry samplers: anchor-box rectangles and random irregular
// polygons, plus an even-odd scanline rasterizer for the latter.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "changeforge/error.hpp"
#include "changeforge/image.hpp"
#include "changeforge/rng.hpp"

namespace changeforge {

// ---------------------------------------------------------------------------
// Anchor-box rectangles
// ---------------------------------------------------------------------------

struct AspectRatio {
  int long_side = 1;  // ratio 1:long_side, i.e. short:long
  double weight = 1.0;
};

struct AreaBin {
  double lo = 0.0;  // inclusive, fraction of image area
  double hi = 0.0;  // exclusive
  double weight = 1.0;
};

struct AnchorSpec {
  std::vector<AspectRatio> aspect_ratios{
      {1, 3.0}, {2, 3.0}, {3, 3.0}, {5, 2.0}, {7, 2.0}};
  double swap_probability = 0.5;
  std::vector<AreaBin> area_bins{
      {0.005, 0.05, 4.0}, {0.05, 0.25, 2.0}, {0.25, 0.5, 1.0}};

  void validate() const {
    if (aspect_ratios.empty() || area_bins.empty()) {
      throw ParameterError("anchor spec needs ratios and area bins");
    }
    for (const auto& r : aspect_ratios) {
      if (r.long_side < 1 || !(r.weight > 0.0)) {
        throw ParameterError("aspect ratios need long side >= 1 and weight > 0");
      }
    }
    double prev_hi = 0.0;
    for (const auto& b : area_bins) {
      if (!(b.weight > 0.0) || !(b.lo >= prev_hi) || !(b.hi > b.lo) ||
          b.hi > 1.0) {
        throw ParameterError("area bins must be ordered, disjoint, in (0, 1]");
      }
      prev_hi = b.hi;
    }
    if (!(swap_probability >= 0.0 && swap_probability <= 1.0)) {
      throw ParameterError("swap probability must lie in [0, 1]");
    }
  }
};

struct AnchorSample {
  Rect rect;
  std::size_t ratio_index = 0;
  std::size_t bin_index = 0;
  bool swapped = false;  // true: long side along x
};

// Draws anchor rectangles for a fixed image size.
//
// Some (ratio, bin) cells cannot fit at all (a 1:7 box covering a quarter of
// a square image is longer than the image). Sampling ratio and bin
// independently and rejecting would skew both marginals, so the sampler
// draws from a joint table that is zero on infeasible cells and is fitted
// by iterative proportional fitting to reproduce the ratio weights and the
// bin weights exactly. Within a cell the area fraction is uniform over the
// feasible part of the bin.
class AnchorSampler {
 public:
  AnchorSampler(int image_w, int image_h, AnchorSpec spec = {})
      : width_(image_w), height_(image_h), spec_(std::move(spec)) {
    spec_.validate();
    if (image_w < 1 || image_h < 1) {
      throw SamplingError("image must have positive dimensions");
    }
    const std::size_t nr = spec_.aspect_ratios.size();
    const std::size_t nb = spec_.area_bins.size();
    cell_hi_.assign(nr * nb, 0.0);
    joint_.assign(nr * nb, 0.0);
    const double image_area = static_cast<double>(image_w) * image_h;
    for (std::size_t r = 0; r < nr; ++r) {
      const double k = spec_.aspect_ratios[r].long_side;
      // Largest short side that fits in both orientations.
      const double short_max =
          std::min({static_cast<double>(image_w), static_cast<double>(image_h),
                    image_w / k, image_h / k});
      const double max_frac = k * short_max * short_max / image_area;
      for (std::size_t b = 0; b < nb; ++b) {
        const auto& bin = spec_.area_bins[b];
        const double hi = std::min(bin.hi, max_frac);
        // Demand room for at least one integer short side inside the cell.
        const double lo_short = std::ceil(std::sqrt(bin.lo * image_area / k));
        const bool ok = hi > bin.lo && lo_short >= 1.0 &&
                        k * lo_short * lo_short < hi * image_area;
        if (ok) {
          cell_hi_[r * nb + b] = hi;
          joint_[r * nb + b] = spec_.aspect_ratios[r].weight * bin.weight;
        }
      }
    }
    fit_marginals();
  }

  const AnchorSpec& spec() const { return spec_; }
  int image_width() const { return width_; }
  int image_height() const { return height_; }

  // Joint probability of (ratio, bin) after fitting.
  double cell_probability(std::size_t ratio, std::size_t bin) const {
    return joint_[ratio * spec_.area_bins.size() + bin];
  }

  AnchorSample sample(Rng& rng) const {
    const std::size_t cell = rng.weighted_index(joint_);
    const std::size_t nb = spec_.area_bins.size();
    return sample_in(cell / nb, cell % nb, rng);
  }

  // Sample with the ratio and bin forced; the orientation is still random.
  AnchorSample sample_in(std::size_t ratio, std::size_t bin, Rng& rng) const {
    const std::size_t nb = spec_.area_bins.size();
    if (ratio >= spec_.aspect_ratios.size() || bin >= nb) {
      throw SamplingError("ratio or bin index out of range");
    }
    const double hi = cell_hi_[ratio * nb + bin];
    if (hi <= 0.0) {
      throw SamplingError("requested ratio/bin cell cannot fit in the image");
    }
    const double lo = spec_.area_bins[bin].lo;
    const int k = spec_.aspect_ratios[ratio].long_side;
    const double image_area = static_cast<double>(width_) * height_;
    const bool swapped = rng.bernoulli(spec_.swap_probability);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      const double area = rng.uniform(lo, hi) * image_area;
      const int s = static_cast<int>(std::lround(std::sqrt(area / k)));
      if (s < 1) continue;
      const int l = s * k;
      const double frac = static_cast<double>(s) * l / image_area;
      if (frac < lo || frac >= hi) continue;
      const int w = swapped ? l : s;
      const int h = swapped ? s : l;
      if (w > width_ || h > height_) continue;
      const int x = static_cast<int>(rng.uniform_int(0, width_ - w));
      const int y = static_cast<int>(rng.uniform_int(0, height_ - h));
      return {Rect{x, y, w, h}, ratio, bin, swapped};
    }
    throw SamplingError("no integer rectangle found for ratio/bin cell");
  }

 private:
  static constexpr int kMaxAttempts = 1000;

  void fit_marginals() {
    const std::size_t nr = spec_.aspect_ratios.size();
    const std::size_t nb = spec_.area_bins.size();
    double total = 0.0;
    for (double v : joint_) total += v;
    if (total <= 0.0) {
      throw SamplingError("image too small for any anchor area bin");
    }
    double ratio_total = 0.0, bin_total = 0.0;
    for (const auto& r : spec_.aspect_ratios) ratio_total += r.weight;
    for (const auto& b : spec_.area_bins) bin_total += b.weight;
    for (int iter = 0; iter < 500; ++iter) {
      double worst = 0.0;
      for (std::size_t r = 0; r < nr; ++r) {
        double row = 0.0;
        for (std::size_t b = 0; b < nb; ++b) row += joint_[r * nb + b];
        const double target = spec_.aspect_ratios[r].weight / ratio_total;
        if (row <= 0.0) continue;
        worst = std::max(worst, std::abs(row - target));
        for (std::size_t b = 0; b < nb; ++b) joint_[r * nb + b] *= target / row;
      }
      for (std::size_t b = 0; b < nb; ++b) {
        double col = 0.0;
        for (std::size_t r = 0; r < nr; ++r) col += joint_[r * nb + b];
        const double target = spec_.area_bins[b].weight / bin_total;
        if (col <= 0.0) continue;
        worst = std::max(worst, std::abs(col - target));
        for (std::size_t r = 0; r < nr; ++r) joint_[r * nb + b] *= target / col;
      }
      if (worst < 1e-13) break;
    }
  }

  int width_;
  int height_;
  AnchorSpec spec_;
  std::vector<double> cell_hi_;
  std::vector<double> joint_;
};

inline Rect sample_anchor_rect(int image_w, int image_h, const AnchorSpec& spec,
                               Rng& rng) {
  return AnchorSampler(image_w, image_h, spec).sample(rng).rect;
}

// ---------------------------------------------------------------------------
// Irregular polygons
// ---------------------------------------------------------------------------

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct PolygonSpec {
  int n = 10;
  double irregularity = 0.55;
  double spikiness = 0.075;
  double avg_radius = 1.0;
  Vec2 center{};

  void validate() const {
    if (n < 3) throw ParameterError("polygon needs at least 3 vertices");
    if (!(irregularity >= 0.0 && irregularity <= 1.0)) {
      throw ParameterError("irregularity must lie in [0, 1]");
    }
    if (!(spikiness >= 0.0 && spikiness <= 1.0)) {
      throw ParameterError("spikiness must lie in [0, 1]");
    }
    if (!(avg_radius > 0.0)) throw ParameterError("avg_radius must be positive");
  }
};

// Ranges the shape parameters are drawn from when a spec is randomized.
struct PolygonRanges {
  int n = 10;
  double irregularity_lo = 0.4;
  double irregularity_hi = 0.7;
  double spikiness_lo = 0.0;
  double spikiness_hi = 0.15;

  PolygonSpec draw(Rng& rng, double avg_radius, Vec2 center) const {
    return PolygonSpec{n, rng.uniform(irregularity_lo, irregularity_hi),
                       rng.uniform(spikiness_lo, spikiness_hi), avg_radius,
                       center};
  }
};

struct Polygon {
  std::vector<Vec2> vertices;
};

inline double shoelace_area(const Polygon& poly) {
  const auto& v = poly.vertices;
  double twice = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % v.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return std::abs(twice) / 2.0;
}

inline double perimeter(const Polygon& poly) {
  const auto& v = poly.vertices;
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % v.size()];
    total += std::hypot(b.x - a.x, b.y - a.y);
  }
  return total;
}

// Walks once around a circle of avg_radius: each angular step is 2*pi/n
// perturbed uniformly by +-irregularity*2*pi/n, the steps are rescaled to
// sum to 2*pi, and each vertex sits at a Gaussian radius with standard
// deviation spikiness*avg_radius, clipped to (0, 2*avg_radius].
inline Polygon gen_irregular_polygon(const PolygonSpec& spec, Rng& rng) {
  spec.validate();
  const double two_pi = 2.0 * std::numbers::pi;
  const double mean_step = two_pi / spec.n;
  const double jitter = spec.irregularity * mean_step;

  std::vector<double> steps(spec.n);
  double sum = 0.0;
  for (double& s : steps) {
    s = jitter > 0.0 ? mean_step + rng.uniform(-jitter, jitter) : mean_step;
    sum += s;
  }
  for (double& s : steps) s *= two_pi / sum;

  const double start = spec.irregularity > 0.0 || spec.spikiness > 0.0
                           ? rng.uniform(0.0, two_pi)
                           : 0.0;
  Polygon poly;
  poly.vertices.reserve(spec.n);
  double angle = start;
  for (int i = 0; i < spec.n; ++i) {
    double r = spec.avg_radius;
    if (spec.spikiness > 0.0) {
      r = std::clamp(rng.normal(spec.avg_radius, spec.spikiness * spec.avg_radius),
                     1e-9 * spec.avg_radius, 2.0 * spec.avg_radius);
    }
    poly.vertices.push_back(
        {spec.center.x + r * std::cos(angle), spec.center.y + r * std::sin(angle)});
    angle += steps[i];
  }
  return poly;
}

// Scales each axis independently so the polygon's bounding box becomes
// `target` (in continuous pixel-edge coordinates).
inline Polygon fit_polygon_to_rect(const Polygon& poly, const Rect& target) {
  double x0 = poly.vertices.front().x, x1 = x0;
  double y0 = poly.vertices.front().y, y1 = y0;
  for (const auto& v : poly.vertices) {
    x0 = std::min(x0, v.x);
    x1 = std::max(x1, v.x);
    y0 = std::min(y0, v.y);
    y1 = std::max(y1, v.y);
  }
  const double sx = x1 > x0 ? target.w / (x1 - x0) : 1.0;
  const double sy = y1 > y0 ? target.h / (y1 - y0) : 1.0;
  Polygon out;
  out.vertices.reserve(poly.vertices.size());
  for (const auto& v : poly.vertices) {
    out.vertices.push_back(
        {target.x + (v.x - x0) * sx, target.y + (v.y - y0) * sy});
  }
  return out;
}

// Binary coverage by the even-odd rule evaluated at pixel centers. Mask
// pixel (i, j) samples the point (bounds.x + i + 0.5, bounds.y + j + 0.5).
inline SoftMask rasterize_polygon(const Polygon& poly, const Rect& bounds) {
  if (poly.vertices.size() < 3 || shoelace_area(poly) < 1e-12) {
    throw RasterError("polygon is degenerate (zero area)");
  }
  if (bounds.w < 1 || bounds.h < 1) {
    throw RasterError("raster bounds must be non-empty");
  }
  SoftMask mask(bounds.w, bounds.h);
  const auto& v = poly.vertices;
  std::vector<double> crossings;
  for (int j = 0; j < bounds.h; ++j) {
    const double yc = bounds.y + j + 0.5;
    crossings.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Vec2& a = v[i];
      const Vec2& b = v[(i + 1) % v.size()];
      // Half-open in y so a vertex on the scanline is counted once.
      if ((a.y <= yc && b.y > yc) || (b.y <= yc && a.y > yc)) {
        crossings.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      // Pixel centers in [left, right).
      const int first = std::max(
          0, static_cast<int>(std::ceil(crossings[k] - bounds.x - 0.5)));
      const int last = std::min(
          bounds.w - 1,
          static_cast<int>(std::ceil(crossings[k + 1] - bounds.x - 0.5)) - 1);
      for (int i = first; i <= last; ++i) mask.at(i, j) = 1.0f;
    }
  }
  return mask;
}

}  // namespace changeforge
