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

#include "changeforge/image.hpp"

namespace changeforge {

// Axis-aligned change box in input-image pixels, center form.
struct ChangeBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double x0() const { return cx - w / 2.0; }
  double y0() const { return cy - h / 2.0; }
  double x1() const { return cx + w / 2.0; }
  double y1() const { return cy + h / 2.0; }
  double area() const { return w * h; }

  bool valid() const { return w > 0.0 && h > 0.0; }

  bool within(double width, double height) const {
    return valid() && x0() >= 0.0 && y0() >= 0.0 && x1() <= width &&
           y1() <= height;
  }

  static ChangeBox from_corners(double x0, double y0, double x1, double y1) {
    return {(x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0};
  }

  static ChangeBox from_rect(const Rect& r) {
    return {r.x + r.w / 2.0, r.y + r.h / 2.0, static_cast<double>(r.w),
            static_cast<double>(r.h)};
  }

  friend bool operator==(const ChangeBox&, const ChangeBox&) = default;
};

}  // namespace changeforge
