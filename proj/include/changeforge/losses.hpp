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

// Training objective for the center-point maps: a focal-style heatmap loss,
// L1 size and offset losses evaluated at ground-truth peaks, their weighted
// total, and analytic gradients with respect to every prediction value.

#include <cmath>
#include <vector>

#include "changeforge/codec.hpp"
#include "changeforge/error.hpp"

namespace changeforge {

struct LossConfig {
  double alpha = 2.0;
  double beta = 4.0;
  double lambda_wh = 0.1;
  double lambda_offset = 1.0;
  double epsilon = 1e-7;  // predictions are clamped to [eps, 1 - eps] before logs

  void validate() const {
    if (!(alpha > 0.0 && beta > 0.0)) throw ParameterError("alpha and beta must be positive");
    if (!(lambda_wh >= 0.0 && lambda_offset >= 0.0)) {
      throw ParameterError("loss weights must be non-negative");
    }
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw ParameterError("epsilon must lie in (0, 0.5)");
  }
};

struct LossReport {
  double l_hm = 0.0;
  double l_wh = 0.0;
  double l_offset = 0.0;
  double total = 0.0;
  std::size_t n_peaks = 0;
};

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

// Cells whose ground-truth heatmap value is exactly 1, row-major.
inline std::vector<Cell> peak_cells(const ScalarMap& g_hm) {
  std::vector<Cell> cells;
  for (int y = 0; y < g_hm.height(); ++y) {
    for (int x = 0; x < g_hm.width(); ++x) {
      if (g_hm.at(x, y) == 1.0) cells.push_back({x, y});
    }
  }
  return cells;
}

// Correctly rounded l_hm + lambda_wh * l_wh + lambda_offset * l_offset.
inline double weighted_total(double l_hm, double l_wh, double l_offset,
                             const LossConfig& cfg) {
  return std::fma(cfg.lambda_offset, l_offset, std::fma(cfg.lambda_wh, l_wh, l_hm));
}

inline LossReport combine_losses(double l_hm, double l_wh, double l_offset,
                                 const LossConfig& cfg, std::size_t n_peaks = 0) {
  return {l_hm, l_wh, l_offset, weighted_total(l_hm, l_wh, l_offset, cfg), n_peaks};
}

namespace detail {

inline double pos_norm(std::size_t n) { return static_cast<double>(n == 0 ? 1 : n); }

// Per-cell term of the heatmap loss before the -1/N factor, and its
// derivative with respect to the (unclamped) prediction.
struct HeatTerm {
  double value;
  double grad;
};

inline HeatTerm heat_term(double y, double g, const LossConfig& cfg) {
  const double lo = cfg.epsilon;
  const double hi = 1.0 - cfg.epsilon;
  const bool clamped = y < lo || y > hi;
  const double p = std::clamp(y, lo, hi);
  if (g == 1.0) {
    const double q = 1.0 - p;
    const double value = std::pow(q, cfg.alpha) * std::log(p);
    const double grad = -cfg.alpha * std::pow(q, cfg.alpha - 1.0) * std::log(p) +
                        std::pow(q, cfg.alpha) / p;
    return {value, clamped ? 0.0 : grad};
  }
  const double weight = std::pow(1.0 - g, cfg.beta);
  const double value = weight * std::pow(p, cfg.alpha) * std::log(1.0 - p);
  const double grad = weight * (cfg.alpha * std::pow(p, cfg.alpha - 1.0) * std::log(1.0 - p) -
                                std::pow(p, cfg.alpha) / (1.0 - p));
  return {value, clamped ? 0.0 : grad};
}

template <std::size_t C>
void require_same_shape(const MapGrid<C>& a, const MapGrid<C>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ContractError(std::string(what) + ": prediction and target shapes differ");
  }
}

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

template <std::size_t C>
double masked_l1(const MapGrid<C>& pred, const MapGrid<C>& target,
                 std::span<const Cell> peaks) {
  if (peaks.empty()) return 0.0;
  double sum = 0.0;
  for (const Cell& p : peaks) {
    for (std::size_t c = 0; c < C; ++c) sum += std::abs(pred.at(p.x, p.y, c) - target.at(p.x, p.y, c));
  }
  return sum / static_cast<double>(peaks.size());
}

}  // namespace detail

// -(1/N) * sum over cells of
//   (1-Y)^alpha log Y               where G == 1
//   (1-G)^beta Y^alpha log(1-Y)     elsewhere
// with N = number of G == 1 cells, at least 1.
inline double heatmap_loss(const ScalarMap& y_hm, const ScalarMap& g_hm,
                           const LossConfig& cfg = {}) {
  detail::require_same_shape(y_hm, g_hm, "heatmap_loss");
  std::size_t n = 0;
  double sum = 0.0;
  const auto yv = y_hm.values();
  const auto gv = g_hm.values();
  for (std::size_t i = 0; i < yv.size(); ++i) {
    if (gv[i] == 1.0) ++n;
    sum += detail::heat_term(yv[i], gv[i], cfg).value;
  }
  return -sum / detail::pos_norm(n);
}

inline double offset_loss(const PairMap& y_offset, const PairMap& g_offset,
                          std::span<const Cell> peaks) {
  detail::require_same_shape(y_offset, g_offset, "offset_loss");
  return detail::masked_l1(y_offset, g_offset, peaks);
}

inline double wh_loss(const PairMap& y_wh, const PairMap& g_wh, std::span<const Cell> peaks) {
  detail::require_same_shape(y_wh, g_wh, "wh_loss");
  return detail::masked_l1(y_wh, g_wh, peaks);
}

inline void require_compatible(const TargetMaps& predictions, const TargetMaps& targets) {
  if (!predictions.consistent() || !targets.consistent() ||
      !predictions.hm.same_shape(targets.hm)) {
    throw ContractError("prediction and target maps differ in shape");
  }
}

inline LossReport total_loss(const TargetMaps& predictions, const TargetMaps& targets,
                             const LossConfig& cfg = {}) {
  cfg.validate();
  require_compatible(predictions, targets);
  const auto peaks = peak_cells(targets.hm);
  return combine_losses(heatmap_loss(predictions.hm, targets.hm, cfg),
                        wh_loss(predictions.wh, targets.wh, peaks),
                        offset_loss(predictions.offset, targets.offset, peaks), cfg,
                        peaks.size());
}

// d(total_loss)/d(prediction) for every prediction value. Clamped heatmap
// cells get 0 (the clamp is flat there); the L1 subgradient at Y == G is 0;
// wh and offset gradients vanish away from peaks.
inline TargetMaps loss_gradients(const TargetMaps& predictions, const TargetMaps& targets,
                                 const LossConfig& cfg = {}) {
  cfg.validate();
  require_compatible(predictions, targets);
  const int w = predictions.hm.width();
  const int h = predictions.hm.height();
  TargetMaps grad{ScalarMap(w, h), PairMap(w, h), PairMap(w, h)};

  const auto peaks = peak_cells(targets.hm);
  const double n = detail::pos_norm(peaks.size());
  const auto yv = predictions.hm.values();
  const auto gv = targets.hm.values();
  auto out = grad.hm.values();
  for (std::size_t i = 0; i < yv.size(); ++i) {
    out[i] = -detail::heat_term(yv[i], gv[i], cfg).grad / n;
  }
  for (const Cell& p : peaks) {
    for (std::size_t c = 0; c < 2; ++c) {
      grad.wh.at(p.x, p.y, c) =
          cfg.lambda_wh / n *
          detail::sign(predictions.wh.at(p.x, p.y, c) - targets.wh.at(p.x, p.y, c));
      grad.offset.at(p.x, p.y, c) =
          cfg.lambda_offset / n *
          detail::sign(predictions.offset.at(p.x, p.y, c) - targets.offset.at(p.x, p.y, c));
    }
  }
  return grad;
}

}  // namespace changeforge
