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

// Single-class detection metrics: IoU, AP at an IoU threshold, and the
// generalization distance of a method's per-testset AP vector from the
// columnwise best.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "changeforge/box.hpp"
#include "changeforge/codec.hpp"
#include "changeforge/error.hpp"

namespace changeforge {

inline double iou(const ChangeBox& a, const ChangeBox& b) {
  const double iw = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const double ih = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

// Detections and ground truth of one image pair.
struct PairEval {
  std::string pair_id;
  std::vector<Detection> detections;
  std::vector<ChangeBox> ground_truth;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct EvalResult {
  double ap50 = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::vector<PrPoint> pr_curve;  // one point per ranked detection
};

// Detections from all pairs are ranked by descending score (ties: pair
// order, then detection order). Each one greedily claims the unmatched
// ground truth of its own pair with the highest IoU, provided that IoU
// reaches the threshold; otherwise it is a false positive. AP integrates
// the monotone precision envelope over recall (all-point interpolation).
inline EvalResult average_precision(const std::vector<PairEval>& pairs,
                                    double iou_threshold = 0.5) {
  std::size_t total_gt = 0;
  for (const auto& p : pairs) total_gt += p.ground_truth.size();
  if (total_gt == 0) {
    throw EvalError("no ground-truth boxes: average precision is undefined");
  }

  struct Ranked {
    double score;
    std::size_t pair;
    std::size_t index;
  };
  std::vector<Ranked> ranked;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    for (std::size_t i = 0; i < pairs[p].detections.size(); ++i) {
      ranked.push_back({pairs[p].detections[i].score, p, i});
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.pair != b.pair) return a.pair < b.pair;
    return a.index < b.index;
  });

  std::vector<std::vector<char>> taken(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    taken[p].assign(pairs[p].ground_truth.size(), 0);
  }

  EvalResult result;
  result.pr_curve.reserve(ranked.size());
  std::size_t tp = 0, fp = 0;
  for (const auto& r : ranked) {
    const auto& det = pairs[r.pair].detections[r.index].box;
    const auto& gts = pairs[r.pair].ground_truth;
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[r.pair][g]) continue;
      const double v = iou(det, gts[g]);
      if (v > best) {
        best = v;
        best_gt = g;
      }
    }
    if (best_gt < gts.size() && best >= iou_threshold) {
      taken[r.pair][best_gt] = 1;
      ++tp;
    } else {
      ++fp;
    }
    result.pr_curve.push_back({static_cast<double>(tp) / total_gt,
                               static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  result.true_positives = tp;
  result.false_positives = fp;
  result.false_negatives = total_gt - tp;

  // Precision envelope, swept from the tail.
  std::vector<double> envelope(result.pr_curve.size());
  double running = 0.0;
  for (std::size_t i = result.pr_curve.size(); i-- > 0;) {
    running = std::max(running, result.pr_curve[i].precision);
    envelope[i] = running;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < result.pr_curve.size(); ++i) {
    const double r = result.pr_curve[i].recall;
    if (r > prev_recall) {
      ap += (r - prev_recall) * envelope[i];
      prev_recall = r;
    }
  }
  result.ap50 = std::clamp(ap, 0.0, 1.0);
  return result;
}

// Rows are methods, columns are test sets; values are AP fractions.
struct ResultsMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
  std::vector<std::vector<double>> values;

  void validate() const {
    if (values.empty() || values.front().empty()) throw EvalError("results matrix is empty");
    if (values.size() != row_labels.size()) throw EvalError("row labels do not match rows");
    for (const auto& row : values) {
      if (row.size() != values.front().size()) throw EvalError("results matrix is not rectangular");
      for (double v : row) {
        if (!(v >= 0.0 && v <= 1.0)) throw EvalError("AP values must be fractions in [0, 1]");
      }
    }
    if (!column_labels.empty() && column_labels.size() != values.front().size()) {
      throw EvalError("column labels do not match columns");
    }
  }
};

// Columnwise maximum over every row in the matrix.
inline std::vector<double> best_per_column(const ResultsMatrix& m) {
  m.validate();
  std::vector<double> best = m.values.front();
  for (const auto& row : m.values) {
    for (std::size_t c = 0; c < row.size(); ++c) best[c] = std::max(best[c], row[c]);
  }
  return best;
}

inline std::vector<double> generalization_distance(const ResultsMatrix& m) {
  const auto best = best_per_column(m);
  std::vector<double> out;
  out.reserve(m.values.size());
  for (const auto& row : m.values) {
    double sq = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) sq += (best[c] - row[c]) * (best[c] - row[c]);
    out.push_back(std::sqrt(sq));
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  cells.push_back(cell);
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string{} : c.substr(b, e - b + 1);
  }
  return cells;
}

}  // namespace detail

// Header row: a corner cell, then test-set names. Each following row: the
// method label, then decimal AP values.
inline ResultsMatrix parse_results_csv(std::istream& in) {
  ResultsMatrix m;
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = detail::split_csv_line(line);
    if (header) {
      m.column_labels.assign(cells.begin() + 1, cells.end());
      header = false;
      continue;
    }
    if (cells.size() != m.column_labels.size() + 1) {
      throw EvalError("results CSV line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(m.column_labels.size() + 1));
    }
    m.row_labels.push_back(cells.front());
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cells[c], &used));
        if (used != cells[c].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw EvalError("results CSV line " + std::to_string(line_no) + ": '" + cells[c] +
                        "' is not a decimal");
      }
    }
    m.values.push_back(std::move(row));
  }
  m.validate();
  return m;
}

inline ResultsMatrix load_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open results matrix '" + path + "'");
  return parse_results_csv(in);
}

// Detections file: JSON array of {pair_id, cx, cy, w, h, score}.
struct PairDetection {
  std::string pair_id;
  Detection detection;
};

inline nlohmann::json detections_to_json(const std::vector<PairDetection>& dets) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : dets) {
    out.push_back({{"pair_id", d.pair_id},
                   {"cx", d.detection.box.cx},
                   {"cy", d.detection.box.cy},
                   {"w", d.detection.box.w},
                   {"h", d.detection.box.h},
                   {"score", d.detection.score}});
  }
  return out;
}

inline std::vector<PairDetection> detections_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw LoadError("detections file must hold a JSON array");
  std::vector<PairDetection> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    try {
      const auto& e = j[i];
      PairDetection d;
      d.pair_id = e.at("pair_id").get<std::string>();
      d.detection.box = {e.at("cx").get<double>(), e.at("cy").get<double>(), e.at("w").get<double>(),
                         e.at("h").get<double>()};
      d.detection.score = e.at("score").get<double>();
      if (!(d.detection.score >= 0.0 && d.detection.score <= 1.0)) {
        throw LoadError("score outside [0, 1]");
      }
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw LoadError("detection " + std::to_string(i) + ": " + e.what());
    } catch (const LoadError& e) {
      throw LoadError("detection " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

inline nlohmann::json to_json(const EvalResult& r) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.pr_curve) curve.push_back({{"recall", p.recall}, {"precision", p.precision}});
  return {{"ap50", r.ap50},
          {"true_positives", r.true_positives},
          {"false_positives", r.false_positives},
          {"false_negatives", r.false_negatives},
          {"pr_curve", curve}};
}

}  // namespace changeforge
