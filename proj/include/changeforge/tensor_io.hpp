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

// Map exchange format: one JSON header line
//   {"dtype":"f32","name":...,"order":"row-major","shape":[R,R,C]}
// followed by R*R*C little-endian IEEE-754 binary32 values.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "changeforge/codec.hpp"
#include "changeforge/error.hpp"

namespace changeforge {

template <std::size_t C>
void write_map(const std::filesystem::path& path, const MapGrid<C>& grid,
               const std::string& name) {
  nlohmann::json header = {
      {"shape", {grid.height(), grid.width(), C}},
      {"dtype", "f32"},
      {"order", "row-major"},
      {"name", name},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << header.dump() << '\n';
  std::vector<char> bytes;
  bytes.reserve(grid.values().size() * 4);
  for (double v : grid.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

struct MapHeader {
  int rows = 0;
  int cols = 0;
  std::size_t channels = 0;
  std::string name;
};

template <std::size_t C>
MapGrid<C> read_map(const std::filesystem::path& path, MapHeader* header_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw LoadError("'" + path.string() + "': missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("'" + path.string() + "': bad header: " + e.what());
  }
  MapHeader h;
  try {
    if (header.at("dtype") != "f32" || header.at("order") != "row-major") {
      throw LoadError("'" + path.string() + "': expected f32 row-major data");
    }
    const auto& shape = header.at("shape");
    if (!shape.is_array() || shape.size() != 3) {
      throw LoadError("'" + path.string() + "': shape must be [R, R, C]");
    }
    h.rows = shape[0].get<int>();
    h.cols = shape[1].get<int>();
    h.channels = shape[2].get<std::size_t>();
    h.name = header.value("name", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("'" + path.string() + "': bad header: " + e.what());
  }
  if (h.channels != C || h.rows < 1 || h.cols < 1) {
    throw LoadError("'" + path.string() + "': expected " + std::to_string(C) +
                    " channel(s), got " + std::to_string(h.channels));
  }
  MapGrid<C> grid(h.cols, h.rows);
  const std::size_t n = grid.values().size();
  std::vector<unsigned char> bytes(n * 4);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw LoadError("'" + path.string() + "': truncated payload");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw LoadError("'" + path.string() + "': trailing bytes after payload");
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= std::uint32_t(bytes[i * 4 + b]) << (8 * b);
    grid.values()[i] = std::bit_cast<float>(bits);
  }
  if (header_out) *header_out = h;
  return grid;
}

// <dir>/<stem>_hm.f32, _wh.f32, _offset.f32
inline void write_target_maps(const std::filesystem::path& dir, const std::string& stem,
                              const TargetMaps& maps) {
  write_map(dir / (stem + "_hm.f32"), maps.hm, stem + "/hm");
  write_map(dir / (stem + "_wh.f32"), maps.wh, stem + "/wh");
  write_map(dir / (stem + "_offset.f32"), maps.offset, stem + "/offset");
}

inline TargetMaps read_target_maps(const std::filesystem::path& dir, const std::string& stem) {
  TargetMaps maps{read_map<1>(dir / (stem + "_hm.f32")), read_map<2>(dir / (stem + "_wh.f32")),
                  read_map<2>(dir / (stem + "_offset.f32"))};
  if (!maps.consistent()) {
    throw LoadError("maps for '" + stem + "' have inconsistent shapes");
  }
  return maps;
}

}  // namespace changeforge
