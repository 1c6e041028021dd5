// Copyright 2026 the srhnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "srh/common.hpp"

namespace srh {

// Single-channel real image, row-major, top row first in memory.
struct FloatMap {
  index_t h = 0, w = 0;
  std::vector<float> v;

  FloatMap() = default;
  FloatMap(index_t h_, index_t w_, float fill = 0.f)
      : h(h_), w(w_), v(static_cast<size_t>(h_ * w_), fill) {}
  float& at(index_t y, index_t x) { return v[static_cast<size_t>(y * w + x)]; }
  float at(index_t y, index_t x) const { return v[static_cast<size_t>(y * w + x)]; }
};

namespace detail {

inline std::uint32_t f32_bits(float f) {
  std::uint32_t b;
  std::memcpy(&b, &f, 4);
  return b;
}

inline float bits_f32(std::uint32_t b) {
  float f;
  std::memcpy(&f, &b, 4);
  return f;
}

}  // namespace detail

// Grayscale PFM ("Pf"): dims line, scale line whose sign encodes byte
// order (negative = little-endian), rows stored bottom-up.
inline void save_pfm(const std::string& path, const FloatMap& img) {
  check_io(img.h >= 1 && img.w >= 1, "save_pfm: empty image");
  std::ofstream os(path, std::ios::binary);
  check_io(os.good(), "save_pfm: cannot open ", path);
  os << "Pf\n" << img.w << " " << img.h << "\n-1.0\n";
  for (index_t y = img.h - 1; y >= 0; --y) {
    for (index_t x = 0; x < img.w; ++x) {
      std::uint32_t b = detail::f32_bits(img.at(y, x));
      unsigned char bytes[4] = {static_cast<unsigned char>(b), static_cast<unsigned char>(b >> 8),
                                static_cast<unsigned char>(b >> 16),
                                static_cast<unsigned char>(b >> 24)};
      os.write(reinterpret_cast<const char*>(bytes), 4);
    }
  }
  check_io(os.good(), "save_pfm: write failed: ", path);
}

inline FloatMap load_pfm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check_io(is.good(), "load_pfm: cannot open ", path);
  std::string magic;
  is >> magic;
  check_io(magic != "PF", "load_pfm: ", path, " is a color PFM; only grayscale 'Pf' is supported");
  check_io(magic == "Pf", "load_pfm: bad magic '", magic, "' in ", path);
  long long w = 0, h = 0;
  double scale = 0;
  is >> w >> h >> scale;
  check_io(is.good(), "load_pfm: malformed header in ", path);
  check_io(w >= 1 && h >= 1, "load_pfm: bad dimensions ", w, "x", h, " in ", path);
  check_io(scale != 0.0, "load_pfm: zero scale in ", path);
  is.get();  // single whitespace separating header and payload
  FloatMap img(static_cast<index_t>(h), static_cast<index_t>(w));
  const bool file_little_endian = scale < 0;
  std::vector<unsigned char> row(static_cast<size_t>(w) * 4);
  for (index_t y = img.h - 1; y >= 0; --y) {
    is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    check_io(is.good(), "load_pfm: truncated payload in ", path);
    for (index_t x = 0; x < img.w; ++x) {
      const unsigned char* p = row.data() + static_cast<size_t>(x) * 4;
      std::uint32_t bits =
          file_little_endian
              ? (std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
                 (std::uint32_t(p[3]) << 24))
              : (std::uint32_t(p[3]) | (std::uint32_t(p[2]) << 8) | (std::uint32_t(p[1]) << 16) |
                 (std::uint32_t(p[0]) << 24));
      img.at(y, x) = detail::bits_f32(bits);
    }
  }
  return img;
}

}  // namespace srh
