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

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "srh/pfm.hpp"

namespace srh {

struct DisparityPng {
  FloatMap disp;                // pixels; 0 where invalid
  std::vector<std::uint8_t> valid;  // stored value != 0
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

// KITTI-convention 16-bit grayscale disparity PNG: disparity = stored/256,
// stored 0 marks an invalid pixel.
inline DisparityPng load_kitti_disparity_png(const std::string& path) {
  detail::FilePtr f(std::fopen(path.c_str(), "rb"));
  check_io(f != nullptr, "png: cannot open ", path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check_io(png != nullptr, "png: read struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    check_io(false, "png: info struct allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    check_io(false, "png: failed to parse ", path);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const index_t w = png_get_image_width(png, info);
  const index_t h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth != 16 || color != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    check_io(false, "png: ", path, " is not 16-bit grayscale (depth ", depth, ", color type ",
             color, ")");
  }
  std::vector<std::vector<png_byte>> rows(static_cast<size_t>(h),
                                          std::vector<png_byte>(static_cast<size_t>(w) * 2));
  std::vector<png_bytep> row_ptrs(static_cast<size_t>(h));
  for (size_t y = 0; y < rows.size(); ++y) row_ptrs[y] = rows[y].data();
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  DisparityPng out;
  out.disp = FloatMap(h, w);
  out.valid.assign(static_cast<size_t>(h * w), 0);
  for (index_t y = 0; y < h; ++y) {
    const png_byte* row = rows[static_cast<size_t>(y)].data();
    for (index_t x = 0; x < w; ++x) {
      std::uint16_t stored = static_cast<std::uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
      if (stored != 0) {
        out.disp.at(y, x) = static_cast<float>(stored) / 256.0f;
        out.valid[static_cast<size_t>(y * w + x)] = 1;
      }
    }
  }
  return out;
}

inline void save_kitti_disparity_png(const std::string& path, const FloatMap& disp,
                                     const std::vector<std::uint8_t>* valid = nullptr) {
  check_io(disp.h >= 1 && disp.w >= 1, "png: empty disparity map");
  detail::FilePtr f(std::fopen(path.c_str(), "wb"));
  check_io(f != nullptr, "png: cannot open for writing: ", path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check_io(png != nullptr, "png: write struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    check_io(false, "png: info struct allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    check_io(false, "png: failed to write ", path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(disp.w), static_cast<png_uint_32>(disp.h), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<size_t>(disp.w) * 2);
  for (index_t y = 0; y < disp.h; ++y) {
    for (index_t x = 0; x < disp.w; ++x) {
      bool ok = !valid || (*valid)[static_cast<size_t>(y * disp.w + x)] != 0;
      double d = disp.at(y, x);
      std::uint16_t stored = 0;
      if (ok && d > 0) {
        double q = std::round(d * 256.0);
        stored = static_cast<std::uint16_t>(std::min(q, 65535.0));
      }
      row[2 * x] = static_cast<png_byte>(stored >> 8);
      row[2 * x + 1] = static_cast<png_byte>(stored & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

enum class RenderMode { kGray, kColor };

// Normalized 8-bit rendering for visual inspection; values clamp at d_max.
// Grayscale mode is value-preserving up to d_max/255 quantization.
inline void render_disparity_png(const FloatMap& disp, double d_max, const std::string& path,
                                 RenderMode mode = RenderMode::kColor) {
  check_io(d_max > 0, "render: d_max must be positive");
  detail::FilePtr f(std::fopen(path.c_str(), "wb"));
  check_io(f != nullptr, "png: cannot open for writing: ", path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check_io(png != nullptr, "png: write struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    check_io(false, "png: info struct allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    check_io(false, "png: failed to write ", path);
  }
  png_init_io(png, f.get());
  const bool gray = mode == RenderMode::kGray;
  png_set_IHDR(png, info, static_cast<png_uint_32>(disp.w), static_cast<png_uint_32>(disp.h), 8,
               gray ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<size_t>(disp.w) * (gray ? 1 : 3));
  for (index_t y = 0; y < disp.h; ++y) {
    for (index_t x = 0; x < disp.w; ++x) {
      double t = std::min(std::max(double(disp.at(y, x)), 0.0), d_max) / d_max;
      if (gray) {
        row[x] = static_cast<png_byte>(std::lround(t * 255.0));
      } else {
        // compact jet ramp
        double r = std::clamp(1.5 - std::abs(4 * t - 3.0), 0.0, 1.0);
        double g = std::clamp(1.5 - std::abs(4 * t - 2.0), 0.0, 1.0);
        double b = std::clamp(1.5 - std::abs(4 * t - 1.0), 0.0, 1.0);
        row[3 * x + 0] = static_cast<png_byte>(std::lround(r * 255.0));
        row[3 * x + 1] = static_cast<png_byte>(std::lround(g * 255.0));
        row[3 * x + 2] = static_cast<png_byte>(std::lround(b * 255.0));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Reads back an 8-bit grayscale render; used to bound the quantization error.
inline FloatMap load_gray_png8(const std::string& path, double d_max) {
  detail::FilePtr f(std::fopen(path.c_str(), "rb"));
  check_io(f != nullptr, "png: cannot open ", path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  check_io(png != nullptr, "png: read struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    check_io(false, "png: info struct allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    check_io(false, "png: failed to parse ", path);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  check_io(png_get_bit_depth(png, info) == 8 &&
               png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY,
           "png: ", path, " is not 8-bit grayscale");
  const index_t w = png_get_image_width(png, info);
  const index_t h = png_get_image_height(png, info);
  std::vector<std::vector<png_byte>> rows(static_cast<size_t>(h),
                                          std::vector<png_byte>(static_cast<size_t>(w)));
  std::vector<png_bytep> row_ptrs(static_cast<size_t>(h));
  for (size_t y = 0; y < rows.size(); ++y) row_ptrs[y] = rows[y].data();
  png_read_image(png, row_ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);
  FloatMap out(h, w);
  for (index_t y = 0; y < h; ++y)
    for (index_t x = 0; x < w; ++x)
      out.at(y, x) = static_cast<float>(rows[static_cast<size_t>(y)][static_cast<size_t>(x)] /
                                        255.0 * d_max);
  return out;
}

}  // namespace srh
