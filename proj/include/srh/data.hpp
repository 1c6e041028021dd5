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

#include <filesystem>

#include "srh/pfm.hpp"
#include "srh/png_io.hpp"
#include "srh/tensor.hpp"

namespace srh {

// One rectified stereo training/eval sample. Images are channel-planar
// [3][h][w] in [0,1]; synthetic samples are grayscale replicated across
// channels. noc is empty when no occlusion information exists.
struct StereoSample {
  index_t h = 0, w = 0;
  std::vector<float> left, right;       // 3*h*w
  std::vector<float> disp;              // h*w, full-resolution pixels
  std::vector<std::uint8_t> valid;      // h*w
  std::vector<std::uint8_t> noc;        // h*w or empty
  std::string provenance;

  bool has_noc() const { return !noc.empty(); }
};

template <typename T>
Tensor<T> image_tensor(const std::vector<float>& planes, index_t h, index_t w) {
  check(planes.size() == static_cast<size_t>(3 * h * w), "image_tensor: size mismatch");
  Tensor<T> t = Tensor<T>::zeros({1, 3, h, w});
  for (size_t i = 0; i < planes.size(); ++i) t.data()[i] = static_cast<T>(planes[i]);
  return t;
}

template <typename T>
Tensor<T> disparity_tensor(const StereoSample& s) {
  Tensor<T> t = Tensor<T>::zeros({1, 1, s.h, s.w});
  for (size_t i = 0; i < s.disp.size(); ++i) t.data()[i] = static_cast<T>(s.disp[i]);
  return t;
}

template <typename T>
Tensor<T> valid_mask_tensor(const StereoSample& s) {
  Tensor<T> t = Tensor<T>::zeros({1, 1, s.h, s.w});
  for (size_t i = 0; i < s.valid.size(); ++i) t.data()[i] = s.valid[i] ? T(1) : T(0);
  return t;
}

inline StereoSample crop_sample(const StereoSample& s, index_t y0, index_t x0, index_t ch,
                                index_t cw) {
  check(y0 >= 0 && x0 >= 0 && y0 + ch <= s.h && x0 + cw <= s.w, "crop ", ch, "x", cw, "+", y0, "+",
        x0, " exceeds sample ", s.h, "x", s.w);
  StereoSample out;
  out.h = ch;
  out.w = cw;
  out.left.resize(static_cast<size_t>(3 * ch * cw));
  out.right.resize(static_cast<size_t>(3 * ch * cw));
  out.disp.resize(static_cast<size_t>(ch * cw));
  out.valid.resize(static_cast<size_t>(ch * cw));
  if (s.has_noc()) out.noc.resize(static_cast<size_t>(ch * cw));
  for (index_t c = 0; c < 3; ++c)
    for (index_t y = 0; y < ch; ++y)
      for (index_t x = 0; x < cw; ++x) {
        out.left[(c * ch + y) * cw + x] = s.left[(c * s.h + y0 + y) * s.w + x0 + x];
        out.right[(c * ch + y) * cw + x] = s.right[(c * s.h + y0 + y) * s.w + x0 + x];
      }
  for (index_t y = 0; y < ch; ++y)
    for (index_t x = 0; x < cw; ++x) {
      out.disp[y * cw + x] = s.disp[(y0 + y) * s.w + x0 + x];
      out.valid[y * cw + x] = s.valid[(y0 + y) * s.w + x0 + x];
      if (s.has_noc()) out.noc[y * cw + x] = s.noc[(y0 + y) * s.w + x0 + x];
    }
  out.provenance = s.provenance;
  return out;
}

// On-disk sample layout: left.pfm / right.pfm (grayscale), disp.pfm,
// noc.pfm (0/1), disp.png (16-bit KITTI convention).
inline void save_sample(const std::string& dir, const StereoSample& s) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto plane_map = [&](const std::vector<float>& img) {
    FloatMap m(s.h, s.w);
    std::copy(img.begin(), img.begin() + s.h * s.w, m.v.begin());  // first channel
    return m;
  };
  save_pfm(dir + "/left.pfm", plane_map(s.left));
  save_pfm(dir + "/right.pfm", plane_map(s.right));
  FloatMap d(s.h, s.w);
  std::copy(s.disp.begin(), s.disp.end(), d.v.begin());
  save_pfm(dir + "/disp.pfm", d);
  save_kitti_disparity_png(dir + "/disp.png", d, &s.valid);
  if (s.has_noc()) {
    FloatMap n(s.h, s.w);
    for (size_t i = 0; i < s.noc.size(); ++i) n.v[i] = s.noc[i] ? 1.f : 0.f;
    save_pfm(dir + "/noc.pfm", n);
  }
}

inline StereoSample load_sample(const std::string& dir, index_t d_max) {
  namespace fs = std::filesystem;
  check_io(fs::exists(dir + "/left.pfm"), "sample directory ", dir, " has no left.pfm");
  FloatMap left = load_pfm(dir + "/left.pfm");
  FloatMap right = load_pfm(dir + "/right.pfm");
  FloatMap disp = load_pfm(dir + "/disp.pfm");
  check_io(left.h == right.h && left.w == right.w && left.h == disp.h && left.w == disp.w,
           "sample ", dir, ": image/disparity dimensions disagree");
  StereoSample s;
  s.h = left.h;
  s.w = left.w;
  s.left.resize(static_cast<size_t>(3 * s.h * s.w));
  s.right.resize(static_cast<size_t>(3 * s.h * s.w));
  for (index_t c = 0; c < 3; ++c) {
    std::copy(left.v.begin(), left.v.end(), s.left.begin() + c * s.h * s.w);
    std::copy(right.v.begin(), right.v.end(), s.right.begin() + c * s.h * s.w);
  }
  s.disp.assign(disp.v.begin(), disp.v.end());
  s.valid.resize(s.disp.size());
  for (size_t i = 0; i < s.disp.size(); ++i) {
    float d = s.disp[i];
    s.valid[i] = (std::isfinite(d) && d > 0.f && d < float(d_max)) ? 1 : 0;
  }
  if (fs::exists(dir + "/noc.pfm")) {
    FloatMap n = load_pfm(dir + "/noc.pfm");
    s.noc.resize(n.v.size());
    for (size_t i = 0; i < n.v.size(); ++i) s.noc[i] = n.v[i] != 0.f ? 1 : 0;
  }
  s.provenance = dir;
  return s;
}

inline std::vector<StereoSample> load_dataset(const std::string& dir, index_t d_max) {
  namespace fs = std::filesystem;
  check_io(fs::is_directory(dir), "dataset directory not found: ", dir);
  std::vector<std::string> subdirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && fs::exists(e.path() / "left.pfm")) subdirs.push_back(e.path().string());
  std::sort(subdirs.begin(), subdirs.end());
  check_io(!subdirs.empty(), "dataset directory ", dir, " contains no samples");
  std::vector<StereoSample> out;
  for (const auto& d : subdirs) out.push_back(load_sample(d, d_max));
  return out;
}

}  // namespace srh
