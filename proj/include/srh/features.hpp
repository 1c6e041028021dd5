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

#include <array>

#include "srh/layers.hpp"

namespace srh {

// (raw - mean) / std per channel. The input is data, not a learned value,
// so this runs outside the tape.
template <typename T>
Tensor<T> normalize_image(const Tensor<T>& raw, const std::array<double, 3>& means,
                          const std::array<double, 3>& stds) {
  check(raw.rank() == 4 && raw.dim(0) == 1 && raw.dim(1) == 3,
        "normalize_image expects [1,3,H,W], got ", shape_str(raw.shape()));
  for (double s : stds) check(s > 0.0, "normalize_image: stds must be strictly positive");
  Tensor<T> out = Tensor<T>::zeros(raw.shape());
  index_t hw = raw.dim(2) * raw.dim(3);
  for (index_t c = 0; c < 3; ++c) {
    const T* src = raw.data() + c * hw;
    T* dst = out.data() + c * hw;
    T m = static_cast<T>(means[c]), s = static_cast<T>(stds[c]);
    for (index_t i = 0; i < hw; ++i) dst[i] = (src[i] - m) / s;
  }
  return out;
}

template <typename T>
struct ResidualBlock {
  Conv2dLayer<T> conv1, conv2;

  static ResidualBlock make(index_t ch, Rng& rng) {
    ResidualBlock b;
    b.conv1 = Conv2dLayer<T>::make(ch, ch, 3, 1, 1, rng);
    b.conv2 = Conv2dLayer<T>::make(ch, ch, 3, 1, 1, rng);
    return b;
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    return relu(add(x, conv2(relu(conv1(x)))));
  }

  void register_params(ParamList<T>& out, const std::string& prefix) {
    conv1.register_params(out, prefix + ".c1");
    conv2.register_params(out, prefix + ".c2");
  }
};

// Spatial pyramid pooling: mean pools to 1x1 / 2x2 / 4x4 / 8x8 grids, 1x1
// projections, resize back, concat with the base map and fuse to cf
// channels. The fuse conv pads by replication so constant inputs stay
// constant through the whole block.
template <typename T>
struct SppBlock {
  std::array<Conv2dLayer<T>, 4> branch;
  Conv2dLayer<T> fuse;
  index_t in_ch = 0, out_ch = 0;
  static constexpr std::array<index_t, 4> kGrids{1, 2, 4, 8};

  static SppBlock make(index_t in_ch, index_t out_ch, Rng& rng) {
    SppBlock s;
    s.in_ch = in_ch;
    s.out_ch = out_ch;
    index_t bc = std::max<index_t>(1, out_ch / 4);
    for (auto& b : s.branch) b = Conv2dLayer<T>::make(in_ch, bc, 1, 1, 0, rng);
    s.fuse = Conv2dLayer<T>::make(in_ch + 4 * bc, out_ch, 3, 1, 1, rng, PadMode::kReplicate);
    return s;
  }

  Tensor<T> operator()(const Tensor<T>& base) const {
    check(base.rank() == 4 && base.dim(1) == in_ch, "spp_fuse: expected [1,", in_ch, ",h,w], got ",
          shape_str(base.shape()));
    index_t h = base.dim(2), w = base.dim(3);
    check(h >= 4 && w >= 4, "spp_fuse: spatial dims ", h, "x", w,
          " too small for the coarsest pool");
    std::vector<Tensor<T>> parts{base};
    for (size_t k = 0; k < branch.size(); ++k) {
      // pyramid grids clamp to the map size so small crops keep four branches
      index_t g = std::min({kGrids[k], h, w});
      Tensor<T> pooled = adaptive_avg_pool2d(base, g, g);
      Tensor<T> proj = branch[k](pooled);
      parts.push_back(bilinear_resize2d(proj, h, w, /*align_corners=*/true));
    }
    return fuse(concat_axis(parts, 1));
  }

  void register_params(ParamList<T>& out, const std::string& prefix) {
    for (size_t k = 0; k < branch.size(); ++k)
      branch[k].register_params(out, prefix + ".b" + std::to_string(k));
    fuse.register_params(out, prefix + ".fuse");
  }
};

// Weight-sharing siamese extractor: stride-2 stem, residual blocks, one more
// stride-2 stage, residual blocks, SPP fusion. Produces [1,cf,H/s,W/s].
template <typename T>
struct FeatureExtractor {
  index_t cf = 32, s = 4;
  bool use_instance_norm = false;
  Conv2dLayer<T> stem;
  std::array<ResidualBlock<T>, 2> res_a;
  Conv2dLayer<T> stage2;
  std::array<ResidualBlock<T>, 2> res_b;
  SppBlock<T> spp;

  static FeatureExtractor make(index_t cf, index_t s, bool inst_norm, Rng& rng) {
    check(s == 4, "feature extractor downsample factor must be 4, got ", s);
    check(cf >= 8 && cf % 4 == 0, "feature channels must be a multiple of 4 and >= 8, got ", cf);
    FeatureExtractor f;
    f.cf = cf;
    f.s = s;
    f.use_instance_norm = inst_norm;
    index_t mid = cf / 2;
    f.stem = Conv2dLayer<T>::make(3, mid, 3, 2, 1, rng);
    for (auto& r : f.res_a) r = ResidualBlock<T>::make(mid, rng);
    f.stage2 = Conv2dLayer<T>::make(mid, cf, 3, 2, 1, rng);
    for (auto& r : f.res_b) r = ResidualBlock<T>::make(cf, rng);
    f.spp = SppBlock<T>::make(cf, cf, rng);
    return f;
  }

  // Pre-SPP features; exactly shift-equivariant away from the borders.
  Tensor<T> trunk(const Tensor<T>& img) const {
    check(img.rank() == 4 && img.dim(0) == 1 && img.dim(1) == 3,
          "extract expects [1,3,H,W], got ", shape_str(img.shape()));
    index_t h = img.dim(2), w = img.dim(3);
    check(h % s == 0 && w % s == 0, "input ", h, "x", w, " not divisible by the downsample factor ",
          s, "; pad to ", ceil_div(h, s) * s, "x", ceil_div(w, s) * s);
    Tensor<T> x = relu(stem(img));
    if (use_instance_norm) x = instance_norm(x);
    for (const auto& r : res_a) x = r(x);
    x = relu(stage2(x));
    if (use_instance_norm) x = instance_norm(x);
    for (const auto& r : res_b) x = r(x);
    return x;
  }

  Tensor<T> extract(const Tensor<T>& img) const { return spp(trunk(img)); }

  std::pair<Tensor<T>, Tensor<T>> extract_pair(const Tensor<T>& left,
                                               const Tensor<T>& right) const {
    check(left.shape() == right.shape(), "stereo pair shapes differ: ", shape_str(left.shape()),
          " vs ", shape_str(right.shape()));
    return {extract(left), extract(right)};
  }

  void register_params(ParamList<T>& out, const std::string& prefix) {
    stem.register_params(out, prefix + ".stem");
    for (size_t i = 0; i < res_a.size(); ++i)
      res_a[i].register_params(out, prefix + ".ra" + std::to_string(i));
    stage2.register_params(out, prefix + ".stage2");
    for (size_t i = 0; i < res_b.size(); ++i)
      res_b[i].register_params(out, prefix + ".rb" + std::to_string(i));
    spp.register_params(out, prefix + ".spp");
  }
};

}  // namespace srh
