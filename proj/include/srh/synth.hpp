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

#include "srh/data.hpp"
#include "srh/init.hpp"

namespace srh {

// Random-dot stereogram generator: fronto-parallel rectangles/ellipses at
// integer disparities over a textured background, right view produced by
// scatter-warping the left view with z-buffering, occlusions analytic.
struct SynthSpec {
  index_t h = 96, w = 96;
  index_t d_max = 16;
  index_t bg_disp = 1;        // background plane disparity (0 = untextured-depth edge case)
  int num_shapes = 3;
  double dot_density = 0.5;
  int num_textureless = 0;    // constant-intensity patches
  index_t textureless_size = 24;
  bool textureless_shapes = false;  // render shape interiors as constant fill
  double min_shape_frac = 0.2, max_shape_frac = 0.45;  // shape extent relative to min(h,w)
};

inline StereoSample synth_rds(std::uint64_t seed, const SynthSpec& spec) {
  check(spec.h >= 8 && spec.w >= 8, "synth: image too small");
  check(spec.bg_disp >= 0 && spec.bg_disp < spec.d_max, "synth: background disparity ",
        spec.bg_disp, " outside [0, d_max)");
  Rng rng(seed);
  const index_t h = spec.h, w = spec.w;

  StereoSample s;
  s.h = h;
  s.w = w;
  s.provenance = "synth:" + std::to_string(seed);

  // disparity layers: background plane, then shapes painted near-to-far
  // ordering by painting in ascending disparity (larger disparity = nearer,
  // painted last so it wins)
  std::vector<float> disp(static_cast<size_t>(h * w), float(spec.bg_disp));
  struct Layer {
    index_t d;
    bool ellipse;
    index_t cy, cx, ry, rx;
  };
  std::vector<Layer> layers;
  for (int k = 0; k < spec.num_shapes; ++k) {
    Layer l;
    index_t span = std::min(h, w);
    index_t rmin = std::max<index_t>(2, index_t(spec.min_shape_frac * span / 2));
    index_t rmax = std::max<index_t>(rmin + 1, index_t(spec.max_shape_frac * span / 2));
    l.ry = rmin + index_t(rng.uniform_int(rmax - rmin));
    l.rx = rmin + index_t(rng.uniform_int(rmax - rmin));
    l.cy = l.ry + index_t(rng.uniform_int(std::max<index_t>(1, h - 2 * l.ry)));
    l.cx = l.rx + index_t(rng.uniform_int(std::max<index_t>(1, w - 2 * l.rx)));
    index_t lo = spec.bg_disp + 1;
    check(lo < spec.d_max, "synth: no room for shapes above the background disparity");
    l.d = lo + index_t(rng.uniform_int(spec.d_max - lo));
    l.ellipse = rng.uniform() < 0.5;
    layers.push_back(l);
  }
  std::sort(layers.begin(), layers.end(), [](const Layer& a, const Layer& b) { return a.d < b.d; });
  std::vector<float> fill(static_cast<size_t>(h * w), -1.f);  // constant-fill intensity, -1 = dots
  index_t shape_idx = 0;
  for (const Layer& l : layers) {
    check(l.d < spec.d_max, "synth: layer disparity ", l.d, " exceeds d_max");
    float fv = shape_idx++ % 2 ? 0.65f : 0.35f;
    for (index_t y = std::max<index_t>(0, l.cy - l.ry); y < std::min(h, l.cy + l.ry); ++y)
      for (index_t x = std::max<index_t>(0, l.cx - l.rx); x < std::min(w, l.cx + l.rx); ++x) {
        if (l.ellipse) {
          double dy = double(y - l.cy) / double(l.ry), dx = double(x - l.cx) / double(l.rx);
          if (dy * dy + dx * dx > 1.0) continue;
        }
        disp[static_cast<size_t>(y * w + x)] = float(l.d);
        if (spec.textureless_shapes) fill[static_cast<size_t>(y * w + x)] = fv;
      }
  }

  // left view: random dots with a little intensity jitter; constant-fill
  // regions carry no matching signal of their own
  std::vector<float> left(static_cast<size_t>(h * w));
  for (size_t i = 0; i < left.size(); ++i) {
    bool bright = rng.uniform() < spec.dot_density;
    float dot = float((bright ? 0.70 : 0.05) + 0.25 * rng.uniform());
    left[i] = fill[i] >= 0.f ? fill[i] : dot;
  }
  // textureless patches keep the underlying disparity but kill the signal
  for (int k = 0; k < spec.num_textureless; ++k) {
    index_t sz = std::min({spec.textureless_size, h, w});
    index_t y0 = index_t(rng.uniform_int(h - sz + 1));
    index_t x0 = index_t(rng.uniform_int(w - sz + 1));
    for (index_t y = y0; y < y0 + sz; ++y)
      for (index_t x = x0; x < x0 + sz; ++x) left[static_cast<size_t>(y * w + x)] = 0.5f;
  }

  // right view by scatter with z-buffer; occlusion where a nearer surface
  // claims the target column (or the target falls off-frame)
  std::vector<float> right(static_cast<size_t>(h * w));
  std::vector<std::uint8_t> occluded(static_cast<size_t>(h * w), 0);
  std::vector<index_t> winner(static_cast<size_t>(w));
  std::vector<float> windisp(static_cast<size_t>(w));
  for (index_t y = 0; y < h; ++y) {
    std::fill(winner.begin(), winner.end(), index_t(-1));
    std::fill(windisp.begin(), windisp.end(), -1.f);
    for (index_t u = 0; u < w; ++u) {
      float d = disp[static_cast<size_t>(y * w + u)];
      index_t target = u - index_t(d);
      if (target < 0) continue;
      if (d > windisp[static_cast<size_t>(target)]) {
        windisp[static_cast<size_t>(target)] = d;
        winner[static_cast<size_t>(target)] = u;
      }
    }
    for (index_t u = 0; u < w; ++u) {
      float d = disp[static_cast<size_t>(y * w + u)];
      index_t target = u - index_t(d);
      bool visible = target >= 0 && winner[static_cast<size_t>(target)] == u;
      if (!visible) occluded[static_cast<size_t>(y * w + u)] = 1;
    }
    for (index_t v = 0; v < w; ++v) {
      if (winner[static_cast<size_t>(v)] >= 0) {
        right[static_cast<size_t>(y * w + v)] =
            left[static_cast<size_t>(y * w + winner[static_cast<size_t>(v)])];
      } else {
        // disoccluded: content visible only in the right view
        bool bright = rng.uniform() < spec.dot_density;
        right[static_cast<size_t>(y * w + v)] = float((bright ? 0.70 : 0.05) + 0.25 * rng.uniform());
      }
    }
  }

  s.left.resize(static_cast<size_t>(3 * h * w));
  s.right.resize(static_cast<size_t>(3 * h * w));
  for (index_t c = 0; c < 3; ++c) {
    std::copy(left.begin(), left.end(), s.left.begin() + c * h * w);
    std::copy(right.begin(), right.end(), s.right.begin() + c * h * w);
  }
  s.disp = std::move(disp);
  s.valid.resize(s.disp.size());
  s.noc.resize(s.disp.size());
  for (size_t i = 0; i < s.disp.size(); ++i) {
    s.valid[i] = (s.disp[i] > 0.f && s.disp[i] < float(spec.d_max)) ? 1 : 0;
    s.noc[i] = (s.valid[i] && !occluded[i]) ? 1 : 0;
  }
  return s;
}

inline std::vector<StereoSample> synth_dataset(std::uint64_t seed, int count,
                                               const SynthSpec& spec) {
  std::vector<StereoSample> out;
  for (int i = 0; i < count; ++i)
    out.push_back(synth_rds(seed + static_cast<std::uint64_t>(i) * 0x51ed2701, spec));
  return out;
}

}  // namespace srh
