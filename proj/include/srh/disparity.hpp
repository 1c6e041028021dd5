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

#include <limits>

#include "srh/ops.hpp"

namespace srh {

// Full-resolution sub-pixel disparity field, values in [0, D-1] pixels.
template <typename T>
struct DisparityMap {
  Tensor<T> values;  // [1,1,H,W]
  index_t d_max = 0;
};

// Stacks L aggregated [1,1,h,w] slices into a [1,D,H,W] volume: linear
// resampling from L to D levels along the disparity axis, then spatial
// bilinear upsampling (trilinear overall).
template <typename T>
Tensor<T> upsample_cost(const std::vector<Tensor<T>>& slices, index_t out_h, index_t out_w,
                        index_t d_levels) {
  check(!slices.empty(), "upsample_cost: no slices");
  index_t h = slices[0].dim(2), w = slices[0].dim(3);
  for (const auto& s : slices)
    check(s.rank() == 4 && s.dim(0) == 1 && s.dim(1) == 1 && s.dim(2) == h && s.dim(3) == w,
          "upsample_cost: inconsistent slice shape ", shape_str(s.shape()));
  check(out_h % h == 0 && out_w % w == 0, "upsample_cost: ", out_h, "x", out_w,
        " is not an integer multiple of the slice size ", h, "x", w);
  check(d_levels >= 1, "upsample_cost: bad disparity depth");
  Tensor<T> stacked = concat_axis(slices, 1);  // [1,L,h,w]
  Tensor<T> resampled = linear_resample_axis(stacked, 1, d_levels);
  return bilinear_resize2d(resampled, out_h, out_w, /*align_corners=*/true);
}

// Batch soft argmin over a [1,D,H,W] volume (fused op; ascending-order
// online reduction so the streaming path can reproduce it bit-for-bit).
template <typename T>
DisparityMap<T> soft_argmin_batch(const Tensor<T>& volume) {
  return {soft_argmin(volume), volume.dim(1)};
}

// One-pass soft argmin over a stream of per-level cost slices. Keeps a
// running max / normalizer / index-weighted sum per pixel; when the stream
// carries L feature-resolution slices but D output levels are wanted, a
// one-slice lookahead resamples the disparity axis inline. Live memory is a
// fixed number of slice-sized buffers regardless of D.
template <typename T>
class StreamingSoftArgmin {
 public:
  StreamingSoftArgmin(index_t levels_in, index_t d_levels, index_t out_h, index_t out_w)
      : levels_in_(levels_in), d_levels_(d_levels), out_h_(out_h), out_w_(out_w) {
    check(levels_in >= 1 && d_levels >= 1, "streaming soft argmin: bad level counts");
    index_t hw = out_h * out_w;
    m_.assign(hw, -std::numeric_limits<T>::infinity());
    z_.assign(hw, T(0));
    s_.assign(hw, T(0));
  }

  // Slices must arrive in ascending, contiguous level order.
  void push(index_t level, const Tensor<T>& slice) {
    check(level == next_in_, "streaming soft argmin: slice ", level, " out of order (expected ",
          next_in_, ")");
    check(slice.rank() == 4 && slice.dim(0) == 1 && slice.dim(1) == 1,
          "streaming soft argmin: slice must be [1,1,h,w]");
    check(out_h_ % slice.dim(2) == 0 && out_w_ % slice.dim(3) == 0,
          "streaming soft argmin: slice ", shape_str(slice.shape()),
          " does not divide the output size");
    prev_ = cur_;
    cur_ = slice;
    ++next_in_;
    emit_ready();
  }

  DisparityMap<T> finalize() {
    check(next_in_ == levels_in_, "streaming soft argmin: got ", next_in_, " of ", levels_in_,
          " slices");
    emit_ready();
    check(next_out_ == d_levels_, "streaming soft argmin: emitted ", next_out_, " of ", d_levels_,
          " levels");
    Tensor<T> out = Tensor<T>::zeros({1, 1, out_h_, out_w_});
    index_t hw = out_h_ * out_w_;
    for (index_t p = 0; p < hw; ++p) out.data()[p] = s_[p] / z_[p];
    return {out, d_levels_};
  }

 private:
  void emit_ready() {
    bool complete = next_in_ == levels_in_;
    while (next_out_ < d_levels_) {
      index_t i0, i1;
      T f;
      detail::lerp_coord<T>(next_out_, levels_in_, d_levels_, /*align=*/true, i0, i1, f);
      index_t have = next_in_ - 1;  // highest received level
      bool ready = complete || i1 <= have || (i0 <= have && f == T(0));
      if (!ready) break;
      const Tensor<T>& a = slice_for(i0);
      const Tensor<T>& b = (i1 <= have) ? slice_for(i1) : a;  // f == 0 here
      emit_level(next_out_, a, b, f);
      ++next_out_;
    }
  }

  const Tensor<T>& slice_for(index_t level) const {
    if (level == next_in_ - 1) return cur_;
    check(level == next_in_ - 2 && prev_.defined(),
          "streaming soft argmin: level ", level, " no longer buffered");
    return prev_;
  }

  void emit_level(index_t d, const Tensor<T>& a, const Tensor<T>& b, T f) {
    // identical interpolation arithmetic to linear_resample_axis
    Tensor<T> interp = Tensor<T>::zeros(a.shape());
    const T* ap = a.data();
    const T* bp = b.data();
    T* ip = interp.data();
    for (index_t j = 0; j < a.numel(); ++j) ip[j] = (T(1) - f) * ap[j] + f * bp[j];
    Tensor<T> full = (a.dim(2) == out_h_ && a.dim(3) == out_w_)
                         ? interp
                         : bilinear_resize2d(interp, out_h_, out_w_, /*align_corners=*/true);
    const T* cp = full.data();
    T idx = static_cast<T>(d);
    index_t hw = out_h_ * out_w_;
    for (index_t p = 0; p < hw; ++p) detail::softargmin_update(m_[p], z_[p], s_[p], -cp[p], idx);
  }

  index_t levels_in_, d_levels_, out_h_, out_w_;
  index_t next_in_ = 0, next_out_ = 0;
  Tensor<T> prev_, cur_;
  tracked_vector<T> m_, z_, s_;
};

// Mean smooth-L1 over valid pixels (Eq. 4 shape: x^2/2 below 1, x-0.5 above).
template <typename T>
Tensor<T> smooth_l1_loss(const DisparityMap<T>& pred, const Tensor<T>& gt_disp,
                         const Tensor<T>& valid_mask) {
  return smooth_l1_masked_mean(pred.values, gt_disp, valid_mask);
}

// Weighted two-stage loss: w1 * L(d_m) + w2 * L(d_f).
template <typename T>
Tensor<T> total_loss(const DisparityMap<T>& d_m, const DisparityMap<T>& d_f,
                     const Tensor<T>& gt_disp, const Tensor<T>& valid_mask, T w1, T w2) {
  check(w1 >= T(0) && w2 >= T(0) && w1 + w2 > T(0), "loss weights must be nonnegative, not both 0");
  Tensor<T> lm = smooth_l1_loss(d_m, gt_disp, valid_mask);
  Tensor<T> lf = smooth_l1_loss(d_f, gt_disp, valid_mask);
  return add(scale(lm, w1), scale(lf, w2));
}

}  // namespace srh
