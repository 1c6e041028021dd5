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

#include <iterator>

#include "srh/ops.hpp"

namespace srh {

// Disparity search range: d_max full-resolution pixels searched as
// L = ceil(d_max / s) integer shifts at feature resolution.
struct DisparityRange {
  index_t d_max = 192;
  index_t s = 4;
  index_t levels = 48;

  DisparityRange() = default;
  DisparityRange(index_t d_max_, index_t s_) : d_max(d_max_), s(s_), levels(ceil_div(d_max_, s_)) {
    check(d_max >= 1 && s >= 1, "disparity range requires d_max >= 1 and s >= 1");
    check(levels >= 1 && levels * s >= d_max, "bad disparity range");
  }
};

// One disparity level of the cost sequence: [F_L, shifted F_R], left first.
template <typename T>
struct CostMap {
  index_t level = 0;
  Tensor<T> values;  // [1, 2*cf, h, w]
};

// out[.,.,v,u] = F_R[.,.,v,u-i]; columns u < i are zero.
template <typename T>
Tensor<T> warp_features(const Tensor<T>& fr, index_t level, index_t num_levels) {
  check(level >= 0 && level < num_levels, "warp level ", level, " outside [0,", num_levels, ")");
  return shift_columns(fr, level);
}

template <typename T>
CostMap<T> build_cost_map(const Tensor<T>& fl, const Tensor<T>& fr_warped, index_t level) {
  check(fl.shape() == fr_warped.shape(), "cost map: feature shapes differ: ",
        shape_str(fl.shape()), " vs ", shape_str(fr_warped.shape()));
  return {level, concat_axis(fl, fr_warped, 1)};
}

// Lazily yields C(0..L-1); at most one map is alive beyond what the
// consumer holds, so a traversal never materializes the 4D volume.
template <typename T>
class CostSequence {
 public:
  CostSequence(Tensor<T> fl, Tensor<T> fr, DisparityRange range)
      : fl_(std::move(fl)), fr_(std::move(fr)), range_(range) {
    check(fl_.shape() == fr_.shape(), "cost sequence: feature shapes differ");
  }

  index_t size() const { return range_.levels; }
  const DisparityRange& range() const { return range_; }

  CostMap<T> at(index_t level) const {
    return build_cost_map(fl_, warp_features(fr_, level, range_.levels), level);
  }

  class Iterator {
   public:
    using value_type = CostMap<T>;
    using difference_type = std::ptrdiff_t;
    using iterator_category = std::input_iterator_tag;

    Iterator(const CostSequence* seq, index_t i) : seq_(seq), i_(i) {}
    CostMap<T> operator*() const { return seq_->at(i_); }
    Iterator& operator++() {
      ++i_;
      return *this;
    }
    bool operator!=(const Iterator& o) const { return i_ != o.i_; }
    bool operator==(const Iterator& o) const { return i_ == o.i_; }

   private:
    const CostSequence* seq_;
    index_t i_;
  };

  Iterator begin() const { return Iterator(this, 0); }
  Iterator end() const { return Iterator(this, range_.levels); }

 private:
  Tensor<T> fl_, fr_;
  DisparityRange range_;
};

}  // namespace srh
