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

#include <cassert>
#include <string>
#include <utility>
#include <vector>

#include "srh/init.hpp"
#include "srh/ops.hpp"

namespace srh {

template <typename T>
using ParamList = std::vector<std::pair<std::string, Tensor<T>>>;

template <typename T>
struct Conv2dLayer {
  Tensor<T> weight, bias;
  index_t stride = 1, pad = 1;
  PadMode mode = PadMode::kZero;

  static Conv2dLayer make(index_t ci, index_t co, index_t k, index_t stride, index_t pad, Rng& rng,
                          PadMode mode = PadMode::kZero) {
    Conv2dLayer l;
    l.weight = Tensor<T>::zeros({co, ci, k, k}, true);
    init_conv_weight(l.weight, rng, ci * k * k);
    l.bias = Tensor<T>::zeros({co}, true);
    l.stride = stride;
    l.pad = pad;
    l.mode = mode;
    return l;
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    return conv2d(x, weight, bias, stride, pad, mode);
  }

  void register_params(ParamList<T>& out, const std::string& prefix) {
    out.emplace_back(prefix + ".w", weight);
    out.emplace_back(prefix + ".b", bias);
  }
};

template <typename T>
struct ConvTranspose2dLayer {
  Tensor<T> weight, bias;  // [Cin, Cout, k, k]
  index_t stride = 2, pad = 1;

  static ConvTranspose2dLayer make(index_t ci, index_t co, index_t k, index_t stride, index_t pad,
                                   Rng& rng) {
    ConvTranspose2dLayer l;
    l.weight = Tensor<T>::zeros({ci, co, k, k}, true);
    init_conv_weight(l.weight, rng, ci * k * k);
    l.bias = Tensor<T>::zeros({co}, true);
    l.stride = stride;
    l.pad = pad;
    return l;
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    return conv_transpose2d(x, weight, bias, stride, pad);
  }

  void register_params(ParamList<T>& out, const std::string& prefix) {
    out.emplace_back(prefix + ".w", weight);
    out.emplace_back(prefix + ".b", bias);
  }
};

// Convolutional GRU cell. All three gates read the channel-concatenation of
// input and hidden state; the candidate reads [x; r*h]. 3x3 kernels.
template <typename T>
struct ConvGRUCell {
  Conv2dLayer<T> conv_z, conv_r, conv_h;
  index_t in_ch = 0, hidden_ch = 0;

  static ConvGRUCell make(index_t in_ch, index_t hidden_ch, Rng& rng) {
    ConvGRUCell c;
    c.in_ch = in_ch;
    c.hidden_ch = hidden_ch;
    c.conv_z = Conv2dLayer<T>::make(in_ch + hidden_ch, hidden_ch, 3, 1, 1, rng);
    c.conv_r = Conv2dLayer<T>::make(in_ch + hidden_ch, hidden_ch, 3, 1, 1, rng);
    c.conv_h = Conv2dLayer<T>::make(in_ch + hidden_ch, hidden_ch, 3, 1, 1, rng);
    return c;
  }

  void register_params(ParamList<T>& out, const std::string& prefix) {
    conv_z.register_params(out, prefix + ".z");
    conv_r.register_params(out, prefix + ".r");
    conv_h.register_params(out, prefix + ".h");
  }
};

// z = sigmoid(conv([x;h])); r = sigmoid(conv([x;h]));
// hcand = tanh(conv([x; r*h])); h' = (1-z)*h + z*hcand
template <typename T>
Tensor<T> gru_step(const ConvGRUCell<T>& cell, const Tensor<T>& x, const Tensor<T>& h) {
  check(x.rank() == 4 && h.rank() == 4, "gru_step expects rank-4 tensors");
  check(x.dim(2) == h.dim(2) && x.dim(3) == h.dim(3),
        "gru_step: spatial mismatch between input ", shape_str(x.shape()), " and state ",
        shape_str(h.shape()));
  check(x.dim(1) == cell.in_ch && h.dim(1) == cell.hidden_ch,
        "gru_step: channel mismatch (cell expects ", cell.in_ch, "+", cell.hidden_ch, ", got ",
        x.dim(1), "+", h.dim(1), ")");
  Tensor<T> xh = concat_axis(x, h, 1);
  Tensor<T> z = sigmoid(cell.conv_z(xh));
  Tensor<T> r = sigmoid(cell.conv_r(xh));
#ifndef NDEBUG
  for (index_t i = 0; i < z.numel(); ++i) {
    assert(z.data()[i] >= T(0) && z.data()[i] <= T(1));
    assert(r.data()[i] >= T(0) && r.data()[i] <= T(1));
  }
#endif
  Tensor<T> xrh = concat_axis(x, mul(r, h), 1);
  Tensor<T> hcand = tanh(cell.conv_h(xrh));
  Tensor<T> one_minus_z = add_scalar(scale(z, T(-1)), T(1));
  return add(mul(one_minus_z, h), mul(z, hcand));
}

// Per-channel instance normalization over the spatial extent.
template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, T eps = T(1e-5)) {
  check(x.rank() == 4, "instance_norm expects [N,C,H,W]");
  T inv_hw = T(1) / static_cast<T>(x.dim(2) * x.dim(3));
  Tensor<T> mean = scale(sum_axes(x, {2, 3}, true), inv_hw);
  Tensor<T> centered = sub(x, mean);
  Tensor<T> var = scale(sum_axes(mul(centered, centered), {2, 3}, true), inv_hw);
  return mul(centered, rsqrt(add_scalar(var, eps)));
}

}  // namespace srh
