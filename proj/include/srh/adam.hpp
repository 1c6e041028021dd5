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

#include <vector>

#include "srh/tensor.hpp"

namespace srh {

// Adam with bias correction. Moment buffers mirror the parameter list
// passed at construction; the step counter advances once per update.
template <typename T>
struct AdamState {
  T lr = T(1e-3);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
  std::int64_t step = 0;
  std::vector<tracked_vector<T>> m;
  std::vector<tracked_vector<T>> v;

  AdamState() = default;
  AdamState(const std::vector<Tensor<T>>& params, T lr_, T b1 = T(0.9), T b2 = T(0.999),
            T eps_ = T(1e-8))
      : lr(lr_), beta1(b1), beta2(b2), eps(eps_) {
    for (const auto& p : params) {
      m.emplace_back(static_cast<size_t>(p.numel()), T(0));
      v.emplace_back(static_cast<size_t>(p.numel()), T(0));
    }
  }
};

template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState<T>& state) {
  check(params.size() == state.m.size(), "adam_step: state built for ", state.m.size(),
        " parameters, got ", params.size());
  state.step += 1;
  const T b1t = T(1) - std::pow(state.beta1, static_cast<T>(state.step));
  const T b2t = T(1) - std::pow(state.beta2, static_cast<T>(state.step));
  for (size_t k = 0; k < params.size(); ++k) {
    Tensor<T>& p = params[k];
    check(static_cast<size_t>(p.numel()) == state.m[k].size(),
          "adam_step: parameter ", k, " shape changed since state creation");
    if (!p.has_grad()) continue;  // zero gradient: moments decay but params need no read
    const T* g = p.grad_data();
    T* mp = state.m[k].data();
    T* vp = state.v[k].data();
    T* pp = p.data();
    for (index_t i = 0; i < p.numel(); ++i) {
      mp[i] = state.beta1 * mp[i] + (T(1) - state.beta1) * g[i];
      vp[i] = state.beta2 * vp[i] + (T(1) - state.beta2) * g[i] * g[i];
      T mhat = mp[i] / b1t;
      T vhat = vp[i] / b2t;
      pp[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace srh
