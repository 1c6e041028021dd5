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

#include <cstdint>
#include <random>

#include "srh/tensor.hpp"

namespace srh {

// Deterministic RNG wrapper. Distributions are implemented from raw bits so
// sampled sequences do not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t uniform_int(std::uint64_t n) { return n ? eng_() % n : 0; }

  double normal() {
    // Box-Muller; one sample per call keeps replay simple.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 eng_;
};

template <typename T>
void fill_uniform(Tensor<T>& t, Rng& rng, double lo, double hi) {
  T* p = t.data();
  for (index_t i = 0; i < t.numel(); ++i) p[i] = static_cast<T>(rng.uniform(lo, hi));
}

template <typename T>
void fill_normal(Tensor<T>& t, Rng& rng, double std_dev) {
  T* p = t.data();
  for (index_t i = 0; i < t.numel(); ++i) p[i] = static_cast<T>(rng.normal() * std_dev);
}

// Fan-in-scaled uniform init for conv weights [Co,Ci,kh,kw] (or the
// transposed [Ci,Co,kh,kw] layout, where fan-in is the first dim).
template <typename T>
void init_conv_weight(Tensor<T>& w, Rng& rng, index_t fan_in) {
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  fill_uniform(w, rng, -bound, bound);
}

}  // namespace srh
