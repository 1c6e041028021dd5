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

#include <chrono>
#include <ostream>

#include "srh/config.hpp"

namespace srh {

enum class SweepAxis { kDMax, kResolution };

struct ProfilePoint {
  index_t x = 0;               // d_max, or image height (width = 2 * height)
  std::int64_t peak_bytes = 0;  // peak activation bytes above the pre-run baseline
  double wall_ms = 0;
};

struct ProfileReport {
  SweepAxis axis = SweepAxis::kDMax;
  bool streaming = true;
  std::vector<ProfilePoint> points;
};

// Peak activation bytes and wall time per frame across a sweep. Activation
// accounting is the instrumented tensor allocator: the peak is measured
// above the baseline captured after weights and inputs exist.
template <typename T>
ProfileReport profile_run(SrhNet<T>& net, SweepAxis axis, const std::vector<index_t>& points,
                          index_t base_h, index_t base_w, index_t base_dmax, bool streaming,
                          std::uint64_t seed) {
  check(!points.empty(), "profile: empty sweep");
  for (size_t i = 1; i < points.size(); ++i)
    check(points[i] > points[i - 1], "profile: sweep points must be strictly increasing");
  ProfileReport report;
  report.axis = axis;
  report.streaming = streaming;
  for (index_t x : points) {
    index_t h = base_h, w = base_w, d = base_dmax;
    if (axis == SweepAxis::kDMax)
      d = x;
    else {
      h = x;
      w = 2 * x;
    }
    check(h % 16 == 0 && w % 16 == 0, "profile: geometry ", h, "x", w, " must be divisible by 16");
    Rng rng(seed);
    Tensor<T> left = Tensor<T>::zeros({1, 3, h, w});
    Tensor<T> right = Tensor<T>::zeros({1, 3, h, w});
    fill_uniform(left, rng, 0.0, 1.0);
    fill_uniform(right, rng, 0.0, 1.0);
    Tensor<T> ln = normalize_image(left, net.config().means, net.config().stds);
    Tensor<T> rn = normalize_image(right, net.config().means, net.config().stds);

    std::int64_t baseline = MemoryStats::current_bytes();
    MemoryStats::reset_peak();
    auto t0 = std::chrono::steady_clock::now();
    DisparityMap<T> out =
        streaming ? net.infer_streaming(ln, rn, d) : net.infer_batch(ln, rn, d);
    auto t1 = std::chrono::steady_clock::now();
    check(all_finite(out.values), "profile: non-finite disparity output");
    ProfilePoint p;
    p.x = x;
    p.peak_bytes = MemoryStats::peak_bytes() - baseline;
    p.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    report.points.push_back(p);
  }
  return report;
}

inline void print_profile(std::ostream& os, const ProfileReport& r) {
  os << "axis=" << (r.axis == SweepAxis::kDMax ? "d_max" : "resolution")
     << " mode=" << (r.streaming ? "streaming" : "eager") << "\n";
  for (const auto& p : r.points)
    os << "point=" << p.x << " peak_bytes=" << p.peak_bytes << " wall_ms=" << p.wall_ms << "\n";
}

}  // namespace srh
