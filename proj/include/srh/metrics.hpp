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
#include <ostream>

#include "srh/data.hpp"

namespace srh {

enum class Region { kAll, kNoc };

inline const char* region_name(Region r) { return r == Region::kAll ? "all" : "noc"; }

struct MetricsReport {
  Region region = Region::kAll;
  index_t n = 0;                     // pixels in the reduction
  double epe = 0;                    // mean |error| in pixels
  std::array<double, 5> err_rate{};  // fraction with |error| > n px, n = 1..5
  double d1 = 0;                     // official rule: > 3 px AND > 5% of gt
};

// Per-definition reductions over the region's valid pixels. Noc restricts
// to the non-occluded subset and requires an occlusion mask.
inline MetricsReport evaluate(const FloatMap& pred, const StereoSample& gt, Region region) {
  check(pred.h == gt.h && pred.w == gt.w, "evaluate: prediction ", pred.h, "x", pred.w,
        " vs ground truth ", gt.h, "x", gt.w);
  if (region == Region::kNoc)
    check(gt.has_noc(), "evaluate: Noc region requested but the sample has no occlusion mask");
  MetricsReport r;
  r.region = region;
  double sum = 0;
  std::array<index_t, 5> bad{};
  index_t d1_bad = 0;
  for (index_t i = 0; i < gt.h * gt.w; ++i) {
    if (!gt.valid[static_cast<size_t>(i)]) continue;
    if (region == Region::kNoc && !gt.noc[static_cast<size_t>(i)]) continue;
    double g = gt.disp[static_cast<size_t>(i)];
    double e = std::abs(double(pred.v[static_cast<size_t>(i)]) - g);
    sum += e;
    for (int k = 0; k < 5; ++k)
      if (e > double(k + 1)) ++bad[static_cast<size_t>(k)];
    if (e > 3.0 && e > 0.05 * g) ++d1_bad;
    ++r.n;
  }
  check(r.n >= 1, "evaluate: empty region (no valid pixels)");
  r.epe = sum / double(r.n);
  for (int k = 0; k < 5; ++k) r.err_rate[static_cast<size_t>(k)] = double(bad[size_t(k)]) / double(r.n);
  r.d1 = double(d1_bad) / double(r.n);
  return r;
}

inline void print_report(std::ostream& os, const MetricsReport& r) {
  os << "region=" << region_name(r.region) << " n=" << r.n << " epe=" << r.epe;
  for (int k = 0; k < 5; ++k) os << " err_gt_" << (k + 1) << "px=" << r.err_rate[size_t(k)];
  os << " d1=" << r.d1 << "\n";
}

inline void print_report_csv_header(std::ostream& os) {
  os << "region,n,epe,err_gt_1px,err_gt_2px,err_gt_3px,err_gt_4px,err_gt_5px,d1\n";
}

inline void print_report_csv(std::ostream& os, const MetricsReport& r) {
  os << region_name(r.region) << "," << r.n << "," << r.epe;
  for (int k = 0; k < 5; ++k) os << "," << r.err_rate[size_t(k)];
  os << "," << r.d1 << "\n";
}

}  // namespace srh
