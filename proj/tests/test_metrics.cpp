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

#include <gtest/gtest.h>

#include "srh/init.hpp"
#include "srh/metrics.hpp"

namespace {

// independent scalar-loop reference; must not share code with evaluate()
struct RefMetrics {
  double epe;
  double rate[5];
  double d1;
  srh::index_t n;
};

RefMetrics reference_eval(const srh::FloatMap& pred, const srh::StereoSample& gt, bool noc_only) {
  RefMetrics r{0, {0, 0, 0, 0, 0}, 0, 0};
  double acc = 0;
  srh::index_t bad[5] = {0, 0, 0, 0, 0}, d1c = 0;
  for (srh::index_t y = 0; y < gt.h; ++y) {
    for (srh::index_t x = 0; x < gt.w; ++x) {
      size_t i = size_t(y * gt.w + x);
      if (!gt.valid[i]) continue;
      if (noc_only && !gt.noc[i]) continue;
      double e = std::fabs(double(pred.v[i]) - double(gt.disp[i]));
      acc += e;
      for (int k = 1; k <= 5; ++k)
        if (e > k) ++bad[k - 1];
      if (e > 3.0 && e > 0.05 * double(gt.disp[i])) ++d1c;
      ++r.n;
    }
  }
  r.epe = acc / double(r.n);
  for (int k = 0; k < 5; ++k) r.rate[k] = double(bad[k]) / double(r.n);
  r.d1 = double(d1c) / double(r.n);
  return r;
}

srh::StereoSample random_gt(srh::Rng& rng, srh::index_t h, srh::index_t w, double max_d,
                            bool with_noc) {
  srh::StereoSample s;
  s.h = h;
  s.w = w;
  s.disp.resize(size_t(h * w));
  s.valid.resize(size_t(h * w));
  if (with_noc) s.noc.resize(size_t(h * w));
  for (size_t i = 0; i < s.disp.size(); ++i) {
    s.disp[i] = float(rng.uniform(0.5, max_d));
    s.valid[i] = rng.uniform() < 0.85 ? 1 : 0;
    if (with_noc) s.noc[i] = (s.valid[i] && rng.uniform() < 0.8) ? 1 : 0;
  }
  // guarantee nonempty regions
  s.valid[0] = 1;
  if (with_noc) s.noc[0] = 1;
  return s;
}

TEST(Evaluate, PerfectPrediction) {
  srh::Rng rng(1);
  auto gt = random_gt(rng, 6, 6, 20, true);
  srh::FloatMap pred(6, 6);
  for (size_t i = 0; i < pred.v.size(); ++i) pred.v[i] = gt.disp[i];
  for (auto region : {srh::Region::kAll, srh::Region::kNoc}) {
    auto r = srh::evaluate(pred, gt, region);
    EXPECT_DOUBLE_EQ(r.epe, 0.0);
    for (double rate : r.err_rate) EXPECT_DOUBLE_EQ(rate, 0.0);
    EXPECT_DOUBLE_EQ(r.d1, 0.0);
  }
}

TEST(Evaluate, UniformTwoPixelError) {
  srh::StereoSample gt;
  gt.h = gt.w = 4;
  gt.disp.assign(16, 10.0f);
  gt.valid.assign(16, 1);
  srh::FloatMap pred(4, 4, 12.0f);
  auto r = srh::evaluate(pred, gt, srh::Region::kAll);
  EXPECT_DOUBLE_EQ(r.epe, 2.0);
  EXPECT_DOUBLE_EQ(r.err_rate[0], 1.0);  // > 1 px
  EXPECT_DOUBLE_EQ(r.err_rate[1], 0.0);  // not > 2 px (strict)
  EXPECT_DOUBLE_EQ(r.err_rate[2], 0.0);
  EXPECT_DOUBLE_EQ(r.d1, 0.0);
}

TEST(Evaluate, MatchesScalarLoopOracle) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    srh::Rng rng(seed);
    auto gt = random_gt(rng, 8, 8, 24, true);
    srh::FloatMap pred(8, 8);
    for (auto& v : pred.v) v = float(rng.uniform(0.0, 24.0));
    for (auto region : {srh::Region::kAll, srh::Region::kNoc}) {
      auto got = srh::evaluate(pred, gt, region);
      auto want = reference_eval(pred, gt, region == srh::Region::kNoc);
      ASSERT_EQ(got.n, want.n);
      EXPECT_EQ(got.epe, want.epe);
      for (int k = 0; k < 5; ++k) EXPECT_EQ(got.err_rate[size_t(k)], want.rate[k]);
      EXPECT_EQ(got.d1, want.d1);
    }
  }
}

TEST(Evaluate, D1RequiresBothConditions) {
  // error of 4 px: > 3 px, but only > 5% of gt when gt < 80
  srh::StereoSample gt;
  gt.h = 1;
  gt.w = 2;
  gt.disp = {100.0f, 10.0f};
  gt.valid = {1, 1};
  srh::FloatMap pred(1, 2);
  pred.v = {104.0f, 14.0f};
  auto r = srh::evaluate(pred, gt, srh::Region::kAll);
  EXPECT_DOUBLE_EQ(r.d1, 0.5);           // only the gt=10 pixel counts
  EXPECT_DOUBLE_EQ(r.err_rate[2], 1.0);  // both exceed 3 px
}

TEST(Evaluate, RatesMonotoneNonincreasing) {
  for (std::uint64_t seed = 50; seed < 60; ++seed) {
    srh::Rng rng(seed);
    auto gt = random_gt(rng, 8, 8, 24, false);
    srh::FloatMap pred(8, 8);
    for (auto& v : pred.v) v = float(rng.uniform(0.0, 24.0));
    auto r = srh::evaluate(pred, gt, srh::Region::kAll);
    for (int k = 1; k < 5; ++k) EXPECT_LE(r.err_rate[size_t(k)], r.err_rate[size_t(k - 1)]);
  }
}

TEST(Evaluate, NocIsSubsetOfAll) {
  srh::Rng rng(77);
  auto gt = random_gt(rng, 10, 10, 24, true);
  srh::FloatMap pred(10, 10);
  for (auto& v : pred.v) v = float(rng.uniform(0.0, 24.0));
  auto all = srh::evaluate(pred, gt, srh::Region::kAll);
  auto noc = srh::evaluate(pred, gt, srh::Region::kNoc);
  EXPECT_LE(noc.n, all.n);
}

TEST(Evaluate, ErrorsOnEmptyOrMissingRegions) {
  srh::StereoSample gt;
  gt.h = gt.w = 2;
  gt.disp.assign(4, 5.0f);
  gt.valid.assign(4, 0);
  srh::FloatMap pred(2, 2, 5.0f);
  EXPECT_THROW(srh::evaluate(pred, gt, srh::Region::kAll), srh::ShapeError);
  gt.valid.assign(4, 1);
  EXPECT_THROW(srh::evaluate(pred, gt, srh::Region::kNoc), srh::ShapeError);  // no mask
  srh::FloatMap wrong(3, 2, 5.0f);
  EXPECT_THROW(srh::evaluate(wrong, gt, srh::Region::kAll), srh::ShapeError);
}

}  // namespace
