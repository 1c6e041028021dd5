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

#include <numeric>

#include "oracles.hpp"
#include "srh/aggregation.hpp"

using oracle::random_tensor;
using srh::Tensor;

namespace {

srh::ConvGRUCell<double> make_cell(srh::index_t in_ch, srh::index_t hid, std::uint64_t seed) {
  srh::Rng rng(seed);
  return srh::ConvGRUCell<double>::make(in_ch, hid, rng);
}

TEST(GruStep, UpdateGateLimits) {
  auto cell = make_cell(4, 4, 1);
  srh::Rng rng(2);
  auto x = random_tensor({1, 4, 6, 6}, rng);
  auto h = random_tensor({1, 4, 6, 6}, rng);

  // z -> 0 via a large negative update-gate bias: h' stays h
  for (srh::index_t i = 0; i < cell.conv_z.bias.numel(); ++i) cell.conv_z.bias.data()[i] = -30.0;
  auto keep = srh::gru_step(cell, x, h);
  EXPECT_LT(oracle::max_abs_diff(keep, h), 1e-6);

  // z -> 1: h' becomes the candidate tanh(conv([x; r*h]))
  for (srh::index_t i = 0; i < cell.conv_z.bias.numel(); ++i) cell.conv_z.bias.data()[i] = 30.0;
  auto replace = srh::gru_step(cell, x, h);
  auto xh = srh::concat_axis(x, h, 1);
  auto r = srh::sigmoid(cell.conv_r(xh));
  auto cand = srh::tanh(cell.conv_h(srh::concat_axis(x, srh::mul(r, h), 1)));
  EXPECT_LT(oracle::max_abs_diff(replace, cand), 1e-6);
}

TEST(GruStep, RejectsShapeMismatch) {
  auto cell = make_cell(4, 4, 3);
  auto x = Tensor<double>::zeros({1, 4, 6, 6});
  EXPECT_THROW(srh::gru_step(cell, x, Tensor<double>::zeros({1, 4, 5, 6})), srh::ShapeError);
  EXPECT_THROW(srh::gru_step(cell, x, Tensor<double>::zeros({1, 3, 6, 6})), srh::ShapeError);
}

TEST(GruStep, GradientThroughThreeChainedSteps) {
  auto cell = make_cell(4, 4, 4);
  srh::Rng rng(5);
  oracle::GradCheck gc;
  gc.inputs = {random_tensor({1, 4, 6, 6}, rng), random_tensor({1, 4, 6, 6}, rng),
               random_tensor({1, 4, 6, 6}, rng)};
  gc.op = [&cell](const auto& in) {
    auto h = Tensor<double>::zeros({1, 4, 6, 6});
    for (const auto& x : in) h = srh::gru_step(cell, x, h);
    return h;
  };
  gc.projection = random_tensor({1, 4, 6, 6}, rng);
  EXPECT_LT(gc.rel_err_directional(rng), 1e-4);
}

TEST(GruStep, BoundednessAndConvexity) {
  auto cell = make_cell(4, 4, 6);
  srh::Rng rng(7);
  auto x = random_tensor({1, 4, 6, 6}, rng, -2.0, 2.0);
  auto h = random_tensor({1, 4, 6, 6}, rng, -0.9, 0.9);
  auto xh = srh::concat_axis(x, h, 1);
  auto z = srh::sigmoid(cell.conv_z(xh));
  auto r = srh::sigmoid(cell.conv_r(xh));
  for (srh::index_t i = 0; i < z.numel(); ++i) {
    EXPECT_GT(z.data()[i], 0.0);
    EXPECT_LT(z.data()[i], 1.0);
    EXPECT_GT(r.data()[i], 0.0);
    EXPECT_LT(r.data()[i], 1.0);
  }
  auto cand = srh::tanh(cell.conv_h(srh::concat_axis(x, srh::mul(r, h), 1)));
  auto hp = srh::gru_step(cell, x, h);
  for (srh::index_t i = 0; i < hp.numel(); ++i) {
    double lo = std::min(h.data()[i], cand.data()[i]);
    double hi = std::max(h.data()[i], cand.data()[i]);
    EXPECT_GE(hp.data()[i], lo - 1e-12);
    EXPECT_LE(hp.data()[i], hi + 1e-12);
  }
}

TEST(Hourglass, OutputShapeMatchesInput) {
  srh::Rng rng(8);
  auto hg = srh::RecurrentHourglass<double>::make(32, 48, 64, rng);
  auto x = random_tensor({1, 32, 16, 24}, rng);
  auto sm = Tensor<double>::zeros({1, 48, 8, 12});
  auto sb = Tensor<double>::zeros({1, 64, 4, 6});
  auto y = hg.step(x, sm, sb);
  EXPECT_EQ(y.shape(), x.shape());
  EXPECT_EQ(sm.shape(), (srh::Shape{1, 48, 8, 12}));
  EXPECT_EQ(sb.shape(), (srh::Shape{1, 64, 4, 6}));
  EXPECT_THROW(hg.step(random_tensor({1, 32, 6, 24}, rng), sm, sb), srh::ShapeError);
}

TEST(Hourglass, ZeroInZeroOutWithZeroBiases) {
  srh::Rng rng(9);
  auto hg = srh::RecurrentHourglass<double>::make(8, 12, 16, rng);
  // biases are zero-initialized already; zero input and zero states stay zero
  auto x = Tensor<double>::zeros({1, 8, 8, 8});
  auto sm = Tensor<double>::zeros({1, 12, 4, 4});
  auto sb = Tensor<double>::zeros({1, 16, 2, 2});
  auto y = hg.step(x, sm, sb);
  for (srh::index_t i = 0; i < y.numel(); ++i) EXPECT_DOUBLE_EQ(y.data()[i], 0.0);
  for (srh::index_t i = 0; i < sm.numel(); ++i) EXPECT_DOUBLE_EQ(sm.data()[i], 0.0);
}

TEST(Hourglass, StateThreadingIsExact) {
  srh::Rng rng(10);
  auto hg = srh::RecurrentHourglass<double>::make(8, 12, 16, rng);
  auto x1 = random_tensor({1, 8, 8, 8}, rng);
  auto x2 = random_tensor({1, 8, 8, 8}, rng);

  auto sm = Tensor<double>::zeros({1, 12, 4, 4});
  auto sb = Tensor<double>::zeros({1, 16, 2, 2});
  hg.step(x1, sm, sb);
  auto y2 = hg.step(x2, sm, sb);

  // same two steps, states snapshotted and restored between calls
  auto sm2 = Tensor<double>::zeros({1, 12, 4, 4});
  auto sb2 = Tensor<double>::zeros({1, 16, 2, 2});
  hg.step(x1, sm2, sb2);
  auto sm_snap = sm2.clone(), sb_snap = sb2.clone();
  auto y2b = hg.step(x2, sm_snap, sb_snap);
  EXPECT_TRUE(oracle::bit_equal(y2, y2b));
}

srh::CostMap<double> random_cost(srh::index_t cf, srh::index_t h, srh::index_t w, srh::Rng& rng,
                                 srh::index_t level = 0) {
  return {level, random_tensor({1, 2 * cf, h, w}, rng)};
}

TEST(SrhStep, SliceContractAndDeterminism) {
  srh::Rng rng1(11), rng2(11), rngd(12);
  srh::SrhAggregator<double> a1(8, rng1), a2(8, rng2);
  auto st1 = a1.reset_states(8, 12);
  auto st2 = a2.reset_states(8, 12);
  auto cost = random_cost(8, 8, 12, rngd);
  auto s1 = a1.step(cost, st1);
  auto s2 = a2.step(cost, st2);
  EXPECT_EQ(s1.intermediate.shape(), (srh::Shape{1, 1, 8, 12}));
  EXPECT_EQ(s1.final.shape(), (srh::Shape{1, 1, 8, 12}));
  EXPECT_TRUE(oracle::bit_equal(s1.intermediate, s2.intermediate));
  EXPECT_TRUE(oracle::bit_equal(s1.final, s2.final));

  auto bad = random_cost(8, 8, 16, rngd);
  EXPECT_THROW(a1.step(bad, st1), srh::ShapeError);
}

TEST(SrhStep, ResetStatesContract) {
  srh::Rng rng(13);
  srh::SrhAggregator<double> agg(8, rng);
  auto st = agg.reset_states(16, 24);
  ASSERT_EQ(st.states.size(), 6u);
  EXPECT_EQ(st.states[0].shape(), (srh::Shape{1, 8, 16, 24}));
  EXPECT_EQ(st.states[1].shape(), (srh::Shape{1, 8, 16, 24}));
  EXPECT_EQ(st.states[2].shape(), (srh::Shape{1, 12, 8, 12}));
  EXPECT_EQ(st.states[3].shape(), (srh::Shape{1, 16, 4, 6}));
  EXPECT_EQ(st.states[4].shape(), (srh::Shape{1, 12, 8, 12}));
  EXPECT_EQ(st.states[5].shape(), (srh::Shape{1, 16, 4, 6}));
  for (const auto& s : st.states)
    for (srh::index_t i = 0; i < s.numel(); ++i) ASSERT_DOUBLE_EQ(s.data()[i], 0.0);
  auto st2 = agg.reset_states(16, 24);
  for (size_t k = 0; k < st.states.size(); ++k)
    EXPECT_TRUE(oracle::bit_equal(st.states[k], st2.states[k]));
  EXPECT_THROW(agg.reset_states(14, 24), srh::ShapeError);
}

TEST(SrhStep, RecurrenceDependsOnlyOnSavedState) {
  srh::Rng rng(14), rngd(15);
  srh::SrhAggregator<double> agg(8, rng);
  auto st = agg.reset_states(8, 8);
  std::vector<srh::CostMap<double>> costs;
  for (srh::index_t i = 0; i < 4; ++i) costs.push_back(random_cost(8, 8, 8, rngd, i));

  agg.step(costs[0], st);
  agg.step(costs[1], st);
  auto snapshot = st.deep_copy();
  auto s3 = agg.step(costs[2], st);
  auto s4 = agg.step(costs[3], st);

  // replay levels 2..3 from the snapshot: bit-identical continuation
  auto s3b = agg.step(costs[2], snapshot);
  auto s4b = agg.step(costs[3], snapshot);
  EXPECT_TRUE(oracle::bit_equal(s3.final, s3b.final));
  EXPECT_TRUE(oracle::bit_equal(s4.final, s4b.final));
}

TEST(SrhStep, SequenceOrderMatters) {
  srh::Rng rng(16), rngd(17);
  srh::SrhAggregator<double> agg(8, rng);
  std::vector<srh::CostMap<double>> costs;
  for (srh::index_t i = 0; i < 4; ++i) costs.push_back(random_cost(8, 8, 8, rngd, i));

  auto run = [&](const std::vector<size_t>& order) {
    auto st = agg.reset_states(8, 8);
    Tensor<double> last;
    for (size_t k : order) last = agg.step(costs[k], st).final;
    return last;
  };
  auto fwd = run({0, 1, 2, 3});
  auto perm = run({2, 0, 3, 1});
  EXPECT_GT(oracle::max_abs_diff(fwd, perm), 1e-9);
}

TEST(SrhStep, StateBytesIndependentOfL) {
  srh::Rng rng(18), rngd(19);
  srh::SrhAggregator<double> agg(8, rng);
  auto bytes_after = [&](srh::index_t levels) {
    auto st = agg.reset_states(8, 8);
    for (srh::index_t i = 0; i < levels; ++i) agg.step(random_cost(8, 8, 8, rngd, i), st);
    return st.total_bytes();
  };
  EXPECT_EQ(bytes_after(2), bytes_after(16));
}

TEST(StackedGru, SliceContractAndGateFreeze) {
  srh::Rng rng(20), rngd(21);
  srh::StackedGruAggregator<double> agg(8, rng);
  auto st = agg.reset_states(6, 10);
  ASSERT_EQ(st.states.size(), 3u);
  auto s = agg.step(random_cost(8, 6, 10, rngd), st);
  EXPECT_EQ(s.final.shape(), (srh::Shape{1, 1, 6, 10}));
  EXPECT_TRUE(s.intermediate.same_storage(s.final));
}

TEST(StackedGru, FrozenGatesIgnoreLaterInputs) {
  // push all update gates toward 0: states freeze after reset, so the head
  // sees zero states forever and the output stops depending on the cost maps
  srh::Rng rng(22), rngd(23);
  srh::StackedGruAggregator<double> agg(8, rng);
  srh::ParamList<double> params;
  agg.register_params(params, "agg");
  for (auto& [name, t] : params)
    if (name.find(".z.b") != std::string::npos)
      for (srh::index_t i = 0; i < t.numel(); ++i) t.data()[i] = -40.0;

  auto st1 = agg.reset_states(6, 10);
  auto st2 = agg.reset_states(6, 10);
  agg.step(random_cost(8, 6, 10, rngd), st1);
  auto o1 = agg.step(random_cost(8, 6, 10, rngd), st1);
  agg.step(random_cost(8, 6, 10, rngd), st2);
  auto o2 = agg.step(random_cost(8, 6, 10, rngd), st2);
  EXPECT_LT(oracle::max_abs_diff(o1.final, o2.final), 1e-5);
}

TEST(Rollout, GradientChecksBothAggregators) {
  for (const char* kind : {"srh", "stacked_gru"}) {
    srh::Rng rng(24);
    auto agg = srh::make_aggregator<double>(kind, 8, rng);
    oracle::GradCheck gc;
    std::vector<Tensor<double>> costs;
    for (int i = 0; i < 3; ++i) costs.push_back(random_tensor({1, 16, 8, 8}, rng));
    gc.inputs = costs;
    gc.op = [&agg](const auto& in) {
      auto st = agg->reset_states(8, 8);
      Tensor<double> last;
      for (size_t i = 0; i < in.size(); ++i)
        last = agg->step({static_cast<srh::index_t>(i), in[i]}, st).final;
      return last;
    };
    gc.projection = random_tensor({1, 1, 8, 8}, rng);
    EXPECT_LT(gc.rel_err_directional(rng), 1e-4) << kind;
  }
}

TEST(Aggregator, FactoryRejectsUnknownKind) {
  srh::Rng rng(25);
  EXPECT_THROW(srh::make_aggregator<double>("3dcnn", 8, rng), srh::ShapeError);
}

}  // namespace
