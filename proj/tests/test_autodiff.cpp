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

#include <filesystem>

#include "oracles.hpp"
#include "srh/adam.hpp"
#include "srh/checkpoint.hpp"
#include "srh/ops.hpp"
#include "srh/tape.hpp"

using oracle::random_tensor;
using srh::Tensor;

namespace {

TEST(Backward, SumGivesOnes) {
  srh::Rng rng(1);
  auto x = random_tensor({3, 4}, rng);
  x.set_requires_grad(true);
  srh::TapeScope<double> scope;
  auto loss = srh::sum_all(x);
  srh::backward(loss);
  auto g = x.grad();
  for (srh::index_t i = 0; i < g.numel(); ++i) EXPECT_DOUBLE_EQ(g.data()[i], 1.0);
}

TEST(Backward, SumOfSquaresGivesTwoX) {
  srh::Rng rng(2);
  auto x = random_tensor({5}, rng);
  x.set_requires_grad(true);
  srh::TapeScope<double> scope;
  auto loss = srh::sum_all(srh::mul(x, x));
  srh::backward(loss);
  auto g = x.grad();
  for (srh::index_t i = 0; i < g.numel(); ++i) EXPECT_NEAR(g.data()[i], 2 * x.data()[i], 1e-14);
}

TEST(Backward, RejectsNonScalarLoss) {
  srh::Rng rng(3);
  auto x = random_tensor({2, 2}, rng);
  x.set_requires_grad(true);
  srh::TapeScope<double> scope;
  auto y = srh::scale(x, 2.0);
  EXPECT_THROW(srh::backward(y), srh::ShapeError);
}

TEST(Backward, RequiresActiveTape) {
  auto x = Tensor<double>::scalar(1.0, true);
  EXPECT_THROW(srh::backward(x), srh::ShapeError);
}

TEST(Backward, UnreachableGradsUntouched) {
  srh::Rng rng(4);
  auto x = random_tensor({3}, rng);
  auto other = random_tensor({3}, rng);
  x.set_requires_grad(true);
  other.set_requires_grad(true);
  srh::TapeScope<double> scope;
  auto y = srh::mul(x, x);
  auto unused = srh::scale(other, 3.0);  // recorded, but not reachable from loss
  auto loss = srh::sum_all(y);
  srh::backward(loss);
  EXPECT_TRUE(x.has_grad());
  EXPECT_FALSE(other.has_grad());
  (void)unused;
}

TEST(Backward, AccumulatesAcrossReuse) {
  auto x = Tensor<double>::scalar(3.0, true);
  srh::TapeScope<double> scope;
  auto y = srh::add(srh::mul(x, x), x);  // x^2 + x -> dy/dx = 2x + 1
  srh::backward(y);
  EXPECT_NEAR(x.grad().data()[0], 7.0, 1e-14);
}

TEST(NoGrad, SuppressesRecording) {
  auto x = Tensor<double>::scalar(2.0, true);
  srh::TapeScope<double> scope;
  {
    srh::NoGradScope<double> ng;
    auto y = srh::mul(x, x);
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_EQ(scope.tape().size(), 0u);
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  auto p = Tensor<double>::from({3}, {1.0, -2.0, 0.5});
  auto before = p.clone();
  std::vector<Tensor<double>> params{p};
  srh::AdamState<double> st(params, 0.1);
  p.grad_buffer();  // zero gradient
  srh::adam_step(params, st);
  EXPECT_TRUE(oracle::bit_equal(p, before));
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepMagnitudeIsBiasCorrectedLr) {
  // hand-computed recurrence: m=0.1*g, v=1e-3*g^2, mhat=g, vhat=g^2,
  // delta = lr * 1 / (1 + eps) for g = 1
  auto p = Tensor<double>::scalar(0.0);
  std::vector<Tensor<double>> params{p};
  srh::AdamState<double> st(params, 0.1);
  p.grad_buffer()[0] = 1.0;
  srh::adam_step(params, st);
  double expected = -0.1 * (1.0 / (1.0 + 1e-8));
  EXPECT_NEAR(p.data()[0], expected, 1e-15);
}

TEST(Adam, QuadraticBowlConverges) {
  auto p = Tensor<double>::scalar(1.0, true);
  std::vector<Tensor<double>> params{p};
  srh::AdamState<double> st(params, 0.05);
  int steps = 0;
  for (; steps < 500; ++steps) {
    p.zero_grad();
    {
      srh::TapeScope<double> scope;
      auto loss = srh::mul(p, p);
      srh::backward(loss);
    }
    srh::adam_step(params, st);
    if (std::abs(p.data()[0]) < 1e-3) break;
  }
  EXPECT_LT(std::abs(p.data()[0]), 1e-3) << "did not converge in " << steps << " steps";
}

TEST(Adam, RejectsParamCountMismatch) {
  auto p = Tensor<double>::scalar(0.0);
  std::vector<Tensor<double>> params{p};
  srh::AdamState<double> st(params, 0.1);
  params.push_back(Tensor<double>::scalar(1.0));
  EXPECT_THROW(srh::adam_step(params, st), srh::ShapeError);
}

TEST(Checkpoint, RoundTripBitExact) {
  srh::Rng rng(5);
  srh::Checkpoint ck;
  auto a = random_tensor({3, 2}, rng).cast<float>();
  auto b = random_tensor({4}, rng).cast<float>();
  ck["layer.weight"] = srh::to_entry(a);
  ck["layer.bias"] = srh::to_entry(b);
  auto path = std::filesystem::temp_directory_path() / "srh_ckpt_test.srhc";
  srh::save_checkpoint(path.string(), ck);
  auto loaded = srh::load_checkpoint(path.string());
  ASSERT_EQ(loaded.size(), 2u);
  ASSERT_EQ(loaded["layer.weight"].dims, (srh::Shape{3, 2}));
  EXPECT_EQ(0, std::memcmp(loaded["layer.weight"].values.data(), a.data(), sizeof(float) * 6));
  EXPECT_EQ(0, std::memcmp(loaded["layer.bias"].values.data(), b.data(), sizeof(float) * 4));
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsCorruptFiles) {
  auto path = std::filesystem::temp_directory_path() / "srh_ckpt_bad.srhc";
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE";
  }
  EXPECT_THROW(srh::load_checkpoint(path.string()), srh::IoError);
  {
    std::ofstream os(path, std::ios::binary);
    os << "SRHC";  // truncated right after magic
  }
  EXPECT_THROW(srh::load_checkpoint(path.string()), srh::IoError);
  std::filesystem::remove(path);
  EXPECT_THROW(srh::load_checkpoint("/nonexistent/dir/x.srhc"), srh::IoError);
}

TEST(Memory, TracksTensorBytes) {
  std::int64_t before = srh::MemoryStats::current_bytes();
  {
    auto t = Tensor<float>::zeros({64, 64});
    EXPECT_GE(srh::MemoryStats::current_bytes(), before + 64 * 64 * 4);
    EXPECT_GE(srh::MemoryStats::peak_bytes(), srh::MemoryStats::current_bytes());
  }
  EXPECT_EQ(srh::MemoryStats::current_bytes(), before);
}

}  // namespace
