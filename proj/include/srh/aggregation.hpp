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

#include <memory>

#include "srh/cost_sequence.hpp"
#include "srh/layers.hpp"

namespace srh {

// Persistent recurrent memory carried across disparity levels. Entries are
// ordered by the owning aggregator; all zero before level 0.
template <typename T>
struct GruStateSet {
  std::vector<Tensor<T>> states;

  GruStateSet deep_copy() const {
    GruStateSet out;
    for (const auto& s : states) out.states.push_back(s.clone());
    return out;
  }

  std::int64_t total_bytes() const {
    std::int64_t b = 0;
    for (const auto& s : states) b += s.numel() * static_cast<index_t>(sizeof(T));
    return b;
  }
};

// Two aggregated 1-channel cost slices for one disparity level: the
// intermediate supervision output and the final output.
template <typename T>
struct AggregatedSlice {
  index_t level = 0;
  Tensor<T> intermediate;  // "output1"
  Tensor<T> final;         // "output2"
};

template <typename T>
struct OutputHead {
  Conv2dLayer<T> conv1, conv2;

  static OutputHead make(index_t ch, Rng& rng) {
    OutputHead h;
    h.conv1 = Conv2dLayer<T>::make(ch, ch, 3, 1, 1, rng);
    h.conv2 = Conv2dLayer<T>::make(ch, 1, 3, 1, 1, rng);
    return h;
  }

  Tensor<T> operator()(const Tensor<T>& x) const { return conv2(relu(conv1(x))); }

  void register_params(ParamList<T>& out, const std::string& prefix) {
    conv1.register_params(out, prefix + ".c1");
    conv2.register_params(out, prefix + ".c2");
  }
};

// One recurrent hourglass: [stride-2 conv -> GRU] twice down to 1/4 scale,
// two stride-2 transposed convs back up, additive skips from the 1/2-scale
// GRU output and from the input.
template <typename T>
struct RecurrentHourglass {
  index_t ch = 0, ch_mid = 0, ch_bot = 0;
  Conv2dLayer<T> down1, down2;
  ConvGRUCell<T> gru_mid, gru_bot;
  ConvTranspose2dLayer<T> up1, up2;

  static RecurrentHourglass make(index_t ch, index_t ch_mid, index_t ch_bot, Rng& rng) {
    RecurrentHourglass h;
    h.ch = ch;
    h.ch_mid = ch_mid;
    h.ch_bot = ch_bot;
    h.down1 = Conv2dLayer<T>::make(ch, ch_mid, 3, 2, 1, rng);
    h.gru_mid = ConvGRUCell<T>::make(ch_mid, ch_mid, rng);
    h.down2 = Conv2dLayer<T>::make(ch_mid, ch_bot, 3, 2, 1, rng);
    h.gru_bot = ConvGRUCell<T>::make(ch_bot, ch_bot, rng);
    h.up1 = ConvTranspose2dLayer<T>::make(ch_bot, ch_mid, 4, 2, 1, rng);
    h.up2 = ConvTranspose2dLayer<T>::make(ch_mid, ch, 4, 2, 1, rng);
    return h;
  }

  // states[0]: 1/2-scale GRU hidden, states[1]: 1/4-scale GRU hidden
  Tensor<T> step(const Tensor<T>& x, Tensor<T>& state_mid, Tensor<T>& state_bot) const {
    check(x.dim(2) % 4 == 0 && x.dim(3) % 4 == 0, "hourglass input ", shape_str(x.shape()),
          " must have spatial dims divisible by 4");
    Tensor<T> e1 = down1(x);
    state_mid = gru_step(gru_mid, e1, state_mid);
    Tensor<T> e2 = down2(state_mid);
    state_bot = gru_step(gru_bot, e2, state_bot);
    Tensor<T> d1 = add(up1(state_bot), state_mid);
    return add(up2(d1), x);
  }

  void register_params(ParamList<T>& out, const std::string& prefix) {
    down1.register_params(out, prefix + ".d1");
    gru_mid.register_params(out, prefix + ".gm");
    down2.register_params(out, prefix + ".d2");
    gru_bot.register_params(out, prefix + ".gb");
    up1.register_params(out, prefix + ".u1");
    up2.register_params(out, prefix + ".u2");
  }
};

// Aggregator interface: one instance serves one rollout at a time; the
// state set is owned by the caller and threaded through step().
template <typename T>
class Aggregator {
 public:
  virtual ~Aggregator() = default;
  virtual GruStateSet<T> reset_states(index_t h, index_t w) const = 0;
  virtual AggregatedSlice<T> step(const CostMap<T>& cost, GruStateSet<T>& states) const = 0;
  virtual void register_params(ParamList<T>& out, const std::string& prefix) = 0;
  virtual const char* kind() const = 0;
};

// Stacked recurrent hourglass aggregator: a cascade of two pre-GRUs feeds
// two hourglasses stacked end-to-end; output1 taps the tensor fed to
// hourglass 2, output2 taps hourglass 2's output.
template <typename T>
class SrhAggregator final : public Aggregator<T> {
 public:
  SrhAggregator(index_t cf, Rng& rng) : cf_(cf) {
    check(cf >= 8 && cf % 4 == 0, "aggregator width must be a multiple of 4 and >= 8, got ", cf);
    pre1_ = ConvGRUCell<T>::make(2 * cf, cf, rng);
    pre2_ = ConvGRUCell<T>::make(cf, cf, rng);
    index_t mid = cf + cf / 2, bot = 2 * cf;
    hg1_ = RecurrentHourglass<T>::make(cf, mid, bot, rng);
    hg2_ = RecurrentHourglass<T>::make(cf, mid, bot, rng);
    head1_ = OutputHead<T>::make(cf, rng);
    head2_ = OutputHead<T>::make(cf, rng);
  }

  GruStateSet<T> reset_states(index_t h, index_t w) const override {
    check(h % 4 == 0 && w % 4 == 0, "cost map size ", h, "x", w,
          " must be divisible by 4 for the hourglass scales");
    GruStateSet<T> s;
    index_t mid = cf_ + cf_ / 2, bot = 2 * cf_;
    s.states.push_back(Tensor<T>::zeros({1, cf_, h, w}));
    s.states.push_back(Tensor<T>::zeros({1, cf_, h, w}));
    for (int hg = 0; hg < 2; ++hg) {
      s.states.push_back(Tensor<T>::zeros({1, mid, h / 2, w / 2}));
      s.states.push_back(Tensor<T>::zeros({1, bot, h / 4, w / 4}));
    }
    return s;
  }

  AggregatedSlice<T> step(const CostMap<T>& cost, GruStateSet<T>& st) const override {
    check(st.states.size() == 6, "srh aggregator expects 6 states, got ", st.states.size());
    check(cost.values.dim(1) == 2 * cf_, "cost map has ", cost.values.dim(1),
          " channels, aggregator expects ", 2 * cf_);
    check(cost.values.dim(2) == st.states[0].dim(2) && cost.values.dim(3) == st.states[0].dim(3),
          "cost map geometry ", shape_str(cost.values.shape()), " does not match states");
    st.states[0] = gru_step(pre1_, cost.values, st.states[0]);
    st.states[1] = gru_step(pre2_, st.states[0], st.states[1]);
    Tensor<T> y1 = hg1_.step(st.states[1], st.states[2], st.states[3]);
    Tensor<T> y2 = hg2_.step(y1, st.states[4], st.states[5]);
    return {cost.level, head1_(y1), head2_(y2)};
  }

  void register_params(ParamList<T>& out, const std::string& prefix) override {
    pre1_.register_params(out, prefix + ".pre1");
    pre2_.register_params(out, prefix + ".pre2");
    hg1_.register_params(out, prefix + ".hg1");
    hg2_.register_params(out, prefix + ".hg2");
    head1_.register_params(out, prefix + ".head1");
    head2_.register_params(out, prefix + ".head2");
  }

  const char* kind() const override { return "srh"; }

 private:
  index_t cf_;
  ConvGRUCell<T> pre1_, pre2_;
  RecurrentHourglass<T> hg1_, hg2_;
  OutputHead<T> head1_, head2_;
};

// Single-scale baseline: three chained convolutional GRUs followed by the
// same two-conv head; the one output fills both slice fields.
template <typename T>
class StackedGruAggregator final : public Aggregator<T> {
 public:
  StackedGruAggregator(index_t cf, Rng& rng) : cf_(cf) {
    g1_ = ConvGRUCell<T>::make(2 * cf, cf, rng);
    g2_ = ConvGRUCell<T>::make(cf, cf, rng);
    g3_ = ConvGRUCell<T>::make(cf, cf, rng);
    head_ = OutputHead<T>::make(cf, rng);
  }

  GruStateSet<T> reset_states(index_t h, index_t w) const override {
    GruStateSet<T> s;
    for (int i = 0; i < 3; ++i) s.states.push_back(Tensor<T>::zeros({1, cf_, h, w}));
    return s;
  }

  AggregatedSlice<T> step(const CostMap<T>& cost, GruStateSet<T>& st) const override {
    check(st.states.size() == 3, "stacked-gru aggregator expects 3 states");
    check(cost.values.dim(1) == 2 * cf_, "cost map has ", cost.values.dim(1),
          " channels, aggregator expects ", 2 * cf_);
    st.states[0] = gru_step(g1_, cost.values, st.states[0]);
    st.states[1] = gru_step(g2_, st.states[0], st.states[1]);
    st.states[2] = gru_step(g3_, st.states[1], st.states[2]);
    Tensor<T> out = head_(st.states[2]);
    return {cost.level, out, out};
  }

  void register_params(ParamList<T>& out, const std::string& prefix) override {
    g1_.register_params(out, prefix + ".g1");
    g2_.register_params(out, prefix + ".g2");
    g3_.register_params(out, prefix + ".g3");
    head_.register_params(out, prefix + ".head");
  }

  const char* kind() const override { return "stacked_gru"; }

 private:
  index_t cf_;
  ConvGRUCell<T> g1_, g2_, g3_;
  OutputHead<T> head_;
};

template <typename T>
std::unique_ptr<Aggregator<T>> make_aggregator(const std::string& kind, index_t cf, Rng& rng) {
  if (kind == "srh") return std::make_unique<SrhAggregator<T>>(cf, rng);
  if (kind == "stacked_gru") return std::make_unique<StackedGruAggregator<T>>(cf, rng);
  throw ShapeError("unknown aggregator kind: " + kind + " (expected srh or stacked_gru)");
}

}  // namespace srh
