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
#include <string>

#include "srh/aggregation.hpp"
#include "srh/checkpoint.hpp"
#include "srh/disparity.hpp"
#include "srh/features.hpp"

namespace srh {

struct ModelConfig {
  index_t cf = 32;
  index_t s = 4;
  std::string aggregator = "srh";
  bool instance_norm = false;
  std::array<double, 3> means{0.5, 0.5, 0.5};
  std::array<double, 3> stds{0.5, 0.5, 0.5};
};

// The full pipeline: siamese feature extraction, sequential recurrent cost
// aggregation and soft-argmin disparity regression.
template <typename T>
class SrhNet {
 public:
  SrhNet(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    Rng rng(seed);
    feat_ = FeatureExtractor<T>::make(cfg.cf, cfg.s, cfg.instance_norm, rng);
    agg_ = make_aggregator<T>(cfg.aggregator, cfg.cf, rng);
  }

  const ModelConfig& config() const { return cfg_; }
  const FeatureExtractor<T>& extractor() const { return feat_; }
  Aggregator<T>& aggregator() { return *agg_; }

  ParamList<T> named_params() {
    ParamList<T> out;
    feat_.register_params(out, "feat");
    agg_->register_params(out, "agg");
    return out;
  }

  std::vector<Tensor<T>> params() {
    std::vector<Tensor<T>> out;
    for (auto& [name, t] : named_params()) out.push_back(t);
    return out;
  }

  struct Rollout {
    std::vector<Tensor<T>> out1, out2;  // L slices each, [1,1,h,w]
  };

  // Runs the L-step recurrent aggregation over the cost sequence.
  Rollout rollout(const Tensor<T>& left_norm, const Tensor<T>& right_norm, index_t d_max,
                  bool want_out1 = true) const {
    auto [fl, fr] = feat_.extract_pair(left_norm, right_norm);
    DisparityRange range(d_max, cfg_.s);
    CostSequence<T> seq(fl, fr, range);
    GruStateSet<T> states = agg_->reset_states(fl.dim(2), fl.dim(3));
    Rollout r;
    for (const CostMap<T>& cost : seq) {
      AggregatedSlice<T> slice = agg_->step(cost, states);
      if (want_out1) r.out1.push_back(slice.intermediate);
      r.out2.push_back(slice.final);
    }
    return r;
  }

  // Training forward: intermediate and final disparity maps at full
  // resolution, differentiable end to end.
  struct TrainOut {
    DisparityMap<T> d_m, d_f;
  };

  TrainOut forward_train(const Tensor<T>& left_norm, const Tensor<T>& right_norm,
                         index_t d_max) const {
    index_t h = left_norm.dim(2), w = left_norm.dim(3);
    Rollout r = rollout(left_norm, right_norm, d_max);
    Tensor<T> vol_m = upsample_cost(r.out1, h, w, d_max);
    Tensor<T> vol_f = upsample_cost(r.out2, h, w, d_max);
    return {soft_argmin_batch(vol_m), soft_argmin_batch(vol_f)};
  }

  // Inference via the eagerly materialized [1,D,H,W] volume.
  DisparityMap<T> infer_batch(const Tensor<T>& left_norm, const Tensor<T>& right_norm,
                              index_t d_max) const {
    NoGradScope<T> ng;
    index_t h = left_norm.dim(2), w = left_norm.dim(3);
    Rollout r = rollout(left_norm, right_norm, d_max, /*want_out1=*/false);
    Tensor<T> vol = upsample_cost(r.out2, h, w, d_max);
    return soft_argmin_batch(vol);
  }

  // Constant-memory inference: slices are folded into the online reduction
  // as the rollout produces them; the volume is never materialized.
  DisparityMap<T> infer_streaming(const Tensor<T>& left_norm, const Tensor<T>& right_norm,
                                  index_t d_max) const {
    NoGradScope<T> ng;
    index_t h = left_norm.dim(2), w = left_norm.dim(3);
    auto [fl, fr] = feat_.extract_pair(left_norm, right_norm);
    DisparityRange range(d_max, cfg_.s);
    CostSequence<T> seq(fl, fr, range);
    GruStateSet<T> states = agg_->reset_states(fl.dim(2), fl.dim(3));
    StreamingSoftArgmin<T> reducer(range.levels, d_max, h, w);
    for (index_t i = 0; i < range.levels; ++i) {
      AggregatedSlice<T> slice = agg_->step(seq.at(i), states);
      reducer.push(i, slice.final);
    }
    return reducer.finalize();
  }

  void save(const std::string& path, index_t d_max) {
    Checkpoint ck;
    for (auto& [name, t] : named_params()) ck[name] = to_entry(t);
    auto meta = [&](const std::string& key, double v) {
      CheckpointEntry e;
      e.dims = {1};
      e.values = {static_cast<float>(v)};
      ck["meta/" + key] = e;
    };
    meta("cf", double(cfg_.cf));
    meta("s", double(cfg_.s));
    meta("aggregator", cfg_.aggregator == "srh" ? 0.0 : 1.0);
    meta("instance_norm", cfg_.instance_norm ? 1.0 : 0.0);
    meta("d_max", double(d_max));
    for (int c = 0; c < 3; ++c) {
      meta("mean_" + std::to_string(c), cfg_.means[c]);
      meta("std_" + std::to_string(c), cfg_.stds[c]);
    }
    save_checkpoint(path, ck);
  }

  void load_state(const Checkpoint& ck) {
    for (auto& [name, t] : named_params()) {
      auto it = ck.find(name);
      check_io(it != ck.end(), "checkpoint is missing parameter '", name, "'");
      from_entry(it->second, t, name);
    }
  }

 private:
  ModelConfig cfg_;
  FeatureExtractor<T> feat_;
  std::unique_ptr<Aggregator<T>> agg_;
};

struct LoadedModelMeta {
  ModelConfig config;
  index_t d_max = 192;
};

inline LoadedModelMeta read_model_meta(const Checkpoint& ck) {
  auto get = [&](const std::string& key, double fallback) {
    auto it = ck.find("meta/" + key);
    return it == ck.end() ? fallback : double(it->second.values.at(0));
  };
  LoadedModelMeta m;
  m.config.cf = static_cast<index_t>(get("cf", 32));
  m.config.s = static_cast<index_t>(get("s", 4));
  m.config.aggregator = get("aggregator", 0) == 0.0 ? "srh" : "stacked_gru";
  m.config.instance_norm = get("instance_norm", 0) != 0.0;
  m.d_max = static_cast<index_t>(get("d_max", 192));
  for (int c = 0; c < 3; ++c) {
    m.config.means[c] = get("mean_" + std::to_string(c), 0.5);
    m.config.stds[c] = get("std_" + std::to_string(c), 0.5);
  }
  return m;
}

template <typename T>
SrhNet<T> load_model(const std::string& path, index_t* d_max_out = nullptr) {
  Checkpoint ck = load_checkpoint(path);
  LoadedModelMeta meta = read_model_meta(ck);
  SrhNet<T> net(meta.config, /*seed=*/0);
  net.load_state(ck);
  if (d_max_out) *d_max_out = meta.d_max;
  return net;
}

}  // namespace srh
