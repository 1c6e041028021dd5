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

#include <functional>
#include <iostream>

#include "srh/adam.hpp"
#include "srh/config.hpp"
#include "srh/data.hpp"
#include "srh/metrics.hpp"
#include "srh/synth.hpp"

namespace srh {

// One training context: model, optimizer state and the data-sampling RNG.
// Per step the RNG draws, in order: sample index, crop row, crop column.
// (The replay test in the harness suite mirrors exactly this sequence.)
template <typename T>
struct TrainLoop {
  RunConfig cfg;
  SrhNet<T> net;
  std::vector<Tensor<T>> params;
  AdamState<T> adam;
  Rng data_rng;

  explicit TrainLoop(const RunConfig& c)
      : cfg(c),
        net(c.model(), c.seed),
        params(net.params()),
        adam(params, T(c.lr), T(c.beta1), T(c.beta2), T(c.adam_eps)),
        data_rng(c.seed ^ 0x9e3779b97f4a7c15ull) {
    cfg.validate();
  }

  double step(const std::vector<StereoSample>& dataset) {
    check(!dataset.empty(), "train: empty dataset");
    size_t idx = static_cast<size_t>(data_rng.uniform_int(dataset.size()));
    const StereoSample& full = dataset[idx];
    index_t ch = std::min(cfg.crop_h, full.h), cw = std::min(cfg.crop_w, full.w);
    check(ch % (4 * cfg.s) == 0 && cw % (4 * cfg.s) == 0, "train: sample ", full.h, "x", full.w,
          " does not admit a crop divisible by ", 4 * cfg.s);
    index_t y0 = static_cast<index_t>(data_rng.uniform_int(full.h - ch + 1));
    index_t x0 = static_cast<index_t>(data_rng.uniform_int(full.w - cw + 1));
    StereoSample s = crop_sample(full, y0, x0, ch, cw);

    Tensor<T> left = normalize_image(image_tensor<T>(s.left, ch, cw), cfg.means, cfg.stds);
    Tensor<T> right = normalize_image(image_tensor<T>(s.right, ch, cw), cfg.means, cfg.stds);
    Tensor<T> gt = disparity_tensor<T>(s);
    Tensor<T> mask = valid_mask_tensor<T>(s);

    double loss_value;
    try {
      TapeScope<T> scope;
      auto out = net.forward_train(left, right, cfg.d_max);
      Tensor<T> loss = total_loss(out.d_m, out.d_f, gt, mask, T(cfg.w1), T(cfg.w2));
      loss_value = double(loss.item());
      if (!std::isfinite(loss_value)) throw std::runtime_error("non-finite loss");
      backward(loss);
    } catch (const std::runtime_error& e) {
      if (std::string(e.what()).find("non-finite") == std::string::npos) throw;
      throw std::runtime_error("train: diverged (" + std::string(e.what()) +
                               ") at optimizer step " + std::to_string(adam.step + 1) +
                               ", lr=" + std::to_string(cfg.lr) + ", sample=" + s.provenance);
    }
    adam_step(params, adam);
    for (auto& p : params) p.zero_grad();
    return loss_value;
  }

  // Mean EPE of the final map over a dataset (batch inference).
  double eval_epe(const std::vector<StereoSample>& dataset) {
    double total = 0;
    for (const auto& s : dataset) {
      Tensor<T> left = normalize_image(image_tensor<T>(s.left, s.h, s.w), cfg.means, cfg.stds);
      Tensor<T> right = normalize_image(image_tensor<T>(s.right, s.h, s.w), cfg.means, cfg.stds);
      auto d = net.infer_batch(left, right, cfg.d_max);
      FloatMap pred(s.h, s.w);
      for (index_t i = 0; i < s.h * s.w; ++i) pred.v[size_t(i)] = float(d.values.data()[i]);
      total += evaluate(pred, s, Region::kAll).epe;
    }
    return total / double(dataset.size());
  }
};

struct TrainResult {
  std::string checkpoint_path;
  std::vector<double> losses;
};

// Runs cfg.steps optimizer steps (or epochs * dataset size when steps == 0),
// logs per-step losses, saves the checkpoint with model metadata.
template <typename T>
TrainResult train_run(const RunConfig& cfg, const std::vector<StereoSample>& dataset,
                      const std::string& out_path, std::ostream* log = nullptr,
                      index_t log_every = 25) {
  TrainLoop<T> loop(cfg);
  index_t steps = cfg.steps > 0 ? cfg.steps : cfg.epochs * static_cast<index_t>(dataset.size());
  check(steps >= 1, "train: nothing to do (steps == 0)");
  TrainResult result;
  for (index_t k = 0; k < steps; ++k) {
    double loss = loop.step(dataset);
    result.losses.push_back(loss);
    if (log && (k % log_every == 0 || k + 1 == steps))
      (*log) << "step=" << k << " loss=" << loss << "\n";
  }
  if (!out_path.empty()) {
    loop.net.save(out_path, cfg.d_max);
    result.checkpoint_path = out_path;
  }
  return result;
}

}  // namespace srh
