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
//
// srh: stereo disparity estimation with recurrent cost aggregation.
// Subcommands: train, infer, eval, profile, synth.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "srh/srh.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config_file;
  std::map<std::string, std::string> overrides;
};

// Config precedence: CLI flag > config file > default. Each flag, when
// explicitly passed, lands in `overrides` and is applied after the file.
void add_config_flags(CLI::App* cmd, CommonFlags& cf) {
  cmd->add_option("--config", cf.config_file, "key=value configuration file");
  auto hook = [&cf, cmd](const char* flag, const char* key) {
    auto* opt = cmd->get_option(flag);
    opt->each([&cf, key](const std::string& v) { cf.overrides[key] = v; });
  };
  cmd->add_option("--seed", "RNG seed");
  hook("--seed", "seed");
  cmd->add_option("--d-max", "maximum disparity in pixels");
  hook("--d-max", "d_max");
  cmd->add_option("--aggregator", "cost aggregator: srh | stacked_gru");
  hook("--aggregator", "aggregator");
  cmd->add_option("--w1", "intermediate-supervision loss weight");
  hook("--w1", "w1");
  cmd->add_option("--w2", "final-output loss weight");
  hook("--w2", "w2");
  cmd->add_option("--precision", "f32 | f64");
  hook("--precision", "precision");
  cmd->add_option("--cf", "feature channels");
  hook("--cf", "cf");
  cmd->add_option("--lr", "learning rate");
  hook("--lr", "lr");
  cmd->add_option("--steps", "optimizer steps (overrides epochs)");
  hook("--steps", "steps");
  cmd->add_option("--epochs", "training epochs");
  hook("--epochs", "epochs");
  cmd->add_option("--crop-h", "training crop height");
  hook("--crop-h", "crop_h");
  cmd->add_option("--crop-w", "training crop width");
  hook("--crop-w", "crop_w");
  cmd->add_option("--instance-norm", "enable per-channel instance normalization (0/1)");
  hook("--instance-norm", "instance_norm");
}

srh::RunConfig resolve_config(const CommonFlags& cf) {
  srh::RunConfig cfg;
  if (!cf.config_file.empty()) srh::load_config_file(cfg, cf.config_file);
  srh::apply_overrides(cfg, cf.overrides);
  cfg.validate();
  return cfg;
}

srh::FloatMap disparity_to_map(const std::vector<float>& v, srh::index_t h, srh::index_t w) {
  srh::FloatMap m(h, w);
  std::copy(v.begin(), v.end(), m.v.begin());
  return m;
}

srh::FloatMap load_disparity_any(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".png")
    return srh::load_kitti_disparity_png(path).disp;
  return srh::load_pfm(path);
}

template <typename T>
int run_train(const srh::RunConfig& cfg, const std::string& data, int synth_count,
              const std::string& out) {
  std::vector<srh::StereoSample> dataset;
  if (!data.empty()) {
    dataset = srh::load_dataset(data, cfg.d_max);
  } else {
    srh::SynthSpec spec;
    spec.d_max = cfg.d_max;
    spec.h = cfg.crop_h;
    spec.w = cfg.crop_w;
    spec.num_textureless = 1;
    dataset = srh::synth_dataset(cfg.seed + 1, synth_count, spec);
  }
  std::cout << "training on " << dataset.size() << " samples, aggregator=" << cfg.aggregator
            << ", d_max=" << cfg.d_max << "\n";
  auto result = srh::train_run<T>(cfg, dataset, out, &std::cout);
  std::cout << "checkpoint written to " << result.checkpoint_path << "\n";
  return 0;
}

template <typename T>
int run_infer(const std::string& ckpt, const std::string& left_path,
              const std::string& right_path, bool streaming, srh::index_t d_max_override,
              const std::string& out, const std::string& png_out, const std::string& render_out) {
  srh::index_t d_max = 0;
  auto net = srh::load_model<T>(ckpt, &d_max);
  if (d_max_override > 0) d_max = d_max_override;
  auto lgray = srh::load_pfm(left_path);
  auto rgray = srh::load_pfm(right_path);
  srh::check(lgray.h == rgray.h && lgray.w == rgray.w, "left/right sizes differ");
  std::vector<float> l3(size_t(3 * lgray.h * lgray.w)), r3(l3.size());
  for (int c = 0; c < 3; ++c) {
    std::copy(lgray.v.begin(), lgray.v.end(), l3.begin() + c * lgray.h * lgray.w);
    std::copy(rgray.v.begin(), rgray.v.end(), r3.begin() + c * rgray.h * rgray.w);
  }
  auto left = srh::normalize_image(srh::image_tensor<T>(l3, lgray.h, lgray.w), net.config().means,
                                   net.config().stds);
  auto right = srh::normalize_image(srh::image_tensor<T>(r3, rgray.h, rgray.w), net.config().means,
                                    net.config().stds);
  auto t0 = std::chrono::steady_clock::now();
  auto d = streaming ? net.infer_streaming(left, right, d_max)
                     : net.infer_batch(left, right, d_max);
  auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0);
  srh::FloatMap dm(lgray.h, lgray.w);
  for (srh::index_t i = 0; i < lgray.h * lgray.w; ++i) dm.v[size_t(i)] = float(d.values.data()[i]);
  if (!out.empty()) srh::save_pfm(out, dm);
  if (!png_out.empty()) srh::save_kitti_disparity_png(png_out, dm);
  if (!render_out.empty()) srh::render_disparity_png(dm, double(d_max), render_out);
  std::cout << "mode=" << (streaming ? "streaming" : "batch") << " d_max=" << d_max
            << " wall_ms=" << ms.count() << "\n";
  return 0;
}

int run_eval(const std::string& pred_path, const std::string& gt_path, const std::string& noc_path,
             const std::string& region, srh::index_t d_max, const std::string& csv_out) {
  srh::FloatMap pred = load_disparity_any(pred_path);
  srh::StereoSample gt;
  if (gt_path.size() > 4 && gt_path.substr(gt_path.size() - 4) == ".png") {
    auto loaded = srh::load_kitti_disparity_png(gt_path);
    gt.h = loaded.disp.h;
    gt.w = loaded.disp.w;
    gt.disp = loaded.disp.v;
    gt.valid = loaded.valid;
  } else {
    auto loaded = srh::load_pfm(gt_path);
    gt.h = loaded.h;
    gt.w = loaded.w;
    gt.disp = loaded.v;
    gt.valid.resize(gt.disp.size());
    for (size_t i = 0; i < gt.disp.size(); ++i)
      gt.valid[i] = (std::isfinite(gt.disp[i]) && gt.disp[i] > 0) ? 1 : 0;
  }
  if (d_max > 0)
    for (size_t i = 0; i < gt.disp.size(); ++i)
      if (gt.disp[i] >= float(d_max)) gt.valid[i] = 0;
  if (!noc_path.empty()) {
    auto noc = srh::load_pfm(noc_path);
    srh::check(noc.h == gt.h && noc.w == gt.w, "noc mask size mismatch");
    gt.noc.resize(noc.v.size());
    for (size_t i = 0; i < noc.v.size(); ++i) gt.noc[i] = noc.v[i] != 0 ? 1 : 0;
  }
  std::vector<srh::MetricsReport> reports;
  if (region == "all" || region == "both")
    reports.push_back(srh::evaluate(pred, gt, srh::Region::kAll));
  if (region == "noc" || region == "both") {
    if (gt.has_noc())
      reports.push_back(srh::evaluate(pred, gt, srh::Region::kNoc));
    else if (region == "noc")
      throw srh::ShapeError("eval: Noc region requested but no occlusion mask was given");
    // with region=both and no mask, Noc metrics are omitted rather than approximated
  }
  for (const auto& r : reports) srh::print_report(std::cout, r);
  if (!csv_out.empty()) {
    std::ofstream os(csv_out);
    srh::print_report_csv_header(os);
    for (const auto& r : reports) srh::print_report_csv(os, r);
  }
  return 0;
}

template <typename T>
int run_profile(const std::string& ckpt, srh::RunConfig cfg, const std::string& axis,
                std::vector<srh::index_t> points, srh::index_t height, srh::index_t width,
                const std::string& mode) {
  std::unique_ptr<srh::SrhNet<T>> net;
  srh::index_t base_dmax = cfg.d_max;
  if (!ckpt.empty()) {
    srh::index_t d = 0;
    net = std::make_unique<srh::SrhNet<T>>(srh::load_model<T>(ckpt, &d));
    base_dmax = d;
  } else {
    net = std::make_unique<srh::SrhNet<T>>(cfg.model(), cfg.seed);
  }
  srh::SweepAxis ax = axis == "resolution" ? srh::SweepAxis::kResolution : srh::SweepAxis::kDMax;
  if (points.empty()) points = ax == srh::SweepAxis::kDMax ? std::vector<srh::index_t>{64, 128, 192}
                                                           : std::vector<srh::index_t>{64, 128, 256};
  for (const std::string m : mode == "both" ? std::vector<std::string>{"streaming", "eager"}
                                            : std::vector<std::string>{mode}) {
    auto rep = srh::profile_run(*net, ax, points, height, width, base_dmax, m == "streaming",
                                cfg.seed);
    srh::print_profile(std::cout, rep);
  }
  return 0;
}

int run_synth(const srh::RunConfig& cfg, const std::string& out, int count, srh::index_t h,
              srh::index_t w, int shapes, int textureless, double density, srh::index_t bg) {
  srh::SynthSpec spec;
  spec.h = h;
  spec.w = w;
  spec.d_max = cfg.d_max;
  spec.num_shapes = shapes;
  spec.num_textureless = textureless;
  spec.dot_density = density;
  spec.bg_disp = bg;
  for (int i = 0; i < count; ++i) {
    auto s = srh::synth_rds(cfg.seed + std::uint64_t(i) * 0x51ed2701, spec);
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%03d", i);
    srh::save_sample((fs::path(out) / name).string(), s);
    if (i == 0) {
      srh::FloatMap d(s.h, s.w);
      std::copy(s.disp.begin(), s.disp.end(), d.v.begin());
      srh::render_disparity_png(d, double(cfg.d_max), (fs::path(out) / "preview.png").string());
    }
  }
  std::cout << "wrote " << count << " samples to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SRH-Net: sequential recurrent-hourglass stereo matching"};
  app.require_subcommand(1);

  CommonFlags train_cf, infer_cf, eval_cf, profile_cf, synth_cf;

  auto* train = app.add_subcommand("train", "train a model");
  std::string train_data, train_out = "model.srhc";
  int train_synth_count = 8;
  train->add_option("--data", train_data, "dataset directory (sample_*/ with left.pfm ...)");
  train->add_option("--synth", train_synth_count, "synthetic sample count when --data is absent");
  train->add_option("--out", train_out, "output checkpoint path");
  add_config_flags(train, train_cf);

  auto* infer = app.add_subcommand("infer", "predict a disparity map");
  std::string in_ckpt, in_left, in_right, in_out = "disp.pfm", in_png, in_render;
  bool in_streaming = false;
  srh::index_t in_dmax = 0;
  infer->add_option("--ckpt", in_ckpt, "checkpoint path")->required();
  infer->add_option("--left", in_left, "left image (grayscale PFM)")->required();
  infer->add_option("--right", in_right, "right image (grayscale PFM)")->required();
  infer->add_flag("--streaming", in_streaming, "constant-memory streaming regression");
  infer->add_option("--out", in_out, "output disparity PFM");
  infer->add_option("--png", in_png, "also write 16-bit disparity PNG");
  infer->add_option("--render", in_render, "also write a colormapped preview PNG");
  infer->add_option("--d-max", in_dmax, "override the checkpoint's disparity range");
  std::string in_precision = "f32";
  infer->add_option("--precision", in_precision, "f32 | f64");

  auto* eval = app.add_subcommand("eval", "compare a prediction against ground truth");
  std::string ev_pred, ev_gt, ev_noc, ev_region = "all", ev_csv;
  srh::index_t ev_dmax = 0;
  eval->add_option("--pred", ev_pred, "predicted disparity (PFM or 16-bit PNG)")->required();
  eval->add_option("--gt", ev_gt, "ground-truth disparity (PFM or 16-bit PNG)")->required();
  eval->add_option("--noc", ev_noc, "non-occlusion mask (PFM, nonzero = visible)");
  eval->add_option("--region", ev_region, "all | noc | both");
  eval->add_option("--d-max", ev_dmax, "upper validity bound on ground truth");
  eval->add_option("--out", ev_csv, "write metrics as CSV");

  auto* profile = app.add_subcommand("profile", "peak-memory / latency sweeps");
  std::string pr_ckpt, pr_axis = "d_max", pr_mode = "both";
  std::vector<srh::index_t> pr_points;
  srh::index_t pr_h = 128, pr_w = 256;
  profile->add_option("--ckpt", pr_ckpt, "checkpoint (omit to profile a fresh random model)");
  profile->add_option("--axis", pr_axis, "d_max | resolution");
  profile->add_option("--points", pr_points, "sweep points")->delimiter(',');
  profile->add_option("--height", pr_h, "input height (d_max sweeps)");
  profile->add_option("--width", pr_w, "input width (d_max sweeps)");
  profile->add_option("--mode", pr_mode, "streaming | eager | both");
  add_config_flags(profile, profile_cf);

  auto* synth = app.add_subcommand("synth", "generate random-dot stereogram samples");
  std::string sy_out = "synth_data";
  int sy_count = 8, sy_shapes = 3, sy_textureless = 1;
  srh::index_t sy_h = 96, sy_w = 96, sy_bg = 1;
  double sy_density = 0.5;
  synth->add_option("--out", sy_out, "output dataset directory");
  synth->add_option("--count", sy_count, "number of samples");
  synth->add_option("--height", sy_h, "sample height");
  synth->add_option("--width", sy_w, "sample width");
  synth->add_option("--shapes", sy_shapes, "disparity layers per scene");
  synth->add_option("--textureless", sy_textureless, "textureless patches per scene");
  synth->add_option("--density", sy_density, "dot density");
  synth->add_option("--bg-disp", sy_bg, "background disparity");
  add_config_flags(synth, synth_cf);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      auto cfg = resolve_config(train_cf);
      return cfg.precision == "f64"
                 ? run_train<double>(cfg, train_data, train_synth_count, train_out)
                 : run_train<float>(cfg, train_data, train_synth_count, train_out);
    }
    if (*infer) {
      return in_precision == "f64"
                 ? run_infer<double>(in_ckpt, in_left, in_right, in_streaming, in_dmax, in_out,
                                     in_png, in_render)
                 : run_infer<float>(in_ckpt, in_left, in_right, in_streaming, in_dmax, in_out,
                                    in_png, in_render);
    }
    if (*eval) return run_eval(ev_pred, ev_gt, ev_noc, ev_region, ev_dmax, ev_csv);
    if (*profile) {
      auto cfg = resolve_config(profile_cf);
      return cfg.precision == "f64"
                 ? run_profile<double>(pr_ckpt, cfg, pr_axis, pr_points, pr_h, pr_w, pr_mode)
                 : run_profile<float>(pr_ckpt, cfg, pr_axis, pr_points, pr_h, pr_w, pr_mode);
    }
    if (*synth) {
      auto cfg = resolve_config(synth_cf);
      return run_synth(cfg, sy_out, sy_count, sy_h, sy_w, sy_shapes, sy_textureless, sy_density,
                       sy_bg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
