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

#include <fstream>
#include <map>
#include <sstream>

#include "srh/pipeline.hpp"

namespace srh {

// Flat key=value run configuration. Precedence: explicit overrides (CLI) >
// config file > defaults.
struct RunConfig {
  index_t d_max = 192;
  index_t s = 4;
  index_t cf = 32;
  std::string aggregator = "srh";
  double w1 = 0.4, w2 = 1.2;
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  index_t crop_h = 240, crop_w = 576;
  index_t epochs = 10;
  index_t steps = 0;  // when > 0, overrides epochs * dataset size
  std::uint64_t seed = 0;
  std::string precision = "f32";
  bool instance_norm = false;
  std::array<double, 3> means{0.5, 0.5, 0.5};
  std::array<double, 3> stds{0.5, 0.5, 0.5};

  ModelConfig model() const {
    ModelConfig m;
    m.cf = cf;
    m.s = s;
    m.aggregator = aggregator;
    m.instance_norm = instance_norm;
    m.means = means;
    m.stds = stds;
    return m;
  }

  void validate() const {
    check(d_max >= 1, "config: d_max must be >= 1");
    check(s == 4, "config: downsample factor must be 4");
    check(cf >= 8 && cf % 4 == 0, "config: cf must be a multiple of 4, >= 8");
    check(aggregator == "srh" || aggregator == "stacked_gru",
          "config: aggregator must be srh or stacked_gru, got ", aggregator);
    check(w1 >= 0 && w2 >= 0 && w1 + w2 > 0, "config: loss weights must be nonnegative, not both 0");
    check(lr > 0, "config: learning rate must be positive");
    check(crop_h % (4 * s) == 0 && crop_w % (4 * s) == 0, "config: crop dims must be multiples of ",
          4 * s);
    check(precision == "f32" || precision == "f64", "config: precision must be f32 or f64");
    for (double sd : stds) check(sd > 0, "config: stds must be strictly positive");
  }
};

namespace detail {

inline void assign_key(RunConfig& c, const std::string& key, const std::string& value) {
  auto as_i64 = [&] { return static_cast<index_t>(std::stoll(value)); };
  auto as_f64 = [&] { return std::stod(value); };
  auto as_bool = [&] {
    check(value == "0" || value == "1" || value == "true" || value == "false",
          "config: bad boolean '", value, "' for ", key);
    return value == "1" || value == "true";
  };
  auto as_triple = [&](std::array<double, 3>& out) {
    std::istringstream ss(value);
    std::string tok;
    for (int i = 0; i < 3; ++i) {
      check(static_cast<bool>(std::getline(ss, tok, ',')), "config: ", key,
            " needs three comma-separated values");
      out[static_cast<size_t>(i)] = std::stod(tok);
    }
  };
  if (key == "d_max") c.d_max = as_i64();
  else if (key == "s") c.s = as_i64();
  else if (key == "cf") c.cf = as_i64();
  else if (key == "aggregator") c.aggregator = value;
  else if (key == "w1") c.w1 = as_f64();
  else if (key == "w2") c.w2 = as_f64();
  else if (key == "lr") c.lr = as_f64();
  else if (key == "beta1") c.beta1 = as_f64();
  else if (key == "beta2") c.beta2 = as_f64();
  else if (key == "adam_eps") c.adam_eps = as_f64();
  else if (key == "crop_h") c.crop_h = as_i64();
  else if (key == "crop_w") c.crop_w = as_i64();
  else if (key == "epochs") c.epochs = as_i64();
  else if (key == "steps") c.steps = as_i64();
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(std::stoull(value));
  else if (key == "precision") c.precision = value;
  else if (key == "instance_norm") c.instance_norm = as_bool();
  else if (key == "means") as_triple(c.means);
  else if (key == "stds") as_triple(c.stds);
  else check(false, "config: unknown key '", key, "'");
}

}  // namespace detail

inline void apply_config_line(RunConfig& c, const std::string& line) {
  std::string t = line;
  if (auto hash = t.find('#'); hash != std::string::npos) t = t.substr(0, hash);
  auto ltrim = t.find_first_not_of(" \t\r\n");
  if (ltrim == std::string::npos) return;
  auto rtrim = t.find_last_not_of(" \t\r\n");
  t = t.substr(ltrim, rtrim - ltrim + 1);
  auto eq = t.find('=');
  check(eq != std::string::npos, "config: expected key=value, got '", t, "'");
  std::string key = t.substr(0, eq), value = t.substr(eq + 1);
  auto strip = [](std::string& s) {
    auto a = s.find_first_not_of(" \t");
    auto b = s.find_last_not_of(" \t");
    s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
  };
  strip(key);
  strip(value);
  detail::assign_key(c, key, value);
}

inline void load_config_file(RunConfig& c, const std::string& path) {
  std::ifstream is(path);
  check_io(is.good(), "config: cannot open ", path);
  std::string line;
  while (std::getline(is, line)) apply_config_line(c, line);
}

inline void apply_overrides(RunConfig& c, const std::map<std::string, std::string>& overrides) {
  for (const auto& [k, v] : overrides) detail::assign_key(c, k, v);
}

}  // namespace srh
