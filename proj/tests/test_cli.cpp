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
// End-to-end exercise of the CLI surface: synth -> train -> infer -> eval
// -> profile on a tiny problem.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "srh/pfm.hpp"
#include "srh/png_io.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_dir;

int run(const std::string& args) {
  std::string cmd = std::string(SRH_CLI_PATH) + " " + args + " >> " + g_dir + "/cli.log 2>&1";
  return std::system(cmd.c_str());
}

TEST(Cli, EndToEnd) {
  g_dir = (fs::temp_directory_path() / "srh_cli_e2e").string();
  fs::remove_all(g_dir);
  fs::create_directories(g_dir);

  ASSERT_EQ(0, run("synth --out " + g_dir + "/data --count 2 --height 48 --width 48 --d-max 16"
                   " --seed 5"));
  ASSERT_TRUE(fs::exists(g_dir + "/data/sample_000/left.pfm"));
  ASSERT_TRUE(fs::exists(g_dir + "/data/sample_000/disp.png"));
  ASSERT_TRUE(fs::exists(g_dir + "/data/preview.png"));

  ASSERT_EQ(0, run("train --data " + g_dir + "/data --out " + g_dir + "/m.srhc --steps 2"
                   " --d-max 16 --cf 8 --crop-h 48 --crop-w 48 --seed 3"));
  ASSERT_TRUE(fs::exists(g_dir + "/m.srhc"));

  ASSERT_EQ(0, run("infer --ckpt " + g_dir + "/m.srhc --left " + g_dir +
                   "/data/sample_000/left.pfm --right " + g_dir + "/data/sample_000/right.pfm"
                   " --out " + g_dir + "/pred.pfm --png " + g_dir + "/pred.png --render " + g_dir +
                   "/pred_color.png --streaming"));
  ASSERT_TRUE(fs::exists(g_dir + "/pred.pfm"));
  auto pred = srh::load_pfm(g_dir + "/pred.pfm");
  EXPECT_EQ(pred.h, 48);
  EXPECT_EQ(pred.w, 48);

  ASSERT_EQ(0, run("eval --pred " + g_dir + "/pred.pfm --gt " + g_dir +
                   "/data/sample_000/disp.pfm --noc " + g_dir + "/data/sample_000/noc.pfm"
                   " --region both --d-max 16 --out " + g_dir + "/metrics.csv"));
  ASSERT_TRUE(fs::exists(g_dir + "/metrics.csv"));
  std::ifstream csv(g_dir + "/metrics.csv");
  std::string header, row1, row2;
  std::getline(csv, header);
  std::getline(csv, row1);
  std::getline(csv, row2);
  EXPECT_NE(header.find("epe"), std::string::npos);
  EXPECT_EQ(row1.substr(0, 3), "all");
  EXPECT_EQ(row2.substr(0, 3), "noc");

  ASSERT_EQ(0, run("profile --ckpt " + g_dir + "/m.srhc --axis d_max --points 8,16"
                   " --height 48 --width 48 --mode both"));

  // config file + CLI precedence: the flag must beat the file
  {
    std::ofstream os(g_dir + "/run.cfg");
    os << "d_max=32\ncf=8\ncrop_h=48\ncrop_w=48\nsteps=1\n";
  }
  ASSERT_EQ(0, run("train --config " + g_dir + "/run.cfg --d-max 16 --data " + g_dir +
                   "/data --out " + g_dir + "/m2.srhc --seed 4"));
  ASSERT_TRUE(fs::exists(g_dir + "/m2.srhc"));

  // unknown aggregator must fail loudly
  EXPECT_NE(0, run("train --data " + g_dir + "/data --aggregator 3dcnn --out " + g_dir +
                   "/bad.srhc --steps 1 --cf 8 --crop-h 48 --crop-w 48 --d-max 16"));

  fs::remove_all(g_dir);
}

}  // namespace
