// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "sdt/io/formats.hpp"
#include "sdt/kv.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int rc = -1;
  std::string out, err;
  std::map<std::string, std::string> kv() const { return sdt::kv::parse(out); }
};

const fs::path& work() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "sdt_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Run cli(const std::string& args) {
  const auto err_file = work() / "stderr.txt";
  const std::string cmd = std::string("\"") + SDT_CLI_PATH + "\" " + args + " 2>\"" + err_file.string() + "\"";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_file);
  return r;
}

std::string tiny_model_config() {
  const auto p = work() / "model.cfg";
  std::ofstream(p) << "timesteps=2\nheight=16\nwidth=16\nembed_dim=8\nmlp_ratio=1\n";
  return p.string();
}

std::string gen_tiny(const std::string& name, int samples = 2) {
  const auto dir = work() / name;
  const auto r = cli("gen --out " + dir.string() + " --samples " + std::to_string(samples) +
                     " --height 16 --width 16 --timesteps 2 --seed 5");
  EXPECT_EQ(r.rc, 0) << r.err;
  return dir.string();
}

}  // namespace

TEST(Cli, GenWritesDeterministicDataset) {
  const auto a = gen_tiny("gen_a", 4);
  const auto b = gen_tiny("gen_b", 4);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().filename() == "manifest.txt") continue;
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(fs::path(b) / e.path().filename())) << e.path();
  }
  EXPECT_EQ(files, 12u);
  const auto r = cli("gen --out " + (work() / "gen_c").string() + " --samples 4 --height 16 --width 16");
  EXPECT_EQ(r.kv().at("files"), "12");
}

TEST(Cli, GenRejectsBadGeometry) {
  const auto r = cli("gen --out " + (work() / "bad").string() + " --samples 1 --height 60");
  EXPECT_EQ(r.rc, 1);
  EXPECT_EQ(r.err.rfind("error=CONFIG/", 0), 0u) << r.err;
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("eval --data x").rc, 2);
  EXPECT_EQ(cli("frobnicate").rc, 2);
}

TEST(Cli, ZeroInitInfersHalfDepth) {
  const auto data = gen_tiny("infer");
  const auto ckpt = (work() / "zero.sdtw").string();
  auto r = cli("init --out " + ckpt + " --config " + tiny_model_config() + " --zero");
  ASSERT_EQ(r.rc, 0) << r.err;
  const auto out = (work() / "pred.dpth").string();
  r = cli("infer --ckpt " + ckpt + " --spk " + data + "/sample_0000.spk --out " + out);
  ASSERT_EQ(r.rc, 0) << r.err;
  const auto kv = r.kv();
  EXPECT_EQ(kv.at("height"), "16");
  EXPECT_DOUBLE_EQ(std::stod(kv.at("depth_min")), 0.5);
  EXPECT_DOUBLE_EQ(std::stod(kv.at("depth_max")), 0.5);
  const auto depth = sdt::io::read_depth(out);
  for (float v : depth.values) EXPECT_EQ(v, 0.5f);
  r = cli("infer --ckpt " + ckpt + " --spk " + data + "/sample_0000.spk --out " + (work() / "pred.pgm").string());
  EXPECT_EQ(r.rc, 0) << r.err;
  EXPECT_EQ(slurp(work() / "pred.pgm").rfind("P5", 0), 0u);
}

TEST(Cli, EvalReportsEachMetricOnce) {
  const auto data = gen_tiny("eval", 3);
  const auto ckpt = (work() / "eval.sdtw").string();
  ASSERT_EQ(cli("init --out " + ckpt + " --config " + tiny_model_config()).rc, 0);
  const auto csv = (work() / "eval.csv").string();
  const auto r = cli("eval --ckpt " + ckpt + " --data " + data + " --csv " + csv);
  ASSERT_EQ(r.rc, 0) << r.err;
  for (const char* key : {"abs_rel", "sq_rel", "mae", "rmse_log", "si_log", "delta1", "delta2", "delta3"}) {
    const std::string needle = std::string("\n") + key + "=";
    const auto first = ("\n" + r.out).find(needle);
    ASSERT_NE(first, std::string::npos) << key;
    EXPECT_EQ(("\n" + r.out).find(needle, first + 1), std::string::npos) << key;
  }
  EXPECT_EQ(r.kv().at("samples"), "3");
  const auto text = slurp(csv);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}

TEST(Cli, EnergyRowsSumToTotal) {
  const auto data = gen_tiny("energy");
  const auto ckpt = (work() / "energy.sdtw").string();
  ASSERT_EQ(cli("init --out " + ckpt + " --config " + tiny_model_config()).rc, 0);
  const auto r = cli("energy --ckpt " + ckpt + " --spk " + data + "/sample_0001.spk --e-mac 5 --e-ac 1");
  ASSERT_EQ(r.rc, 0) << r.err;
  const auto kv = r.kv();
  EXPECT_EQ(kv.at("e_mac_pJ"), "5");
  double sum = 0.0;
  for (std::size_t i = 0; kv.count("layer." + std::to_string(i) + ".energy_pJ"); ++i) {
    sum += std::stod(kv.at("layer." + std::to_string(i) + ".energy_pJ"));
  }
  const double total = std::stod(kv.at("total_pJ"));
  EXPECT_NEAR(sum, total, 1e-9 * total);
  EXPECT_NEAR(std::stod(kv.at("spike_pJ")) + std::stod(kv.at("float_pJ")), total, 1e-9 * total);
}

TEST(Cli, TrainPrintsSummaryAndCheckpoint) {
  const auto data = gen_tiny("train");
  const auto out = work() / "run";
  const auto cfg = work() / "run.cfg";
  std::ofstream(cfg) << "timesteps=2\nheight=16\nwidth=16\nembed_dim=8\nmlp_ratio=1\nepochs=3\nbatch_size=2\ndata="
                     << data << "\nout=" << out.string() << "\n";
  const auto r = cli("train --config " + cfg.string());
  ASSERT_EQ(r.rc, 0) << r.err;
  const auto kv = r.kv();
  EXPECT_EQ(kv.at("steps"), "3");
  EXPECT_TRUE(fs::exists(kv.at("checkpoint")));
  EXPECT_TRUE(kv.count("train_abs_rel"));
  const auto ev = cli("eval --ckpt " + kv.at("checkpoint") + " --data " + data);
  EXPECT_EQ(ev.kv().at("abs_rel"), kv.at("train_abs_rel"));
}

TEST(Cli, MissingFilesReportIo) {
  const auto r = cli("infer --ckpt /nonexistent.sdtw --spk /nonexistent.spk --out /tmp/x.pgm");
  EXPECT_EQ(r.rc, 1);
  EXPECT_EQ(r.err.rfind("error=IO/", 0), 0u) << r.err;
}
