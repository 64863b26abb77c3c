// SPDX-License-Identifier: Apache-2.0
// sdt: dataset generation, training, evaluation, inference and energy audit.
// Standard output carries key=value lines only; diagnostics go to stderr.
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "sdt/energy/audit.hpp"
#include "sdt/errors.hpp"
#include "sdt/io/formats.hpp"
#include "sdt/io/synthetic.hpp"
#include "sdt/kv.hpp"
#include "sdt/model/checkpoint.hpp"
#include "sdt/train/trainer.hpp"

namespace {

using namespace sdt;

void write_text(const std::filesystem::path& path, const std::string& text) {
  io::write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

int cmd_gen(const std::filesystem::path& out, const io::SyntheticParams& params) {
  const auto samples = io::gen_synthetic(params);
  io::save_dataset(out, samples);
  std::size_t files = 0;
  for (const auto& s : samples) files += s.teacher_features ? 3 : 2;
  std::cout << "out=" << out.string() << "\nsamples=" << samples.size() << "\nfiles=" << files
            << "\nmanifest=" << (out / io::kManifestName).string() << '\n';
  return 0;
}

int cmd_init(const std::filesystem::path& out, const std::string& config, std::uint64_t seed, bool zero) {
  model::ModelConfig cfg;
  if (!config.empty()) {
    const auto bytes = io::read_file(config);
    const auto entries = kv::parse(std::string(bytes.begin(), bytes.end()));
    for (const auto& [k, v] : entries) {
      bool known = false;
      for (const char* key : model::ModelConfig::keys()) known = known || k == key;
      if (!known) throw ConfigError("unknown model key " + k);
    }
    cfg.apply_kv(entries);
  }
  model::SdtModel<float> net(cfg, seed);
  if (zero) {
    for (const auto& p : net.store().params()) {
      num::Var<float> v = p.var;
      v.mutable_value().fill(0.0f);
    }
  }
  model::write_checkpoint(out, model::capture(net));
  std::cout << "checkpoint=" << out.string() << "\nparam_count=" << net.store().param_count() << '\n';
  return 0;
}

int cmd_train(const std::string& config) {
  const auto run = train::RunConfig::load(config);
  const auto data = io::load_dataset(run.data_dir);
  const auto result = train::train(data, run, [](const train::LossRecord& r) {
    if (r.step == 1 || r.step % 50 == 0) {
      std::cerr << "step " << r.step << " total " << r.total << " l_p " << r.l_p << " l_2 " << r.l_2 << '\n';
    }
  });
  const auto eval = train::evaluate_model(*result.model, data, train::threads_from_env());
  std::cout << "steps=" << result.curve.size() << '\n'
            << "initial_l_2=" << kv::number(result.curve.front().l_2) << '\n'
            << "final_l_2=" << kv::number(result.curve.back().l_2) << '\n'
            << "final_total=" << kv::number(result.curve.back().total) << '\n'
            << "output_offset=" << kv::number(result.output_offset) << '\n'
            << "loss_csv=" << run.loss_csv().string() << '\n'
            << "checkpoint=" << run.final_checkpoint().string() << '\n'
            << eval.mean.to_kv("train_");
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir, const std::string& csv) {
  const auto checkpoint = model::read_checkpoint(ckpt);
  const auto data = io::load_dataset(data_dir);
  const auto result = train::evaluate_checkpoint(checkpoint, data, train::threads_from_env());
  std::cout << "samples=" << data.size() << '\n'
            << result.mean.to_kv() << "energy_total_mJ=" << kv::number(result.energy.total_mj()) << '\n'
            << "param_count=" << result.energy.param_count << '\n';
  if (!csv.empty()) {
    std::ostringstream os;
    os << "sample," << metrics::MetricsReport::csv_header() << '\n';
    for (std::size_t i = 0; i < result.per_sample.size(); ++i) os << i << ',' << result.per_sample[i].csv_row() << '\n';
    os << "mean," << result.mean.csv_row() << '\n';
    write_text(csv, os.str());
  }
  return 0;
}

int cmd_infer(const std::string& ckpt, const std::string& spk, const std::filesystem::path& out) {
  const auto net = model::load_model<float>(model::read_checkpoint(ckpt));
  std::vector<io::SpikeTensor> batch{io::read_spk(spk)};
  train::check_compatible(net->config(), io::SampleTuple{batch.front(), io::DepthMap(net->config().height,
                                                                                      net->config().width), {}});
  const auto depth = net->infer(batch).front();
  if (out.extension() == ".pgm") {
    io::write_depth_pgm(out, depth);
  } else {
    io::write_depth(out, depth);
  }
  double mean = 0.0, lo = 1.0, hi = 0.0;
  for (float v : depth.values) {
    mean += v;
    lo = std::min(lo, static_cast<double>(v));
    hi = std::max(hi, static_cast<double>(v));
  }
  mean /= static_cast<double>(depth.size());
  std::cout << "out=" << out.string() << "\nheight=" << depth.height << "\nwidth=" << depth.width
            << "\ndepth_mean=" << kv::number(mean) << "\ndepth_min=" << kv::number(lo)
            << "\ndepth_max=" << kv::number(hi) << '\n';
  return 0;
}

int cmd_energy(const std::string& ckpt, const std::string& spk, const std::string& csv,
               const energy::EnergyConstants& constants) {
  const auto net = model::load_model<float>(model::read_checkpoint(ckpt));
  const auto spikes = io::read_spk(spk);
  train::check_compatible(net->config(),
                          io::SampleTuple{spikes, io::DepthMap(net->config().height, net->config().width), {}});
  const auto report = energy::audit(*net, spikes, constants);
  std::cout << report.to_kv();
  if (!csv.empty()) {
    std::ostringstream os;
    os << energy::EnergyReport::csv_header() << '\n';
    for (const auto& row : report.csv_rows()) os << row << '\n';
    write_text(csv, os.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spike-driven transformer depth estimation"};
  app.require_subcommand(1);

  io::SyntheticParams gen;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic event/depth/teacher dataset");
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();
  gen_cmd->add_option("--samples", gen.samples, "Sample count")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--height", gen.height, "Frame height")->capture_default_str();
  gen_cmd->add_option("--width", gen.width, "Frame width")->capture_default_str();
  gen_cmd->add_option("--timesteps", gen.timesteps, "Time bins")->capture_default_str();
  gen_cmd->add_option("--teacher-dim", gen.teacher_dim, "Teacher feature channels, 0 for none")->capture_default_str();

  std::string init_out, init_config;
  std::uint64_t init_seed = 7;
  bool init_zero = false;
  auto* init_cmd = app.add_subcommand("init", "Write a freshly initialized checkpoint");
  init_cmd->add_option("--out", init_out, "Checkpoint path")->required();
  init_cmd->add_option("--config", init_config, "key=value model config");
  init_cmd->add_option("--seed", init_seed, "Init seed")->capture_default_str();
  init_cmd->add_flag("--zero", init_zero, "Zero every parameter");

  std::string train_config;
  auto* train_cmd = app.add_subcommand("train", "Train from a run config");
  train_cmd->add_option("--config", train_config, "key=value run config")->required();

  std::string ckpt, data_dir, csv, spk, infer_out;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  eval_cmd->add_option("--csv", csv, "Per-sample CSV output");

  auto* infer_cmd = app.add_subcommand("infer", "Predict depth for one spike tensor");
  infer_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  infer_cmd->add_option("--spk", spk, "Input SPKT file")->required();
  infer_cmd->add_option("--out", infer_out, "Output .pgm or .dpth")->required();

  energy::EnergyConstants constants;
  auto* energy_cmd = app.add_subcommand("energy", "Theoretical energy audit of one forward pass");
  energy_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  energy_cmd->add_option("--spk", spk, "Input SPKT file")->required();
  energy_cmd->add_option("--csv", csv, "Per-layer CSV output");
  energy_cmd->add_option("--e-mac", constants.e_mac, "Energy per MAC, pJ")->capture_default_str();
  energy_cmd->add_option("--e-ac", constants.e_ac, "Energy per AC, pJ")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cerr << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error=CONFIG/" << e.what() << '\n';
    return 2;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen_out, gen);
    if (*init_cmd) return cmd_init(init_out, init_config, init_seed, init_zero);
    if (*train_cmd) return cmd_train(train_config);
    if (*eval_cmd) return cmd_eval(ckpt, data_dir, csv);
    if (*infer_cmd) return cmd_infer(ckpt, spk, infer_out);
    if (*energy_cmd) return cmd_energy(ckpt, spk, csv, constants);
  } catch (const sdt::Error& e) {
    std::cerr << "error=" << e.category() << '/' << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error=IO/" << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error=INTERNAL/" << e.what() << '\n';
    return 1;
  }
  return 1;
}
