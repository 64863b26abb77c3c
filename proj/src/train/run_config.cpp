// SPDX-License-Identifier: Apache-2.0
#include "sdt/train/run_config.hpp"

#include <set>
#include <sstream>

#include "sdt/errors.hpp"
#include "sdt/io/formats.hpp"
#include "sdt/kv.hpp"

namespace sdt::train {

namespace {

const std::set<std::string>& own_keys() {
  static const std::set<std::string> k = {
      "seed",     "epochs",   "batch_size",     "lr",          "beta1",      "beta2",       "adam_eps",
      "grad_clip", "checkpoint_every", "calibrate_offset", "lambda_p", "lambda_2", "matched_blocks",
      "teacher_dim", "kd",    "log_domain",     "data",        "out"};
  return k;
}

std::string join(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam betas must be in [0,1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
  if (!(grad_clip >= 0.0)) throw ConfigError("grad_clip must be >= 0");
}

RunConfig RunConfig::parse(const std::string& text) {
  const auto entries = kv::parse(text);
  std::set<std::string> model_keys;
  for (const char* k : model::ModelConfig::keys()) model_keys.insert(k);
  for (const auto& [key, value] : entries) {
    if (!model_keys.count(key) && !own_keys().count(key)) throw ConfigError("unknown config key " + key);
  }
  RunConfig rc;
  rc.model.apply_kv(entries);
  auto get = [&](const char* key) -> const std::string* {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };
  auto& t = rc.train;
  if (auto v = get("seed")) t.seed = kv::to_u64("seed", *v);
  if (auto v = get("epochs")) t.epochs = kv::to_size("epochs", *v);
  if (auto v = get("batch_size")) t.batch_size = kv::to_size("batch_size", *v);
  if (auto v = get("lr")) t.lr = kv::to_double("lr", *v);
  if (auto v = get("beta1")) t.beta1 = kv::to_double("beta1", *v);
  if (auto v = get("beta2")) t.beta2 = kv::to_double("beta2", *v);
  if (auto v = get("adam_eps")) t.adam_eps = kv::to_double("adam_eps", *v);
  if (auto v = get("grad_clip")) t.grad_clip = kv::to_double("grad_clip", *v);
  if (auto v = get("checkpoint_every")) t.checkpoint_every = kv::to_size("checkpoint_every", *v);
  if (auto v = get("calibrate_offset")) t.calibrate_offset = kv::to_bool("calibrate_offset", *v);
  auto& d = rc.distill;
  if (auto v = get("lambda_p")) d.lambda_p = kv::to_double("lambda_p", *v);
  if (auto v = get("lambda_2")) d.lambda_2 = kv::to_double("lambda_2", *v);
  if (auto v = get("matched_blocks")) d.matched_blocks = kv::to_size_list("matched_blocks", *v);
  if (auto v = get("teacher_dim")) d.teacher_dim = kv::to_size("teacher_dim", *v);
  if (auto v = get("kd")) d.kd = kv::to_bool("kd", *v);
  if (auto v = get("log_domain")) d.log_domain = kv::to_bool("log_domain", *v);
  const auto* data = get("data");
  const auto* out = get("out");
  if (!data) throw ConfigError("missing required key data");
  if (!out) throw ConfigError("missing required key out");
  rc.data_dir = *data;
  rc.out_dir = *out;
  rc.model.validate();
  rc.train.validate();
  rc.distill.validate(rc.model.blocks);
  return rc;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return parse(std::string(bytes.begin(), bytes.end()));
}

std::map<std::string, std::string> RunConfig::to_kv() const {
  auto out = model.to_kv();
  out["seed"] = std::to_string(train.seed);
  out["epochs"] = std::to_string(train.epochs);
  out["batch_size"] = std::to_string(train.batch_size);
  out["lr"] = kv::number(train.lr);
  out["beta1"] = kv::number(train.beta1);
  out["beta2"] = kv::number(train.beta2);
  out["adam_eps"] = kv::number(train.adam_eps);
  out["grad_clip"] = kv::number(train.grad_clip);
  out["checkpoint_every"] = std::to_string(train.checkpoint_every);
  out["calibrate_offset"] = train.calibrate_offset ? "on" : "off";
  out["lambda_p"] = kv::number(distill.lambda_p);
  out["lambda_2"] = kv::number(distill.lambda_2);
  if (!distill.matched_blocks.empty()) out["matched_blocks"] = join(distill.matched_blocks);
  out["teacher_dim"] = std::to_string(distill.teacher_dim);
  out["kd"] = distill.kd ? "on" : "off";
  out["log_domain"] = distill.log_domain ? "on" : "off";
  out["data"] = data_dir.string();
  out["out"] = out_dir.string();
  return out;
}

}  // namespace sdt::train
