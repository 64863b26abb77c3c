// SPDX-License-Identifier: Apache-2.0
#include "sdt/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <boost/math/tools/minima.hpp>

#include "sdt/distill/losses.hpp"
#include "sdt/errors.hpp"
#include "sdt/kv.hpp"
#include "sdt/train/optimizer.hpp"

namespace sdt::train {

std::string loss_csv(const std::vector<LossRecord>& curve) {
  std::ostringstream os;
  os << "step,total,l_p,l_2\n";
  for (const auto& r : curve) {
    os << r.step << ',' << kv::number(r.total) << ',' << kv::number(r.l_p) << ',' << kv::number(r.l_2) << '\n';
  }
  return os.str();
}

void check_compatible(const model::ModelConfig& cfg, const io::SampleTuple& sample) {
  const auto& s = sample.spikes;
  if (s.timesteps() != cfg.timesteps || s.channels() != cfg.channels || s.height() != cfg.height ||
      s.width() != cfg.width) {
    throw ConfigError("sample spikes [" + std::to_string(s.timesteps()) + "," + std::to_string(s.channels()) + "," +
                      std::to_string(s.height()) + "," + std::to_string(s.width()) + "] do not match model T=" +
                      std::to_string(cfg.timesteps) + " C=" + std::to_string(cfg.channels) + " " +
                      std::to_string(cfg.height) + "x" + std::to_string(cfg.width));
  }
  if (sample.depth.height != cfg.height || sample.depth.width != cfg.width) {
    throw ConfigError("depth map size does not match model");
  }
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  io::write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.integer(0, i - 1)]);
  return order;
}

}  // namespace

TrainResult train(const std::vector<io::SampleTuple>& dataset, const RunConfig& run, const ProgressFn& progress) {
  if (dataset.empty()) throw EmptyMaskError("empty training set");
  run.model.validate();
  run.train.validate();
  auto dcfg = run.distill;
  dcfg.validate(run.model.blocks);
  for (const auto& s : dataset) {
    check_compatible(run.model, s);
    if (dcfg.kd && !s.teacher_features) throw DataError("kd is on but a sample has no teacher features");
  }

  TrainResult result;
  result.model = std::make_unique<model::SdtModel<float>>(run.model, run.train.seed);
  auto& net = *result.model;
  distill::Distiller<float> distiller(run.model, dcfg, run.train.seed + 1);

  std::vector<num::Var<float>> params;
  for (const auto& p : net.store().params()) params.push_back(p.var);
  for (const auto& p : distiller.adapters().params()) params.push_back(p.var);
  Adam<float> adam(params, run.train.lr, run.train.beta1, run.train.beta2, run.train.adam_eps);

  const bool write = !run.out_dir.empty();
  if (write) {
    std::error_code ec;
    std::filesystem::create_directories(run.out_dir, ec);
    if (ec) throw IoError("cannot create " + run.out_dir.string() + ": " + ec.message());
  }
  Rng shuffle_rng(run.train.seed ^ 0x5eedULL);
  const std::size_t bs = std::min(run.train.batch_size, dataset.size());
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < run.train.epochs; ++epoch) {
    const auto order = shuffled(dataset.size(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(start + bs, order.size());
      std::vector<io::SpikeTensor> spikes;
      std::vector<io::DepthMap> depths;
      std::vector<const num::DenseTensor<float>*> teacher;
      for (std::size_t i = start; i < end; ++i) {
        const auto& s = dataset[order[i]];
        spikes.push_back(s.spikes);
        depths.push_back(s.depth);
        teacher.push_back(s.teacher_features ? &*s.teacher_features : nullptr);
      }
      num::Tape<float> tape;
      num::Context<float> ctx;
      ctx.tape = &tape;
      ctx.training = true;
      num::Var<float> input(model::make_input<float>(spikes));
      const auto features = net.backbone_forward(ctx, input);
      const auto pred = net.predict(ctx, features);
      auto terms = distiller.total_loss(ctx, features, pred, depths, teacher);
      const double total = static_cast<double>(terms.total.value()[0]);
      if (!std::isfinite(total)) throw NumericError("loss diverged at step " + std::to_string(step));
      tape.backward(terms.total);
      clip_grad_norm(adam.params(), run.train.grad_clip);
      adam.step();
      ++step;
      LossRecord rec{step, total, terms.l_p, terms.l_2};
      result.curve.push_back(rec);
      if (progress) progress(rec);
      if (write && run.train.checkpoint_every > 0 && step % run.train.checkpoint_every == 0) {
        char name[64];
        std::snprintf(name, sizeof name, "ckpt_step%06zu.sdtw", step);
        model::write_checkpoint(run.out_dir / name, model::capture(net));
      }
    }
  }
  if (run.train.calibrate_offset) result.output_offset = calibrate_output_offset(net, dataset);
  if (write) {
    write_text(run.loss_csv(), loss_csv(result.curve));
    model::write_checkpoint(run.final_checkpoint(), model::capture(net));
  }
  return result;
}

template <typename T>
double calibrate_output_offset(model::SdtModel<T>& model, const std::vector<io::SampleTuple>& dataset) {
  std::vector<double> z, g;
  for (const auto& s : dataset) {
    check_compatible(model.config(), s);
    num::Context<T> ctx;
    std::vector<io::SpikeTensor> batch{s.spikes};
    num::Var<T> input(model::make_input<T>(batch));
    const auto logits = model.head_logits(ctx, model.backbone_forward(ctx, input));
    for (std::size_t i = 0; i < s.depth.size(); ++i) {
      if (!s.depth.valid(i)) continue;
      z.push_back(static_cast<double>(logits.value()[i]));
      g.push_back(s.depth.values[i]);
    }
  }
  if (z.empty()) throw EmptyMaskError("no valid pixels for offset calibration");
  auto objective = [&](double b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double e = 1.0 / (1.0 + std::exp(-(z[i] + b))) - g[i];
      acc += e * e;
    }
    return acc;
  };
  const auto [b, err] = boost::math::tools::brent_find_minima(objective, -20.0, 20.0, 40);
  (void)err;
  auto bias = model.depth_head().output_bias();
  for (T& v : bias.mutable_value().values()) v += static_cast<T>(b);
  return b;
}

template <typename T>
EvalResult evaluate_model(const model::SdtModel<T>& model, const std::vector<io::SampleTuple>& dataset,
                          std::size_t threads, const energy::EnergyConstants& constants) {
  if (dataset.empty()) throw EmptyMaskError("empty evaluation set");
  for (const auto& s : dataset) check_compatible(model.config(), s);
  EvalResult out;
  out.per_sample.resize(dataset.size());
  auto work = [&](std::size_t i) {
    std::vector<io::SpikeTensor> batch{dataset[i].spikes};
    const auto pred = model.infer(batch);
    out.per_sample[i] = metrics::evaluate(pred.front(), dataset[i].depth);
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, dataset.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < dataset.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < dataset.size(); i += workers) work(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  out.mean = metrics::average(out.per_sample);
  out.energy = energy::audit(model, dataset.front().spikes, constants);
  return out;
}

EvalResult evaluate_checkpoint(const model::Checkpoint& ckpt, const std::vector<io::SampleTuple>& dataset,
                               std::size_t threads, const energy::EnergyConstants& constants) {
  const auto net = model::load_model<float>(ckpt);
  return evaluate_model(*net, dataset, threads, constants);
}

std::size_t threads_from_env() {
  const char* v = std::getenv("SDT_THREADS");
  if (!v || !*v) return 1;
  const std::size_t n = kv::to_size("SDT_THREADS", v);
  if (n == 0) throw ConfigError("SDT_THREADS must be >= 1");
  return n;
}

template double calibrate_output_offset(model::SdtModel<float>&, const std::vector<io::SampleTuple>&);
template double calibrate_output_offset(model::SdtModel<double>&, const std::vector<io::SampleTuple>&);
template EvalResult evaluate_model(const model::SdtModel<float>&, const std::vector<io::SampleTuple>&, std::size_t,
                                   const energy::EnergyConstants&);
template EvalResult evaluate_model(const model::SdtModel<double>&, const std::vector<io::SampleTuple>&, std::size_t,
                                   const energy::EnergyConstants&);

}  // namespace sdt::train
