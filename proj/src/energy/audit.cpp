// SPDX-License-Identifier: Apache-2.0
#include "sdt/energy/audit.hpp"

#include <set>
#include <sstream>

#include "sdt/errors.hpp"
#include "sdt/kv.hpp"

namespace sdt::energy {

namespace {

struct Layer {
  std::string name;
  double macs = 0.0;
  double rate = 0.0;
  bool spiking = false;
  std::size_t steps = 1;
};

std::vector<Layer> collect(const num::OpTrace& trace, std::size_t timesteps, std::size_t batch) {
  if (timesteps == 0) throw DimensionError("energy audit needs T >= 1");
  if (batch == 0) throw DimensionError("energy audit needs batch >= 1");
  std::vector<Layer> layers;
  // Tensors emitted by spiking neurons or merged spike streams.
  std::set<std::uint64_t> spike_streams;
  std::size_t index = 0;
  for (const auto& e : trace.entries()) {
    if (e.macs_per_frame > 0.0 && !e.inputs.empty()) {
      Layer l;
      l.name = (e.scope.empty() ? "" : e.scope + ".") + e.op + "#" + std::to_string(index++);
      if (e.frames % batch != 0) throw DimensionError("trace frames not a multiple of the batch");
      l.steps = e.frames / batch;
      l.macs = e.macs_per_frame;
      if (e.op == "spike_attention") {
        l.spiking = true;
        l.rate = 0.5 * (e.input_rates.at(0) + e.input_rates.at(1));
      } else {
        l.spiking = spike_streams.count(e.inputs.front()) && e.inputs_binary.front() && !e.float_multiply;
        l.rate = l.spiking ? e.input_rates.front() : 1.0;
      }
      layers.push_back(std::move(l));
    }
    if ((e.op == "mlif" || e.op == "residual_merge") && e.output_binary) spike_streams.insert(e.output);
  }
  return layers;
}

void finalize(EnergyReport& report) {
  report.total_pj = 0.0;
  for (const auto& r : report.rows) report.total_pj += r.energy_pj;
}

}  // namespace

std::string to_string(LayerKind kind) { return kind == LayerKind::spike ? "spike" : "float"; }

double EnergyReport::energy_pj(const std::string& prefix) const {
  double acc = 0.0;
  for (const auto& r : rows) {
    if (r.name.compare(0, prefix.size(), prefix) == 0) acc += r.energy_pj;
  }
  return acc;
}

double EnergyReport::energy_pj(LayerKind kind) const {
  double acc = 0.0;
  for (const auto& r : rows) {
    if (r.kind == kind) acc += r.energy_pj;
  }
  return acc;
}

std::string EnergyReport::to_kv() const {
  std::ostringstream os;
  os << "e_mac_pJ=" << kv::number(constants.e_mac) << '\n';
  os << "e_ac_pJ=" << kv::number(constants.e_ac) << '\n';
  os << "timesteps=" << timesteps << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::string p = "layer." + std::to_string(i) + ".";
    os << p << "name=" << r.name << '\n';
    os << p << "kind=" << to_string(r.kind) << '\n';
    os << p << "macs=" << kv::number(r.macs) << '\n';
    os << p << "synops=" << kv::number(r.synops) << '\n';
    os << p << "firing_rate=" << kv::number(r.firing_rate) << '\n';
    os << p << "energy_pJ=" << kv::number(r.energy_pj) << '\n';
  }
  os << "spike_pJ=" << kv::number(energy_pj(LayerKind::spike)) << '\n';
  os << "float_pJ=" << kv::number(energy_pj(LayerKind::floating)) << '\n';
  os << "total_pJ=" << kv::number(total_pj) << '\n';
  os << "total_mJ=" << kv::number(total_mj()) << '\n';
  os << "param_count=" << param_count << '\n';
  return os.str();
}

std::string EnergyReport::csv_header() { return "name,kind,macs,synops,firing_rate,energy_pJ"; }

std::vector<std::string> EnergyReport::csv_rows() const {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    out.push_back(r.name + "," + to_string(r.kind) + "," + kv::number(r.macs) + "," + kv::number(r.synops) + "," +
                  kv::number(r.firing_rate) + "," + kv::number(r.energy_pj));
  }
  return out;
}

double spike_layer_energy(double e_ac, double macs, double firing_rate, std::size_t timesteps) {
  return e_ac * macs * firing_rate * static_cast<double>(timesteps);
}

double float_layer_energy(double e_mac, double macs) { return e_mac * macs; }

EnergyReport audit_trace(const num::OpTrace& trace, const EnergyConstants& constants, std::size_t timesteps,
                         std::size_t batch) {
  EnergyReport report;
  report.constants = constants;
  report.timesteps = timesteps;
  for (const auto& l : collect(trace, timesteps, batch)) {
    EnergyRow r;
    r.name = l.name;
    r.macs = l.macs;
    r.firing_rate = l.rate;
    const double steps = static_cast<double>(l.steps);
    if (l.spiking) {
      r.kind = LayerKind::spike;
      r.synops = l.macs * l.rate * steps;
      r.energy_pj = spike_layer_energy(constants.e_ac, l.macs, l.rate, l.steps);
    } else {
      r.kind = LayerKind::floating;
      r.synops = l.macs * steps;
      r.energy_pj = float_layer_energy(constants.e_mac, l.macs) * steps;
    }
    report.rows.push_back(std::move(r));
  }
  finalize(report);
  return report;
}

EnergyReport float_twin(const num::OpTrace& trace, const EnergyConstants& constants, std::size_t timesteps,
                        std::size_t batch) {
  EnergyReport report;
  report.constants = constants;
  report.timesteps = timesteps;
  for (const auto& l : collect(trace, timesteps, batch)) {
    EnergyRow r;
    r.name = l.name;
    r.kind = LayerKind::floating;
    r.macs = l.macs;
    r.synops = l.macs;
    r.firing_rate = 1.0;
    r.energy_pj = float_layer_energy(constants.e_mac, l.macs);
    report.rows.push_back(std::move(r));
  }
  finalize(report);
  return report;
}

template <typename T>
num::OpTrace trace_forward(const model::SdtModel<T>& model, const io::SpikeTensor& sample) {
  num::OpTrace trace;
  num::Context<T> ctx;
  ctx.trace = &trace;
  std::vector<io::SpikeTensor> batch{sample};
  num::Var<T> input(model::make_input<T>(batch));
  const auto features = model.backbone_forward(ctx, input);
  model.predict(ctx, features);
  return trace;
}

template <typename T>
EnergyReport audit(const model::SdtModel<T>& model, const io::SpikeTensor& sample, const EnergyConstants& constants) {
  auto report = audit_trace(trace_forward(model, sample), constants, model.config().timesteps);
  report.param_count = param_count(model);
  return report;
}

template num::OpTrace trace_forward(const model::SdtModel<float>&, const io::SpikeTensor&);
template num::OpTrace trace_forward(const model::SdtModel<double>&, const io::SpikeTensor&);
template EnergyReport audit(const model::SdtModel<float>&, const io::SpikeTensor&, const EnergyConstants&);
template EnergyReport audit(const model::SdtModel<double>&, const io::SpikeTensor&, const EnergyConstants&);

}  // namespace sdt::energy
