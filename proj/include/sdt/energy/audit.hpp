// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sdt/io/spike_tensor.hpp"
#include "sdt/model/sdt_model.hpp"
#include "sdt/numerics/autograd.hpp"

namespace sdt::energy {

/// Per-operation energies in picojoules (45 nm figures by default).
struct EnergyConstants {
  double e_mac = 4.6;
  double e_ac = 0.9;
};

enum class LayerKind { spike, floating };
std::string to_string(LayerKind kind);

struct EnergyRow {
  std::string name;
  LayerKind kind = LayerKind::spike;
  double macs = 0.0;         // equivalent MACs per timestep per sample
  double synops = 0.0;       // operations actually charged
  double firing_rate = 0.0;  // input spike rate for spike layers, 1 for float
  double energy_pj = 0.0;
};

struct EnergyReport {
  EnergyConstants constants;
  std::size_t timesteps = 0;
  std::vector<EnergyRow> rows;
  double total_pj = 0.0;
  std::size_t param_count = 0;

  double total_mj() const noexcept { return total_pj * 1e-9; }
  /// Energy of rows whose name starts with `prefix`.
  double energy_pj(const std::string& prefix) const;
  double energy_pj(LayerKind kind) const;
  std::string to_kv() const;
  static std::string csv_header();
  std::vector<std::string> csv_rows() const;
};

double spike_layer_energy(double e_ac, double macs, double firing_rate, std::size_t timesteps);
double float_layer_energy(double e_mac, double macs);

/// Charges every trace entry with a MAC count. A layer runs `steps` times
/// per sample (frames / batch: T in the backbone, 1 in the head). Layers fed
/// by neuron spikes (mlif or residual-merge output) cost
/// e_ac * macs * rate * steps; everything else, including the first layer
/// reading the raw event input, costs e_mac * macs * steps. Energies are per
/// sample.
EnergyReport audit_trace(const num::OpTrace& trace, const EnergyConstants& constants, std::size_t timesteps,
                         std::size_t batch = 1);

/// The same layers evaluated once per sample as a non-spiking network:
/// e_mac * macs for every row.
EnergyReport float_twin(const num::OpTrace& trace, const EnergyConstants& constants, std::size_t timesteps,
                        std::size_t batch = 1);

/// Instrumented single-sample forward pass.
template <typename T>
num::OpTrace trace_forward(const model::SdtModel<T>& model, const io::SpikeTensor& sample);

template <typename T>
EnergyReport audit(const model::SdtModel<T>& model, const io::SpikeTensor& sample, const EnergyConstants& constants);

template <typename T>
std::size_t param_count(const model::SdtModel<T>& model) {
  return model.store().param_count();
}

}  // namespace sdt::energy
