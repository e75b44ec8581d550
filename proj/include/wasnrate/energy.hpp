#pragma once

#include <vector>

#include "wasnrate/scene.hpp"
#include "wasnrate/types.hpp"

namespace wasn {

/// Sensor-to-FC links. Distances are already clamped to kMinDistance.
struct ChannelModel {
  RVector distances;
  RVector noise_psd;
  double path_loss_exponent = 2.0;

  std::size_t size() const { return static_cast<std::size_t>(distances.size()); }
  void validate() const;

  /// d_k^r V_k, the per-sensor cost weight of (4^b - 1).
  RVector cost_weights() const;

  /// Builds links from sensor and FC positions with V_k = noise_psd everywhere.
  static ChannelModel from_scene(const SceneConfig& scene, double noise_psd = 1.0,
                                 double path_loss_exponent = 2.0);
};

struct EnergyReport {
  RVector per_sensor;
  double total = 0.0;
  double eur = 0.0;
};

/// E = d^r V (4^b - 1). Throws InvalidConfig for negative bits.
double transmit_energy(double bits, double distance, double noise_psd, double exponent = 2.0);

/// b = log2(1 + snr) / 2.
double capacity_bits(double snr);

/// SNR = d^-r E / V.
double channel_snr(double energy, double distance, double noise_psd, double exponent = 2.0);

/// Total energy for a rate vector; rates may be fractional.
double total_energy(const RVector& bits, const ChannelModel& channel);

/// Per-sensor energies and EUR = total / energy with every sensor at b0.
EnergyReport energy_usage_ratio(const RVector& bits, const ChannelModel& channel, double b0);

}  // namespace wasn
