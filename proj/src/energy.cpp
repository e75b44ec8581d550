#include "wasnrate/energy.hpp"

#include <cmath>
#include <numbers>

namespace wasn {

void ChannelModel::validate() const {
  if (distances.size() != noise_psd.size()) {
    throw DimensionMismatch("channel distances and noise PSDs differ in length");
  }
  for (Eigen::Index k = 0; k < distances.size(); ++k) {
    if (!(distances[k] > 0.0)) throw InvalidConfig("channel distance must be positive");
    if (!(noise_psd[k] > 0.0)) throw InvalidConfig("channel noise PSD must be positive");
  }
  if (path_loss_exponent < 2.0 || path_loss_exponent > 6.0) {
    throw InvalidConfig("path loss exponent must lie in [2, 6]");
  }
}

RVector ChannelModel::cost_weights() const {
  return distances.array().pow(path_loss_exponent) * noise_psd.array();
}

ChannelModel ChannelModel::from_scene(const SceneConfig& scene, double noise_psd,
                                      double path_loss_exponent) {
  ChannelModel ch;
  const auto m = static_cast<Eigen::Index>(scene.sensor_count());
  ch.distances.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    ch.distances[k] = std::max(
        distance(scene.sensor_positions[static_cast<std::size_t>(k)], scene.fc_position),
        kMinDistance);
  }
  ch.noise_psd = RVector::Constant(m, noise_psd);
  ch.path_loss_exponent = path_loss_exponent;
  ch.validate();
  return ch;
}

double transmit_energy(double bits, double distance, double noise_psd, double exponent) {
  if (bits < 0.0) throw InvalidConfig("bits must be non-negative");
  return std::pow(distance, exponent) * noise_psd * std::expm1(bits * std::log(4.0));
}

double capacity_bits(double snr) { return 0.5 * std::log1p(snr) / std::numbers::ln2; }

double channel_snr(double energy, double distance, double noise_psd, double exponent) {
  return std::pow(distance, -exponent) * energy / noise_psd;
}

double total_energy(const RVector& bits, const ChannelModel& channel) {
  if (bits.size() != channel.distances.size()) {
    throw DimensionMismatch("rate vector length does not match channel count");
  }
  double total = 0.0;
  for (Eigen::Index k = 0; k < bits.size(); ++k) {
    total += transmit_energy(bits[k], channel.distances[k], channel.noise_psd[k],
                             channel.path_loss_exponent);
  }
  return total;
}

EnergyReport energy_usage_ratio(const RVector& bits, const ChannelModel& channel, double b0) {
  if (bits.size() != channel.distances.size()) {
    throw DimensionMismatch("rate vector length does not match channel count");
  }
  EnergyReport rep;
  rep.per_sensor.resize(bits.size());
  double max_total = 0.0;
  for (Eigen::Index k = 0; k < bits.size(); ++k) {
    if (bits[k] > b0) throw InvalidConfig("rate exceeds the maximum rate b0");
    rep.per_sensor[k] = transmit_energy(bits[k], channel.distances[k], channel.noise_psd[k],
                                        channel.path_loss_exponent);
    rep.total += rep.per_sensor[k];
    max_total += transmit_energy(b0, channel.distances[k], channel.noise_psd[k],
                                 channel.path_loss_exponent);
  }
  rep.eur = max_total > 0.0 ? rep.total / max_total : 0.0;
  return rep;
}

}  // namespace wasn
