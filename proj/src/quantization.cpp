#include "wasnrate/quantization.hpp"

#include <algorithm>
#include <cmath>

namespace wasn {

void QuantizerSpec::validate() const {
  if (amplitudes.size() != bits.size()) {
    throw DimensionMismatch("quantizer amplitudes and bits differ in length");
  }
  for (Eigen::Index k = 0; k < amplitudes.size(); ++k) {
    if (!(amplitudes[k] > 0.0)) throw InvalidConfig("quantizer amplitude must be positive");
    if (!(bits[k] >= 0.0)) throw InvalidConfig("quantizer rate must be non-negative");
  }
}

double quantizer_step(double amplitude, double bits) { return amplitude / std::exp2(bits); }

double quantize_uniform(double sample, double amplitude, int bits) {
  if (bits <= 0) return 0.0;
  const double step = quantizer_step(amplitude, bits);
  const double clamped = std::clamp(sample, -amplitude / 2.0, amplitude / 2.0 - step / 2.0);
  return step * (std::floor(clamped / step) + 0.5);
}

void quantize_signal(std::span<double> samples, double amplitude, int bits) {
  for (double& s : samples) s = quantize_uniform(s, amplitude, bits);
}

double quant_noise_variance(double amplitude, double bits) {
  return amplitude * amplitude / (12.0 * std::pow(4.0, bits));
}

QuantNoiseCov quant_noise_cov(const QuantizerSpec& spec) {
  spec.validate();
  QuantNoiseCov q;
  q.diag.resize(spec.amplitudes.size());
  for (Eigen::Index k = 0; k < q.diag.size(); ++k) {
    q.diag[k] = quant_noise_variance(spec.amplitudes[k], spec.bits[k]);
  }
  return q;
}

double estimate_amplitude(std::span<const double> signal) {
  if (signal.empty()) throw InvalidConfig("cannot estimate amplitude of an empty signal");
  double peak = 0.0;
  for (double s : signal) peak = std::max(peak, std::abs(s));
  if (peak == 0.0) throw InvalidConfig("amplitude undefined for an all-zero signal");
  return 2.0 * peak;
}

}  // namespace wasn
