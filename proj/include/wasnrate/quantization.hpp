#pragma once

#include <span>
#include <vector>

#include "wasnrate/types.hpp"

namespace wasn {

/// Per-sensor quantizer settings: full range A_k (the quantizer covers
/// [-A_k/2, A_k/2]) and rate b_k in bits per sample. Fractional rates are
/// allowed for the noise model only.
struct QuantizerSpec {
  RVector amplitudes;
  RVector bits;

  void validate() const;
};

/// Diagonal of R_qq: sigma_q_k^2 = A_k^2 / (12 * 4^b_k).
struct QuantNoiseCov {
  RVector diag;

  CMatrix matrix() const { return diag.cast<cdouble>().asDiagonal(); }
};

/// Cell width A / 2^bits.
double quantizer_step(double amplitude, double bits);

/// Mid-rise uniform quantizer. Input is clamped into [-A/2, A/2 - step/2]
/// so the upper boundary falls in the top cell. bits == 0 returns 0
/// (nothing is transmitted).
double quantize_uniform(double sample, double amplitude, int bits);

void quantize_signal(std::span<double> samples, double amplitude, int bits);

/// Variance model for one sensor; accepts fractional bits.
double quant_noise_variance(double amplitude, double bits);

QuantNoiseCov quant_noise_cov(const QuantizerSpec& spec);

/// 2 * max |sample|. Throws InvalidConfig on empty or all-zero input.
double estimate_amplitude(std::span<const double> signal);

}  // namespace wasn
