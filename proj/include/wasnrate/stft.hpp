#pragma once

#include <cstddef>
#include <vector>

#include "wasnrate/types.hpp"

namespace wasn {

/// Square-root Hann analysis/synthesis framing with 50% overlap.
struct FrameSpec {
  std::size_t frame_len = 320;  // 20 ms at 16 kHz
  std::size_t hop = 160;
  std::size_t fft_len = 320;

  static FrameSpec for_duration(double seconds, double sample_rate);

  std::size_t bins() const { return fft_len / 2 + 1; }
  /// Sum of squared window samples (frame_len / 2 for the periodic window).
  double window_energy() const;
  void validate() const;
};

/// Periodic square-root Hann window; w[n]^2 + w[n + N/2]^2 = 1.
std::vector<double> sqrt_hann(std::size_t length);

/// Complex STFT coefficients indexed (bin, frame, channel). Frame l starts at
/// sample l*hop - (frame_len - hop) of the original signal; samples outside
/// the signal are zero.
class SpectrogramTensor {
 public:
  SpectrogramTensor() = default;
  SpectrogramTensor(std::size_t bins, std::size_t frames, std::size_t channels,
                    std::size_t signal_length);

  std::size_t bins() const { return bins_; }
  std::size_t frames() const { return frames_; }
  std::size_t channels() const { return channels_; }
  std::size_t signal_length() const { return signal_length_; }

  cdouble& at(std::size_t bin, std::size_t frame, std::size_t channel) {
    return data_[index(bin, frame, channel)];
  }
  cdouble at(std::size_t bin, std::size_t frame, std::size_t channel) const {
    return data_[index(bin, frame, channel)];
  }

  /// channels x frames matrix of one bin.
  CMatrix bin_matrix(std::size_t bin) const;
  void set_bin_matrix(std::size_t bin, const CMatrix& values);

 private:
  std::size_t index(std::size_t bin, std::size_t frame, std::size_t channel) const {
    return (channel * frames_ + frame) * bins_ + bin;
  }

  std::size_t bins_ = 0;
  std::size_t frames_ = 0;
  std::size_t channels_ = 0;
  std::size_t signal_length_ = 0;
  std::vector<cdouble> data_;
};

/// Every signal must have the same length, at least frame_len samples.
SpectrogramTensor stft_analyze(const std::vector<std::vector<double>>& signals,
                               const FrameSpec& spec);

/// Weighted overlap-add inverse of stft_analyze.
std::vector<std::vector<double>> stft_synthesize(const SpectrogramTensor& tensor,
                                                 const FrameSpec& spec);

}  // namespace wasn
