#include "wasnrate/stft.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace wasn {

FrameSpec FrameSpec::for_duration(double seconds, double sample_rate) {
  auto len = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  len += len % 2;
  return {len, len / 2, len};
}

double FrameSpec::window_energy() const {
  double e = 0.0;
  for (double w : sqrt_hann(frame_len)) e += w * w;
  return e;
}

void FrameSpec::validate() const {
  if (frame_len < 2 || frame_len % 2 != 0) throw InvalidConfig("frame length must be even and >= 2");
  if (hop * 2 != frame_len) throw InvalidConfig("hop must be half the frame length");
  if (fft_len != frame_len) throw InvalidConfig("FFT length must equal the frame length");
}

std::vector<double> sqrt_hann(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n) {
    const double c = std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                              static_cast<double>(length));
    w[n] = std::sqrt(0.5 * (1.0 - c));
  }
  return w;
}

SpectrogramTensor::SpectrogramTensor(std::size_t bins, std::size_t frames, std::size_t channels,
                                     std::size_t signal_length)
    : bins_(bins),
      frames_(frames),
      channels_(channels),
      signal_length_(signal_length),
      data_(bins * frames * channels) {}

CMatrix SpectrogramTensor::bin_matrix(std::size_t bin) const {
  CMatrix m(static_cast<Eigen::Index>(channels_), static_cast<Eigen::Index>(frames_));
  for (std::size_t c = 0; c < channels_; ++c) {
    for (std::size_t l = 0; l < frames_; ++l) {
      m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(l)) = at(bin, l, c);
    }
  }
  return m;
}

void SpectrogramTensor::set_bin_matrix(std::size_t bin, const CMatrix& values) {
  if (values.rows() != static_cast<Eigen::Index>(channels_) ||
      values.cols() != static_cast<Eigen::Index>(frames_)) {
    throw DimensionMismatch("bin matrix shape does not match the tensor");
  }
  for (std::size_t c = 0; c < channels_; ++c) {
    for (std::size_t l = 0; l < frames_; ++l) {
      at(bin, l, c) = values(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(l));
    }
  }
}

SpectrogramTensor stft_analyze(const std::vector<std::vector<double>>& signals,
                               const FrameSpec& spec) {
  spec.validate();
  if (signals.empty()) throw InvalidConfig("no channels to analyze");
  const std::size_t len = signals.front().size();
  for (const auto& s : signals) {
    if (s.size() != len) throw DimensionMismatch("channels differ in length");
  }
  if (len < spec.frame_len) throw InvalidConfig("signal shorter than one frame");

  const std::size_t n = spec.frame_len;
  const std::size_t lead = n - spec.hop;
  const std::size_t frames = (len + spec.hop - 1) / spec.hop + 1;
  const auto window = sqrt_hann(n);

  SpectrogramTensor out(spec.bins(), frames, signals.size(), len);
  Eigen::FFT<double> fft;
  std::vector<double> frame(n);
  std::vector<cdouble> spectrum;
  for (std::size_t c = 0; c < signals.size(); ++c) {
    for (std::size_t l = 0; l < frames; ++l) {
      for (std::size_t i = 0; i < n; ++i) {
        // Position in the original signal, offset by the zero lead-in.
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(l * spec.hop + i) -
                                   static_cast<std::ptrdiff_t>(lead);
        const bool valid = pos >= 0 && pos < static_cast<std::ptrdiff_t>(len);
        frame[i] = valid ? window[i] * signals[c][static_cast<std::size_t>(pos)] : 0.0;
      }
      fft.fwd(spectrum, frame);
      for (std::size_t k = 0; k < spec.bins(); ++k) out.at(k, l, c) = spectrum[k];
    }
  }
  return out;
}

std::vector<std::vector<double>> stft_synthesize(const SpectrogramTensor& tensor,
                                                 const FrameSpec& spec) {
  spec.validate();
  if (tensor.bins() != spec.bins()) throw InvalidConfig("tensor bin count does not match spec");
  const std::size_t n = spec.frame_len;
  const std::size_t lead = n - spec.hop;
  const std::size_t len = tensor.signal_length();
  const auto window = sqrt_hann(n);

  std::vector<std::vector<double>> out(tensor.channels(), std::vector<double>(len, 0.0));
  Eigen::FFT<double> fft;
  std::vector<cdouble> full(n);
  std::vector<double> frame;
  for (std::size_t c = 0; c < tensor.channels(); ++c) {
    for (std::size_t l = 0; l < tensor.frames(); ++l) {
      for (std::size_t k = 0; k < spec.bins(); ++k) full[k] = tensor.at(k, l, c);
      full[0] = cdouble(full[0].real(), 0.0);
      full[n / 2] = cdouble(full[n / 2].real(), 0.0);
      for (std::size_t k = spec.bins(); k < n; ++k) full[k] = std::conj(full[n - k]);
      fft.inv(frame, full);
      for (std::size_t i = 0; i < n; ++i) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(l * spec.hop + i) -
                                   static_cast<std::ptrdiff_t>(lead);
        if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(len)) {
          out[c][static_cast<std::size_t>(pos)] += window[i] * frame[i];
        }
      }
    }
  }
  return out;
}

}  // namespace wasn
