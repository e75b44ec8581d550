#pragma once

#include <string>
#include <vector>

namespace wasn {

enum class WavFormat { Pcm16, Float32 };

struct WavData {
  double sample_rate = 16000.0;
  std::vector<std::vector<double>> channels;  // samples in [-1, 1] for PCM16
};

/// Interleaved RIFF/WAVE writer. PCM16 samples are clipped to [-1, 1).
void write_wav(const std::string& path, const WavData& data, WavFormat format);

/// Reads 16-bit PCM or 32-bit float WAVE files.
WavData read_wav(const std::string& path);

}  // namespace wasn
