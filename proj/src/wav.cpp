#include "wasnrate/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "wasnrate/types.hpp"

namespace wasn {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

template <typename T>
void put(std::ofstream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t offset) {
  if (offset + sizeof(T) > buf.size()) throw Error("truncated WAV file");
  T value;
  std::memcpy(&value, buf.data() + offset, sizeof(T));
  return value;
}

}  // namespace

void write_wav(const std::string& path, const WavData& data, WavFormat format) {
  if (data.channels.empty()) throw InvalidConfig("WAV data has no channels");
  const std::size_t frames = data.channels.front().size();
  for (const auto& c : data.channels) {
    if (c.size() != frames) throw DimensionMismatch("WAV channels differ in length");
  }
  const auto nch = static_cast<std::uint16_t>(data.channels.size());
  const std::uint16_t bits = format == WavFormat::Pcm16 ? 16 : 32;
  const std::uint16_t tag = format == WavFormat::Pcm16 ? 1 : 3;
  const std::uint16_t block = nch * bits / 8;
  const auto rate = static_cast<std::uint32_t>(std::lround(data.sample_rate));
  const auto payload = static_cast<std::uint32_t>(frames * block);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write("RIFF", 4);
  put<std::uint32_t>(os, 36 + payload);
  os.write("WAVEfmt ", 8);
  put<std::uint32_t>(os, 16);
  put<std::uint16_t>(os, tag);
  put<std::uint16_t>(os, nch);
  put<std::uint32_t>(os, rate);
  put<std::uint32_t>(os, rate * block);
  put<std::uint16_t>(os, block);
  put<std::uint16_t>(os, bits);
  os.write("data", 4);
  put<std::uint32_t>(os, payload);
  for (std::size_t n = 0; n < frames; ++n) {
    for (const auto& c : data.channels) {
      if (format == WavFormat::Pcm16) {
        const double v = std::clamp(c[n], -1.0, 32767.0 / 32768.0);
        put<std::int16_t>(os, static_cast<std::int16_t>(std::lround(v * 32768.0)));
      } else {
        put<float>(os, static_cast<float>(c[n]));
      }
    }
  }
  if (!os) throw Error("failed writing " + path);
}

WavData read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw Error(path + " is not a RIFF/WAVE file");
  }
  std::uint16_t tag = 0, nch = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_at = 0, data_len = 0;
  for (std::size_t pos = 12; pos + 8 <= buf.size();) {
    const auto len = get<std::uint32_t>(buf, pos + 4);
    if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0) {
      tag = get<std::uint16_t>(buf, pos + 8);
      nch = get<std::uint16_t>(buf, pos + 10);
      rate = get<std::uint32_t>(buf, pos + 12);
      bits = get<std::uint16_t>(buf, pos + 22);
    } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
      data_at = pos + 8;
      data_len = std::min<std::size_t>(len, buf.size() - data_at);
    }
    pos += 8 + len + (len % 2);
  }
  if (nch == 0 || data_at == 0) throw Error(path + " lacks fmt or data chunk");
  const bool pcm16 = tag == 1 && bits == 16;
  const bool f32 = tag == 3 && bits == 32;
  if (!pcm16 && !f32) throw Error(path + ": only 16-bit PCM and 32-bit float are supported");

  WavData out;
  out.sample_rate = rate;
  const std::size_t width = bits / 8;
  const std::size_t frames = data_len / (width * nch);
  out.channels.assign(nch, std::vector<double>(frames));
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < nch; ++c) {
      const std::size_t at = data_at + (n * nch + c) * width;
      out.channels[c][n] = pcm16 ? get<std::int16_t>(buf, at) / 32768.0
                                 : static_cast<double>(get<float>(buf, at));
    }
  }
  return out;
}

}  // namespace wasn
