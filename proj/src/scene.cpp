#include "wasnrate/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

#include "wasnrate/random.hpp"

namespace wasn {

namespace {

bool inside(const Point2& p, const Point2& room) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= room.x && p.y <= room.y;
}

void check_positions(const std::vector<Point2>& pts, const Point2& room, const char* what) {
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (!inside(pts[k], room)) {
      throw InvalidConfig(std::string(what) + " " + std::to_string(k) + " lies outside the room");
    }
  }
}

// Next length >= n whose only prime factors are 2, 3 and 5.
std::size_t smooth_length(std::size_t n) {
  for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

}  // namespace

void SceneConfig::validate() const {
  if (!(room_size.x > 0.0) || !(room_size.y > 0.0)) {
    throw InvalidConfig("room dimensions must be positive");
  }
  if (sensor_positions.empty()) throw InvalidConfig("scene needs at least one sensor");
  if (target_positions.empty()) throw InvalidConfig("scene needs at least one target source");
  if (target_psd.size() != target_positions.size()) {
    throw InvalidConfig("target_psd must have one entry per target");
  }
  if (interferer_psd.size() != interferer_positions.size()) {
    throw InvalidConfig("interferer_psd must have one entry per interferer");
  }
  check_positions(sensor_positions, room_size, "sensor");
  check_positions(target_positions, room_size, "target");
  check_positions(interferer_positions, room_size, "interferer");
  if (!inside(fc_position, room_size)) throw InvalidConfig("fusion center lies outside the room");
  for (double p : target_psd) {
    if (!(p > 0.0)) throw InvalidConfig("target PSDs must be positive");
  }
  for (double p : interferer_psd) {
    if (!(p > 0.0)) throw InvalidConfig("interferer PSDs must be positive");
  }
  if (!(self_noise_psd > 0.0)) throw InvalidConfig("self-noise PSD must be positive");
  if (!(speed_of_sound > 0.0)) throw InvalidConfig("speed of sound must be positive");
  if (!(sample_rate > 0.0)) throw InvalidConfig("sample rate must be positive");
}

SignalStatistics SignalStatistics::from_scene(const SceneConfig& scene) {
  SignalStatistics s;
  s.sigma_x = Eigen::Map<const RVector>(scene.target_psd.data(),
                                        static_cast<Eigen::Index>(scene.target_psd.size()));
  s.sigma_u = Eigen::Map<const RVector>(scene.interferer_psd.data(),
                                        static_cast<Eigen::Index>(scene.interferer_psd.size()));
  s.sigma_v = scene.self_noise_psd;
  return s;
}

std::vector<Point2> grid_scene(int rows, int cols, Point2 room, double margin) {
  if (rows < 1 || cols < 1) throw InvalidConfig("grid needs at least one row and one column");
  if (!(room.x > 0.0) || !(room.y > 0.0)) throw InvalidConfig("degenerate room dimensions");
  if (margin < 0.0 || !(2.0 * margin < room.x) || !(2.0 * margin < room.y)) {
    throw InvalidConfig("grid margin must satisfy 0 <= 2*margin < room dimension");
  }
  auto coord = [margin](int i, int n, double extent) {
    if (n == 1) return extent / 2.0;
    return margin + (extent - 2.0 * margin) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) {
      pts.push_back({coord(c, cols, room.x), coord(r, rows, room.y)});
    }
  }
  return pts;
}

cdouble freefield_response(double frequency, double distance, double speed_of_sound) {
  const double phase = -2.0 * std::numbers::pi * frequency * distance / speed_of_sound;
  return std::polar(1.0 / std::max(distance, kMinDistance), phase);
}

ATFMatrix build_freefield_atf(const SceneConfig& scene, double frequency) {
  if (frequency < 0.0) throw InvalidConfig("frequency must be non-negative");
  const auto m = static_cast<Eigen::Index>(scene.sensor_count());
  ATFMatrix atf;
  atf.frequency = frequency;
  atf.a.resize(m, static_cast<Eigen::Index>(scene.target_count()));
  atf.b.resize(m, static_cast<Eigen::Index>(scene.interferer_count()));
  for (Eigen::Index k = 0; k < m; ++k) {
    const Point2& mic = scene.sensor_positions[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < atf.a.cols(); ++i) {
      atf.a(k, i) = freefield_response(
          frequency, distance(mic, scene.target_positions[static_cast<std::size_t>(i)]),
          scene.speed_of_sound);
    }
    for (Eigen::Index j = 0; j < atf.b.cols(); ++j) {
      atf.b(k, j) = freefield_response(
          frequency, distance(mic, scene.interferer_positions[static_cast<std::size_t>(j)]),
          scene.speed_of_sound);
    }
  }
  return atf;
}

CovarianceSet assemble_covariances(const ATFMatrix& atf, const SignalStatistics& stats) {
  if (atf.a.cols() != stats.sigma_x.size() || atf.b.cols() != stats.sigma_u.size()) {
    throw DimensionMismatch("ATF columns do not match the number of source PSDs");
  }
  if (atf.b.cols() > 0 && atf.b.rows() != atf.a.rows()) {
    throw DimensionMismatch("target and interferer ATFs disagree on sensor count");
  }
  const Eigen::Index m = atf.a.rows();
  CovarianceSet cov;
  cov.frequency = atf.frequency;
  cov.r_xx = atf.a * stats.sigma_x.cast<cdouble>().asDiagonal() * atf.a.adjoint();
  if (atf.b.cols() > 0) {
    cov.r_uu = atf.b * stats.sigma_u.cast<cdouble>().asDiagonal() * atf.b.adjoint();
  } else {
    cov.r_uu = CMatrix::Zero(m, m);
  }
  cov.r_vv = CMatrix::Identity(m, m) * stats.sigma_v;
  // Enforce exact Hermitian symmetry; products above are Hermitian only up
  // to rounding.
  cov.r_xx = (0.5 * (cov.r_xx + cov.r_xx.adjoint())).eval();
  cov.r_uu = (0.5 * (cov.r_uu + cov.r_uu.adjoint())).eval();
  cov.r_nn = cov.r_uu + cov.r_vv;
  cov.r_yy = cov.r_xx + cov.r_nn;
  return cov;
}

CovarianceSet scene_covariances(const SceneConfig& scene, double frequency) {
  return assemble_covariances(build_freefield_atf(scene, frequency),
                              SignalStatistics::from_scene(scene));
}

SynthesizedSignals synthesize_signals(const SceneConfig& scene, const SynthesisOptions& options) {
  if (!(options.duration > 0.0)) throw InvalidConfig("duration must be positive");
  if (!(options.window_energy > 0.0)) throw InvalidConfig("window energy must be positive");

  const std::size_t m = scene.sensor_count();
  const auto length = static_cast<std::size_t>(std::llround(options.duration * scene.sample_rate));
  if (length == 0) throw InvalidConfig("duration shorter than one sample");

  double max_delay = 0.0;
  auto track = [&](const std::vector<Point2>& sources) {
    for (const auto& s : sources) {
      for (const auto& mic : scene.sensor_positions) {
        max_delay = std::max(max_delay, distance(s, mic) / scene.speed_of_sound);
      }
    }
  };
  track(scene.target_positions);
  track(scene.interferer_positions);
  const std::size_t guard = static_cast<std::size_t>(std::ceil(max_delay * scene.sample_rate)) + 2;
  const std::size_t padded = smooth_length(length + guard);
  const std::size_t offset = padded - length;

  SynthesizedSignals out;
  out.sample_rate = scene.sample_rate;
  out.target.assign(m, std::vector<double>(length, 0.0));
  out.noise.assign(m, std::vector<double>(length, 0.0));

  Eigen::FFT<double> fft;
  std::uint64_t stream = 0;

  // Adds one source, propagated to every sensor, into `dest`.
  auto add_source = [&](const Point2& pos, double psd, std::vector<std::vector<double>>& dest,
                        std::vector<double>* keep) {
    auto rng = make_rng(options.seed, stream++);
    std::vector<double> s(padded, 0.0);
    if (psd > 0.0) {
      std::normal_distribution<double> gauss(0.0, std::sqrt(psd / options.window_energy));
      for (auto& v : s) v = gauss(rng);
    }
    if (keep != nullptr) keep->assign(s.begin() + static_cast<std::ptrdiff_t>(offset), s.end());

    std::vector<std::complex<double>> spec;
    fft.fwd(spec, s);
    std::vector<std::complex<double>> shaped(padded);
    std::vector<double> delayed;
    for (std::size_t k = 0; k < m; ++k) {
      const double d = distance(pos, scene.sensor_positions[k]);
      for (std::size_t n = 0; n < padded; ++n) {
        // Signed frequency so the delayed signal stays real.
        const double bin = n <= padded / 2 ? static_cast<double>(n)
                                            : static_cast<double>(n) - static_cast<double>(padded);
        const double f = bin * scene.sample_rate / static_cast<double>(padded);
        cdouble h = freefield_response(f, d, scene.speed_of_sound);
        if (padded % 2 == 0 && n == padded / 2) h = cdouble(h.real(), 0.0);
        shaped[n] = spec[n] * h;
      }
      fft.inv(delayed, shaped);
      for (std::size_t n = 0; n < length; ++n) dest[k][n] += delayed[offset + n];
    }
  };

  out.sources.resize(scene.target_count());
  for (std::size_t i = 0; i < scene.target_count(); ++i) {
    add_source(scene.target_positions[i], scene.target_psd[i], out.target, &out.sources[i]);
  }
  for (std::size_t j = 0; j < scene.interferer_count(); ++j) {
    add_source(scene.interferer_positions[j], scene.interferer_psd[j], out.noise, nullptr);
  }
  if (scene.self_noise_psd > 0.0) {
    for (std::size_t k = 0; k < m; ++k) {
      auto rng = make_rng(options.seed, 1000003 + k);
      std::normal_distribution<double> gauss(0.0,
                                             std::sqrt(scene.self_noise_psd / options.window_energy));
      for (auto& v : out.noise[k]) v += gauss(rng);
    }
  }

  out.mixture = out.target;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t n = 0; n < length; ++n) out.mixture[k][n] += out.noise[k][n];
  }
  return out;
}

}  // namespace wasn
