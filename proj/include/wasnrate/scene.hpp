#pragma once

#include <cstdint>
#include <vector>

#include "wasnrate/types.hpp"

namespace wasn {

/// Minimum source-sensor (and sensor-FC) distance in meters. Collocated
/// geometry is clamped to this value instead of being rejected.
inline constexpr double kMinDistance = 0.05;

struct SceneConfig {
  Point2 room_size{3.0, 3.0};
  std::vector<Point2> sensor_positions;
  Point2 fc_position;
  std::vector<Point2> target_positions;
  std::vector<Point2> interferer_positions;
  std::vector<double> target_psd;      // P_s per target, linear
  std::vector<double> interferer_psd;  // P_u per interferer, linear
  double self_noise_psd = 1e-5;        // sigma_v^2, linear
  double speed_of_sound = 343.0;
  double sample_rate = 16000.0;

  std::size_t sensor_count() const { return sensor_positions.size(); }
  std::size_t target_count() const { return target_positions.size(); }
  std::size_t interferer_count() const { return interferer_positions.size(); }

  /// Throws InvalidConfig when any invariant is broken.
  void validate() const;
};

struct ATFMatrix {
  double frequency = 0.0;
  CMatrix a;  // M x I, target ATFs
  CMatrix b;  // M x J, interferer ATFs
};

struct SignalStatistics {
  RVector sigma_x;  // target PSDs, diagonal of Sigma_x
  RVector sigma_u;  // interferer PSDs, diagonal of Sigma_u
  double sigma_v = 0.0;

  static SignalStatistics from_scene(const SceneConfig& scene);
};

struct CovarianceSet {
  double frequency = 0.0;
  CMatrix r_xx;
  CMatrix r_uu;
  CMatrix r_vv;
  CMatrix r_nn;
  CMatrix r_yy;
};

/// Uniform rows x cols lattice spanning [margin, room - margin] on each axis.
/// Labels run bottom-to-top within a column, columns left-to-right, so the
/// index of (row r, column c) is c * rows + r.
std::vector<Point2> grid_scene(int rows, int cols, Point2 room, double margin);

/// Free-field ATF: exp(-j 2 pi f d / c) / max(d, kMinDistance).
cdouble freefield_response(double frequency, double distance, double speed_of_sound);

ATFMatrix build_freefield_atf(const SceneConfig& scene, double frequency);

CovarianceSet assemble_covariances(const ATFMatrix& atf, const SignalStatistics& stats);

/// Convenience: ATFs plus covariances for one frequency.
CovarianceSet scene_covariances(const SceneConfig& scene, double frequency);

/// Time-domain recordings split into their additive parts.
struct SynthesizedSignals {
  double sample_rate = 0.0;
  std::vector<std::vector<double>> sources;     // I target source waveforms
  std::vector<std::vector<double>> target;      // M channels, sum of target images
  std::vector<std::vector<double>> noise;       // M channels, interferers + self noise
  std::vector<std::vector<double>> mixture;     // target + noise
};

struct SynthesisOptions {
  double duration = 1.0;  // seconds
  std::uint64_t seed = 0;
  /// Sum of squared analysis-window samples. Source sample variances are
  /// P / window_energy so that STFT bins carry variance P.
  double window_energy = 160.0;
};

/// Stationary white Gaussian sources propagated with free-field delays and
/// 1/d attenuation (fractional delays applied in the DFT domain of the whole
/// signal, i.e. circularly).
SynthesizedSignals synthesize_signals(const SceneConfig& scene, const SynthesisOptions& options);

}  // namespace wasn
