#pragma once

#include <random>

#include "wasnrate/scenario.hpp"

namespace wasn::testing {

/// Random scene in a 3 m room: `sensors` uniformly placed nodes, the fusion
/// center in the middle, one target and one interferer.
inline ScenarioConfig random_scenario(std::mt19937_64& rng, int sensors, int b0) {
  std::uniform_real_distribution<double> pos(0.2, 2.8);
  ScenarioConfig cfg;
  cfg.name = "random";
  auto& s = cfg.scene;
  s.room_size = {3.0, 3.0};
  s.fc_position = {1.5, 1.5};
  for (int k = 0; k < sensors; ++k) s.sensor_positions.push_back({pos(rng), pos(rng)});
  s.target_positions = {{pos(rng), pos(rng)}};
  s.interferer_positions = {{pos(rng), pos(rng)}};
  s.target_psd = {1.0};
  s.interferer_psd = {1.0};
  s.self_noise_psd = 1e-3;
  cfg.b0 = b0;
  return cfg;
}

/// Diagonal-noise problem with one distortionless constraint: every quantity
/// has a closed form, which makes it a convenient oracle target.
inline RateAllocationProblem diagonal_problem(const RVector& sensor_noise, const RVector& gains,
                                              const RVector& amplitudes, const RVector& distances,
                                              int b0, double alpha) {
  const Eigen::Index m = sensor_noise.size();
  RateAllocationProblem p;
  p.noise_cov = sensor_noise.cast<cdouble>().asDiagonal();
  p.constraints = LinearConstraintSet::distortionless(gains.cast<cdouble>());
  p.channel.distances = distances;
  p.channel.noise_psd = RVector::Ones(m);
  p.amplitudes = amplitudes;
  p.b0 = b0;
  p.alpha = alpha;
  return p.with_beta();
}

}  // namespace wasn::testing
