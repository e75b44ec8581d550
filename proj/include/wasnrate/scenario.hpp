#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wasnrate/beamforming.hpp"
#include "wasnrate/rate_allocation.hpp"
#include "wasnrate/scene.hpp"

namespace wasn {

enum class ConstraintDesign { TargetsDistortionless, TargetsPlusNulls };
enum class RateMode { PerBin, Aggregate };

struct ScenarioConfig {
  std::string name = "custom";
  SceneConfig scene;
  int b0 = 16;
  std::vector<double> alpha_sweep{0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  ConstraintDesign design = ConstraintDesign::TargetsDistortionless;
  RateMode mode = RateMode::PerBin;
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  double frequency = 1000.0;         // representative bin for per-bin mode
  std::size_t frame_len = 320;       // STFT frame, hop is half of it
  double channel_noise_psd = 1.0;    // V_k
  double path_loss_exponent = 2.0;
  double crest_factor = 4.0;         // quantizer range = 2 * crest * rms
  int rounding_draws = 64;
  double duration = 2.0;             // seconds, for synthesized audio

  void validate() const;
  /// Frequency of the STFT bin nearest `frequency`.
  std::size_t representative_bin() const;
  double bin_frequency(std::size_t bin) const;
  std::size_t bins() const { return frame_len / 2 + 1; }
};

/// Built-in layouts: "small24", "grid49", "grid169" and "tiny3".
ScenarioConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Preset name, or a path to a JSON scenario file (see README for keys).
ScenarioConfig load_scenario(const std::string& preset_or_path);

/// Lambda and f for one frequency under the configured design.
LinearConstraintSet make_constraints(const ATFMatrix& atf, ConstraintDesign design);

/// Per-bin allocation problem with beta computed at b0.
RateAllocationProblem make_problem(const ScenarioConfig& config, double frequency, double alpha);

const char* to_string(ConstraintDesign d);
const char* to_string(RateMode m);
ConstraintDesign parse_design(const std::string& s);
RateMode parse_mode(const std::string& s);

}  // namespace wasn
