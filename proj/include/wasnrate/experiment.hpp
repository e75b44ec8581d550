#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wasnrate/rate_allocation.hpp"
#include "wasnrate/scenario.hpp"

namespace wasn {

enum class Method { RD, MDSelect, MDBisect };
const char* to_string(Method m);

struct MethodRecord {
  Method method = Method::RD;
  bool feasible = false;
  std::string failure;           // empty when feasible
  RVector continuous_rates;      // RD only
  RVector rates;                 // integer bits per sensor (MD: 0 or b0)
  std::vector<Eigen::Index> subset;
  double threshold = 0.0;        // MDBisect only
  double noise_power = 0.0;      // linear, re-evaluated directly, summed over bins
  double runtime_noise_power = 0.0;  // zero-rate sensors removed from the beamformer
  double energy = 0.0;
  double eur = 0.0;
};

struct AlphaRecord {
  double alpha = 1.0;
  double beta = 0.0;   // summed over the solved bins
  double bound = 0.0;  // beta / alpha, same aggregation
  std::vector<MethodRecord> methods;

  const MethodRecord& get(Method m) const;
};

struct RunReport {
  ScenarioConfig config;
  std::vector<std::size_t> bins;  // STFT bins that were solved
  std::vector<AlphaRecord> records;
};

/// Solves RD and both MD variants for every alpha in the sweep. Failures are
/// recorded per alpha. Alphas and bins run concurrently; the result does not
/// depend on scheduling.
RunReport run_scenario(const ScenarioConfig& config);

/// Single-alpha variant used by the allocate/select subcommands.
RunReport run_single(const ScenarioConfig& config, double alpha);

/// Per-sensor rate map for one alpha:
/// sensor,x,y,distance_fc,rd_rate,md_rate.
void emit_rate_map(const RunReport& report, std::size_t alpha_index, const std::string& path);

/// Per-sensor allocation report for one alpha: sensor, position, distance,
/// continuous and integer RD rates, selection flags and per-sensor energies.
void emit_allocation(const RunReport& report, std::size_t alpha_index, const std::string& path);

/// One row per (alpha, method).
void emit_sweep(const RunReport& report, const std::string& path);

/// Writes every CSV of a report under config.output_dir and returns the
/// list of written paths.
std::vector<std::string> write_report(const RunReport& report);

struct DenoiseReport {
  double alpha = 1.0;
  RVector rates;                      // integer rates used at runtime
  std::vector<double> bin_frequency;
  std::vector<double> input_noise;    // reference-sensor noise power per bin
  std::vector<double> output_noise;   // measured, per bin
  std::vector<double> model_noise;    // modelled output noise at the allocation, per bin
  std::vector<double> bound;          // beta_k / alpha per bin
  double input_noise_total = 0.0;
  double output_noise_total = 0.0;
  double model_noise_total = 0.0;
  double bound_total = 0.0;
  double target_error = 0.0;          // ||out_target - in_target|| / ||in_target||
  std::vector<std::string> files;
};

/// Synthesizes the scene, allocates rates (aggregate over all bins), uniformly
/// quantizes each sensor in the time domain, beamforms the active sensors and
/// writes reference, transmitted and output audio plus a per-bin CSV.
DenoiseReport end_to_end_denoise(const ScenarioConfig& config, double alpha);

std::string format_number(double v);

}  // namespace wasn
