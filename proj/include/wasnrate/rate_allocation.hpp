#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wasnrate/beamforming.hpp"
#include "wasnrate/energy.hpp"
#include "wasnrate/sdp.hpp"
#include "wasnrate/types.hpp"

namespace wasn {

/// One per-bin rate allocation instance. Immutable once built.
struct RateAllocationProblem {
  CMatrix noise_cov;  // r_nn, Hermitian PD
  LinearConstraintSet constraints;
  ChannelModel channel;
  RVector amplitudes;  // quantizer full range per sensor
  int b0 = 16;
  double alpha = 1.0;
  double beta = 0.0;  // set by with_beta() when not supplied

  Eigen::Index sensors() const { return noise_cov.rows(); }

  /// 12 / A_k^2.
  RVector e() const;
  /// beta / alpha.
  double bound() const { return beta / alpha; }

  void validate() const;

  /// Copy with beta filled in by compute_beta when it was not supplied.
  RateAllocationProblem with_beta() const;
};

struct RateVector {
  RVector b;

  RVector t() const;
  /// True when every entry is an integer.
  bool is_integer() const;
};

struct SelectionVector {
  RVector p;

  std::vector<Eigen::Index> selected(double threshold = 0.5) const;
};

struct OracleResult {
  RateVector best_rates;
  double best_energy = 0.0;
  std::uint64_t evaluated = 0;
  bool feasible = false;
};

/// Relative slack on beta/alpha accepted by every feasibility check. It only
/// absorbs floating point noise; allocations are never accepted on the basis
/// of solver tolerances.
inline constexpr double kFeasibilitySlack = 1e-12;

/// Output noise power with every sensor at b0.
double compute_beta(const RateAllocationProblem& problem);

/// r_nn + R_qq(b), where b may be fractional.
CMatrix noisy_covariance(const RateAllocationProblem& problem, const RVector& bits);

/// f^H (Lambda^H (r_nn + R_qq(b))^-1 Lambda)^-1 f, evaluated directly.
double allocation_noise_power(const RateAllocationProblem& problem, const RVector& bits);

bool allocation_feasible(const RateAllocationProblem& problem, const RVector& bits);

/// Output noise power of the beamformer that only uses sensors with b_k > 0,
/// i.e. what the fusion center achieves once silent sensors stop sending.
double runtime_noise_power(const RateAllocationProblem& problem, const RVector& bits);

/// Output noise power when only `subset` transmits, each at b0.
double selection_noise_power(const RateAllocationProblem& problem,
                             const std::vector<Eigen::Index>& subset);

bool selection_feasible(const RateAllocationProblem& problem,
                        const std::vector<Eigen::Index>& subset);

/// Relaxed problem in t_k = 4^{b_k} (bounds [1, 4^b0]) and a Hermitian Z.
/// Variables: t (M), diag(Z) (U), then Re/Im of the strict upper triangle of
/// Z. The noise covariance is normalized by trace/M internally; the
/// objective is in original units, sum d^r V (t - 1).
sdp::SDPProblem build_rd_lcmv_sdp(const RateAllocationProblem& problem);

/// Same feasible set in p_k = t_k / 4^b0 with p in [4^-b0, 1]; objective
/// 4^b0 sum d^r V p - sum d^r V, equal to the rate form at t = 4^b0 p.
sdp::SDPProblem build_boolean_form(const RateAllocationProblem& problem);

/// Selection relaxation: p in [0, 1], objective sum d^r V p.
sdp::SDPProblem build_selection_sdp(const RateAllocationProblem& problem);

struct ContinuousAllocation {
  RateVector rates;
  double energy = 0.0;  // sum d^r V (4^b - 1) at the relaxed optimum
  sdp::SDPSolution solution;
};

/// Solves the relaxation and maps t back to bits. Throws AllocationFailed
/// when the solver does not return an optimal point.
ContinuousAllocation solve_rd_lcmv(const RateAllocationProblem& problem,
                                   const sdp::Options& options = {});

/// Per draw, every sensor rounds up with probability frac(b_k). Returns the
/// cheapest feasible draw, or the ceiling when none is feasible.
RateVector randomized_round(const RateVector& continuous, const RateAllocationProblem& problem,
                            int draws = 64, std::uint64_t seed = 0);

struct SelectionResult {
  SelectionVector relaxed;
  SelectionVector final_selection;
  std::vector<Eigen::Index> subset;
  double noise_power = 0.0;
};

SelectionResult md_lcmv_select(const RateAllocationProblem& problem, int draws = 64,
                               std::uint64_t seed = 0, const sdp::Options& options = {});

struct ThresholdResult {
  double threshold = 0.0;
  std::vector<Eigen::Index> subset;
  double noise_power = 0.0;
  int iterations = 0;
};

/// Largest threshold over the distinct rate values whose subset
/// {k : b_k >= T}, transmitting at b0, meets beta/alpha. `epsilon` is an
/// extra relative slack on the bound during the check.
ThresholdResult bisection_threshold(const RateVector& rates, const RateAllocationProblem& problem,
                                    double epsilon = 0.0, int max_iter = 64);

/// Enumerates every integer allocation in {0..b0}^M. Refuses when
/// (b0 + 1)^M exceeds 1e6.
OracleResult exhaustive_oracle(const RateAllocationProblem& problem);

/// Exact minimum-cost subset at b0 by enumerating all 2^M subsets (M <= 20).
std::optional<std::vector<Eigen::Index>> exhaustive_subset_oracle(
    const RateAllocationProblem& problem);

}  // namespace wasn
