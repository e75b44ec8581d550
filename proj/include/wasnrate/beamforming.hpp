#pragma once

#include <vector>

#include "wasnrate/types.hpp"

namespace wasn {

/// Linear constraints Lambda^H w = f with Lambda of size M x U.
struct LinearConstraintSet {
  CMatrix lambda;
  CVector f;

  Eigen::Index sensors() const { return lambda.rows(); }
  Eigen::Index count() const { return lambda.cols(); }
  void validate() const;

  /// Distortionless toward every column of `steering` (f = ones).
  static LinearConstraintSet distortionless(const CMatrix& steering);

  /// Rows restricted to the given sensor indices.
  LinearConstraintSet restricted(const std::vector<Eigen::Index>& rows) const;
};

struct BeamformerWeights {
  CVector w;
};

/// Reciprocal condition number below which a solve is rejected.
inline constexpr double kMinReciprocalCondition = 1e-12;

BeamformerWeights lcmv_weights(const CMatrix& noise_cov, const LinearConstraintSet& constraints);

/// f^H (Lambda^H R^-1 Lambda)^-1 f.
double output_noise_power(const CMatrix& noise_cov, const LinearConstraintSet& constraints);

BeamformerWeights mvdr_weights(const CMatrix& noise_cov, const CVector& steering);

/// Output noise power of the LCMV beamformer built on a sensor subset (rows
/// and columns of noise_cov, rows of Lambda). Returns +infinity when the
/// subset cannot satisfy the constraints (fewer sensors than constraints or
/// a rank-deficient restricted Lambda).
double subset_output_noise_power(const CMatrix& noise_cov, const LinearConstraintSet& constraints,
                                 const std::vector<Eigen::Index>& subset);

/// Spectra indexed [bin](sensor); weights indexed [bin]. Returns w^H y per bin.
std::vector<cdouble> apply_beamformer(const std::vector<CVector>& spectra,
                                      const std::vector<BeamformerWeights>& weights);

/// Multi-frame variant: spectra[bin] is M x frames, output[bin] has one value
/// per frame.
std::vector<CVector> apply_beamformer_frames(const std::vector<CMatrix>& spectra,
                                             const std::vector<BeamformerWeights>& weights);

}  // namespace wasn
