#include "wasnrate/beamforming.hpp"

#include <limits>

namespace wasn {

namespace {

// Hermitian PD factorization with a conditioning check.
Eigen::LLT<CMatrix> factor_hermitian(const CMatrix& r, const char* what) {
  Eigen::LLT<CMatrix> llt(r);
  if (llt.info() != Eigen::Success) {
    throw IllConditioned(std::string(what) + " is not positive definite");
  }
  if (llt.rcond() < kMinReciprocalCondition) {
    throw IllConditioned(std::string(what) + " condition number exceeds 1e12");
  }
  return llt;
}

struct LcmvParts {
  CMatrix rinv_lambda;  // R^-1 Lambda
  Eigen::LLT<CMatrix> gram;  // Lambda^H R^-1 Lambda
};

LcmvParts lcmv_parts(const CMatrix& noise_cov, const LinearConstraintSet& c) {
  if (noise_cov.rows() != noise_cov.cols() || noise_cov.rows() != c.lambda.rows()) {
    throw DimensionMismatch("noise covariance does not match the constraint matrix");
  }
  auto llt = factor_hermitian(noise_cov, "noise covariance");
  CMatrix rinv_lambda = llt.solve(c.lambda);
  CMatrix gram = c.lambda.adjoint() * rinv_lambda;
  gram = (0.5 * (gram + gram.adjoint())).eval();
  return {std::move(rinv_lambda), factor_hermitian(gram, "constraint Gram matrix")};
}

}  // namespace

void LinearConstraintSet::validate() const {
  if (lambda.cols() != f.size()) throw DimensionMismatch("Lambda columns must match length of f");
  if (lambda.cols() == 0) throw InvalidConfig("at least one linear constraint is required");
  if (lambda.cols() > lambda.rows()) throw InvalidConfig("more constraints than sensors");
}

LinearConstraintSet LinearConstraintSet::distortionless(const CMatrix& steering) {
  return {steering, CVector::Ones(steering.cols())};
}

LinearConstraintSet LinearConstraintSet::restricted(const std::vector<Eigen::Index>& rows) const {
  LinearConstraintSet out;
  out.lambda.resize(static_cast<Eigen::Index>(rows.size()), lambda.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.lambda.row(static_cast<Eigen::Index>(i)) = lambda.row(rows[i]);
  }
  out.f = f;
  return out;
}

BeamformerWeights lcmv_weights(const CMatrix& noise_cov, const LinearConstraintSet& constraints) {
  constraints.validate();
  const auto parts = lcmv_parts(noise_cov, constraints);
  return {parts.rinv_lambda * parts.gram.solve(constraints.f)};
}

double output_noise_power(const CMatrix& noise_cov, const LinearConstraintSet& constraints) {
  constraints.validate();
  const auto parts = lcmv_parts(noise_cov, constraints);
  return constraints.f.dot(parts.gram.solve(constraints.f)).real();
}

BeamformerWeights mvdr_weights(const CMatrix& noise_cov, const CVector& steering) {
  return lcmv_weights(noise_cov, {steering, CVector::Ones(1)});
}

double subset_output_noise_power(const CMatrix& noise_cov, const LinearConstraintSet& constraints,
                                 const std::vector<Eigen::Index>& subset) {
  const auto u = static_cast<std::size_t>(constraints.count());
  if (subset.size() < u) return std::numeric_limits<double>::infinity();
  const auto n = static_cast<Eigen::Index>(subset.size());
  CMatrix sub(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      sub(i, j) = noise_cov(subset[static_cast<std::size_t>(i)], subset[static_cast<std::size_t>(j)]);
    }
  }
  try {
    return output_noise_power(sub, constraints.restricted(subset));
  } catch (const IllConditioned&) {
    return std::numeric_limits<double>::infinity();
  }
}

std::vector<cdouble> apply_beamformer(const std::vector<CVector>& spectra,
                                      const std::vector<BeamformerWeights>& weights) {
  if (spectra.size() != weights.size()) throw DimensionMismatch("bin counts differ");
  std::vector<cdouble> out(spectra.size());
  for (std::size_t b = 0; b < spectra.size(); ++b) {
    if (spectra[b].size() != weights[b].w.size()) {
      throw DimensionMismatch("spectrum and weight lengths differ");
    }
    out[b] = weights[b].w.dot(spectra[b]);  // dot() conjugates the first argument
  }
  return out;
}

std::vector<CVector> apply_beamformer_frames(const std::vector<CMatrix>& spectra,
                                             const std::vector<BeamformerWeights>& weights) {
  if (spectra.size() != weights.size()) throw DimensionMismatch("bin counts differ");
  std::vector<CVector> out(spectra.size());
  for (std::size_t b = 0; b < spectra.size(); ++b) {
    if (spectra[b].rows() != weights[b].w.size()) {
      throw DimensionMismatch("spectrum and weight lengths differ");
    }
    out[b] = spectra[b].transpose() * weights[b].w.conjugate();
  }
  return out;
}

}  // namespace wasn
