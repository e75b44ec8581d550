#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "wasnrate/types.hpp"

namespace wasn::sdp {

/// One coefficient of a symmetric matrix, stored for the upper triangle
/// (row <= col); the mirrored entry is implied.
struct Entry {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double value = 0.0;
};

struct Term {
  Eigen::Index variable = 0;
  std::vector<Entry> entries;
};

/// Affine matrix map x -> F0 + sum_i x_i F_i, constrained to be PSD.
struct LmiBlock {
  Eigen::Index size = 0;
  RMatrix constant;         // F0, symmetric
  std::vector<Term> terms;  // sparse F_i, at most one Term per variable

  explicit LmiBlock(Eigen::Index n = 0) : size(n), constant(RMatrix::Zero(n, n)) {}

  /// Adds `value` at (i, j) and its mirror of F_var. Accumulates.
  void add(Eigen::Index variable, Eigen::Index i, Eigen::Index j, double value);
  void add_constant(Eigen::Index i, Eigen::Index j, double value);

  RMatrix coefficient(Eigen::Index variable) const;
  RMatrix evaluate(const RVector& x) const;
};

/// minimize c.x + offset  s.t.  every block F(x) >= 0,  lower <= x <= upper.
struct SDPProblem {
  Eigen::Index n = 0;
  RVector objective;
  double objective_offset = 0.0;
  std::vector<LmiBlock> blocks;
  RVector lower;  // -inf allowed
  RVector upper;  // +inf allowed

  explicit SDPProblem(Eigen::Index variables = 0);

  void validate() const;
  double objective_value(const RVector& x) const { return objective.dot(x) + objective_offset; }
};

enum class Status { Optimal, Infeasible, MaxIter, NumericalFailure };

const char* to_string(Status s);

struct Residuals {
  /// Smallest eigenvalue of each block at x, divided by max(1, ||F(x)||_2).
  std::vector<double> block_min_eigenvalue;
  /// Largest bound violation, relative to max(1, |bound|).
  double bound_violation = 0.0;
  /// |primal - dual| / (1 + |primal| + |dual|).
  double relative_gap = std::numeric_limits<double>::infinity();
  /// ||c - A*(Z)|| / (1 + ||c||).
  double dual_infeasibility = std::numeric_limits<double>::infinity();

  double worst_block_eigenvalue() const;
};

struct SDPSolution {
  RVector x;
  double objective_value = 0.0;
  double dual_objective = 0.0;
  Status status = Status::NumericalFailure;
  int iterations = 0;
  Residuals residuals;
  std::vector<RMatrix> dual_blocks;  // Z per LMI block
  RVector dual_lower;                // multipliers of x >= lower (0 where unbounded)
  RVector dual_upper;                // multipliers of x <= upper
  std::string message;
};

struct Options {
  double tol_feas = 1e-7;
  double tol_gap = 1e-7;
  int max_iter = 200;
  /// When progress stalls, the best iterate meeting these looser tolerances
  /// is returned as optimal (the message says so).
  double reduced_tol_feas = 1e-6;
  double reduced_tol_gap = 1e-5;
};

/// Primal-dual path-following interior point method with Nesterov-Todd
/// scaling and Mehrotra predictor-corrector steps. Box bounds are handled as
/// 1x1 blocks. Deterministic.
SDPSolution solve(const SDPProblem& problem, const Options& options = {});

/// Residuals of (x, dual) against the original, unscaled problem.
Residuals certify(const SDPProblem& problem, const SDPSolution& solution);

/// Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian
/// matrix. Throws InvalidConfig when H is not Hermitian to 1e-10 (relative).
RMatrix embed_hermitian(const CMatrix& h);

/// Sparse text dump: header lines then one line per upper-triangle nonzero
/// "block i j variable coefficient" (variable 0 is the constant term,
/// variables 1..n are x_1..x_n; block, i and j are 0-based).
void dump(const SDPProblem& problem, std::ostream& os);
SDPProblem load(std::istream& is);

}  // namespace wasn::sdp
