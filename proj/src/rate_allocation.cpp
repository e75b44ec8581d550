#include "wasnrate/rate_allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wasnrate/quantization.hpp"
#include "wasnrate/random.hpp"

namespace wasn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pow4(double x) { return std::exp2(2.0 * x); }

// Adds var * c at complex position (i, j) of an N x N Hermitian template,
// plus the conjugate at (j, i), to the real embedding stored in `block`.
void add_hermitian(sdp::LmiBlock& block, Eigen::Index n, Eigen::Index var, Eigen::Index i,
                   Eigen::Index j, cdouble c) {
  if (i == j) {
    block.add(var, i, i, c.real());
    block.add(var, n + i, n + i, c.real());
    return;
  }
  if (i > j) {
    std::swap(i, j);
    c = std::conj(c);
  }
  block.add(var, i, j, c.real());
  block.add(var, n + i, n + j, c.real());
  block.add(var, i, n + j, -c.imag());
  block.add(var, j, n + i, c.imag());
}

void set_constant(sdp::LmiBlock& block, const CMatrix& h) {
  block.constant = sdp::embed_hermitian(h);
}

// Z is parametrized by its real diagonal and the real and imaginary parts of
// its strict upper triangle.
void add_z(sdp::LmiBlock& block, Eigen::Index n, Eigen::Index first_var, Eigen::Index offset,
           Eigen::Index u_count, double sign) {
  Eigen::Index var = first_var;
  for (Eigen::Index u = 0; u < u_count; ++u) {
    add_hermitian(block, n, var++, offset + u, offset + u, sign);
  }
  for (Eigen::Index u = 0; u < u_count; ++u) {
    for (Eigen::Index v = u + 1; v < u_count; ++v) {
      add_hermitian(block, n, var++, offset + u, offset + v, sign);
      add_hermitian(block, n, var++, offset + u, offset + v, cdouble(0.0, sign));
    }
  }
}

// Shared construction for the three relaxations. The per-sensor variable
// enters R_qq^-1 as rate_gain * e_k * var_k.
sdp::SDPProblem build_relaxation(const RateAllocationProblem& problem, double rate_gain,
                                 double var_lower, double var_upper) {
  problem.validate();
  const Eigen::Index m = problem.sensors();
  const Eigen::Index u = problem.constraints.count();
  const double c0 = problem.noise_cov.trace().real() / static_cast<double>(m);

  const CMatrix rn = problem.noise_cov / c0;
  Eigen::LLT<CMatrix> llt(rn);
  if (llt.info() != Eigen::Success) throw IllConditioned("noise covariance is not positive definite");
  CMatrix rinv = llt.solve(CMatrix::Identity(m, m));
  rinv = (0.5 * (rinv + rinv.adjoint())).eval();
  const CMatrix& lambda = problem.constraints.lambda;
  const CMatrix rinv_lambda = rinv * lambda;
  CMatrix gram = lambda.adjoint() * rinv_lambda;
  gram = (0.5 * (gram + gram.adjoint())).eval();
  const RVector e_scaled = problem.e() * (c0 * rate_gain);
  const double bound = problem.bound() / c0;

  sdp::SDPProblem sdp(m + u * u);

  // [[Z, f], [f^H, bound]] >= 0
  const Eigen::Index n1 = u + 1;
  sdp::LmiBlock block1(2 * n1);
  CMatrix c1 = CMatrix::Zero(n1, n1);
  c1.topRightCorner(u, 1) = problem.constraints.f;
  c1.bottomLeftCorner(1, u) = problem.constraints.f.adjoint();
  c1(u, u) = bound;
  set_constant(block1, c1);
  add_z(block1, n1, m, 0, u, 1.0);

  // [[R^-1 + diag(e t), R^-1 Lambda], [Lambda^H R^-1, Lambda^H R^-1 Lambda - Z]] >= 0
  const Eigen::Index n2 = m + u;
  sdp::LmiBlock block2(2 * n2);
  CMatrix c2(n2, n2);
  c2.topLeftCorner(m, m) = rinv;
  c2.topRightCorner(m, u) = rinv_lambda;
  c2.bottomLeftCorner(u, m) = rinv_lambda.adjoint();
  c2.bottomRightCorner(u, u) = gram;
  set_constant(block2, c2);
  for (Eigen::Index k = 0; k < m; ++k) add_hermitian(block2, n2, k, k, k, e_scaled[k]);
  add_z(block2, n2, m, m, u, -1.0);

  sdp.blocks.push_back(std::move(block1));
  sdp.blocks.push_back(std::move(block2));
  sdp.lower.head(m).setConstant(var_lower);
  sdp.upper.head(m).setConstant(var_upper);
  return sdp;
}

double allocation_energy(const RateAllocationProblem& problem, const RVector& bits) {
  return total_energy(bits, problem.channel);
}

// True when the bound sits at the full-rate noise power and lowering any
// single sensor by half a bit breaks it. The feasible set is then the
// full-rate point alone and has no interior for the solver to work in.
bool bound_pins_full_rate(const RateAllocationProblem& problem) {
  const Eigen::Index m = problem.sensors();
  const RVector full = RVector::Constant(m, problem.b0);
  const double tau = allocation_noise_power(problem, full);
  if (!allocation_feasible(problem, full) || problem.bound() > tau * (1.0 + 1e-9)) return false;
  for (Eigen::Index k = 0; k < m; ++k) {
    RVector lowered = full;
    lowered[k] -= 0.5;
    if (allocation_feasible(problem, lowered)) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------

RVector RateAllocationProblem::e() const { return (12.0 / amplitudes.array().square()).matrix(); }

void RateAllocationProblem::validate() const {
  const Eigen::Index m = noise_cov.rows();
  if (m == 0 || noise_cov.cols() != m) throw DimensionMismatch("noise covariance must be square");
  constraints.validate();
  if (constraints.sensors() != m) throw DimensionMismatch("constraints do not match sensor count");
  channel.validate();
  if (static_cast<Eigen::Index>(channel.size()) != m) {
    throw DimensionMismatch("channel model does not match sensor count");
  }
  if (amplitudes.size() != m) throw DimensionMismatch("amplitudes do not match sensor count");
  if ((amplitudes.array() <= 0.0).any()) throw InvalidConfig("amplitudes must be positive");
  if (b0 < 1) throw InvalidConfig("b0 must be at least 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidConfig("alpha must lie in (0, 1]");
  if (!(beta > 0.0)) throw InvalidConfig("beta must be positive (see with_beta)");
  const double scale = noise_cov.cwiseAbs().maxCoeff();
  if ((noise_cov - noise_cov.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidConfig("noise covariance is not Hermitian");
  }
}

RateAllocationProblem RateAllocationProblem::with_beta() const {
  RateAllocationProblem out = *this;
  if (out.beta <= 0.0) out.beta = compute_beta(*this);
  return out;
}

RVector RateVector::t() const {
  return b.unaryExpr([](double x) { return pow4(x); });
}

bool RateVector::is_integer() const {
  return (b.array() == b.array().round()).all();
}

std::vector<Eigen::Index> SelectionVector::selected(double threshold) const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p[k] >= threshold) out.push_back(k);
  }
  return out;
}

double compute_beta(const RateAllocationProblem& problem) {
  const RVector full = RVector::Constant(problem.sensors(), problem.b0);
  return allocation_noise_power(problem, full);
}

CMatrix noisy_covariance(const RateAllocationProblem& problem, const RVector& bits) {
  if (bits.size() != problem.sensors()) throw DimensionMismatch("rate vector length");
  CMatrix r = problem.noise_cov;
  for (Eigen::Index k = 0; k < bits.size(); ++k) {
    r(k, k) += quant_noise_variance(problem.amplitudes[k], bits[k]);
  }
  return r;
}

double allocation_noise_power(const RateAllocationProblem& problem, const RVector& bits) {
  return output_noise_power(noisy_covariance(problem, bits), problem.constraints);
}

bool allocation_feasible(const RateAllocationProblem& problem, const RVector& bits) {
  const double tau = allocation_noise_power(problem, bits);
  return tau <= problem.bound() * (1.0 + kFeasibilitySlack);
}

double runtime_noise_power(const RateAllocationProblem& problem, const RVector& bits) {
  std::vector<Eigen::Index> active;
  for (Eigen::Index k = 0; k < bits.size(); ++k) {
    if (bits[k] > 0.0) active.push_back(k);
  }
  return subset_output_noise_power(noisy_covariance(problem, bits), problem.constraints, active);
}

double selection_noise_power(const RateAllocationProblem& problem,
                             const std::vector<Eigen::Index>& subset) {
  const RVector full = RVector::Constant(problem.sensors(), problem.b0);
  return subset_output_noise_power(noisy_covariance(problem, full), problem.constraints, subset);
}

bool selection_feasible(const RateAllocationProblem& problem,
                        const std::vector<Eigen::Index>& subset) {
  return selection_noise_power(problem, subset) <= problem.bound() * (1.0 + kFeasibilitySlack);
}

sdp::SDPProblem build_rd_lcmv_sdp(const RateAllocationProblem& problem) {
  const Eigen::Index m = problem.sensors();
  auto sdp = build_relaxation(problem, 1.0, 1.0, pow4(problem.b0));
  const RVector w = problem.channel.cost_weights();
  sdp.objective.head(m) = w;
  sdp.objective_offset = -w.sum();
  return sdp;
}

sdp::SDPProblem build_boolean_form(const RateAllocationProblem& problem) {
  const Eigen::Index m = problem.sensors();
  const double full = pow4(problem.b0);
  auto sdp = build_relaxation(problem, full, 1.0 / full, 1.0);
  const RVector w = problem.channel.cost_weights();
  sdp.objective.head(m) = full * w;
  sdp.objective_offset = -w.sum();
  return sdp;
}

sdp::SDPProblem build_selection_sdp(const RateAllocationProblem& problem) {
  const Eigen::Index m = problem.sensors();
  auto sdp = build_relaxation(problem, pow4(problem.b0), 0.0, 1.0);
  sdp.objective.head(m) = problem.channel.cost_weights();
  return sdp;
}

ContinuousAllocation solve_rd_lcmv(const RateAllocationProblem& problem,
                                   const sdp::Options& options) {
  const auto sdp = build_rd_lcmv_sdp(problem);
  ContinuousAllocation out;
  const Eigen::Index m = problem.sensors();
  const double b0 = problem.b0;
  if (bound_pins_full_rate(problem)) {
    out.solution.status = sdp::Status::Optimal;
    out.solution.x = RVector::Zero(sdp.n);
    out.solution.x.head(m).setConstant(pow4(b0));
    out.solution.objective_value = sdp.objective_value(out.solution.x);
    out.solution.dual_objective = out.solution.objective_value;
    out.solution.message = "bound admits only the full-rate allocation";
    out.rates.b = RVector::Constant(m, b0);
    out.energy = allocation_energy(problem, out.rates.b);
    return out;
  }
  out.solution = sdp::solve(sdp, options);
  if (out.solution.status != sdp::Status::Optimal) {
    throw AllocationFailed(std::string("rate relaxation not solved: ") +
                           sdp::to_string(out.solution.status) + " (" + out.solution.message + ")");
  }
  out.rates.b = out.solution.x.head(m).unaryExpr(
      [b0](double t) { return std::clamp(0.5 * std::log2(std::max(t, 1.0)), 0.0, b0); });
  out.energy = allocation_energy(problem, out.rates.b);
  return out;
}

RateVector randomized_round(const RateVector& continuous, const RateAllocationProblem& problem,
                            int draws, std::uint64_t seed) {
  const Eigen::Index m = problem.sensors();
  if (continuous.b.size() != m) throw DimensionMismatch("rate vector length");
  const double b0 = problem.b0;

  // Values within solver accuracy of an integer count as that integer.
  RVector b = continuous.b.cwiseMax(0.0).cwiseMin(b0);
  for (Eigen::Index k = 0; k < m; ++k) {
    if (std::abs(b[k] - std::round(b[k])) < 1e-9) b[k] = std::round(b[k]);
  }
  const RVector lo = b.array().floor();
  const RVector frac = b - lo;

  RVector best;
  double best_energy = kInf;
  if ((frac.array() == 0.0).all()) {
    if (allocation_feasible(problem, lo)) return {lo};
  } else {
    for (int d = 0; d < draws; ++d) {
      auto rng = make_rng(seed, static_cast<std::uint64_t>(d));
      RVector cand = lo;
      for (Eigen::Index k = 0; k < m; ++k) {
        if (uniform01(rng) < frac[k]) cand[k] += 1.0;
      }
      const double energy = allocation_energy(problem, cand);
      if (energy >= best_energy) continue;
      if (allocation_feasible(problem, cand)) {
        best = cand;
        best_energy = energy;
      }
    }
    if (best.size() == m) return {best};
  }

  const RVector ceil = continuous.b.array().ceil().min(b0).max(0.0);
  if (allocation_feasible(problem, ceil)) return {ceil};
  const RVector full = RVector::Constant(m, b0);
  if (allocation_feasible(problem, full)) return {full};
  throw AllocationFailed("no feasible integer allocation, even at full rate");
}

SelectionResult md_lcmv_select(const RateAllocationProblem& problem, int draws,
                               std::uint64_t seed, const sdp::Options& options) {
  const Eigen::Index m = problem.sensors();
  std::vector<Eigen::Index> everyone(static_cast<std::size_t>(m));
  for (Eigen::Index k = 0; k < m; ++k) everyone[static_cast<std::size_t>(k)] = k;
  if (!selection_feasible(problem, everyone)) {
    throw AllocationFailed("the full sensor set does not meet the noise bound");
  }
  if (bound_pins_full_rate(problem)) {
    SelectionResult out;
    out.relaxed.p = RVector::Ones(m);
    out.final_selection.p = RVector::Ones(m);
    out.subset = everyone;
    out.noise_power = selection_noise_power(problem, everyone);
    return out;
  }

  const auto sdp = build_selection_sdp(problem);
  const auto sol = sdp::solve(sdp, options);
  if (sol.status != sdp::Status::Optimal) {
    throw AllocationFailed(std::string("selection relaxation not solved: ") +
                           sdp::to_string(sol.status) + " (" + sol.message + ")");
  }
  SelectionResult out;
  out.relaxed.p = sol.x.head(m).cwiseMax(0.0).cwiseMin(1.0);
  const RVector& p = out.relaxed.p;
  const RVector cost = problem.channel.cost_weights();

  auto subset_cost = [&](const std::vector<Eigen::Index>& s) {
    double c = 0.0;
    for (auto k : s) c += cost[k];
    return c;
  };

  std::vector<Eigen::Index> best;
  double best_cost = kInf;
  bool found = false;
  for (int d = 0; d < draws; ++d) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(d));
    std::vector<Eigen::Index> cand;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (uniform01(rng) < p[k]) cand.push_back(k);
    }
    const double c = subset_cost(cand);
    if (found && c >= best_cost) continue;
    if (selection_feasible(problem, cand)) {
      best = std::move(cand);
      best_cost = c;
      found = true;
    }
  }
  // Ranked candidate: the shortest feasible prefix of sensors ordered by
  // decreasing relaxed p. Relaxed values sit near 4^(b - b0), so plain
  // Bernoulli draws are rarely feasible on their own.
  std::vector<Eigen::Index> order = everyone;
  std::stable_sort(order.begin(), order.end(),
                   [&p](Eigen::Index a, Eigen::Index b) { return p[a] > p[b]; });
  std::size_t lo = 0;
  std::size_t hi = order.size();  // prefix of length hi is feasible
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (selection_feasible(problem, {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(mid)})) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  std::vector<Eigen::Index> ranked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(hi));
  std::sort(ranked.begin(), ranked.end());
  if (!found || subset_cost(ranked) < best_cost) best = std::move(ranked);

  out.subset = best;
  out.final_selection.p = RVector::Zero(m);
  for (auto k : best) out.final_selection.p[k] = 1.0;
  out.noise_power = selection_noise_power(problem, best);
  return out;
}

ThresholdResult bisection_threshold(const RateVector& rates, const RateAllocationProblem& problem,
                                    double epsilon, int max_iter) {
  if (epsilon < 0.0) throw InvalidConfig("epsilon must be nonnegative");
  const Eigen::Index m = problem.sensors();
  if (rates.b.size() != m) throw DimensionMismatch("rate vector length");

  std::vector<double> levels(rates.b.data(), rates.b.data() + m);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  auto subset_at = [&](double threshold) {
    std::vector<Eigen::Index> s;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (rates.b[k] >= threshold) s.push_back(k);
    }
    return s;
  };
  const double limit = problem.bound() * (1.0 + std::max(epsilon, kFeasibilitySlack));
  auto ok = [&](std::size_t idx) { return selection_noise_power(problem, subset_at(levels[idx])) <= limit; };

  ThresholdResult out;
  // Lowest level selects everyone; feasibility is monotone in the level index.
  if (!ok(0)) throw AllocationFailed("the full sensor set does not meet the noise bound");
  std::size_t good = 0;
  std::size_t bad = levels.size();
  // Start from the middle of the rate range, as a threshold of b0 / 2.
  const auto mid_level = std::lower_bound(levels.begin(), levels.end(), 0.5 * problem.b0);
  std::size_t probe = static_cast<std::size_t>(mid_level - levels.begin());
  while (bad - good > 1 && out.iterations < max_iter) {
    if (probe <= good || probe >= bad) probe = good + (bad - good) / 2;
    ++out.iterations;
    if (ok(probe)) {
      good = probe;
    } else {
      bad = probe;
    }
    probe = good + (bad - good) / 2;
  }
  out.threshold = levels[good];
  out.subset = subset_at(out.threshold);
  out.noise_power = selection_noise_power(problem, out.subset);
  return out;
}

OracleResult exhaustive_oracle(const RateAllocationProblem& problem) {
  const Eigen::Index m = problem.sensors();
  const double base = problem.b0 + 1.0;
  if (static_cast<double>(m) * std::log(base) > std::log(1e6) + 1e-12) {
    throw InvalidConfig("exhaustive search exceeds 1e6 allocations");
  }
  OracleResult out;
  out.best_energy = kInf;
  RVector cand = RVector::Zero(m);
  const auto levels = static_cast<int>(base);
  while (true) {
    ++out.evaluated;
    const double energy = allocation_energy(problem, cand);
    if (energy < out.best_energy && allocation_feasible(problem, cand)) {
      out.best_energy = energy;
      out.best_rates.b = cand;
      out.feasible = true;
    }
    Eigen::Index k = 0;
    while (k < m && cand[k] == levels - 1) cand[k++] = 0.0;
    if (k == m) break;
    cand[k] += 1.0;
  }
  return out;
}

std::optional<std::vector<Eigen::Index>> exhaustive_subset_oracle(
    const RateAllocationProblem& problem) {
  const Eigen::Index m = problem.sensors();
  if (m > 20) throw InvalidConfig("subset enumeration limited to 20 sensors");
  const RVector cost = problem.channel.cost_weights();
  std::optional<std::vector<Eigen::Index>> best;
  double best_cost = kInf;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << m); ++mask) {
    std::vector<Eigen::Index> s;
    double c = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (mask & (std::uint64_t{1} << k)) {
        s.push_back(k);
        c += cost[k];
      }
    }
    if (c < best_cost && selection_feasible(problem, s)) {
      best = std::move(s);
      best_cost = c;
    }
  }
  return best;
}

}  // namespace wasn
