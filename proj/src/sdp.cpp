#include "wasnrate/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wasn::sdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Scaled internal form. Every LMI block is equilibrated so its largest
// coefficient is 1, variables are rescaled so their largest LMI coefficient
// is 1, and box bounds become rows of a nonnegative orthant.

struct FullEntry {
  Eigen::Index row;
  Eigen::Index col;
  double value;
};

struct ScaledTerm {
  Eigen::Index var;
  std::vector<FullEntry> entries;  // both triangles
};

struct ScaledBlock {
  Eigen::Index size = 0;
  RMatrix f0;
  std::vector<ScaledTerm> terms;
  double scale = 1.0;  // eta: scaled block = eta * original block
};

struct LinearRow {
  Eigen::Index var;
  double coef;      // +1 for a lower bound, -1 for an upper bound
  double constant;  // s = constant + coef * x
  bool is_upper;
};

struct ScaledProblem {
  Eigen::Index n = 0;
  RVector c;
  RVector var_scale;  // x = var_scale .* x_scaled
  double obj_scale = 1.0;
  std::vector<ScaledBlock> blocks;
  std::vector<LinearRow> rows;
  RVector lower, upper;  // scaled bounds
};

double max_abs(const LmiBlock& b) {
  double m = b.constant.cwiseAbs().maxCoeff();
  for (const auto& t : b.terms) {
    for (const auto& e : t.entries) m = std::max(m, std::abs(e.value));
  }
  return m;
}

ScaledProblem scale_problem(const SDPProblem& p) {
  ScaledProblem s;
  s.n = p.n;
  s.var_scale = RVector::Ones(p.n);

  std::vector<double> eta(p.blocks.size(), 1.0);
  RVector var_max = RVector::Zero(p.n);
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const double m = max_abs(p.blocks[b]);
    eta[b] = m > 0.0 ? 1.0 / m : 1.0;
    for (const auto& t : p.blocks[b].terms) {
      for (const auto& e : t.entries) {
        var_max[t.variable] = std::max(var_max[t.variable], eta[b] * std::abs(e.value));
      }
    }
  }
  for (Eigen::Index i = 0; i < p.n; ++i) {
    if (var_max[i] > 0.0) s.var_scale[i] = 1.0 / var_max[i];
  }

  s.c = p.objective.cwiseProduct(s.var_scale);
  const double cmax = s.c.size() > 0 ? s.c.cwiseAbs().maxCoeff() : 0.0;
  s.obj_scale = cmax > 0.0 ? 1.0 / cmax : 1.0;
  s.c *= s.obj_scale;

  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const auto& src = p.blocks[b];
    ScaledBlock blk;
    blk.size = src.size;
    blk.scale = eta[b];
    blk.f0 = eta[b] * src.constant;
    for (const auto& t : src.terms) {
      ScaledTerm st{t.variable, {}};
      const double k = eta[b] * s.var_scale[t.variable];
      for (const auto& e : t.entries) {
        st.entries.push_back({e.row, e.col, k * e.value});
        if (e.row != e.col) st.entries.push_back({e.col, e.row, k * e.value});
      }
      if (!st.entries.empty()) blk.terms.push_back(std::move(st));
    }
    s.blocks.push_back(std::move(blk));
  }

  s.lower = p.lower.cwiseQuotient(s.var_scale);
  s.upper = p.upper.cwiseQuotient(s.var_scale);
  for (Eigen::Index i = 0; i < p.n; ++i) {
    if (std::isfinite(s.lower[i])) s.rows.push_back({i, 1.0, -s.lower[i], false});
    if (std::isfinite(s.upper[i])) s.rows.push_back({i, -1.0, s.upper[i], true});
  }
  return s;
}

RMatrix evaluate_block(const ScaledBlock& b, const RVector& x) {
  RMatrix f = b.f0;
  for (const auto& t : b.terms) {
    const double xv = x[t.var];
    for (const auto& e : t.entries) f(e.row, e.col) += xv * e.value;
  }
  return f;
}

double trace_product(const std::vector<FullEntry>& entries, const RMatrix& m) {
  double s = 0.0;
  for (const auto& e : entries) s += e.value * m(e.col, e.row);
  return s;
}

// Largest step a in (0, inf] with X + a dX PSD, given the Cholesky factor of X.
double max_step(const Eigen::LLT<RMatrix>& llt, const RMatrix& dx) {
  RMatrix m = llt.matrixL().solve(dx);
  m = llt.matrixL().solve(m.transpose()).transpose();
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<RMatrix> es(m, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  return lmin < 0.0 ? -1.0 / lmin : kInf;
}

// Nesterov-Todd scaling of one block: W Z W = S with W = G G^T and
// G^-1 S G^-T = G^T Z G = diag(v).
struct NtScaling {
  RMatrix g;      // G
  RMatrix ginv;   // G^-1
  RMatrix winv;   // W^-1
  RVector v;
};

bool nt_scaling(const RMatrix& s, const RMatrix& z, NtScaling& out) {
  Eigen::LLT<RMatrix> ls(s);
  if (ls.info() != Eigen::Success) return false;
  const RMatrix l = ls.matrixL();
  RMatrix t = l.transpose() * z * l;
  t = 0.5 * (t + t.transpose());
  Eigen::SelfAdjointEigenSolver<RMatrix> es(t);
  if (es.info() != Eigen::Success) return false;
  RVector lam = es.eigenvalues();
  if (lam.minCoeff() <= 0.0) return false;
  out.v = lam.cwiseSqrt();
  const RMatrix& q = es.eigenvectors();
  // X = L^-T Q
  const RMatrix x = l.transpose().triangularView<Eigen::Upper>().solve(q);
  const RVector vhalf = out.v.cwiseSqrt();
  out.ginv = vhalf.asDiagonal() * x.transpose();
  out.g = l * q * vhalf.cwiseInverse().asDiagonal();
  out.winv = x * out.v.asDiagonal() * x.transpose();
  out.winv = 0.5 * (out.winv + out.winv.transpose());
  return true;
}

struct Iterate {
  RVector x;
  std::vector<RMatrix> s, z;
  RVector sl, zl;  // linear rows
};

struct Direction {
  RVector dx;
  std::vector<RMatrix> ds, dz;
  RVector dsl, dzl;
};

}  // namespace

// ---------------------------------------------------------------------------

void LmiBlock::add(Eigen::Index variable, Eigen::Index i, Eigen::Index j, double value) {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= size) throw InvalidConfig("LMI entry outside the block");
  if (value == 0.0) return;
  auto it = std::find_if(terms.begin(), terms.end(),
                         [variable](const Term& t) { return t.variable == variable; });
  if (it == terms.end()) {
    terms.push_back({variable, {}});
    it = terms.end() - 1;
  }
  for (auto& e : it->entries) {
    if (e.row == i && e.col == j) {
      e.value += value;
      return;
    }
  }
  it->entries.push_back({i, j, value});
}

void LmiBlock::add_constant(Eigen::Index i, Eigen::Index j, double value) {
  if (i < 0 || j < 0 || i >= size || j >= size) throw InvalidConfig("LMI entry outside the block");
  constant(i, j) += value;
  if (i != j) constant(j, i) += value;
}

RMatrix LmiBlock::coefficient(Eigen::Index variable) const {
  RMatrix f = RMatrix::Zero(size, size);
  for (const auto& t : terms) {
    if (t.variable != variable) continue;
    for (const auto& e : t.entries) {
      f(e.row, e.col) += e.value;
      if (e.row != e.col) f(e.col, e.row) += e.value;
    }
  }
  return f;
}

RMatrix LmiBlock::evaluate(const RVector& x) const {
  RMatrix f = constant;
  for (const auto& t : terms) {
    for (const auto& e : t.entries) {
      f(e.row, e.col) += x[t.variable] * e.value;
      if (e.row != e.col) f(e.col, e.row) += x[t.variable] * e.value;
    }
  }
  return f;
}

SDPProblem::SDPProblem(Eigen::Index variables)
    : n(variables),
      objective(RVector::Zero(variables)),
      lower(RVector::Constant(variables, -kInf)),
      upper(RVector::Constant(variables, kInf)) {}

void SDPProblem::validate() const {
  if (objective.size() != n || lower.size() != n || upper.size() != n) {
    throw DimensionMismatch("SDP vectors do not match the variable count");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lower[i] > upper[i]) throw InvalidConfig("SDP bound with lower > upper");
  }
  for (const auto& b : blocks) {
    if (b.constant.rows() != b.size || b.constant.cols() != b.size) {
      throw DimensionMismatch("LMI constant has the wrong size");
    }
    const double scale = std::max(1.0, b.constant.cwiseAbs().maxCoeff());
    if ((b.constant - b.constant.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw InvalidConfig("LMI constant is not symmetric");
    }
    for (const auto& t : b.terms) {
      if (t.variable < 0 || t.variable >= n) throw InvalidConfig("LMI term references bad variable");
      for (const auto& e : t.entries) {
        if (e.row > e.col || e.row < 0 || e.col >= b.size) {
          throw InvalidConfig("LMI entries must be upper-triangle and inside the block");
        }
      }
    }
  }
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::MaxIter: return "max_iter";
    case Status::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

double Residuals::worst_block_eigenvalue() const {
  double w = kInf;
  for (double v : block_min_eigenvalue) w = std::min(w, v);
  return w;
}

Residuals certify(const SDPProblem& problem, const SDPSolution& sol) {
  Residuals r;
  const RVector& x = sol.x;
  if (x.size() != problem.n) return r;

  for (const auto& b : problem.blocks) {
    RMatrix f = b.evaluate(x);
    Eigen::SelfAdjointEigenSolver<RMatrix> es(f, Eigen::EigenvaluesOnly);
    const RVector ev = es.eigenvalues();
    const double norm = std::max({1.0, std::abs(ev.minCoeff()), std::abs(ev.maxCoeff())});
    r.block_min_eigenvalue.push_back(ev.minCoeff() / norm);
  }
  for (Eigen::Index i = 0; i < problem.n; ++i) {
    if (std::isfinite(problem.lower[i])) {
      r.bound_violation = std::max(
          r.bound_violation, (problem.lower[i] - x[i]) / std::max(1.0, std::abs(problem.lower[i])));
    }
    if (std::isfinite(problem.upper[i])) {
      r.bound_violation = std::max(
          r.bound_violation, (x[i] - problem.upper[i]) / std::max(1.0, std::abs(problem.upper[i])));
    }
  }

  if (sol.dual_blocks.size() != problem.blocks.size()) return r;
  RVector aty = RVector::Zero(problem.n);
  double dual = problem.objective_offset;
  for (std::size_t b = 0; b < problem.blocks.size(); ++b) {
    const auto& blk = problem.blocks[b];
    const RMatrix& z = sol.dual_blocks[b];
    dual -= (blk.constant.cwiseProduct(z)).sum();
    for (const auto& t : blk.terms) {
      double tr = 0.0;
      for (const auto& e : t.entries) {
        tr += e.value * (e.row == e.col ? z(e.row, e.col) : z(e.row, e.col) + z(e.col, e.row));
      }
      aty[t.variable] += tr;
    }
  }
  for (Eigen::Index i = 0; i < problem.n; ++i) {
    if (sol.dual_lower.size() == problem.n && std::isfinite(problem.lower[i])) {
      aty[i] += sol.dual_lower[i];
      dual += sol.dual_lower[i] * problem.lower[i];
    }
    if (sol.dual_upper.size() == problem.n && std::isfinite(problem.upper[i])) {
      aty[i] -= sol.dual_upper[i];
      dual -= sol.dual_upper[i] * problem.upper[i];
    }
  }
  const double primal = problem.objective_value(x);
  r.dual_infeasibility = (problem.objective - aty).norm() / (1.0 + problem.objective.norm());
  r.relative_gap = std::abs(primal - dual) / (1.0 + std::abs(primal) + std::abs(dual));
  return r;
}

SDPSolution solve(const SDPProblem& problem, const Options& opt) {
  problem.validate();
  const ScaledProblem sp = scale_problem(problem);
  const auto nb = sp.blocks.size();
  const auto nl = static_cast<Eigen::Index>(sp.rows.size());
  const Eigen::Index n = sp.n;

  Eigen::Index cone_dim = nl;
  for (const auto& b : sp.blocks) cone_dim += b.size;

  SDPSolution sol;
  if (cone_dim == 0) {
    sol.status = Status::NumericalFailure;
    sol.message = "problem has no constraints";
    sol.x = RVector::Zero(n);
    return sol;
  }

  // Starting point.
  Iterate it;
  it.x.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool lo = std::isfinite(sp.lower[i]);
    const bool hi = std::isfinite(sp.upper[i]);
    if (lo && hi) {
      it.x[i] = 0.5 * (sp.lower[i] + sp.upper[i]);
    } else if (lo) {
      it.x[i] = sp.lower[i] + 1.0;
    } else if (hi) {
      it.x[i] = sp.upper[i] - 1.0;
    } else {
      it.x[i] = 0.0;
    }
  }
  const double zeta = 10.0;
  for (const auto& b : sp.blocks) {
    const RMatrix f = evaluate_block(b, it.x);
    const double xi = std::max(10.0, 2.0 * f.norm());
    it.s.push_back(xi * RMatrix::Identity(b.size, b.size));
    it.z.push_back(zeta * RMatrix::Identity(b.size, b.size));
  }
  it.sl.resize(nl);
  it.zl = RVector::Constant(nl, zeta);
  for (Eigen::Index r = 0; r < nl; ++r) {
    const auto& row = sp.rows[static_cast<std::size_t>(r)];
    const double slack = row.constant + row.coef * it.x[row.var];
    it.sl[r] = slack > 1e-8 ? slack : 10.0;
  }

  double f0_norm = 0.0;
  for (const auto& b : sp.blocks) f0_norm = std::max(f0_norm, b.f0.norm());
  for (const auto& row : sp.rows) f0_norm = std::max(f0_norm, std::abs(row.constant));
  const double c_norm = sp.c.norm();

  std::vector<NtScaling> nt(nb);
  RMatrix h(n, n);
  RVector rd(n);
  std::vector<RMatrix> rp(nb);
  RVector rpl(nl);
  int stall = 0;
  Iterate best;
  double best_gap = kInf;
  int best_iter = 0;

  auto finalize = [&](Status st, int iters, std::string msg) {
    sol.status = st;
    sol.iterations = iters;
    sol.message = std::move(msg);
    sol.x = it.x.cwiseProduct(sp.var_scale);
    // Snap tiny bound overshoot.
    sol.x = sol.x.cwiseMax(problem.lower).cwiseMin(problem.upper);
    sol.objective_value = problem.objective_value(sol.x);
    sol.dual_blocks.clear();
    for (std::size_t b = 0; b < nb; ++b) {
      sol.dual_blocks.push_back(it.z[b] * (sp.blocks[b].scale / sp.obj_scale));
    }
    sol.dual_lower = RVector::Zero(n);
    sol.dual_upper = RVector::Zero(n);
    for (Eigen::Index r = 0; r < nl; ++r) {
      const auto& row = sp.rows[static_cast<std::size_t>(r)];
      const double mult = it.zl[r] / (sp.obj_scale * sp.var_scale[row.var]);
      (row.is_upper ? sol.dual_upper : sol.dual_lower)[row.var] = mult;
    }
    sol.residuals = certify(problem, sol);
    double dual = problem.objective_offset;
    for (std::size_t b = 0; b < nb; ++b) {
      dual -= problem.blocks[b].constant.cwiseProduct(sol.dual_blocks[b]).sum();
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::isfinite(problem.lower[i])) dual += sol.dual_lower[i] * problem.lower[i];
      if (std::isfinite(problem.upper[i])) dual -= sol.dual_upper[i] * problem.upper[i];
    }
    sol.dual_objective = dual;
    return sol;
  };

  // Exit path for numerical trouble: fall back to the best iterate that met
  // the reduced tolerances, if any.
  auto give_up = [&](Status st, int iters, const std::string& msg) {
    if (std::isfinite(best_gap)) {
      it = best;
      return finalize(Status::Optimal, best_iter, "converged to reduced accuracy (" + msg + ")");
    }
    return finalize(st, iters, msg);
  };

  for (int iter = 0; iter <= opt.max_iter; ++iter) {
    // Residuals and complementarity.
    double mu = 0.0;
    double pinf = 0.0;
    rd = sp.c;
    double pobj = sp.c.dot(it.x);
    double dobj = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& blk = sp.blocks[b];
      rp[b] = evaluate_block(blk, it.x) - it.s[b];
      pinf = std::max(pinf, rp[b].norm());
      mu += it.s[b].cwiseProduct(it.z[b]).sum();
      dobj -= blk.f0.cwiseProduct(it.z[b]).sum();
      for (const auto& t : blk.terms) rd[t.var] -= trace_product(t.entries, it.z[b]);
    }
    for (Eigen::Index r = 0; r < nl; ++r) {
      const auto& row = sp.rows[static_cast<std::size_t>(r)];
      rpl[r] = row.constant + row.coef * it.x[row.var] - it.sl[r];
      pinf = std::max(pinf, std::abs(rpl[r]));
      mu += it.sl[r] * it.zl[r];
      dobj -= row.constant * it.zl[r];
      rd[row.var] -= row.coef * it.zl[r];
    }
    mu /= static_cast<double>(cone_dim);
    const double rel_pinf = pinf / (1.0 + f0_norm);
    const double rel_dinf = rd.norm() / (1.0 + c_norm);
    const double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (!std::isfinite(mu) || !std::isfinite(pobj) || !std::isfinite(dobj)) {
      return give_up(Status::NumericalFailure, iter, "non-finite iterate");
    }
    if (rel_pinf <= opt.tol_feas && rel_dinf <= opt.tol_feas && rel_gap <= opt.tol_gap) {
      return finalize(Status::Optimal, iter, "converged");
    }
    if (rel_pinf <= opt.reduced_tol_feas && rel_dinf <= opt.reduced_tol_feas &&
        rel_gap <= opt.reduced_tol_gap && rel_gap < best_gap) {
      best = it;
      best_gap = rel_gap;
      best_iter = iter;
    }
    // Dual ray certifies primal infeasibility: A*(Z) ~ 0 with Tr(F0 Z) < 0.
    {
      const double ray = -dobj;  // Tr(F0 Z) + h.z
      const RVector aty = sp.c - rd;
      if (ray < 0.0 && aty.norm() <= 1e-8 * std::abs(ray) && rel_pinf > opt.tol_feas) {
        return finalize(Status::Infeasible, iter, "primal infeasibility certificate");
      }
      if (it.x.norm() > 1e14) {
        return finalize(Status::Infeasible, iter, "dual infeasible (primal unbounded)");
      }
    }
    if (iter == opt.max_iter) break;

    // Scaling and Schur complement.
    for (std::size_t b = 0; b < nb; ++b) {
      if (!nt_scaling(it.s[b], it.z[b], nt[b])) {
        return give_up(Status::NumericalFailure, iter, "lost positive definiteness");
      }
    }
    h.setZero();
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& terms = sp.blocks[b].terms;
      const RMatrix& w = nt[b].winv;
      for (std::size_t p = 0; p < terms.size(); ++p) {
        for (std::size_t q = p; q < terms.size(); ++q) {
          double acc = 0.0;
          for (const auto& e1 : terms[p].entries) {
            for (const auto& e2 : terms[q].entries) {
              acc += e1.value * e2.value * w(e1.col, e2.row) * w(e2.col, e1.row);
            }
          }
          h(terms[p].var, terms[q].var) += acc;
          if (terms[p].var != terms[q].var) h(terms[q].var, terms[p].var) += acc;
        }
      }
    }
    for (Eigen::Index r = 0; r < nl; ++r) {
      const auto& row = sp.rows[static_cast<std::size_t>(r)];
      h(row.var, row.var) += row.coef * row.coef * it.zl[r] / it.sl[r];
    }
    // Symmetric Jacobi scaling, Cholesky, then iterative refinement
    // against the unregularized matrix.
    const RVector hscale = h.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    RMatrix hs = hscale.asDiagonal() * h * hscale.asDiagonal();
    Eigen::LLT<RMatrix> hfac(hs);
    for (double reg = 1e-14; hfac.info() != Eigen::Success && reg < 1e-4; reg *= 100.0) {
      RMatrix hr = hs;
      hr.diagonal().array() += reg;
      hfac.compute(hr);
    }
    if (hfac.info() != Eigen::Success) {
      return give_up(Status::NumericalFailure, iter, "Schur complement factorization failed");
    }
    auto schur_solve = [&](const RVector& rhs) {
      RVector sol = hscale.cwiseProduct(hfac.solve(hscale.cwiseProduct(rhs)));
      for (int k = 0; k < 3; ++k) {
        const RVector res = rhs - h * sol;
        sol += hscale.cwiseProduct(hfac.solve(hscale.cwiseProduct(res)));
      }
      return sol;
    };

    // Solves for one direction given target sigma*mu and optional
    // second-order correction from a predictor direction.
    auto direction = [&](double target, const Direction* pred) {
      Direction d;
      std::vector<RMatrix> pm(nb);
      RVector rhs = -rd;
      for (std::size_t b = 0; b < nb; ++b) {
        const auto& s = nt[b];
        const Eigen::Index m = s.v.size();
        RMatrix rmat = -2.0 * RMatrix(s.v.cwiseAbs2().asDiagonal());
        rmat.diagonal().array() += 2.0 * target;
        if (pred != nullptr) {
          const RMatrix dst = s.ginv * pred->ds[b] * s.ginv.transpose();
          const RMatrix dzt = s.g.transpose() * pred->dz[b] * s.g;
          rmat -= dst * dzt + dzt * dst;
        }
        for (Eigen::Index i = 0; i < m; ++i) {
          for (Eigen::Index j = 0; j < m; ++j) rmat(i, j) /= (s.v[i] + s.v[j]);
        }
        pm[b] = s.ginv.transpose() * rmat * s.ginv;
        const RMatrix k = s.winv * rp[b] * s.winv;
        const RMatrix diff = pm[b] - k;
        for (const auto& t : sp.blocks[b].terms) rhs[t.var] += trace_product(t.entries, diff);
      }
      RVector pl(nl);
      for (Eigen::Index r = 0; r < nl; ++r) {
        const auto& row = sp.rows[static_cast<std::size_t>(r)];
        double corr = pred != nullptr ? pred->dsl[r] * pred->dzl[r] : 0.0;
        pl[r] = (target - it.sl[r] * it.zl[r] - corr) / it.sl[r];
        rhs[row.var] += row.coef * (pl[r] - it.zl[r] / it.sl[r] * rpl[r]);
      }
      d.dx = schur_solve(rhs);
      for (std::size_t b = 0; b < nb; ++b) {
        RMatrix ds = rp[b];
        for (const auto& t : sp.blocks[b].terms) {
          const double v = d.dx[t.var];
          for (const auto& e : t.entries) ds(e.row, e.col) += v * e.value;
        }
        RMatrix dz = pm[b] - nt[b].winv * ds * nt[b].winv;
        d.ds.push_back(std::move(ds));
        d.dz.push_back(0.5 * (dz + dz.transpose()));
      }
      d.dsl.resize(nl);
      d.dzl.resize(nl);
      for (Eigen::Index r = 0; r < nl; ++r) {
        const auto& row = sp.rows[static_cast<std::size_t>(r)];
        d.dsl[r] = rpl[r] + row.coef * d.dx[row.var];
        d.dzl[r] = pl[r] - it.zl[r] / it.sl[r] * d.dsl[r];
      }
      return d;
    };

    std::vector<Eigen::LLT<RMatrix>> schol, zchol;
    for (std::size_t b = 0; b < nb; ++b) {
      schol.emplace_back(it.s[b]);
      zchol.emplace_back(it.z[b]);
    }
    auto steps = [&](const Direction& d) {
      double ap = kInf, ad = kInf;
      for (std::size_t b = 0; b < nb; ++b) {
        ap = std::min(ap, max_step(schol[b], d.ds[b]));
        ad = std::min(ad, max_step(zchol[b], d.dz[b]));
      }
      for (Eigen::Index r = 0; r < nl; ++r) {
        if (d.dsl[r] < 0.0) ap = std::min(ap, -it.sl[r] / d.dsl[r]);
        if (d.dzl[r] < 0.0) ad = std::min(ad, -it.zl[r] / d.dzl[r]);
      }
      return std::pair{ap, ad};
    };

    const Direction pred = direction(0.0, nullptr);
    auto [ap_a, ad_a] = steps(pred);
    ap_a = std::min(1.0, ap_a);
    ad_a = std::min(1.0, ad_a);
    double mu_aff = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      mu_aff += (it.s[b] + ap_a * pred.ds[b]).cwiseProduct(it.z[b] + ad_a * pred.dz[b]).sum();
    }
    for (Eigen::Index r = 0; r < nl; ++r) {
      mu_aff += (it.sl[r] + ap_a * pred.dsl[r]) * (it.zl[r] + ad_a * pred.dzl[r]);
    }
    mu_aff /= static_cast<double>(cone_dim);
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    const Direction corr = direction(sigma * mu, &pred);
    auto [ap, ad] = steps(corr);
    const double gamma = 0.9 + 0.09 * std::min({1.0, ap, ad});
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);
    if (!std::isfinite(ap) || !std::isfinite(ad)) {
      return give_up(Status::NumericalFailure, iter, "invalid step length");
    }

    it.x += ap * corr.dx;
    for (std::size_t b = 0; b < nb; ++b) {
      it.s[b] += ap * corr.ds[b];
      it.z[b] += ad * corr.dz[b];
      it.s[b] = 0.5 * (it.s[b] + it.s[b].transpose());
      it.z[b] = 0.5 * (it.z[b] + it.z[b].transpose());
    }
    it.sl += ap * corr.dsl;
    it.zl += ad * corr.dzl;

    stall = (ap < 0.2 && ad < 0.2) ? stall + 1 : 0;
    if (stall >= 10 && std::isfinite(best_gap)) {
      return give_up(Status::NumericalFailure, iter + 1, "step length stalled");
    }
    if (stall >= 30) return finalize(Status::NumericalFailure, iter + 1, "step length stalled");
  }
  return give_up(Status::MaxIter, opt.max_iter, "iteration limit reached");
}

RMatrix embed_hermitian(const CMatrix& h) {
  if (h.rows() != h.cols()) throw InvalidConfig("embedding requires a square matrix");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidConfig("matrix is not Hermitian");
  }
  const Eigen::Index n = h.rows();
  RMatrix out(2 * n, 2 * n);
  const RMatrix re = 0.5 * (h.real() + h.real().transpose());
  const RMatrix im = 0.5 * (h.imag() - h.imag().transpose());
  out.topLeftCorner(n, n) = re;
  out.topRightCorner(n, n) = -im;
  out.bottomLeftCorner(n, n) = im;
  out.bottomRightCorner(n, n) = re;
  return out;
}

}  // namespace wasn::sdp
