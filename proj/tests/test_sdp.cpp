#include <doctest.h>

#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "wasnrate/sdp.hpp"

using namespace wasn;
using namespace wasn::sdp;

namespace {

// LP in two variables: minimize c.x subject to g_i . x + h_i >= 0. Brute-force
// vertex enumeration over pairs of active constraints.
struct Halfplane {
  double g0, g1, h;
};

double lp_vertex_oracle(double c0, double c1, const std::vector<Halfplane>& hs) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hs.size(); ++i) {
    for (std::size_t j = i + 1; j < hs.size(); ++j) {
      const double det = hs[i].g0 * hs[j].g1 - hs[i].g1 * hs[j].g0;
      if (std::abs(det) < 1e-12) continue;
      const double x0 = (-hs[i].h * hs[j].g1 + hs[j].h * hs[i].g1) / det;
      const double x1 = (-hs[j].h * hs[i].g0 + hs[i].h * hs[j].g0) / det;
      bool ok = true;
      for (const auto& h : hs) ok = ok && (h.g0 * x0 + h.g1 * x1 + h.h >= -1e-9);
      if (ok) best = std::min(best, c0 * x0 + c1 * x1);
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("sdp") {
  TEST_CASE("two by two block with a known optimum") {
    // [[x, 1], [1, x]] >= 0 holds iff x >= 1.
    SDPProblem p(1);
    p.objective << 1.0;
    LmiBlock b(2);
    b.add(0, 0, 0, 1.0);
    b.add(0, 1, 1, 1.0);
    b.add_constant(0, 1, 1.0);
    p.blocks.push_back(b);
    const auto s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    const auto r = certify(p, s);
    CHECK(r.relative_gap < 1e-6);
    CHECK(r.worst_block_eigenvalue() > -1e-7);
  }

  TEST_CASE("largest eigenvalue as an SDP") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      RMatrix a(4, 4);
      for (auto& v : a.reshaped()) v = n(rng);
      a = 0.5 * (a + a.transpose()).eval();
      SDPProblem p(1);
      p.objective << 1.0;
      LmiBlock b(4);
      for (int i = 0; i < 4; ++i) {
        b.add(0, i, i, 1.0);
        for (int j = i; j < 4; ++j) b.add_constant(i, j, -a(i, j));
      }
      p.blocks.push_back(b);
      const auto s = solve(p);
      REQUIRE(s.status == Status::Optimal);
      const double lmax = Eigen::SelfAdjointEigenSolver<RMatrix>(a).eigenvalues().maxCoeff();
      CHECK(s.x[0] == doctest::Approx(lmax).epsilon(1e-6));
    }
  }

  TEST_CASE("random LPs written as 1x1 blocks match vertex enumeration") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Halfplane> hs;
      // A bounded polygon: a box plus random cuts that keep the origin feasible.
      hs.push_back({1, 0, 2});
      hs.push_back({-1, 0, 2});
      hs.push_back({0, 1, 2});
      hs.push_back({0, -1, 2});
      for (int k = 0; k < 4; ++k) hs.push_back({u(rng), u(rng), 0.5 + 0.5 * (u(rng) + 1.0)});
      const double c0 = u(rng), c1 = u(rng);

      SDPProblem p(2);
      p.objective << c0, c1;
      for (const auto& h : hs) {
        LmiBlock b(1);
        b.add(0, 0, 0, h.g0);
        b.add(1, 0, 0, h.g1);
        b.add_constant(0, 0, h.h);
        p.blocks.push_back(b);
      }
      const auto s = solve(p);
      REQUIRE(s.status == Status::Optimal);
      CHECK(s.objective_value == doctest::Approx(lp_vertex_oracle(c0, c1, hs)).epsilon(1e-6));
    }
  }

  TEST_CASE("bounds act as constraints") {
    SDPProblem p(2);
    p.objective << 1.0, -2.0;
    p.lower << -1.0, -3.0;
    p.upper << 4.0, 0.5;
    const auto s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.x[0] == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(s.x[1] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(s.objective_value == doctest::Approx(-2.0).epsilon(1e-6));
  }

  TEST_CASE("infeasible problems are reported") {
    SDPProblem p(1);
    p.objective << 1.0;
    p.upper << 1.0;
    LmiBlock b(1);
    b.add(0, 0, 0, 1.0);
    b.add_constant(0, 0, -2.0);
    p.blocks.push_back(b);
    CHECK(solve(p).status == Status::Infeasible);
  }

  TEST_CASE("Hermitian embedding doubles the spectrum") {
    // Pauli-y has eigenvalues -1 and 1; its embedding has each twice.
    CMatrix y(2, 2);
    y << 0.0, cdouble(0.0, -1.0), cdouble(0.0, 1.0), 0.0;
    const RMatrix e = embed_hermitian(y);
    CHECK((e - e.transpose()).norm() == 0.0);
    RVector ev = Eigen::SelfAdjointEigenSolver<RMatrix>(e).eigenvalues();
    CHECK(ev[0] == doctest::Approx(-1.0));
    CHECK(ev[1] == doctest::Approx(-1.0));
    CHECK(ev[2] == doctest::Approx(1.0));
    CHECK(ev[3] == doctest::Approx(1.0));
    CMatrix bad = y;
    bad(0, 1) = 3.0;
    CHECK_THROWS_AS(embed_hermitian(bad), InvalidConfig);
  }

  TEST_CASE("dump and load round trip") {
    SDPProblem p(2);
    p.objective << 0.25, -1.5;
    p.objective_offset = 3.0;
    p.lower << 0.0, -std::numeric_limits<double>::infinity();
    p.upper << 1.0, 7.0;
    LmiBlock b(3);
    b.add(0, 0, 2, 1.0 / 3.0);
    b.add(1, 1, 1, -2.0);
    b.add_constant(2, 2, 5.0);
    p.blocks.push_back(b);
    std::stringstream ss;
    dump(p, ss);
    const SDPProblem q = load(ss);
    CHECK(q.n == 2);
    CHECK(q.objective == p.objective);
    CHECK(q.objective_offset == p.objective_offset);
    CHECK(std::isinf(q.lower[1]));
    CHECK(q.upper == p.upper);
    REQUIRE(q.blocks.size() == 1);
    const RVector x = RVector::Constant(2, 0.7);
    CHECK((q.blocks[0].evaluate(x) - p.blocks[0].evaluate(x)).norm() == 0.0);

    std::stringstream garbage("not an sdp");
    CHECK_THROWS(load(garbage));
  }

  TEST_CASE("validation") {
    SDPProblem p(1);
    p.lower << 2.0;
    p.upper << 1.0;
    CHECK_THROWS_AS(p.validate(), InvalidConfig);
  }
}
