#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "wasnrate/rate_allocation.hpp"

using namespace wasn;
using wasn::testing::diagonal_problem;
using wasn::testing::random_scenario;

namespace {

RVector vec(std::initializer_list<double> v) {
  RVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Two sensors, diagonal noise, one constraint. For fixed t1 the cheapest
// feasible t2 is available in closed form, so the relaxed optimum reduces
// to a one-dimensional search over t1.
double two_sensor_relaxed_energy(const RVector& sigma, const RVector& g, const RVector& amp,
                                 const RVector& w, double tmax, double target_gain) {
  const double c1 = amp[0] * amp[0] / 12.0, c2 = amp[1] * amp[1] / 12.0;
  auto cost = [&](double t1) {
    const double h1 = g[0] * g[0] / (sigma[0] + c1 / t1);
    const double need = target_gain - h1;
    double t2 = 1.0;
    if (need > g[1] * g[1] / (sigma[1] + c2)) {
      const double denom = g[1] * g[1] / need - sigma[1];
      if (denom <= 0.0) return std::numeric_limits<double>::infinity();
      t2 = c2 / denom;
      if (t2 > tmax) return std::numeric_limits<double>::infinity();
    }
    return w[0] * (t1 - 1.0) + w[1] * (t2 - 1.0);
  };
  double best_u = 0.0, best = std::numeric_limits<double>::infinity();
  const double umax = std::log(tmax);
  const int n = 20000;
  for (int i = 0; i <= n; ++i) {
    const double u = umax * i / n;
    const double c = cost(std::exp(u));
    if (c < best) best = c, best_u = u;
  }
  double lo = std::max(0.0, best_u - umax / n), hi = std::min(umax, best_u + umax / n);
  for (int it = 0; it < 200; ++it) {
    const double a = lo + (hi - lo) * 0.382, b = lo + (hi - lo) * 0.618;
    if (cost(std::exp(a)) < cost(std::exp(b))) hi = b;
    else lo = a;
  }
  return std::min(best, cost(std::exp(0.5 * (lo + hi))));
}

}  // namespace

TEST_SUITE("rate_allocation") {
  TEST_CASE("beta has the closed form of a diagonal problem") {
    // Four unit-noise sensors with unit gains: beta = 1 / sum 1/(1 + q_k).
    const RVector amp = RVector::Constant(4, 1.0);
    const auto p = diagonal_problem(RVector::Ones(4), RVector::Ones(4), amp, RVector::Ones(4), 16, 1.0);
    const double q = 1.0 / (12.0 * std::pow(4.0, 16));
    CHECK(p.beta == doctest::Approx((1.0 + q) / 4.0).epsilon(1e-12));
    CHECK(p.beta == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(allocation_noise_power(p, RVector::Zero(4)) == doctest::Approx((1.0 + 1.0 / 12.0) / 4.0));
  }

  TEST_CASE("single sensor optimum solves the scalar constraint") {
    // tau(t) = (sigma + c / t) / g^2 with c = A^2 / 12; the bound is active.
    const double sigma = 0.5, g = 1.3, amp = 2.0, alpha = 0.9;
    const auto p = diagonal_problem(RVector::Constant(1, sigma), RVector::Constant(1, g),
                                    RVector::Constant(1, amp), RVector::Ones(1), 10, alpha);
    const double c = amp * amp / 12.0;
    const double t_star = c / (g * g * p.bound() - sigma);
    const auto cont = solve_rd_lcmv(p);
    CHECK(cont.solution.x[0] == doctest::Approx(t_star).epsilon(1e-6));
    CHECK(cont.rates.b[0] == doctest::Approx(0.5 * std::log2(t_star)).epsilon(1e-6));
  }

  TEST_CASE("slack constraint at zero rate gives all-zero rates") {
    // At b = 0 each sensor carries sigma + 1/12; a bound above that is slack.
    auto p = diagonal_problem(RVector::Ones(3), RVector::Ones(3), RVector::Ones(3), RVector::Ones(3), 8, 1.0);
    p.beta = 1.1 * allocation_noise_power(p, RVector::Zero(3));
    const auto cont = solve_rd_lcmv(p);
    CHECK(cont.rates.b.maxCoeff() < 1e-4);
    CHECK(randomized_round(cont.rates, p).b == RVector::Zero(3));
  }

  TEST_CASE("relaxed optimum matches a scalar search on two sensors") {
    const RVector sigma = vec({1.0, 2.0}), g = vec({1.0, 0.8}), amp = vec({4.0, 3.0}),
                  d = vec({1.0, 2.0});
    for (double alpha : {0.4, 0.6, 0.9}) {
      const auto p = diagonal_problem(sigma, g, amp, d, 8, alpha);
      const auto cont = solve_rd_lcmv(p);
      const double oracle = two_sensor_relaxed_energy(sigma, g, amp, d.array().square(),
                                                      std::pow(4.0, 8), alpha / p.beta);
      CHECK(cont.energy == doctest::Approx(oracle).epsilon(1e-4));
      CHECK(allocation_noise_power(p, cont.rates.b) <= p.bound() * (1.0 + 1e-5));
    }
  }

  TEST_CASE("relaxed, exhaustive and rounded energies are ordered") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
      const auto cfg = random_scenario(rng, 3, 2);
      const auto p = make_problem(cfg, 1000.0, 0.7);
      const auto oracle = exhaustive_oracle(p);
      REQUIRE(oracle.feasible);
      CHECK(oracle.evaluated == 27);
      const auto cont = solve_rd_lcmv(p);
      const auto rounded = randomized_round(cont.rates, p, 64, 5);
      CHECK(allocation_feasible(p, rounded.b));
      CHECK(rounded.is_integer());
      const double er = total_energy(rounded.b, p.channel);
      CHECK(cont.energy <= oracle.best_energy * (1.0 + 1e-6));
      CHECK(oracle.best_energy <= er * (1.0 + 1e-12));
    }
  }

  TEST_CASE("rounding only moves to the neighbouring integers") {
    const auto p = diagonal_problem(RVector::Ones(2), RVector::Ones(2), RVector::Ones(2),
                                    vec({1.0, 1.0}), 4, 0.05);
    RateVector cont{vec({1.5, 0.0})};
    const auto r = randomized_round(cont, p, 64, 1);
    CHECK(r.b[1] == 0.0);
    // (1, 0) is cheaper than (2, 0) and feasible at this loose bound.
    CHECK(r.b[0] == 1.0);
    const auto again = randomized_round(cont, p, 64, 1);
    CHECK(again.b == r.b);
  }

  TEST_CASE("Boolean form has the same optimum as the rate form") {
    std::mt19937_64 rng(6);
    const auto cfg = random_scenario(rng, 4, 6);
    const auto p = make_problem(cfg, 800.0, 0.6);
    const auto rate = sdp::solve(build_rd_lcmv_sdp(p));
    const auto boolean = sdp::solve(build_boolean_form(p));
    REQUIRE(rate.status == sdp::Status::Optimal);
    REQUIRE(boolean.status == sdp::Status::Optimal);
    CHECK(boolean.objective_value == doctest::Approx(rate.objective_value).epsilon(1e-4));
    const double scale = std::pow(4.0, 6);
    for (Eigen::Index k = 0; k < 4; ++k) {
      CHECK(boolean.x[k] * scale == doctest::Approx(rate.x[k]).epsilon(1e-3).scale(1.0));
    }
  }

  TEST_CASE("selection: loose bound keeps the single cheapest sensor") {
    const auto p = diagonal_problem(RVector::Ones(4), RVector::Ones(4), RVector::Ones(4),
                                    vec({2.0, 0.5, 1.0, 3.0}), 16, 0.2);
    const auto sel = md_lcmv_select(p);
    const auto oracle = exhaustive_subset_oracle(p);
    REQUIRE(oracle);
    CHECK(sel.subset == std::vector<Eigen::Index>{1});
    CHECK(sel.subset == *oracle);
  }

  TEST_CASE("selection: alpha of one needs every sensor") {
    std::mt19937_64 rng(9);
    const auto cfg = random_scenario(rng, 6, 16);
    const auto p = make_problem(cfg, 1000.0, 1.0);
    const auto sel = md_lcmv_select(p);
    CHECK(sel.subset.size() == 6);
    const auto cont = solve_rd_lcmv(p);
    CHECK(cont.rates.b == RVector::Constant(6, 16.0));
    CHECK(allocation_feasible(p, cont.rates.b));
    const auto th = bisection_threshold(cont.rates, p);
    CHECK(th.subset.size() == 6);
  }

  TEST_CASE("selection is feasible and never cheaper than the exhaustive subset") {
    std::mt19937_64 rng(31);
    const auto cfg = random_scenario(rng, 8, 16);
    for (double alpha : {0.5, 0.8}) {
      const auto p = make_problem(cfg, 1000.0, alpha);
      const auto sel = md_lcmv_select(p);
      const auto oracle = exhaustive_subset_oracle(p);
      REQUIRE(oracle);
      CHECK(selection_feasible(p, sel.subset));
      const RVector w = p.channel.cost_weights();
      double c_sel = 0.0, c_opt = 0.0;
      for (auto k : sel.subset) c_sel += w[k];
      for (auto k : *oracle) c_opt += w[k];
      CHECK(c_opt <= c_sel * (1.0 + 1e-12));
    }
  }

  TEST_CASE("threshold with equal rates selects everyone") {
    std::mt19937_64 rng(12);
    const auto p = make_problem(random_scenario(rng, 5, 16), 1000.0, 0.7);
    const auto th = bisection_threshold(RateVector{RVector::Constant(5, 3.0)}, p);
    CHECK(th.threshold == 3.0);
    CHECK(th.subset.size() == 5);
    CHECK_THROWS_AS(bisection_threshold(RateVector{RVector::Ones(5)}, p, -1.0), InvalidConfig);
  }

  TEST_CASE("threshold keeps the highest feasible level") {
    // Rates order the sensors; the largest prefix cut that still meets the
    // bound is found by scanning every level.
    std::mt19937_64 rng(13);
    const auto p = make_problem(random_scenario(rng, 7, 16), 1000.0, 0.6);
    const RVector rates = vec({1, 9, 4, 12, 4, 7, 0});
    const auto th = bisection_threshold(RateVector{rates}, p);
    double expect = -1.0;
    for (double level : {0.0, 1.0, 4.0, 7.0, 9.0, 12.0}) {
      std::vector<Eigen::Index> s;
      for (Eigen::Index k = 0; k < 7; ++k) {
        if (rates[k] >= level) s.push_back(k);
      }
      if (selection_noise_power(p, s) <= p.bound() * (1.0 + kFeasibilitySlack)) expect = level;
    }
    CHECK(th.threshold == expect);
  }

  TEST_CASE("exhaustive oracle edge cases") {
    const auto one = diagonal_problem(RVector::Ones(1), RVector::Ones(1), RVector::Ones(1),
                                      RVector::Ones(1), 1, 1.0);
    const auto r = exhaustive_oracle(one);
    CHECK(r.evaluated == 2);
    REQUIRE(r.feasible);
    CHECK(r.best_rates.b[0] == 1.0);
    CHECK(r.best_energy == doctest::Approx(3.0));

    std::mt19937_64 rng(1);
    const auto big = make_problem(random_scenario(rng, 6, 16), 1000.0, 0.5);
    CHECK_THROWS_AS(exhaustive_oracle(big), InvalidConfig);

    auto tight = make_problem(random_scenario(rng, 3, 2), 1000.0, 1.0);
    tight.beta *= 0.5;
    const auto none = exhaustive_oracle(tight);
    CHECK_FALSE(none.feasible);
    CHECK(none.evaluated == 27);
    CHECK_THROWS_AS(solve_rd_lcmv(tight), AllocationFailed);
  }

  TEST_CASE("problem validation") {
    auto p = diagonal_problem(RVector::Ones(2), RVector::Ones(2), RVector::Ones(2), RVector::Ones(2), 4, 0.5);
    p.alpha = 0.0;
    CHECK_THROWS_AS(p.validate(), InvalidConfig);
    p.alpha = 0.5;
    p.amplitudes = RVector::Ones(3);
    CHECK_THROWS_AS(p.validate(), DimensionMismatch);
  }
}
