#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wasnrate/scene.hpp"
#include "wasnrate/scenario.hpp"
#include "wasnrate/stft.hpp"

using namespace wasn;

TEST_SUITE("scene") {
  TEST_CASE("grid labels run bottom to top, then left to right") {
    const auto pts = grid_scene(3, 2, {4.0, 3.0}, 1.0);
    REQUIRE(pts.size() == 6);
    CHECK(pts[0].x == doctest::Approx(1.0));
    CHECK(pts[0].y == doctest::Approx(1.0));
    CHECK(pts[1].y == doctest::Approx(1.5));
    CHECK(pts[2].y == doctest::Approx(2.0));
    CHECK(pts[3].x == doctest::Approx(3.0));
    CHECK(pts[3].y == doctest::Approx(1.0));
  }

  TEST_CASE("single row grids are centered") {
    const auto pts = grid_scene(1, 1, {2.0, 6.0}, 0.5);
    CHECK(pts[0].x == doctest::Approx(1.0));
    CHECK(pts[0].y == doctest::Approx(3.0));
  }

  TEST_CASE("presets match their published layouts") {
    const auto small = preset("small24");
    CHECK(small.scene.sensor_count() == 24);
    CHECK(small.scene.fc_position.x == doctest::Approx(1.5));
    CHECK(small.scene.target_positions.at(0).x == doctest::Approx(0.3));
    CHECK(small.scene.target_positions.at(0).y == doctest::Approx(2.7));
    CHECK(small.scene.interferer_count() == 2);
    for (const auto& p : small.scene.sensor_positions) {
      CHECK(distance(p, small.scene.fc_position) > 0.1);
    }

    const auto big = preset("grid169");
    REQUIRE(big.scene.sensor_count() == 169);
    // The 85th node (index 84) sits on the fusion center.
    CHECK(distance(big.scene.sensor_positions[84], big.scene.fc_position) < 1e-12);
    CHECK(big.scene.target_count() == 2);
  }

  TEST_CASE("free-field ATF has 1/d magnitude and linear phase") {
    const double f = 1000.0, d = 2.0, c = 343.0;
    const cdouble h = freefield_response(f, d, c);
    CHECK(std::abs(h) == doctest::Approx(0.5));
    const double expected = std::remainder(-2.0 * std::numbers::pi * f * d / c, 2.0 * std::numbers::pi);
    CHECK(std::arg(h) == doctest::Approx(expected));
    CHECK(std::abs(freefield_response(f, 0.0, c)) == doctest::Approx(1.0 / kMinDistance));
  }

  TEST_CASE("covariances equal the explicit sum of source outer products") {
    auto cfg = preset("small24");
    auto& s = cfg.scene;
    s.target_psd = {2.0};
    s.interferer_psd = {0.5, 3.0};
    const double f = 750.0;
    const auto cov = scene_covariances(s, f);

    const Eigen::Index m = static_cast<Eigen::Index>(s.sensor_count());
    CMatrix expect_x = CMatrix::Zero(m, m), expect_u = CMatrix::Zero(m, m);
    auto outer = [&](const Point2& src, double psd, CMatrix& acc) {
      CVector a(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        const double d = distance(src, s.sensor_positions[static_cast<std::size_t>(k)]);
        a[k] = std::polar(1.0 / d, -2.0 * std::numbers::pi * f * d / s.speed_of_sound);
      }
      acc += psd * a * a.adjoint();
    };
    outer(s.target_positions[0], 2.0, expect_x);
    outer(s.interferer_positions[0], 0.5, expect_u);
    outer(s.interferer_positions[1], 3.0, expect_u);
    CHECK((cov.r_xx - expect_x).norm() < 1e-12 * expect_x.norm());
    CHECK((cov.r_uu - expect_u).norm() < 1e-12 * expect_u.norm());
    CHECK((cov.r_nn - expect_u - s.self_noise_psd * CMatrix::Identity(m, m)).norm() < 1e-12 * expect_u.norm());
    CHECK((cov.r_yy - cov.r_xx - cov.r_nn).norm() == doctest::Approx(0.0));
    CHECK((cov.r_yy - cov.r_yy.adjoint()).norm() == 0.0);
  }

  TEST_CASE("mismatched PSD vectors are rejected") {
    auto cfg = preset("small24");
    cfg.scene.target_psd.clear();
    CHECK_THROWS_AS(cfg.scene.validate(), InvalidConfig);
    ATFMatrix atf = build_freefield_atf(preset("small24").scene, 100.0);
    SignalStatistics st;
    st.sigma_x = RVector::Ones(3);
    st.sigma_u = RVector::Ones(2);
    CHECK_THROWS_AS(assemble_covariances(atf, st), DimensionMismatch);
  }

  TEST_CASE("synthesized STFT statistics match the covariance model") {
    // Monte Carlo oracle: per-bin sample covariance over frames against the
    // model r_yy at the same frequency.
    SceneConfig s;
    s.room_size = {4.0, 4.0};
    s.sensor_positions = {{1.0, 1.0}, {3.0, 1.5}};
    s.fc_position = {2.0, 2.0};
    s.target_positions = {{0.5, 3.5}};
    s.interferer_positions = {{3.5, 3.5}};
    s.target_psd = {1.0};
    s.interferer_psd = {0.7};
    s.self_noise_psd = 0.01;
    const FrameSpec spec;
    SynthesisOptions opt;
    opt.duration = 20.0;
    opt.seed = 7;
    opt.window_energy = spec.window_energy();
    const auto sig = synthesize_signals(s, opt);

    for (std::size_t k = 0; k < 2; ++k) {
      for (std::size_t n = 0; n < sig.mixture[k].size(); n += 997) {
        CHECK(sig.mixture[k][n] == doctest::Approx(sig.target[k][n] + sig.noise[k][n]));
      }
    }
    const auto y = stft_analyze(sig.mixture, spec);
    for (std::size_t bin : {10u, 40u, 100u}) {
      const CMatrix frames = y.bin_matrix(bin).middleCols(2, static_cast<Eigen::Index>(y.frames()) - 4);
      const CMatrix sample = frames * frames.adjoint() / static_cast<double>(frames.cols());
      const double f = static_cast<double>(bin) * s.sample_rate / spec.fft_len;
      const CMatrix model = scene_covariances(s, f).r_yy;
      // Independent frames are about 1000 per channel; allow 10%.
      CHECK((sample - model).norm() < 0.1 * model.norm());
    }
  }

  TEST_CASE("same seed, same signals") {
    const auto cfg = preset("tiny3");
    SynthesisOptions opt;
    opt.duration = 0.1;
    opt.seed = 3;
    const auto a = synthesize_signals(cfg.scene, opt);
    const auto b = synthesize_signals(cfg.scene, opt);
    CHECK(a.mixture == b.mixture);
    opt.seed = 4;
    CHECK(synthesize_signals(cfg.scene, opt).mixture != a.mixture);
  }
}
