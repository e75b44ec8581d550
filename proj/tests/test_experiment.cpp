#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "wasnrate/experiment.hpp"

using namespace wasn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("wasnrate_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream is(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("small24 sweep artifacts") {
    auto cfg = preset("small24");
    cfg.alpha_sweep = {0.5, 0.8};
    cfg.output_dir = scratch_dir("small24").string();
    const auto report = run_scenario(cfg);
    const auto files = write_report(report);
    CHECK(files.size() == 5);

    const auto sweep = read_csv(fs::path(cfg.output_dir) / "sweep.csv");
    CHECK(sweep.size() == 1 + 2 * 3);
    CHECK(sweep[0][0] == "alpha");

    const auto map = read_csv(fs::path(cfg.output_dir) / "rate_map_alpha0.50.csv");
    REQUIRE(map.size() == 25);
    CHECK(map[0] == std::vector<std::string>{"sensor", "x", "y", "distance_fc", "rd_rate", "md_rate"});
    for (std::size_t i = 1; i < map.size(); ++i) {
      const double rd = std::stod(map[i][4]);
      const double md = std::stod(map[i][5]);
      CHECK(rd >= 0.0);
      CHECK(rd <= 16.0);
      CHECK((md == 0.0 || md == 16.0));
    }

    for (const auto& rec : report.records) {
      for (const auto& m : rec.methods) {
        REQUIRE(m.feasible);
        CHECK(m.noise_power <= rec.bound * (1.0 + kFeasibilitySlack));
        CHECK(m.runtime_noise_power >= m.noise_power * (1.0 - 1e-12));
      }
      CHECK(rec.get(Method::RD).eur < rec.get(Method::MDSelect).eur);
    }
  }

  TEST_CASE("same seed, same bytes") {
    auto cfg = preset("small24");
    cfg.alpha_sweep = {0.6};
    cfg.output_dir = scratch_dir("det_a").string();
    write_report(run_scenario(cfg));
    const std::string first = slurp(fs::path(cfg.output_dir) / "sweep.csv");
    const std::string first_alloc = slurp(fs::path(cfg.output_dir) / "allocation_alpha0.60.csv");
    cfg.output_dir = scratch_dir("det_b").string();
    write_report(run_scenario(cfg));
    CHECK(first == slurp(fs::path(cfg.output_dir) / "sweep.csv"));
    CHECK(first_alloc == slurp(fs::path(cfg.output_dir) / "allocation_alpha0.60.csv"));
    CHECK(!first.empty());
  }

  TEST_CASE("the node on the fusion center gets the highest rate") {
    auto cfg = preset("grid49");
    cfg.alpha_sweep = {0.5};
    const auto report = run_scenario(cfg);
    const auto& rd = report.records[0].get(Method::RD);
    REQUIRE(rd.feasible);
    Eigen::Index argmax = 0;
    rd.continuous_rates.maxCoeff(&argmax);
    CHECK(argmax == 24);
    CHECK(rd.rates[24] == rd.rates.maxCoeff());
  }

  TEST_CASE("relaxed energy shrinks as the bound loosens") {
    auto cfg = preset("small24");
    cfg.alpha_sweep = {1.0, 0.9, 0.8, 0.7, 0.6, 0.5};
    double previous = std::numeric_limits<double>::infinity();
    for (double alpha : cfg.alpha_sweep) {
      const auto p = make_problem(cfg, cfg.bin_frequency(cfg.representative_bin()), alpha);
      const double e = solve_rd_lcmv(p).energy;
      CHECK(e <= previous * (1.0 + 1e-6));
      previous = e;
    }
  }

  TEST_CASE("alpha of one selects every sensor") {
    auto cfg = preset("small24");
    cfg.alpha_sweep = {1.0};
    const auto report = run_scenario(cfg);
    const auto& md = report.records[0].get(Method::MDSelect);
    REQUIRE(md.feasible);
    CHECK(md.subset.size() == 24);
    CHECK(md.eur == doctest::Approx(1.0));
  }

  TEST_CASE("denoising passes the target through at full rate") {
    ScenarioConfig cfg;
    cfg.name = "clean";
    auto& s = cfg.scene;
    s.room_size = {2.0, 2.0};
    s.sensor_positions = {{0.5, 0.5}, {1.5, 0.5}, {0.5, 1.5}, {1.5, 1.5}};
    s.fc_position = {1.0, 1.0};
    s.target_positions = {{0.3, 1.0}};
    s.target_psd = {1.0};
    s.self_noise_psd = 1e-14;
    cfg.b0 = 24;
    cfg.frame_len = 32;
    cfg.duration = 0.25;
    cfg.alpha_sweep = {1.0};
    cfg.output_dir = scratch_dir("denoise").string();
    const auto r = end_to_end_denoise(cfg, 1.0);
    CHECK(r.rates == RVector::Constant(4, 24.0));
    CHECK(r.target_error <= 1e-6);
    CHECK(r.files.size() == 4);
    for (const auto& f : r.files) CHECK(fs::exists(f));
  }

  TEST_CASE("denoising stays under the aggregated bound") {
    // Without interferers the per-bin model describes the synthesized noise
    // exactly, so the measured output can be held to the bound.
    auto cfg = preset("tiny3");
    cfg.scene.interferer_positions.clear();
    cfg.scene.interferer_psd.clear();
    cfg.scene.self_noise_psd = 0.01;
    cfg.b0 = 8;
    cfg.frame_len = 32;
    cfg.duration = 1.0;
    cfg.output_dir = scratch_dir("denoise_bound").string();
    const auto r = end_to_end_denoise(cfg, 0.7);
    CHECK(r.model_noise_total <= r.bound_total * (1.0 + 1e-9));
    CHECK(r.output_noise_total <= r.bound_total);
    CHECK(r.output_noise_total == doctest::Approx(r.model_noise_total).epsilon(0.1));
    CHECK(r.output_noise_total < r.input_noise_total);
    const auto rows = read_csv(fs::path(cfg.output_dir) / "denoise_alpha0.70.csv");
    CHECK(rows.size() == 1 + 17);
  }

  TEST_CASE("scenario files") {
    const fs::path dir = scratch_dir("json");
    const fs::path path = dir / "scene.json";
    {
      std::ofstream os(path);
      os << R"({"preset": "small24", "b0": 8, "alpha": [0.7], "mode": "aggregate",
               "design": "targets-plus-nulls", "seed": 42})";
    }
    const auto cfg = load_scenario(path.string());
    CHECK(cfg.b0 == 8);
    CHECK(cfg.alpha_sweep == std::vector<double>{0.7});
    CHECK(cfg.mode == RateMode::Aggregate);
    CHECK(cfg.design == ConstraintDesign::TargetsPlusNulls);
    CHECK(cfg.seed == 42);
    CHECK(cfg.scene.sensor_count() == 24);

    {
      std::ofstream os(path);
      os << R"({"room": [4, 4], "grid": {"rows": 2, "cols": 3, "margin": 1.0},
               "fc": [2, 2], "targets": [[1, 3]], "interferers": []})";
    }
    const auto custom = load_scenario(path.string());
    CHECK(custom.scene.sensor_count() == 6);
    CHECK(custom.scene.target_psd == std::vector<double>{1.0});

    {
      std::ofstream os(path);
      os << R"({"preset": "small24", "alpha": [1.5]})";
    }
    CHECK_THROWS_AS(load_scenario(path.string()), InvalidConfig);
    CHECK_THROWS_AS(load_scenario("no-such-preset"), InvalidConfig);
    CHECK_THROWS_AS(parse_mode("weekly"), InvalidConfig);
  }

  TEST_CASE("targets-plus-nulls adds zero-response constraints") {
    const auto cfg = preset("small24");
    const auto atf = build_freefield_atf(cfg.scene, 1000.0);
    const auto c = make_constraints(atf, ConstraintDesign::TargetsPlusNulls);
    CHECK(c.count() == 3);
    CHECK(c.f[0] == cdouble(1.0));
    CHECK(c.f[1] == cdouble(0.0));
    CHECK(c.f[2] == cdouble(0.0));
  }
}
