#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wasnrate/experiment.hpp"
#include "wasnrate/rate_allocation.hpp"
#include "wasnrate/scenario.hpp"
#include "wasnrate/sdp.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

struct CommonArgs {
  std::string scenario = "small24";
  std::vector<double> alpha;
  int b0 = 0;
  std::string mode;
  std::string design;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  double frequency = -1.0;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--scenario", a.scenario, "Preset name or JSON scenario file")
      ->capture_default_str();
  cmd->add_option("--alpha", a.alpha, "Alpha values in (0, 1]")->delimiter(',');
  cmd->add_option("--b0", a.b0, "Maximum bits per sample");
  cmd->add_option("--mode", a.mode, "per-bin or aggregate");
  cmd->add_option("--design", a.design, "targets-distortionless or targets-plus-nulls");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&a](std::uint64_t s) { a.seed = s, a.seed_set = true; }, "Random seed");
  cmd->add_option("--out", a.out, "Output directory");
  cmd->add_option("--frequency", a.frequency, "Representative frequency in Hz (per-bin mode)");
}

wasn::ScenarioConfig resolve(const CommonArgs& a) {
  auto cfg = wasn::load_scenario(a.scenario);
  if (!a.alpha.empty()) cfg.alpha_sweep = a.alpha;
  if (a.b0 > 0) cfg.b0 = a.b0;
  if (!a.mode.empty()) cfg.mode = wasn::parse_mode(a.mode);
  if (!a.design.empty()) cfg.design = wasn::parse_design(a.design);
  if (a.seed_set) cfg.seed = a.seed;
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (a.frequency >= 0.0) cfg.frequency = a.frequency;
  cfg.validate();
  return cfg;
}

std::string rates_string(const wasn::RVector& b) {
  std::string s;
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    if (k) s += ' ';
    s += wasn::format_number(b[k]);
  }
  return s;
}

double db(double p) { return 10.0 * std::log10(p); }

void print_record(const wasn::AlphaRecord& rec, wasn::Method m) {
  const auto& r = rec.get(m);
  std::printf("alpha=%s %-12s ", wasn::format_number(rec.alpha).c_str(), wasn::to_string(m));
  if (!r.feasible) {
    std::printf("FAILED: %s\n", r.failure.c_str());
    return;
  }
  std::printf("noise=%.3f dB (bound %.3f dB) EUR=%.6f active=%zu", db(r.noise_power),
              db(rec.bound), r.eur, r.subset.size());
  if (m == wasn::Method::MDBisect) std::printf(" threshold=%.4f", r.threshold);
  std::printf("\n");
}

int report_status(const wasn::RunReport& report, std::initializer_list<wasn::Method> methods) {
  for (const auto& rec : report.records) {
    for (auto m : methods) {
      if (!rec.get(m).feasible) return kExitInfeasible;
    }
  }
  return kExitOk;
}

int cmd_allocate(const CommonArgs& args, const std::string& dump_path) {
  const auto cfg = resolve(args);
  if (!dump_path.empty()) {
    const auto problem = wasn::make_problem(cfg, cfg.bin_frequency(cfg.representative_bin()),
                                            cfg.alpha_sweep.front());
    std::ofstream os(dump_path);
    wasn::sdp::dump(wasn::build_rd_lcmv_sdp(problem), os);
    if (!os) throw wasn::Error("cannot write " + dump_path);
  }
  const auto report = wasn::run_scenario(cfg);
  for (const auto& rec : report.records) {
    print_record(rec, wasn::Method::RD);
    if (rec.get(wasn::Method::RD).feasible) {
      std::printf("  rates: %s\n", rates_string(rec.get(wasn::Method::RD).rates).c_str());
    }
  }
  for (const auto& f : wasn::write_report(report)) std::printf("wrote %s\n", f.c_str());
  return report_status(report, {wasn::Method::RD});
}

int cmd_select(const CommonArgs& args) {
  const auto cfg = resolve(args);
  const auto report = wasn::run_scenario(cfg);
  for (const auto& rec : report.records) {
    print_record(rec, wasn::Method::MDSelect);
    print_record(rec, wasn::Method::MDBisect);
    const auto& a = rec.get(wasn::Method::MDSelect);
    const auto& b = rec.get(wasn::Method::MDBisect);
    if (a.feasible && b.feasible) {
      std::printf("  subsets %s\n", a.subset == b.subset ? "identical" : "differ");
    }
  }
  for (const auto& f : wasn::write_report(report)) std::printf("wrote %s\n", f.c_str());
  return report_status(report, {wasn::Method::MDSelect, wasn::Method::MDBisect});
}

int cmd_sweep(const CommonArgs& args) {
  const auto cfg = resolve(args);
  const auto report = wasn::run_scenario(cfg);
  for (const auto& rec : report.records) {
    for (auto m : {wasn::Method::RD, wasn::Method::MDSelect, wasn::Method::MDBisect}) {
      print_record(rec, m);
    }
  }
  for (const auto& f : wasn::write_report(report)) std::printf("wrote %s\n", f.c_str());
  return report_status(report, {wasn::Method::RD, wasn::Method::MDSelect, wasn::Method::MDBisect});
}

int cmd_denoise(const CommonArgs& args) {
  const auto cfg = resolve(args);
  for (double alpha : cfg.alpha_sweep) {
    const auto r = wasn::end_to_end_denoise(cfg, alpha);
    std::printf("alpha=%s input noise %.3f dB, output noise %.3f dB (model %.3f dB, bound %.3f dB)\n",
                wasn::format_number(alpha).c_str(), db(r.input_noise_total),
                db(r.output_noise_total), db(r.model_noise_total), db(r.bound_total));
    std::printf("  rates: %s\n", rates_string(r.rates).c_str());
    for (const auto& f : r.files) std::printf("wrote %s\n", f.c_str());
  }
  return kExitOk;
}

int cmd_oracle(const CommonArgs& args) {
  const auto cfg = resolve(args);
  int status = kExitOk;
  std::filesystem::create_directories(cfg.output_dir);
  const std::string path = (std::filesystem::path(cfg.output_dir) / "oracle.csv").string();
  std::ofstream os(path, std::ios::binary);
  os << "alpha,feasible,evaluated,oracle_energy,relaxed_energy,rounded_energy,oracle_rates,"
        "rounded_rates\n";
  for (double alpha : cfg.alpha_sweep) {
    const auto problem =
        wasn::make_problem(cfg, cfg.bin_frequency(cfg.representative_bin()), alpha);
    const auto oracle = wasn::exhaustive_oracle(problem);
    if (!oracle.feasible) {
      std::printf("alpha=%s infeasible after %llu allocations\n", wasn::format_number(alpha).c_str(),
                  static_cast<unsigned long long>(oracle.evaluated));
      os << wasn::format_number(alpha) << ",0," << oracle.evaluated << ",,,,,\n";
      status = kExitInfeasible;
      continue;
    }
    const auto cont = wasn::solve_rd_lcmv(problem);
    const auto rounded = wasn::randomized_round(cont.rates, problem, cfg.rounding_draws, cfg.seed);
    const double rounded_energy = wasn::total_energy(rounded.b, problem.channel);
    std::printf("alpha=%s evaluated=%llu oracle=%s relaxed=%s rounded=%s\n",
                wasn::format_number(alpha).c_str(),
                static_cast<unsigned long long>(oracle.evaluated),
                wasn::format_number(oracle.best_energy).c_str(),
                wasn::format_number(cont.energy).c_str(),
                wasn::format_number(rounded_energy).c_str());
    os << wasn::format_number(alpha) << ",1," << oracle.evaluated << ','
       << wasn::format_number(oracle.best_energy) << ',' << wasn::format_number(cont.energy) << ','
       << wasn::format_number(rounded_energy) << ',' << rates_string(oracle.best_rates.b) << ','
       << rates_string(rounded.b) << '\n';
  }
  if (!os) throw wasn::Error("cannot write " + path);
  std::printf("wrote %s\n", path.c_str());
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rate-distributed LCMV beamforming experiments"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string dump_path;
  auto* allocate = app.add_subcommand("allocate", "Solve RD-LCMV and round to integer rates");
  add_common(allocate, args);
  allocate->add_option("--dump-sdp", dump_path, "Write the relaxation of the first alpha");
  auto* select = app.add_subcommand("select", "Sensor selection by SDP and by rate thresholding");
  add_common(select, args);
  auto* sweep = app.add_subcommand("sweep", "Alpha sweep comparing RD and MD");
  add_common(sweep, args);
  auto* denoise = app.add_subcommand("denoise", "Quantize, transmit and beamform synthetic audio");
  add_common(denoise, args);
  auto* oracle = app.add_subcommand("oracle", "Exhaustive search on a small scene");
  add_common(oracle, args);

  CLI11_PARSE(app, argc, argv);
  try {
    if (allocate->parsed()) return cmd_allocate(args, dump_path);
    if (select->parsed()) return cmd_select(args);
    if (sweep->parsed()) return cmd_sweep(args);
    if (denoise->parsed()) return cmd_denoise(args);
    if (oracle->parsed()) return cmd_oracle(args);
  } catch (const wasn::AllocationFailed& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
