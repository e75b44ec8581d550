#include "wasnrate/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "wasnrate/quantization.hpp"
#include "wasnrate/random.hpp"
#include "wasnrate/stft.hpp"
#include "wasnrate/wav.hpp"

namespace wasn {

namespace {

namespace fs = std::filesystem;

// Runs fn(i) for i in [0, n) on a small pool. Results must be written to
// per-index slots by the caller, which keeps the output order fixed.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

struct BinResult {
  RateAllocationProblem problem;
  RVector continuous;
  RVector rd;
  std::vector<Eigen::Index> md;
  std::vector<Eigen::Index> bisect;
  double threshold = 0.0;
  std::string rd_failure, md_failure, bisect_failure;
};

BinResult solve_bin(const ScenarioConfig& config, std::size_t bin, double alpha,
                    std::uint64_t seed) {
  BinResult r;
  r.problem = make_problem(config, config.bin_frequency(bin), alpha);
  try {
    const auto cont = solve_rd_lcmv(r.problem);
    r.continuous = cont.rates.b;
    r.rd = randomized_round(cont.rates, r.problem, config.rounding_draws, mix_seed(seed, 1)).b;
    try {
      const auto th = bisection_threshold(cont.rates, r.problem);
      r.bisect = th.subset;
      r.threshold = th.threshold;
    } catch (const Error& e) {
      r.bisect_failure = e.what();
    }
  } catch (const Error& e) {
    r.rd_failure = e.what();
    r.bisect_failure = e.what();
  }
  try {
    r.md = md_lcmv_select(r.problem, config.rounding_draws, mix_seed(seed, 2)).subset;
  } catch (const Error& e) {
    r.md_failure = e.what();
  }
  return r;
}

RVector subset_rates(const std::vector<Eigen::Index>& subset, Eigen::Index m, int b0) {
  RVector b = RVector::Zero(m);
  for (auto k : subset) b[k] = b0;
  return b;
}

// Combines per-bin outcomes for one method into a single record: the
// per-sensor maximum rate, re-verified in every bin.
MethodRecord combine(Method method, const std::vector<const BinResult*>& bins,
                     const ChannelModel& channel, int b0) {
  MethodRecord rec;
  rec.method = method;
  const Eigen::Index m = static_cast<Eigen::Index>(channel.size());
  rec.rates = RVector::Zero(m);
  if (method == Method::RD) rec.continuous_rates = RVector::Zero(m);
  for (const BinResult* br : bins) {
    const std::string& failure = method == Method::RD         ? br->rd_failure
                                 : method == Method::MDSelect ? br->md_failure
                                                              : br->bisect_failure;
    if (!failure.empty()) {
      rec.failure = failure;
      return rec;
    }
    switch (method) {
      case Method::RD:
        rec.rates = rec.rates.cwiseMax(br->rd);
        rec.continuous_rates = rec.continuous_rates.cwiseMax(br->continuous);
        break;
      case Method::MDSelect:
        rec.rates = rec.rates.cwiseMax(subset_rates(br->md, m, b0));
        break;
      case Method::MDBisect:
        rec.rates = rec.rates.cwiseMax(subset_rates(br->bisect, m, b0));
        rec.threshold = std::max(rec.threshold, br->threshold);
        break;
    }
  }
  for (Eigen::Index k = 0; k < m; ++k) {
    if (rec.rates[k] > 0.0) rec.subset.push_back(k);
  }
  rec.feasible = true;
  for (const BinResult* br : bins) {
    const double tau = method == Method::RD ? allocation_noise_power(br->problem, rec.rates)
                                            : selection_noise_power(br->problem, rec.subset);
    rec.noise_power += tau;
    rec.runtime_noise_power += runtime_noise_power(br->problem, rec.rates);
    if (!(tau <= br->problem.bound() * (1.0 + kFeasibilitySlack))) {
      rec.feasible = false;
      rec.failure = "allocation violates the noise bound";
    }
  }
  const auto energy = energy_usage_ratio(rec.rates, channel, b0);
  rec.energy = energy.total;
  rec.eur = energy.eur;
  return rec;
}

std::string alpha_tag(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", alpha);
  return buf;
}

std::ofstream open_csv(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  return os;
}

void close_csv(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw Error("failed writing " + path);
}

std::string join(const std::vector<Eigen::Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(v[i]);
  }
  return s;
}

double db(double p) { return 10.0 * std::log10(p); }

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::RD: return "RD";
    case Method::MDSelect: return "MD";
    case Method::MDBisect: return "MD-bisection";
  }
  return "?";
}

const MethodRecord& AlphaRecord::get(Method m) const {
  for (const auto& r : methods) {
    if (r.method == m) return r;
  }
  throw Error("method record missing");
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

RunReport run_scenario(const ScenarioConfig& config) {
  config.validate();
  RunReport report;
  report.config = config;
  if (config.mode == RateMode::PerBin) {
    report.bins = {config.representative_bin()};
  } else {
    for (std::size_t k = 0; k < config.bins(); ++k) report.bins.push_back(k);
  }
  const std::size_t na = config.alpha_sweep.size();
  const std::size_t nb = report.bins.size();
  std::vector<BinResult> results(na * nb);
  parallel_for(na * nb, [&](std::size_t i) {
    const std::size_t a = i / nb;
    const std::size_t b = i % nb;
    const std::uint64_t seed = mix_seed(config.seed, a * 100003 + report.bins[b]);
    results[i] = solve_bin(config, report.bins[b], config.alpha_sweep[a], seed);
  });

  const ChannelModel channel =
      ChannelModel::from_scene(config.scene, config.channel_noise_psd, config.path_loss_exponent);
  for (std::size_t a = 0; a < na; ++a) {
    AlphaRecord rec;
    rec.alpha = config.alpha_sweep[a];
    std::vector<const BinResult*> bins;
    for (std::size_t b = 0; b < nb; ++b) {
      const BinResult& br = results[a * nb + b];
      bins.push_back(&br);
      rec.beta += br.problem.beta;
      rec.bound += br.problem.bound();
    }
    for (Method m : {Method::RD, Method::MDSelect, Method::MDBisect}) {
      rec.methods.push_back(combine(m, bins, channel, config.b0));
    }
    report.records.push_back(std::move(rec));
  }
  return report;
}

RunReport run_single(const ScenarioConfig& config, double alpha) {
  ScenarioConfig c = config;
  c.alpha_sweep = {alpha};
  return run_scenario(c);
}

void emit_rate_map(const RunReport& report, std::size_t alpha_index, const std::string& path) {
  const auto& rec = report.records.at(alpha_index);
  const auto& scene = report.config.scene;
  const auto& rd = rec.get(Method::RD);
  const auto& md = rec.get(Method::MDSelect);
  auto os = open_csv(path);
  os << "sensor,x,y,distance_fc,rd_rate,md_rate\n";
  for (std::size_t k = 0; k < scene.sensor_count(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    const Point2& p = scene.sensor_positions[k];
    os << k << ',' << format_number(p.x) << ',' << format_number(p.y) << ','
       << format_number(distance(p, scene.fc_position)) << ','
       << (rd.feasible ? format_number(rd.rates[ki]) : "") << ','
       << (md.feasible ? format_number(md.rates[ki]) : "") << '\n';
  }
  close_csv(os, path);
}

void emit_allocation(const RunReport& report, std::size_t alpha_index, const std::string& path) {
  const auto& cfg = report.config;
  const auto& rec = report.records.at(alpha_index);
  const auto& rd = rec.get(Method::RD);
  const auto& md = rec.get(Method::MDSelect);
  const auto& bis = rec.get(Method::MDBisect);
  const ChannelModel ch =
      ChannelModel::from_scene(cfg.scene, cfg.channel_noise_psd, cfg.path_loss_exponent);
  auto os = open_csv(path);
  os << "sensor,x,y,distance_fc,rd_continuous_rate,rd_rate,md_selected,bisection_selected,"
        "rd_energy,md_energy\n";
  for (std::size_t k = 0; k < cfg.scene.sensor_count(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    const Point2& p = cfg.scene.sensor_positions[k];
    auto energy = [&](const MethodRecord& r) {
      if (!r.feasible) return std::string();
      return format_number(transmit_energy(r.rates[ki], ch.distances[ki], ch.noise_psd[ki],
                                           ch.path_loss_exponent));
    };
    os << k << ',' << format_number(p.x) << ',' << format_number(p.y) << ','
       << format_number(ch.distances[ki]) << ','
       << (rd.feasible ? format_number(rd.continuous_rates[ki]) : "") << ','
       << (rd.feasible ? format_number(rd.rates[ki]) : "") << ','
       << (md.feasible ? (md.rates[ki] > 0 ? "1" : "0") : "") << ','
       << (bis.feasible ? (bis.rates[ki] > 0 ? "1" : "0") : "") << ',' << energy(rd) << ','
       << energy(md) << '\n';
  }
  close_csv(os, path);
}

void emit_sweep(const RunReport& report, const std::string& path) {
  auto os = open_csv(path);
  os << "alpha,method,feasible,noise_power_db,bound_db,eur,energy,active_sensors,threshold,"
        "subset,failure\n";
  for (const auto& rec : report.records) {
    for (const auto& m : rec.methods) {
      os << format_number(rec.alpha) << ',' << to_string(m.method) << ','
         << (m.feasible ? 1 : 0) << ',' << (m.feasible ? format_number(db(m.noise_power)) : "")
         << ',' << format_number(db(rec.bound)) << ','
         << (m.feasible ? format_number(m.eur) : "") << ','
         << (m.feasible ? format_number(m.energy) : "") << ',' << m.subset.size() << ','
         << (m.method == Method::MDBisect && m.feasible ? format_number(m.threshold) : "")
         << ',' << join(m.subset) << ",\"" << m.failure << "\"\n";
    }
  }
  close_csv(os, path);
}

std::vector<std::string> write_report(const RunReport& report) {
  const fs::path dir(report.config.output_dir);
  std::vector<std::string> files;
  const std::string sweep = (dir / "sweep.csv").string();
  emit_sweep(report, sweep);
  files.push_back(sweep);
  for (std::size_t a = 0; a < report.records.size(); ++a) {
    const std::string tag = alpha_tag(report.records[a].alpha);
    const std::string map = (dir / ("rate_map_alpha" + tag + ".csv")).string();
    const std::string alloc = (dir / ("allocation_alpha" + tag + ".csv")).string();
    emit_rate_map(report, a, map);
    emit_allocation(report, a, alloc);
    files.push_back(map);
    files.push_back(alloc);
  }
  return files;
}

DenoiseReport end_to_end_denoise(const ScenarioConfig& config, double alpha) {
  config.validate();
  ScenarioConfig agg = config;
  agg.mode = RateMode::Aggregate;
  agg.alpha_sweep = {alpha};
  const RunReport run = run_scenario(agg);
  const MethodRecord& rd = run.records.front().get(Method::RD);
  if (!rd.feasible) throw AllocationFailed("rate allocation failed: " + rd.failure);

  DenoiseReport out;
  out.alpha = alpha;
  out.rates = rd.rates;

  const FrameSpec spec{config.frame_len, config.frame_len / 2, config.frame_len};
  SynthesisOptions so;
  so.duration = config.duration;
  so.seed = config.seed;
  so.window_energy = spec.window_energy();
  const SynthesizedSignals sig = synthesize_signals(config.scene, so);
  const std::size_t m = config.scene.sensor_count();

  // Quantizer ranges follow the model amplitudes, converted to the time
  // domain by the window energy.
  std::vector<std::vector<double>> sent = sig.mixture;
  RVector time_amplitude = RVector::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t b = 0; b < spec.bins(); ++b) {
    const auto p = make_problem(agg, config.bin_frequency(b), alpha);
    time_amplitude = time_amplitude.cwiseMax(p.amplitudes / std::sqrt(spec.window_energy()));
  }
  for (std::size_t k = 0; k < m; ++k) {
    quantize_signal(sent[k], time_amplitude[static_cast<Eigen::Index>(k)],
                    static_cast<int>(out.rates[static_cast<Eigen::Index>(k)]));
  }
  std::vector<std::vector<double>> error(m);
  for (std::size_t k = 0; k < m; ++k) {
    error[k].resize(sent[k].size());
    for (std::size_t n = 0; n < sent[k].size(); ++n) error[k][n] = sent[k][n] - sig.target[k][n];
  }

  const auto y = stft_analyze(sent, spec);
  const auto x = stft_analyze(sig.target, spec);
  const auto noise = stft_analyze(error, spec);
  // Reference: the sensor nearest the first target, before quantization.
  std::size_t ref = 0;
  for (std::size_t k = 1; k < m; ++k) {
    const Point2& t = config.scene.target_positions.front();
    if (distance(config.scene.sensor_positions[k], t) <
        distance(config.scene.sensor_positions[ref], t)) {
      ref = k;
    }
  }
  const auto in_noise = stft_analyze({sig.noise[ref]}, spec);
  SpectrogramTensor out_tensor(spec.bins(), y.frames(), 1, y.signal_length());

  double err_num = 0.0, err_den = 0.0;
  for (std::size_t b = 0; b < spec.bins(); ++b) {
    const auto prob = make_problem(agg, config.bin_frequency(b), alpha);
    const CMatrix cov = noisy_covariance(prob, out.rates);
    const auto& active = rd.subset;
    const CMatrix sub_cov = cov(active, active);
    const LinearConstraintSet sub_c = prob.constraints.restricted(active);
    const BeamformerWeights w = lcmv_weights(sub_cov, sub_c);

    const CMatrix yb = y.bin_matrix(b)(active, Eigen::all);
    const CMatrix xb = x.bin_matrix(b)(active, Eigen::all);
    const CMatrix nb = noise.bin_matrix(b)(active, Eigen::all);
    const Eigen::RowVectorXcd yo = w.w.adjoint() * yb;
    const Eigen::RowVectorXcd xo = w.w.adjoint() * xb;
    const Eigen::RowVectorXcd no = w.w.adjoint() * nb;
    out_tensor.set_bin_matrix(b, yo);
    const auto frames = static_cast<double>(y.frames());
    out.bin_frequency.push_back(config.bin_frequency(b));
    out.input_noise.push_back(in_noise.bin_matrix(b).squaredNorm() / frames);
    out.output_noise.push_back(no.squaredNorm() / frames);
    out.model_noise.push_back(subset_output_noise_power(cov, prob.constraints, active));
    out.bound.push_back(prob.bound());
    err_num += (yo - xo).squaredNorm();
    err_den += xo.squaredNorm();
  }
  for (std::size_t b = 0; b < spec.bins(); ++b) {
    out.input_noise_total += out.input_noise[b];
    out.output_noise_total += out.output_noise[b];
    out.model_noise_total += out.model_noise[b];
    out.bound_total += out.bound[b];
  }
  out.target_error = err_den > 0.0 ? std::sqrt(err_num / err_den) : 0.0;

  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  const auto output = stft_synthesize(out_tensor, spec);
  const double peak = [&] {
    double p = 1e-300;
    for (const auto& c : sig.mixture) {
      for (double v : c) p = std::max(p, std::abs(v));
    }
    return p;
  }();
  auto normalized = [peak](std::vector<double> v) {
    for (double& s : v) s /= (1.01 * peak);
    return v;
  };
  const std::string tag = alpha_tag(alpha);
  const std::vector<std::pair<std::string, std::vector<double>>> audio = {
      {"reference_noisy.wav", normalized(sig.mixture[ref])},
      {"transmitted_alpha" + tag + ".wav", normalized(sent[ref])},
      {"output_alpha" + tag + ".wav", normalized(output[0])},
  };
  for (const auto& [name, data] : audio) {
    const std::string path = (dir / name).string();
    write_wav(path, {config.scene.sample_rate, {data}}, WavFormat::Float32);
    out.files.push_back(path);
  }

  const std::string csv = (dir / ("denoise_alpha" + tag + ".csv")).string();
  auto os = open_csv(csv);
  os << "bin,frequency,input_noise_db,output_noise_db,model_noise_db,bound_db\n";
  for (std::size_t b = 0; b < spec.bins(); ++b) {
    os << b << ',' << format_number(out.bin_frequency[b]) << ','
       << format_number(db(out.input_noise[b])) << ',' << format_number(db(out.output_noise[b]))
       << ',' << format_number(db(out.model_noise[b])) << ',' << format_number(db(out.bound[b]))
       << '\n';
  }
  close_csv(os, csv);
  out.files.push_back(csv);
  return out;
}

}  // namespace wasn
