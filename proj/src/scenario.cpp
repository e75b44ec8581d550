#include "wasnrate/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "wasnrate/energy.hpp"

namespace wasn {

namespace {

using nlohmann::json;

SceneConfig grid_layout(int side, double room, double margin, bool drop_center) {
  SceneConfig s;
  s.room_size = {room, room};
  s.sensor_positions = grid_scene(side, side, s.room_size, margin);
  if (drop_center) {
    const auto center = static_cast<std::size_t>((side / 2) * side + side / 2);
    s.sensor_positions.erase(s.sensor_positions.begin() + static_cast<std::ptrdiff_t>(center));
  }
  s.fc_position = {room / 2.0, room / 2.0};
  return s;
}

Point2 read_point(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidConfig("positions must be [x, y] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<Point2> read_points(const json& j) {
  std::vector<Point2> out;
  for (const auto& p : j) out.push_back(read_point(p));
  return out;
}

void apply_json(ScenarioConfig& cfg, const json& j) {
  auto& s = cfg.scene;
  if (j.contains("name")) cfg.name = j["name"].get<std::string>();
  if (j.contains("room")) s.room_size = read_point(j["room"]);
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    s.sensor_positions = grid_scene(g.at("rows").get<int>(), g.at("cols").get<int>(), s.room_size,
                                    g.value("margin", 0.5));
  }
  if (j.contains("sensors")) s.sensor_positions = read_points(j["sensors"]);
  if (j.contains("fc")) s.fc_position = read_point(j["fc"]);
  if (j.contains("targets")) s.target_positions = read_points(j["targets"]);
  if (j.contains("interferers")) s.interferer_positions = read_points(j["interferers"]);
  if (j.contains("target_psd")) s.target_psd = j["target_psd"].get<std::vector<double>>();
  if (j.contains("interferer_psd")) s.interferer_psd = j["interferer_psd"].get<std::vector<double>>();
  if (j.contains("self_noise_psd")) s.self_noise_psd = j["self_noise_psd"].get<double>();
  if (j.contains("speed_of_sound")) s.speed_of_sound = j["speed_of_sound"].get<double>();
  if (j.contains("sample_rate")) s.sample_rate = j["sample_rate"].get<double>();
  if (j.contains("b0")) cfg.b0 = j["b0"].get<int>();
  if (j.contains("alpha")) cfg.alpha_sweep = j["alpha"].get<std::vector<double>>();
  if (j.contains("design")) cfg.design = parse_design(j["design"].get<std::string>());
  if (j.contains("mode")) cfg.mode = parse_mode(j["mode"].get<std::string>());
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("frequency")) cfg.frequency = j["frequency"].get<double>();
  if (j.contains("frame_len")) cfg.frame_len = j["frame_len"].get<std::size_t>();
  if (j.contains("channel_noise_psd")) cfg.channel_noise_psd = j["channel_noise_psd"].get<double>();
  if (j.contains("path_loss_exponent")) cfg.path_loss_exponent = j["path_loss_exponent"].get<double>();
  if (j.contains("crest_factor")) cfg.crest_factor = j["crest_factor"].get<double>();
  if (j.contains("rounding_draws")) cfg.rounding_draws = j["rounding_draws"].get<int>();
  if (j.contains("duration")) cfg.duration = j["duration"].get<double>();
  // Default PSDs when only positions were given.
  if (s.target_psd.size() != s.target_positions.size()) s.target_psd.assign(s.target_positions.size(), 1.0);
  if (s.interferer_psd.size() != s.interferer_positions.size()) {
    s.interferer_psd.assign(s.interferer_positions.size(), 1.0);
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  scene.validate();
  if (b0 < 1 || b0 > 30) throw InvalidConfig("b0 must lie in [1, 30]");
  if (alpha_sweep.empty()) throw InvalidConfig("alpha sweep is empty");
  for (double a : alpha_sweep) {
    if (!(a > 0.0 && a <= 1.0)) throw InvalidConfig("every alpha must lie in (0, 1]");
  }
  if (frame_len < 4 || frame_len % 2 != 0) throw InvalidConfig("frame_len must be even and >= 4");
  if (!(frequency >= 0.0 && frequency <= scene.sample_rate / 2.0)) {
    throw InvalidConfig("frequency must lie in [0, fs/2]");
  }
  if (!(channel_noise_psd > 0.0)) throw InvalidConfig("channel noise PSD must be positive");
  if (!(crest_factor > 0.0)) throw InvalidConfig("crest factor must be positive");
  if (rounding_draws < 1) throw InvalidConfig("rounding_draws must be positive");
  if (!(duration > 0.0)) throw InvalidConfig("duration must be positive");
  const auto u = scene.target_count() +
                 (design == ConstraintDesign::TargetsPlusNulls ? scene.interferer_count() : 0);
  if (u > scene.sensor_count()) throw InvalidConfig("more constraints than sensors");
}

std::size_t ScenarioConfig::representative_bin() const {
  const double spacing = scene.sample_rate / static_cast<double>(frame_len);
  const auto bin = static_cast<std::size_t>(std::lround(frequency / spacing));
  return std::min(bin, bins() - 1);
}

double ScenarioConfig::bin_frequency(std::size_t bin) const {
  return static_cast<double>(bin) * scene.sample_rate / static_cast<double>(frame_len);
}

std::vector<std::string> preset_names() { return {"small24", "grid49", "grid169", "tiny3"}; }

ScenarioConfig preset(const std::string& name) {
  ScenarioConfig cfg;
  cfg.name = name;
  SceneConfig& s = cfg.scene;
  if (name == "small24") {
    s = grid_layout(5, 3.0, 0.5, true);
    s.target_positions = {{0.3, 2.7}};
    s.interferer_positions = {{0.3, 0.3}, {2.7, 2.7}};
  } else if (name == "grid49") {
    s = grid_layout(7, 6.0, 0.6, false);
    s.target_positions = {{1.2, 4.8}, {4.8, 1.2}};
    s.interferer_positions = {{1.2, 1.2}, {4.8, 4.8}};
  } else if (name == "grid169") {
    s = grid_layout(13, 12.0, 0.6, false);
    s.target_positions = {{2.4, 9.6}, {9.6, 2.4}};
    s.interferer_positions = {{2.4, 2.4}, {9.6, 9.6}};
  } else if (name == "tiny3") {
    s.room_size = {2.0, 2.0};
    s.sensor_positions = {{0.5, 1.5}, {1.0, 1.0}, {1.5, 0.5}};
    s.fc_position = {1.0, 1.0};
    s.target_positions = {{0.2, 1.8}};
    s.interferer_positions = {{1.8, 1.8}};
    cfg.b0 = 2;
  } else {
    throw InvalidConfig("unknown preset '" + name + "'");
  }
  s.target_psd.assign(s.target_positions.size(), 1.0);
  s.interferer_psd.assign(s.interferer_positions.size(), 1.0);
  s.self_noise_psd = 1e-5;
  return cfg;
}

ScenarioConfig load_scenario(const std::string& preset_or_path) {
  for (const auto& n : preset_names()) {
    if (n == preset_or_path) return preset(n);
  }
  std::ifstream is(preset_or_path);
  if (!is) throw InvalidConfig("'" + preset_or_path + "' is neither a preset nor a readable file");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw InvalidConfig("cannot parse " + preset_or_path + ": " + e.what());
  }
  ScenarioConfig cfg;
  try {
    if (j.contains("preset")) cfg = preset(j["preset"].get<std::string>());
    apply_json(cfg, j);
  } catch (const json::exception& e) {
    throw InvalidConfig("bad value in " + preset_or_path + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

LinearConstraintSet make_constraints(const ATFMatrix& atf, ConstraintDesign design) {
  if (design == ConstraintDesign::TargetsDistortionless || atf.b.cols() == 0) {
    return LinearConstraintSet::distortionless(atf.a);
  }
  LinearConstraintSet c;
  c.lambda.resize(atf.a.rows(), atf.a.cols() + atf.b.cols());
  c.lambda << atf.a, atf.b;
  c.f = CVector::Zero(c.lambda.cols());
  c.f.head(atf.a.cols()).setOnes();
  return c;
}

RateAllocationProblem make_problem(const ScenarioConfig& config, double frequency, double alpha) {
  const ATFMatrix atf = build_freefield_atf(config.scene, frequency);
  const CovarianceSet cov = assemble_covariances(atf, SignalStatistics::from_scene(config.scene));
  RateAllocationProblem p;
  p.noise_cov = cov.r_nn;
  p.constraints = make_constraints(atf, config.design);
  p.channel = ChannelModel::from_scene(config.scene, config.channel_noise_psd,
                                       config.path_loss_exponent);
  p.amplitudes = 2.0 * config.crest_factor * cov.r_yy.diagonal().real().cwiseSqrt();
  p.b0 = config.b0;
  p.alpha = alpha;
  return p.with_beta();
}

const char* to_string(ConstraintDesign d) {
  return d == ConstraintDesign::TargetsPlusNulls ? "targets-plus-nulls" : "targets-distortionless";
}

const char* to_string(RateMode m) { return m == RateMode::Aggregate ? "aggregate" : "per-bin"; }

ConstraintDesign parse_design(const std::string& s) {
  if (s == "targets-distortionless") return ConstraintDesign::TargetsDistortionless;
  if (s == "targets-plus-nulls") return ConstraintDesign::TargetsPlusNulls;
  throw InvalidConfig("unknown constraint design '" + s + "'");
}

RateMode parse_mode(const std::string& s) {
  if (s == "per-bin") return RateMode::PerBin;
  if (s == "aggregate") return RateMode::Aggregate;
  throw InvalidConfig("unknown mode '" + s + "'");
}

}  // namespace wasn
