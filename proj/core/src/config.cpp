#include "pilotloc/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pilotloc {

namespace {

using nlohmann::json;

constexpr double kDegToRad = std::numbers::pi / 180.0;

double get_num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw std::invalid_argument(std::string(key) + " must be a number");
  return j.at(key).get<double>();
}

int get_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer())
    throw std::invalid_argument(std::string(key) + " must be an integer");
  return j.at(key).get<int>();
}

std::array<double, 2> get_pair(const json& j, const char* key, std::array<double, 2> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2)
    throw std::invalid_argument(std::string(key) + " must be a [lo, hi] pair");
  return {v.at(0).get<double>(), v.at(1).get<double>()};
}

}  // namespace

const char* axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kSnrDb:
      return "snr_db";
    case SweepAxis::kPilots:
      return "pilots";
    case SweepAxis::kAntennas:
      return "antennas";
    case SweepAxis::kTaylor:
      return "taylor";
  }
  return "snr_db";
}

SweepAxis axis_of_name(const std::string& name) {
  if (name == "snr_db") return SweepAxis::kSnrDb;
  if (name == "pilots") return SweepAxis::kPilots;
  if (name == "antennas") return SweepAxis::kAntennas;
  if (name == "taylor") return SweepAxis::kTaylor;
  throw std::invalid_argument("unknown sweep axis: " + name);
}

void validate(const ExperimentConfig& cfg) {
  validate(cfg.scenario);
  if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (cfg.sweep.values.empty()) throw std::invalid_argument("sweep needs at least one value");
  for (size_t i = 1; i < cfg.sweep.values.size(); ++i)
    if (!(cfg.sweep.values[i] > cfg.sweep.values[i - 1]))
      throw std::invalid_argument("sweep values must be strictly increasing");
  if (cfg.taylor.order < 0 || cfg.taylor.order > 12)
    throw std::invalid_argument("taylor order must be in 0..12");
  const bool integer_axis = cfg.sweep.axis != SweepAxis::kSnrDb;
  if (integer_axis) {
    for (double v : cfg.sweep.values) {
      if (v != std::floor(v) || v < (cfg.sweep.axis == SweepAxis::kTaylor ? 0.0 : 1.0))
        throw std::invalid_argument("sweep values for this axis must be whole numbers");
    }
  }
  if (cfg.sweep.axis == SweepAxis::kPilots) {
    for (double v : cfg.sweep.values)
      if (v > cfg.scenario.config.subframes)
        throw std::invalid_argument("pilot sweep value exceeds configured subframes");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;

  const auto& sc = j.at("scenario");
  const auto& arr = sc.at("array");
  cfg.scenario.geometry = make_array(get_int(arr, "antennas", 0), get_num(arr, "wavelength_m", 0));
  if (arr.contains("spacing_m"))
    cfg.scenario.geometry.spacing_m = arr.at("spacing_m").get<double>();

  for (const auto& dj : sc.at("drones")) {
    DroneState d;
    d.doa_rad = dj.at("doa_deg").get<double>() * kDegToRad;
    d.range_m = dj.at("range_m").get<double>();
    d.doppler_hz = dj.at("doppler_hz").get<double>();
    d.tx_power = get_num(dj, "power", 1.0);
    d.velocity_mps = get_num(dj, "velocity_mps", 0.0);
    cfg.scenario.drones.push_back(d);
  }
  cfg.scenario.target = get_int(sc, "target", 0);

  const auto& fr = sc.at("frame");
  cfg.scenario.config.frames = get_int(fr, "frames", 1);
  cfg.scenario.config.subframes = get_int(fr, "subframes", 1);
  cfg.scenario.config.symbols = get_int(fr, "symbols", 0);
  cfg.scenario.config.sampling_hz = get_num(fr, "sampling_hz", 0.0);
  cfg.scenario.config.modulation_order = get_int(fr, "modulation_order", 2);
  cfg.scenario.config.noise_variance = get_num(fr, "noise_variance", 1.0);

  if (j.contains("search")) {
    const auto& se = j.at("search");
    SearchSpec defaults;
    const auto th = get_pair(se, "theta_bounds_deg",
                             {defaults.theta_bounds[0] / kDegToRad,
                              defaults.theta_bounds[1] / kDegToRad});
    cfg.search.theta_bounds = {th[0] * kDegToRad, th[1] * kDegToRad};
    cfg.search.range_bounds = get_pair(se, "range_bounds_m", defaults.range_bounds);
    cfg.search.doppler_bounds = get_pair(se, "doppler_bounds_hz", defaults.doppler_bounds);
    cfg.search.theta_step_rad =
        get_num(se, "theta_step_deg", defaults.theta_step_rad / kDegToRad) * kDegToRad;
    cfg.search.doppler_step_hz = get_num(se, "doppler_step_hz", defaults.doppler_step_hz);
    cfg.search.range_grid_points = get_int(se, "range_grid_points", defaults.range_grid_points);
    cfg.search.refine_rel_tol = get_num(se, "refine_rel_tol", defaults.refine_rel_tol);
    cfg.search.max_refine_cycles = get_int(se, "max_refine_cycles", defaults.max_refine_cycles);
  }

  if (j.contains("taylor")) cfg.taylor.order = get_int(j.at("taylor"), "order", 6);

  if (j.contains("sweep")) {
    const auto& sw = j.at("sweep");
    cfg.sweep.axis = axis_of_name(sw.at("axis").get<std::string>());
    for (const auto& v : sw.at("values")) cfg.sweep.values.push_back(v.get<double>());
  } else {
    cfg.sweep.axis = SweepAxis::kSnrDb;
    cfg.sweep.values = {get_num(j, "snr_db", 0.0)};
  }

  cfg.trials = get_int(j, "trials", 1000);
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
  cfg.snr_db = get_num(j, "snr_db", std::numeric_limits<double>::quiet_NaN());

  if (j.contains("benchmarks")) {
    const auto& b = j.at("benchmarks");
    if (b.contains("mmse")) cfg.benchmarks.mmse = b.at("mmse").get<bool>();
    if (b.contains("mld")) cfg.benchmarks.mld = b.at("mld").get<bool>();
  }
  if (j.contains("error_model")) {
    const auto src = j.at("error_model").get<std::string>();
    if (src == "crlb")
      cfg.error_source = ErrorModelSource::kCrlb;
    else if (src == "empirical")
      cfg.error_source = ErrorModelSource::kEmpirical;
    else if (src == "injected")
      cfg.error_source = ErrorModelSource::kInjected;
    else
      throw std::invalid_argument("error_model must be \"crlb\", \"empirical\" or \"injected\"");
  }
  if (j.contains("decode_estimate")) {
    const auto mode = j.at("decode_estimate").get<std::string>();
    if (mode == "running")
      cfg.decode_estimate = DecodeEstimate::kRunning;
    else if (mode == "final")
      cfg.decode_estimate = DecodeEstimate::kFinal;
    else
      throw std::invalid_argument("decode_estimate must be \"running\" or \"final\"");
  }

  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string canonical_dump(const ExperimentConfig& cfg) {
  json j;
  j["scenario"]["array"] = {{"antennas", cfg.scenario.geometry.antennas},
                            {"wavelength_m", cfg.scenario.geometry.wavelength_m},
                            {"spacing_m", cfg.scenario.geometry.spacing_m}};
  json drones = json::array();
  for (const auto& d : cfg.scenario.drones)
    drones.push_back({{"doa_rad", d.doa_rad},
                      {"range_m", d.range_m},
                      {"doppler_hz", d.doppler_hz},
                      {"power", d.tx_power},
                      {"velocity_mps", d.velocity_mps}});
  j["scenario"]["drones"] = std::move(drones);
  j["scenario"]["target"] = cfg.scenario.target;
  j["scenario"]["frame"] = {{"frames", cfg.scenario.config.frames},
                            {"subframes", cfg.scenario.config.subframes},
                            {"symbols", cfg.scenario.config.symbols},
                            {"sampling_hz", cfg.scenario.config.sampling_hz},
                            {"modulation_order", cfg.scenario.config.modulation_order},
                            {"noise_variance", cfg.scenario.config.noise_variance}};
  j["search"] = {{"theta_bounds_rad", cfg.search.theta_bounds},
                 {"range_bounds_m", cfg.search.range_bounds},
                 {"doppler_bounds_hz", cfg.search.doppler_bounds},
                 {"theta_step_rad", cfg.search.theta_step_rad},
                 {"doppler_step_hz", cfg.search.doppler_step_hz},
                 {"range_grid_points", cfg.search.range_grid_points},
                 {"refine_rel_tol", cfg.search.refine_rel_tol},
                 {"max_refine_cycles", cfg.search.max_refine_cycles}};
  j["taylor"] = {{"order", cfg.taylor.order}};
  j["sweep"] = {{"axis", axis_name(cfg.sweep.axis)}, {"values", cfg.sweep.values}};
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["out"] = cfg.out;
  if (!std::isnan(cfg.snr_db)) j["snr_db"] = cfg.snr_db;
  j["benchmarks"] = {{"mmse", cfg.benchmarks.mmse}, {"mld", cfg.benchmarks.mld}};
  j["error_model"] = cfg.error_source == ErrorModelSource::kCrlb        ? "crlb"
                     : cfg.error_source == ErrorModelSource::kEmpirical ? "empirical"
                                                                        : "injected";
  j["decode_estimate"] =
      cfg.decode_estimate == DecodeEstimate::kRunning ? "running" : "final";
  return j.dump();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string text = canonical_dump(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

void apply_snr(ScenarioSpec& scenario, double snr_db) {
  const double snr = std::pow(10.0, snr_db / 10.0);
  scenario.config.noise_variance = 1.0;
  for (auto& d : scenario.drones) {
    const double eta = path_loss(scenario.geometry.wavelength_m, d.range_m);
    d.tx_power = snr / (eta * eta);
  }
}

}  // namespace pilotloc
