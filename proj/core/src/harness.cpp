#include "pilotloc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

#include "pilotloc/crlb.hpp"
#include "pilotloc/detector.hpp"
#include "pilotloc/rng.hpp"

namespace pilotloc {
namespace {

std::vector<double> power_list(const ScenarioSpec& s) {
  std::vector<double> p;
  p.reserve(s.drones.size());
  for (const auto& d : s.drones) p.push_back(d.tx_power);
  return p;
}

int whole_value(double v, int min_value, const char* what) {
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9 || r < min_value)
    throw std::invalid_argument(std::string(what) + " sweep values must be whole numbers >= " +
                                std::to_string(min_value));
  return static_cast<int>(r);
}

// Work pool over [0, count) with slot-indexed output; the first exception
// wins and is rethrown on the caller thread.
template <class F>
void parallel_for(int count, int threads, F&& body) {
  threads = std::clamp(threads, 1, std::max(1, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        if (failed.load(std::memory_order_relaxed)) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Subframes whose data slots get decoded at this point. Empty when the
// frame carries no data symbols.
std::vector<int> decode_slots_of(const ResolvedPoint& pt) {
  std::vector<int> slots;
  if (pt.scenario.config.symbols <= 0) return slots;
  if (pt.decode_subframe == 0) {
    for (int l = 1; l <= pt.scenario.config.subframes; ++l) slots.push_back(l);
  } else {
    slots.push_back(pt.decode_subframe);
  }
  return slots;
}

// Pilot counts at which location estimates are formed, ascending: the
// running estimate for every decoded subframe plus the full pilot budget
// that the reported RMSE and CRLB use. Final-estimate mode forms only the
// full-budget estimate and decodes every subframe with it.
std::vector<int> estimate_slots_of(const ResolvedPoint& pt, const std::vector<int>& decode_slots) {
  std::vector<int> slots;
  if (pt.decode_estimate == DecodeEstimate::kRunning) slots = decode_slots;
  if (slots.empty() || slots.back() != pt.scenario.config.subframes)
    slots.push_back(pt.scenario.config.subframes);
  return slots;
}

// Index into the estimate slots of the estimate that decodes decode slot di.
size_t estimate_index_of(const ResolvedPoint& pt, size_t di) {
  return pt.decode_estimate == DecodeEstimate::kRunning ? di : 0;
}

struct TrialOutcome {
  bool ok = false;
  std::vector<double> sq_err;            // [est_slot][drone][param] squared errors
  std::vector<double> err_full;          // [drone][param] signed errors at the full budget
  std::vector<std::int64_t> mrc_errors;  // [decode_slot][drone] symbol errors
  std::vector<std::int64_t> mmse_errors;
  std::vector<std::int64_t> mld_errors;  // [decode_slot], single drone only
};

TrialOutcome run_trial(const ResolvedPoint& pt, const BenchmarkToggles& bench,
                       const std::vector<int>& est_slots, const std::vector<int>& decode_slots,
                       const std::vector<std::vector<double>>& injected_sigma,
                       std::uint64_t trial_seed) {
  const ScenarioSpec& sc = pt.scenario;
  const ArrayGeometry& g = sc.geometry;
  const FrameConfig& c = sc.config;
  const int n = g.antennas;
  const int num_drones = static_cast<int>(sc.drones.size());
  const int subframes = c.subframes;
  const int data_per_subframe = c.symbols;
  const int m = c.modulation_order;

  RngStream rng(trial_seed);
  TrialOutcome out;
  out.sq_err.assign(est_slots.size() * static_cast<size_t>(num_drones) * 3, 0.0);
  out.err_full.assign(static_cast<size_t>(num_drones) * 3, 0.0);
  out.mrc_errors.assign(decode_slots.size() * static_cast<size_t>(num_drones), 0);
  if (bench.mmse) out.mmse_errors.assign(out.mrc_errors.size(), 0);
  if (bench.mld) out.mld_errors.assign(decode_slots.size(), 0);

  // Draw order is part of the determinism contract: pilot blocks for every
  // subframe first, then per decoded subframe each data slot's symbols
  // followed by its noise.
  const std::vector<int> pilot_symbols;
  std::vector<SignalBlock> pilots;
  pilots.reserve(static_cast<size_t>(subframes));
  for (int l = 1; l <= subframes; ++l)
    pilots.push_back(synth_received(g, sc.drones, c, l, 0, pilot_symbols, rng));

  std::vector<std::vector<Eigen::VectorXcd>> data(decode_slots.size());
  std::vector<std::vector<std::vector<int>>> sent(decode_slots.size());
  for (size_t di = 0; di < decode_slots.size(); ++di) {
    const int l = decode_slots[di];
    data[di].reserve(static_cast<size_t>(data_per_subframe));
    sent[di].reserve(static_cast<size_t>(data_per_subframe));
    for (int t = 1; t <= data_per_subframe; ++t) {
      std::vector<int> symbols(static_cast<size_t>(num_drones));
      for (auto& s : symbols) s = rng.symbol(m);
      data[di].push_back(synth_received(g, sc.drones, c, l, t, symbols, rng).samples);
      sent[di].push_back(std::move(symbols));
    }
  }

  const ParameterVector truth = parameters_of(sc.drones);
  const std::vector<double> powers = power_list(sc);
  const Eigen::VectorXcd pilot_stack = stack_pilots(pilots);

  std::vector<ParameterVector> est_psi(est_slots.size());
  std::vector<std::vector<int>> est_perm(est_slots.size());
  for (size_t ei = 0; ei < est_slots.size(); ++ei) {
    const int l = est_slots[ei];
    if (pt.error_source == ErrorModelSource::kInjected) {
      // The error model replaces the estimator: truth plus independent
      // Gaussian errors at this pilot budget's CRLB sigmas. Draw order per
      // slot: for each drone theta, then range, then Doppler.
      ParameterVector psi = truth;
      const std::vector<double>& s = injected_sigma[ei];
      for (int k = 0; k < num_drones; ++k) {
        const auto ki = static_cast<size_t>(k);
        psi.theta_rad[ki] += s[ki] * rng.gaussian();
        psi.range_m[ki] += s[static_cast<size_t>(num_drones) + ki] * rng.gaussian();
        psi.doppler_hz[ki] += s[2 * static_cast<size_t>(num_drones) + ki] * rng.gaussian();
        // An unphysical range draw would blow up the path loss; the clamp
        // fires with negligible probability at any supported SNR.
        psi.range_m[ki] = std::max(psi.range_m[ki], 1e-3);
      }
      est_psi[ei] = std::move(psi);
      est_perm[ei].resize(static_cast<size_t>(num_drones));
      std::iota(est_perm[ei].begin(), est_perm[ei].end(), 0);
    } else {
      const Eigen::VectorXcd y1 = pilot_stack.head(static_cast<Eigen::Index>(n) * l);
      const LocationEstimate est = mle_estimate(y1, g, c, pt.search);
      est_psi[ei] = est.psi;
      est_perm[ei] = matching_permutation(est.psi, truth, pt.search);
    }
    const std::vector<int>& perm = est_perm[ei];
    for (int k = 0; k < num_drones; ++k) {
      const auto e = static_cast<size_t>(perm[static_cast<size_t>(k)]);
      const double errs[3] = {
          est_psi[ei].theta_rad[e] - truth.theta_rad[static_cast<size_t>(k)],
          est_psi[ei].range_m[e] - truth.range_m[static_cast<size_t>(k)],
          est_psi[ei].doppler_hz[e] - truth.doppler_hz[static_cast<size_t>(k)]};
      for (int p = 0; p < 3; ++p) {
        out.sq_err[(ei * static_cast<size_t>(num_drones) + static_cast<size_t>(k)) * 3 +
                   static_cast<size_t>(p)] = errs[p] * errs[p];
        if (l == subframes)
          out.err_full[static_cast<size_t>(k) * 3 + static_cast<size_t>(p)] = errs[p];
      }
    }
  }

  for (size_t di = 0; di < decode_slots.size(); ++di) {
    const int l = decode_slots[di];
    const size_t ei = estimate_index_of(pt, di);
    const std::vector<int>& perm = est_perm[ei];
    const Eigen::MatrixXcd channel_hat = reconstruct_channel(est_psi[ei], g, c, l);
    Eigen::MatrixXcd channel_true;
    if (bench.mmse) channel_true = channel_matrix(g, sc.drones, c, l);
    for (int t = 0; t < data_per_subframe; ++t) {
      const auto ti = static_cast<size_t>(t);
      const std::vector<int> decided = mpsk_detect(mrc_combine(channel_hat, data[di][ti]), m);
      for (int k = 0; k < num_drones; ++k) {
        const auto stream = static_cast<size_t>(perm[static_cast<size_t>(k)]);
        if (decided[stream] != sent[di][ti][static_cast<size_t>(k)])
          ++out.mrc_errors[di * static_cast<size_t>(num_drones) + static_cast<size_t>(k)];
      }
      if (bench.mmse) {
        const std::vector<int> decided_mmse =
            mpsk_detect(mmse_combine(channel_true, powers, c.noise_variance, data[di][ti]), m);
        for (int k = 0; k < num_drones; ++k)
          if (decided_mmse[static_cast<size_t>(k)] != sent[di][ti][static_cast<size_t>(k)])
            ++out.mmse_errors[di * static_cast<size_t>(num_drones) + static_cast<size_t>(k)];
      }
    }
    if (bench.mld) {
      const Eigen::VectorXcd y1 =
          pilot_stack.head(static_cast<Eigen::Index>(n) * est_slots[ei]);
      const MldResult mld = joint_mld_detect(y1, data[di], l, g, c, pt.search);
      for (int t = 0; t < data_per_subframe; ++t)
        if (mld.symbols[static_cast<size_t>(t)] != sent[di][static_cast<size_t>(t)][0])
          ++out.mld_errors[di];
    }
  }
  out.ok = true;
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

std::string fmt_hash(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const char* sweep_column(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kSnrDb:
      return "snr (dB)";
    case SweepAxis::kPilots:
      return "pilots (count)";
    case SweepAxis::kAntennas:
      return "antennas (count)";
    case SweepAxis::kTaylor:
      return "taylor_order (count)";
  }
  return "sweep";
}

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

}  // namespace

ResolvedPoint resolve_point(const ExperimentConfig& cfg, double sweep_value) {
  ResolvedPoint pt;
  pt.scenario = cfg.scenario;
  pt.search = cfg.search;
  pt.taylor = cfg.taylor;
  pt.decode_estimate = cfg.decode_estimate;
  pt.error_source = cfg.error_source;

  switch (cfg.sweep.axis) {
    case SweepAxis::kSnrDb:
      apply_snr(pt.scenario, sweep_value);
      break;
    case SweepAxis::kPilots: {
      const int l = whole_value(sweep_value, 1, "pilot");
      pt.scenario.config.subframes = l;
      pt.decode_subframe = l;
      break;
    }
    case SweepAxis::kAntennas:
      pt.scenario.geometry.antennas = whole_value(sweep_value, 1, "antenna");
      break;
    case SweepAxis::kTaylor:
      pt.taylor.order = whole_value(sweep_value, 0, "taylor");
      break;
  }
  if (cfg.sweep.axis != SweepAxis::kSnrDb && !std::isnan(cfg.snr_db))
    apply_snr(pt.scenario, cfg.snr_db);

  pt.search.num_drones = static_cast<int>(pt.scenario.drones.size());
  pt.search.tx_powers = power_list(pt.scenario);
  validate(pt.scenario);
  validate(pt.search);
  return pt;
}

ResultRow run_point(const ExperimentConfig& cfg, double sweep_value, std::uint64_t point_seed,
                    int threads, PointDetail* detail) {
  const auto started = std::chrono::steady_clock::now();
  const ResolvedPoint pt = resolve_point(cfg, sweep_value);
  const ScenarioSpec& sc = pt.scenario;
  const int num_drones = static_cast<int>(sc.drones.size());
  const int subframes = sc.config.subframes;
  const int data_per_subframe = sc.config.symbols;
  if (cfg.benchmarks.mld && num_drones != 1)
    throw std::invalid_argument("the MLD benchmark needs a single-drone scenario");

  const std::vector<int> decode_slots = decode_slots_of(pt);
  const std::vector<int> est_slots = estimate_slots_of(pt, decode_slots);

  // CRLB sigmas per estimate slot, drawn from in injected-error mode.
  std::vector<std::vector<double>> injected_sigma;
  if (cfg.error_source == ErrorModelSource::kInjected) {
    const ParameterVector truth = parameters_of(sc.drones);
    const std::vector<double> powers = power_list(sc);
    injected_sigma.reserve(est_slots.size());
    for (const int l : est_slots) {
      const Eigen::VectorXd bound = crlb_bounds(fisher_information(
          truth, powers, sc.geometry, sc.config, l, sc.config.noise_variance));
      std::vector<double> s(static_cast<size_t>(bound.size()));
      for (Eigen::Index i = 0; i < bound.size(); ++i) s[static_cast<size_t>(i)] = std::sqrt(bound[i]);
      injected_sigma.push_back(std::move(s));
    }
  }

  std::vector<TrialOutcome> outcomes(static_cast<size_t>(cfg.trials));
  parallel_for(cfg.trials, threads, [&](int i) {
    const std::uint64_t trial_seed = split_seed(point_seed, static_cast<std::uint64_t>(i));
    try {
      outcomes[static_cast<size_t>(i)] =
          run_trial(pt, cfg.benchmarks, est_slots, decode_slots, injected_sigma, trial_seed);
    } catch (const std::exception&) {
      // counted as a trial failure in the ordered reduction below
    }
  });

  ResultRow row;
  row.sweep_value = sweep_value;
  row.config_hash = config_hash(cfg);

  if (detail) {
    detail->trial_ok.assign(static_cast<size_t>(cfg.trials), false);
    detail->trial_errors.assign(static_cast<size_t>(cfg.trials), 0);
    if (cfg.benchmarks.mld) detail->trial_mld_errors.assign(static_cast<size_t>(cfg.trials), 0);
    detail->symbols_per_trial = static_cast<std::int64_t>(decode_slots.size()) * num_drones *
                                data_per_subframe;
    detail->errors_full.assign(static_cast<size_t>(cfg.trials) * static_cast<size_t>(num_drones),
                               {std::numeric_limits<double>::quiet_NaN(),
                                std::numeric_limits<double>::quiet_NaN(),
                                std::numeric_limits<double>::quiet_NaN()});
  }

  int completed = 0;
  std::vector<double> sq_sum(est_slots.size() * static_cast<size_t>(num_drones) * 3, 0.0);
  std::int64_t mrc_total = 0, mmse_total = 0, mld_total = 0;
  for (size_t i = 0; i < outcomes.size(); ++i) {
    const TrialOutcome& o = outcomes[i];
    if (!o.ok) {
      ++row.trial_failures;
      continue;
    }
    ++completed;
    for (size_t j = 0; j < sq_sum.size(); ++j) sq_sum[j] += o.sq_err[j];
    std::int64_t trial_mrc = 0;
    for (const auto e : o.mrc_errors) trial_mrc += e;
    mrc_total += trial_mrc;
    for (const auto e : o.mmse_errors) mmse_total += e;
    std::int64_t trial_mld = 0;
    for (const auto e : o.mld_errors) trial_mld += e;
    mld_total += trial_mld;
    if (detail) {
      detail->trial_ok[i] = true;
      detail->trial_errors[i] = trial_mrc;
      if (cfg.benchmarks.mld) detail->trial_mld_errors[i] = trial_mld;
      for (int k = 0; k < num_drones; ++k)
        for (int p = 0; p < 3; ++p)
          detail->errors_full[i * static_cast<size_t>(num_drones) + static_cast<size_t>(k)]
                             [static_cast<size_t>(p)] =
              o.err_full[static_cast<size_t>(k) * 3 + static_cast<size_t>(p)];
    }
  }
  if (completed == 0) throw std::runtime_error("every trial failed at this sweep point");

  const size_t full_slot = est_slots.size() - 1;
  row.rmse.resize(static_cast<size_t>(num_drones));
  for (int k = 0; k < num_drones; ++k)
    for (int p = 0; p < 3; ++p)
      row.rmse[static_cast<size_t>(k)][static_cast<size_t>(p)] = std::sqrt(
          sq_sum[(full_slot * static_cast<size_t>(num_drones) + static_cast<size_t>(k)) * 3 +
                 static_cast<size_t>(p)] /
          completed);

  const ParameterVector truth = parameters_of(sc.drones);
  const std::vector<double> powers = power_list(sc);
  const Eigen::VectorXd bounds = crlb_bounds(fisher_information(
      truth, powers, sc.geometry, sc.config, subframes, sc.config.noise_variance));
  row.sqrt_crlb.resize(static_cast<size_t>(num_drones));
  for (int k = 0; k < num_drones; ++k) {
    const auto ks = static_cast<size_t>(k);
    row.sqrt_crlb[ks] = {std::sqrt(bounds(k)), std::sqrt(bounds(num_drones + k)),
                         std::sqrt(bounds(2 * num_drones + k))};
  }

  if (!decode_slots.empty()) {
    const std::int64_t symbols = static_cast<std::int64_t>(completed) *
                                 static_cast<std::int64_t>(decode_slots.size()) * num_drones *
                                 data_per_subframe;
    row.symbols_decoded = symbols;
    row.ser_mc = static_cast<double>(mrc_total) / static_cast<double>(symbols);
    row.ser_mc_se = std::sqrt(row.ser_mc * (1.0 - row.ser_mc) / static_cast<double>(symbols));
    if (cfg.benchmarks.mmse)
      row.ser_mmse = static_cast<double>(mmse_total) / static_cast<double>(symbols);
    if (cfg.benchmarks.mld)
      row.ser_mld = static_cast<double>(mld_total) /
                    static_cast<double>(static_cast<std::int64_t>(completed) *
                                        static_cast<std::int64_t>(decode_slots.size()) *
                                        data_per_subframe);
  }

  // Closed-form column: each decoded subframe l is priced exactly by scaling
  // the inter-drone Doppler offsets and the Doppler error sigma by l (the
  // mismatch enters the combining statistic only through phases linear in
  // l), then averaging over decoded subframes and target drones. Empirical
  // sigmas need measured running estimates, so they require decoded data.
  const bool empirical = cfg.error_source == ErrorModelSource::kEmpirical;
  std::vector<int> virtual_slots = decode_slots;
  if (virtual_slots.empty() && !empirical && pt.decode_subframe == 0)
    for (int l = 1; l <= subframes; ++l) virtual_slots.push_back(l);
  if (!virtual_slots.empty()) {
    const bool with_oracle = cfg.sweep.axis == SweepAxis::kTaylor;
    double analytic_sum = 0.0, oracle_sum = 0.0;
    for (size_t vi = 0; vi < virtual_slots.size(); ++vi) {
      const int l = virtual_slots[vi];
      // The sigmas describe the estimate that decodes subframe l: the running
      // estimate from l pilots, or the full-budget one in final mode.
      const size_t si = pt.decode_estimate == DecodeEstimate::kRunning ? vi : full_slot;
      const int sigma_pilots = pt.decode_estimate == DecodeEstimate::kRunning ? l : subframes;
      std::vector<std::array<double, 2>> sigma(static_cast<size_t>(num_drones));
      if (empirical) {
        for (int k = 0; k < num_drones; ++k)
          for (int p = 0; p < 3; p += 2)
            sigma[static_cast<size_t>(k)][static_cast<size_t>(p / 2)] = std::sqrt(
                sq_sum[(si * static_cast<size_t>(num_drones) + static_cast<size_t>(k)) * 3 +
                       static_cast<size_t>(p)] /
                completed);
      } else {
        const Eigen::VectorXd bl = crlb_bounds(fisher_information(
            truth, powers, sc.geometry, sc.config, sigma_pilots, sc.config.noise_variance));
        for (int k = 0; k < num_drones; ++k)
          sigma[static_cast<size_t>(k)] = {std::sqrt(bl(k)),
                                           std::sqrt(bl(2 * num_drones + k))};
      }
      ScenarioSpec sub = sc;
      for (auto& d : sub.drones)
        d.doppler_hz = std::remainder(d.doppler_hz * l, sc.config.sampling_hz);
      for (int k = 0; k < num_drones; ++k) {
        sub.target = k;
        ErrorModel em;
        em.sigma_theta = sigma[static_cast<size_t>(k)][0];
        em.sigma_fd = l * sigma[static_cast<size_t>(k)][1];
        analytic_sum += average_ser_mpsk(sub, em, pt.taylor);
        if (with_oracle) oracle_sum += average_ser_numeric_oracle(sub, em, QuadratureSpec{});
      }
    }
    const double cells = static_cast<double>(virtual_slots.size()) * num_drones;
    row.ser_analytic = analytic_sum / cells;
    if (with_oracle) {
      row.ser_oracle = oracle_sum / cells;
      row.ser_taylor_err = std::abs(row.ser_analytic - row.ser_oracle);
    }
  }

  row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return row;
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, int threads) {
  validate(cfg);
  std::vector<ResultRow> rows;
  rows.reserve(cfg.sweep.values.size());
  for (size_t i = 0; i < cfg.sweep.values.size(); ++i)
    rows.push_back(run_point(cfg, cfg.sweep.values[i], split_seed(cfg.seed, i), threads));
  return rows;
}

namespace {

struct DroneTrack {
  double x, y, vx, vy, tx_power;
};

DroneTrack initial_track(const DroneState& d, double wavelength_m) {
  const double x = d.range_m * std::sin(d.doa_rad);
  const double y = d.range_m * std::cos(d.doa_rad);
  // Radial speed is pinned by the configured Doppler; what remains of the
  // configured speed goes to the counterclockwise tangential direction.
  const double vr = -d.doppler_hz * wavelength_m;
  const double leftover = d.velocity_mps * d.velocity_mps - vr * vr;
  if (leftover < 0.0)
    throw std::invalid_argument("drone speed is smaller than its Doppler's radial speed");
  const double vt = std::sqrt(leftover);
  const double rx = x / d.range_m;
  const double ry = y / d.range_m;
  return {x, y, vr * rx - vt * ry, vr * ry + vt * rx, d.tx_power};
}

DroneState state_of_track(const DroneTrack& t, double wavelength_m) {
  DroneState d;
  d.range_m = std::hypot(t.x, t.y);
  d.doa_rad = std::atan2(t.x, t.y);
  d.doppler_hz = -(t.x * t.vx + t.y * t.vy) / (d.range_m * wavelength_m);
  d.tx_power = t.tx_power;
  d.velocity_mps = std::hypot(t.vx, t.vy);
  return d;
}

void check_inside_search(const DroneState& d, const SearchSpec& spec, int frame, int drone) {
  const bool ok = d.doa_rad >= spec.theta_bounds[0] && d.doa_rad <= spec.theta_bounds[1] &&
                  d.range_m >= spec.range_bounds[0] && d.range_m <= spec.range_bounds[1] &&
                  d.doppler_hz >= spec.doppler_bounds[0] && d.doppler_hz <= spec.doppler_bounds[1];
  if (!ok)
    throw std::runtime_error("drone " + std::to_string(drone + 1) + " left the search box at frame " +
                             std::to_string(frame));
}

}  // namespace

std::vector<TrajectoryRow> run_trajectory(const ExperimentConfig& cfg, int threads) {
  validate(cfg);
  ScenarioSpec sc = cfg.scenario;
  if (!std::isnan(cfg.snr_db)) apply_snr(sc, cfg.snr_db);
  const ArrayGeometry& g = sc.geometry;
  const FrameConfig& c = sc.config;
  const int num_drones = static_cast<int>(sc.drones.size());
  const int frames = c.frames;
  SearchSpec search = cfg.search;
  search.num_drones = num_drones;
  search.tx_powers = power_list(sc);
  validate(sc);
  validate(search);

  const double frame_seconds = static_cast<double>(c.subframes) * (c.symbols + 1) / c.sampling_hz;
  std::vector<DroneTrack> start;
  start.reserve(static_cast<size_t>(num_drones));
  for (const auto& d : sc.drones) start.push_back(initial_track(d, g.wavelength_m));

  std::vector<std::vector<TrajectoryRow>> per_trial(static_cast<size_t>(cfg.trials));
  parallel_for(cfg.trials, threads, [&](int trial) {
    RngStream rng(split_seed(cfg.seed, static_cast<std::uint64_t>(trial)));
    std::vector<DroneTrack> tracks = start;
    std::vector<TrajectoryRow>& rows = per_trial[static_cast<size_t>(trial)];
    rows.reserve(static_cast<size_t>(frames) * static_cast<size_t>(num_drones));
    const std::vector<int> pilot_symbols;
    for (int frame = 1; frame <= frames; ++frame) {
      std::vector<DroneState> now;
      now.reserve(tracks.size());
      for (int k = 0; k < num_drones; ++k) {
        now.push_back(state_of_track(tracks[static_cast<size_t>(k)], g.wavelength_m));
        check_inside_search(now.back(), search, frame, k);
      }
      std::vector<SignalBlock> pilots;
      pilots.reserve(static_cast<size_t>(c.subframes));
      for (int l = 1; l <= c.subframes; ++l)
        pilots.push_back(synth_received(g, now, c, l, 0, pilot_symbols, rng));
      const LocationEstimate est = mle_estimate(stack_pilots(pilots), g, c, search);
      const ParameterVector truth = parameters_of(now);
      const std::vector<int> perm = matching_permutation(est.psi, truth, search);
      for (int k = 0; k < num_drones; ++k) {
        const auto e = static_cast<size_t>(perm[static_cast<size_t>(k)]);
        TrajectoryRow r;
        r.trial = trial;
        r.frame = frame;
        r.drone = k;
        r.true_theta_rad = truth.theta_rad[static_cast<size_t>(k)];
        r.true_range_m = truth.range_m[static_cast<size_t>(k)];
        r.true_doppler_hz = truth.doppler_hz[static_cast<size_t>(k)];
        r.est_theta_rad = est.psi.theta_rad[e];
        r.est_range_m = est.psi.range_m[e];
        r.est_doppler_hz = est.psi.doppler_hz[e];
        r.true_x_m = tracks[static_cast<size_t>(k)].x;
        r.true_y_m = tracks[static_cast<size_t>(k)].y;
        r.est_x_m = r.est_range_m * std::sin(r.est_theta_rad);
        r.est_y_m = r.est_range_m * std::cos(r.est_theta_rad);
        rows.push_back(r);
      }
      for (auto& t : tracks) {
        t.x += t.vx * frame_seconds;
        t.y += t.vy * frame_seconds;
      }
    }
  });

  std::vector<TrajectoryRow> all;
  all.reserve(static_cast<size_t>(cfg.trials) * static_cast<size_t>(frames) *
              static_cast<size_t>(num_drones));
  for (const auto& rows : per_trial) all.insert(all.end(), rows.begin(), rows.end());
  return all;
}

void write_sweep_csv(std::ostream& os, const ExperimentConfig& cfg,
                     const std::vector<ResultRow>& rows) {
  const int num_drones = static_cast<int>(cfg.scenario.drones.size());
  os << sweep_column(cfg.sweep.axis);
  for (int k = 1; k <= num_drones; ++k)
    os << ",rmse_theta_" << k << " (deg)"
       << ",rmse_range_" << k << " (m)"
       << ",rmse_doppler_" << k << " (Hz)";
  for (int k = 1; k <= num_drones; ++k)
    os << ",sqrt_crlb_theta_" << k << " (deg)"
       << ",sqrt_crlb_range_" << k << " (m)"
       << ",sqrt_crlb_doppler_" << k << " (Hz)";
  os << ",ser_mc (1),ser_mc_se (1),ser_analytic (1),ser_oracle (1),ser_taylor_err (1)"
     << ",ser_mmse (1),ser_mld (1),symbols_decoded (count),trial_failures (count)"
     << ",config_hash (fnv1a64)\n";
  for (const auto& r : rows) {
    os << fmt(r.sweep_value);
    for (const auto& triple : r.rmse)
      os << ',' << fmt(triple[0] * kRadToDeg) << ',' << fmt(triple[1]) << ',' << fmt(triple[2]);
    for (const auto& triple : r.sqrt_crlb)
      os << ',' << fmt(triple[0] * kRadToDeg) << ',' << fmt(triple[1]) << ',' << fmt(triple[2]);
    os << ',' << fmt(r.ser_mc) << ',' << fmt(r.ser_mc_se) << ',' << fmt(r.ser_analytic) << ','
       << fmt(r.ser_oracle) << ',' << fmt(r.ser_taylor_err) << ',' << fmt(r.ser_mmse) << ','
       << fmt(r.ser_mld) << ',' << r.symbols_decoded << ',' << r.trial_failures << ','
       << fmt_hash(r.config_hash) << '\n';
  }
}

void write_trajectory_csv(std::ostream& os, const ExperimentConfig& cfg,
                          const std::vector<TrajectoryRow>& rows) {
  const std::uint64_t hash = config_hash(cfg);
  os << "trial (count),frame (count),drone (count),true_theta (deg),est_theta (deg)"
     << ",true_range (m),est_range (m),true_doppler (Hz),est_doppler (Hz)"
     << ",true_x (m),true_y (m),est_x (m),est_y (m),config_hash (fnv1a64)\n";
  for (const auto& r : rows) {
    os << r.trial << ',' << r.frame << ',' << r.drone << ',' << fmt(r.true_theta_rad * kRadToDeg)
       << ',' << fmt(r.est_theta_rad * kRadToDeg) << ',' << fmt(r.true_range_m) << ','
       << fmt(r.est_range_m) << ',' << fmt(r.true_doppler_hz) << ',' << fmt(r.est_doppler_hz)
       << ',' << fmt(r.true_x_m) << ',' << fmt(r.true_y_m) << ',' << fmt(r.est_x_m) << ','
       << fmt(r.est_y_m) << ',' << fmt_hash(hash) << '\n';
  }
}

}  // namespace pilotloc
