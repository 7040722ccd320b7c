#pragma once

#include <iosfwd>

#include "pilotloc/config.hpp"

namespace pilotloc {

// One sweep point's aggregated results. Estimation errors and Monte-Carlo
// SERs come from `trials` seeded runs; analytic values are closed-form.
// Missing quantities (a disabled benchmark, an SER at a point with no data
// symbols) are NaN.
struct ResultRow {
  double sweep_value = 0.0;
  // Per drone, in (theta, range, doppler) order: empirical RMSE and the
  // matching square root of the CRLB diagonal.
  std::vector<std::array<double, 3>> rmse;
  std::vector<std::array<double, 3>> sqrt_crlb;
  double ser_mc = std::numeric_limits<double>::quiet_NaN();
  double ser_mc_se = std::numeric_limits<double>::quiet_NaN();
  double ser_analytic = std::numeric_limits<double>::quiet_NaN();
  double ser_oracle = std::numeric_limits<double>::quiet_NaN();
  double ser_taylor_err = std::numeric_limits<double>::quiet_NaN();
  double ser_mmse = std::numeric_limits<double>::quiet_NaN();
  double ser_mld = std::numeric_limits<double>::quiet_NaN();
  std::int64_t symbols_decoded = 0;
  int trial_failures = 0;
  std::uint64_t config_hash = 0;
  double wall_time_s = 0.0;  // kept out of the CSV so equal seeds emit equal bytes
};

// The scenario with one sweep value applied: SNR resolved into powers and
// noise variance, axis overrides folded in.
struct ResolvedPoint {
  ScenarioSpec scenario;
  SearchSpec search;
  TaylorSpec taylor;
  int decode_subframe = 0;  // 0 = decode every subframe, else just this one
  DecodeEstimate decode_estimate = DecodeEstimate::kRunning;
  ErrorModelSource error_source = ErrorModelSource::kCrlb;
};

ResolvedPoint resolve_point(const ExperimentConfig& cfg, double sweep_value);

// Per-trial detail for variance diagnostics, aligned with trial index.
// Decoded symbols per trial are constant, so clustered standard errors and
// paired benchmark gaps can be formed from the error counts alone. Failed
// trials keep ok = false and NaN/zero entries.
struct PointDetail {
  std::vector<bool> trial_ok;
  std::vector<std::int64_t> trial_errors;      // MRC symbol errors, all streams
  std::vector<std::int64_t> trial_mld_errors;  // empty unless the MLD benchmark ran
  std::int64_t symbols_per_trial = 0;
  // Signed estimation errors at the full pilot budget, [trial][drone][param].
  std::vector<std::array<double, 3>> errors_full;
};

ResultRow run_point(const ExperimentConfig& cfg, double sweep_value, std::uint64_t point_seed,
                    int threads, PointDetail* detail = nullptr);

// Maps run_point over the sweep axis; point i uses split_seed(seed, i).
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, int threads);

// One drone's state at one trajectory frame, true and estimated.
struct TrajectoryRow {
  int trial = 0;
  int frame = 0;
  int drone = 0;
  double true_theta_rad = 0.0, est_theta_rad = 0.0;
  double true_range_m = 0.0, est_range_m = 0.0;
  double true_doppler_hz = 0.0, est_doppler_hz = 0.0;
  double true_x_m = 0.0, true_y_m = 0.0;
  double est_x_m = 0.0, est_y_m = 0.0;
};

// Constant-velocity 2-D kinematics: the BS sits at the origin, boresight
// along +y, theta = atan2(x, y). Each drone starts at its configured
// (theta, d) and moves with the speed that reproduces its configured Doppler
// (fD = -radial_velocity / lambda), the leftover speed going to the
// counterclockwise tangential direction. Localisation runs fresh per frame.
std::vector<TrajectoryRow> run_trajectory(const ExperimentConfig& cfg, int threads);

void write_sweep_csv(std::ostream& os, const ExperimentConfig& cfg,
                     const std::vector<ResultRow>& rows);
void write_trajectory_csv(std::ostream& os, const ExperimentConfig& cfg,
                          const std::vector<TrajectoryRow>& rows);

}  // namespace pilotloc
