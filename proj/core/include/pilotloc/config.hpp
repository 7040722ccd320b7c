#pragma once

#include <cstdint>
#include <string>

#include "pilotloc/localizer.hpp"
#include "pilotloc/ser_analytic.hpp"

namespace pilotloc {

enum class SweepAxis { kSnrDb, kPilots, kAntennas, kTaylor };

const char* axis_name(SweepAxis axis);
SweepAxis axis_of_name(const std::string& name);

struct SweepSpec {
  SweepAxis axis = SweepAxis::kSnrDb;
  std::vector<double> values;
};

struct BenchmarkToggles {
  bool mmse = false;
  bool mld = false;
};

// Which sigma feeds the analytic SER's error model. kInjected additionally
// replaces the estimator in every trial with a draw from that model: the
// decoder sees truth plus independent Gaussian errors at the CRLB sigmas, so
// the Monte-Carlo side instantiates exactly the model the analytic averages.
enum class ErrorModelSource { kCrlb, kEmpirical, kInjected };

// Which pilot estimate decodes subframe l: the running estimate from pilots
// 1..l, or the final full-budget estimate for every subframe.
enum class DecodeEstimate { kRunning, kFinal };

struct ExperimentConfig {
  ScenarioSpec scenario;  // powers as configured; SNR resolution may override
  SearchSpec search;      // drone count and powers are filled per point
  TaylorSpec taylor;
  SweepSpec sweep;
  int trials = 1000;
  std::uint64_t seed = 0;
  std::string out;
  // Fixed per-antenna received pilot SNR, used when the sweep axis is not
  // SNR. NaN keeps the configured drone powers and noise variance.
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  BenchmarkToggles benchmarks;
  ErrorModelSource error_source = ErrorModelSource::kCrlb;
  DecodeEstimate decode_estimate = DecodeEstimate::kRunning;
};

void validate(const ExperimentConfig& cfg);

// Parse the JSON config document (see configs/ for the shape).
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Canonical serialization of the resolved config; equal configs serialize
// identically, so the FNV-1a hash of this string tags CSV rows.
std::string canonical_dump(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

// SNR is defined as P eta^2 / sigma^2, the per-antenna received pilot SNR.
// Resolving a target SNR pins sigma^2 = 1 and back-computes every drone's
// transmit power from its own path loss.
void apply_snr(ScenarioSpec& scenario, double snr_db);

}  // namespace pilotloc
