#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <vector>

#include "pilotloc/signal_model.hpp"

namespace pilotloc {

// Location parameters for K drones. Flattened order throughout the library:
// all DOAs, then all ranges, then all Dopplers.
struct ParameterVector {
  std::vector<double> theta_rad;
  std::vector<double> range_m;
  std::vector<double> doppler_hz;

  int drones() const { return static_cast<int>(theta_rad.size()); }
  int dim() const { return 3 * drones(); }
  std::vector<double> flatten() const;
};

ParameterVector parameters_of(const std::vector<DroneState>& drones);

// Maximum-likelihood search controls. The coarse stage scans a (theta, fD)
// grid per drone with the range solved in closed form at each node; the
// refinement stage cycles golden-section line searches over all parameters.
struct SearchSpec {
  int num_drones = 1;
  std::vector<double> tx_powers;  // model powers, one per drone slot
  std::array<double, 2> theta_bounds{-1.48, 1.48};
  std::array<double, 2> range_bounds{1.0, 1000.0};
  std::array<double, 2> doppler_bounds{-6000.0, 6000.0};
  double theta_step_rad = 0.00872664625997164788;  // 0.5 degrees
  double doppler_step_hz = 0.0;                    // 0 -> fs / (20 pi l)
  int range_grid_points = 64;                      // log-spaced fallback grid
  double refine_rel_tol = 1e-10;
  int max_refine_cycles = 100;
};

void validate(const SearchSpec& s);

struct LocationEstimate {
  ParameterVector psi;
  double objective = 0.0;  // ||y1 - mu(psi)||^2 at the returned point
  int refine_cycles = 0;
};

// Stacked noiseless pilot response mu(psi) for pilots 1..l.
Eigen::VectorXcd mean_vector(const ParameterVector& psi, const std::vector<double>& powers,
                             const ArrayGeometry& g, const FrameConfig& c, int pilots_l);

// ||y1 - mu(psi)||^2; the pilot count is inferred from y1's length.
double neg_log_likelihood(const Eigen::VectorXcd& y1, const ParameterVector& psi,
                          const std::vector<double>& powers, const ArrayGeometry& g,
                          const FrameConfig& c);

// Joint ML estimate from stacked pilots. When `warm` is given the coarse
// grid is skipped and refinement starts from it; used only as a speed hint,
// never to change what the estimator converges to on clean data.
LocationEstimate mle_estimate(const Eigen::VectorXcd& y1, const ArrayGeometry& g,
                              const FrameConfig& c, const SearchSpec& spec,
                              const ParameterVector* warm = nullptr);

// Best assignment of estimate drone slots to true drones: entry k is the
// estimate index paired with true drone k (total squared error normalized by
// the search box widths; exhaustive over permutations).
std::vector<int> matching_permutation(const ParameterVector& estimate, const ParameterVector& truth,
                                      const SearchSpec& spec);

// Reorder estimate drone slots to best match the truth.
ParameterVector match_to_truth(const ParameterVector& estimate, const ParameterVector& truth,
                               const SearchSpec& spec);

// Per-parameter error mean and RMSE across trials, flattened ordering.
struct ErrorStats {
  std::vector<double> mean_error;
  std::vector<double> rmse;
};

ErrorStats error_statistics(const std::vector<ParameterVector>& estimates,
                            const ParameterVector& truth);

}  // namespace pilotloc
