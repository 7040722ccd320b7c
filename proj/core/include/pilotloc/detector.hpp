#pragma once

#include "pilotloc/localizer.hpp"

namespace pilotloc {

// Channel matrix rebuilt from a parameter estimate for one subframe:
// column k = eta(d_k) * a(theta_k) * exp(j 2 pi fD_k l / fs).
Eigen::MatrixXcd reconstruct_channel(const ParameterVector& psi, const ArrayGeometry& g,
                                     const FrameConfig& c, int subframe_l);

// Maximum-ratio combining, x = H^H y.
Eigen::VectorXcd mrc_combine(const Eigen::MatrixXcd& channel, const Eigen::VectorXcd& y);

// Nearest-constellation-phase decision for MPSK; ties resolve to the lower
// symbol index.
int mpsk_detect(std::complex<double> statistic, int modulation_order);
std::vector<int> mpsk_detect(const Eigen::VectorXcd& statistics, int modulation_order);

// MMSE equalization with perfect channel knowledge:
// s_hat = (G^H G + sigma^2 I)^{-1} G^H y with G = H diag(sqrt(P)).
Eigen::VectorXcd mmse_combine(const Eigen::MatrixXcd& channel, const std::vector<double>& powers,
                              double noise_variance, const Eigen::VectorXcd& y);

// Joint maximum-likelihood detection for a single drone: a grid-plus-golden
// search over (theta, fD) where the path gain and the data symbols are
// profiled out in closed form at every candidate.
struct MldResult {
  double theta_rad = 0.0;
  double range_m = 0.0;
  double doppler_hz = 0.0;
  std::vector<int> symbols;
  double objective = 0.0;
};

MldResult joint_mld_detect(const Eigen::VectorXcd& y1,
                           const std::vector<Eigen::VectorXcd>& data_slots, int subframe_l,
                           const ArrayGeometry& g, const FrameConfig& c, const SearchSpec& spec);

}  // namespace pilotloc
