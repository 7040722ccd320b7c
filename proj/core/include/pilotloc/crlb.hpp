#pragma once

#include "pilotloc/localizer.hpp"

namespace pilotloc {

// Jacobian of the stacked pilot mean with respect to the flattened parameter
// vector [theta_1..theta_K, d_1..d_K, fD_1..fD_K]; one column per parameter.
Eigen::MatrixXcd mean_jacobian(const ParameterVector& psi, const std::vector<double>& powers,
                               const ArrayGeometry& g, const FrameConfig& c, int pilots_l);

// Fisher information for a complex Gaussian observation with mean mu(psi) and
// covariance sigma^2 I: F_ij = (2/sigma^2) Re[(d mu/d psi_i)^H (d mu/d psi_j)].
Eigen::MatrixXd fisher_information(const ParameterVector& psi, const std::vector<double>& powers,
                                   const ArrayGeometry& g, const FrameConfig& c, int pilots_l,
                                   double noise_variance);

// Diagonal of the Fisher inverse, in flatten() order. Inversion uses a
// symmetric eigendecomposition; eigenvalues below max / condition_cap are
// floored there so near-singular geometries give large finite bounds.
Eigen::VectorXd crlb_bounds(const Eigen::MatrixXd& fisher, double condition_cap = 1e12);

}  // namespace pilotloc
