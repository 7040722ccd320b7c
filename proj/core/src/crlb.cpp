#include "pilotloc/crlb.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pilotloc {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

Eigen::MatrixXcd mean_jacobian(const ParameterVector& psi, const std::vector<double>& powers,
                               const ArrayGeometry& g, const FrameConfig& c, int pilots_l) {
  const int k_drones = psi.drones();
  if (powers.size() != static_cast<size_t>(k_drones))
    throw std::invalid_argument("one power per drone required");
  if (pilots_l < 1) throw std::invalid_argument("pilot count must be >= 1");
  const Eigen::Index rows = static_cast<Eigen::Index>(pilots_l) * g.antennas;
  Eigen::MatrixXcd jac = Eigen::MatrixXcd::Zero(rows, 3 * k_drones);
  const std::complex<double> j_unit(0.0, 1.0);

  for (int k = 0; k < k_drones; ++k) {
    const double theta = psi.theta_rad[static_cast<size_t>(k)];
    const double range = psi.range_m[static_cast<size_t>(k)];
    const double doppler = psi.doppler_hz[static_cast<size_t>(k)];
    const double gain = std::sqrt(powers[static_cast<size_t>(k)]) * path_loss(g.wavelength_m, range);
    const Eigen::VectorXcd a = steering_vector(g, theta);
    // d a_n / d theta = -j 2 pi n (spacing/lambda) cos(theta) a_n, n 0-based.
    const double dphase = -kTwoPi * g.spacing_m * std::cos(theta) / g.wavelength_m;

    for (int i = 1; i <= pilots_l; ++i) {
      const double ang = kTwoPi * doppler * i / c.sampling_hz;
      const std::complex<double> ph = gain * std::complex<double>(std::cos(ang), std::sin(ang));
      const Eigen::Index base = static_cast<Eigen::Index>(i - 1) * g.antennas;
      for (int n = 0; n < g.antennas; ++n) {
        const std::complex<double> mu = ph * a(n);
        jac(base + n, k) = mu * (j_unit * (dphase * n));
        jac(base + n, k_drones + k) = -mu / range;
        jac(base + n, 2 * k_drones + k) = mu * (j_unit * (kTwoPi * i / c.sampling_hz));
      }
    }
  }
  return jac;
}

Eigen::MatrixXd fisher_information(const ParameterVector& psi, const std::vector<double>& powers,
                                   const ArrayGeometry& g, const FrameConfig& c, int pilots_l,
                                   double noise_variance) {
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be positive");
  const Eigen::MatrixXcd jac = mean_jacobian(psi, powers, g, c, pilots_l);
  return (2.0 / noise_variance) * (jac.adjoint() * jac).real();
}

Eigen::VectorXd crlb_bounds(const Eigen::MatrixXd& fisher, double condition_cap) {
  if (fisher.rows() != fisher.cols()) throw std::invalid_argument("fisher must be square");
  if (!(condition_cap >= 1.0)) throw std::invalid_argument("condition cap must be >= 1");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fisher);
  if (eig.info() != Eigen::Success) throw std::runtime_error("fisher eigendecomposition failed");
  const Eigen::VectorXd& vals = eig.eigenvalues();
  const double max_eig = vals.maxCoeff();
  if (!(max_eig > 0.0)) throw std::runtime_error("fisher matrix is not positive definite");
  const double floor = max_eig / condition_cap;
  const Eigen::MatrixXd& vecs = eig.eigenvectors();
  Eigen::VectorXd bounds = Eigen::VectorXd::Zero(fisher.rows());
  for (Eigen::Index j = 0; j < vals.size(); ++j) {
    const double lam = std::max(vals(j), floor);
    bounds += vecs.col(j).cwiseAbs2() / lam;
  }
  return bounds;
}

}  // namespace pilotloc
