#include "pilotloc/detector.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pilotloc {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

Eigen::MatrixXcd reconstruct_channel(const ParameterVector& psi, const ArrayGeometry& g,
                                     const FrameConfig& c, int subframe_l) {
  const int k_drones = psi.drones();
  Eigen::MatrixXcd channel(g.antennas, k_drones);
  for (int k = 0; k < k_drones; ++k) {
    DroneState d;
    d.doa_rad = psi.theta_rad[static_cast<size_t>(k)];
    d.range_m = psi.range_m[static_cast<size_t>(k)];
    d.doppler_hz = psi.doppler_hz[static_cast<size_t>(k)];
    d.tx_power = 1.0;
    channel.col(k) = channel_column(g, d, c, subframe_l);
  }
  return channel;
}

Eigen::VectorXcd mrc_combine(const Eigen::MatrixXcd& channel, const Eigen::VectorXcd& y) {
  if (channel.rows() != y.size()) throw std::invalid_argument("channel/observation size mismatch");
  return channel.adjoint() * y;
}

int mpsk_detect(std::complex<double> statistic, int modulation_order) {
  if (modulation_order < 2) throw std::invalid_argument("modulation order must be >= 2");
  int best = 0;
  double best_re = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < modulation_order; ++m) {
    const double phase = kTwoPi * m / modulation_order;
    const double re = std::cos(phase) * statistic.real() + std::sin(phase) * statistic.imag();
    if (re > best_re) {
      best_re = re;
      best = m;
    }
  }
  return best;
}

std::vector<int> mpsk_detect(const Eigen::VectorXcd& statistics, int modulation_order) {
  std::vector<int> out(static_cast<size_t>(statistics.size()));
  for (Eigen::Index i = 0; i < statistics.size(); ++i)
    out[static_cast<size_t>(i)] = mpsk_detect(statistics(i), modulation_order);
  return out;
}

Eigen::VectorXcd mmse_combine(const Eigen::MatrixXcd& channel, const std::vector<double>& powers,
                              double noise_variance, const Eigen::VectorXcd& y) {
  const Eigen::Index k = channel.cols();
  if (powers.size() != static_cast<size_t>(k))
    throw std::invalid_argument("one power per drone required");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be positive");
  if (channel.rows() != y.size()) throw std::invalid_argument("channel/observation size mismatch");
  Eigen::MatrixXcd gmat = channel;
  for (Eigen::Index j = 0; j < k; ++j) gmat.col(j) *= std::sqrt(powers[static_cast<size_t>(j)]);
  Eigen::MatrixXcd reg = gmat.adjoint() * gmat;
  reg.diagonal().array() += noise_variance;
  return reg.ldlt().solve(gmat.adjoint() * y);
}

namespace {

// Profile likelihood of one (theta, fD) candidate: gain and all data symbols
// maximized out. Larger `correlation` means a smaller residual norm.
struct MldEval {
  double correlation = 0.0;  // Re(pilot corr) + sum of per-slot symbol maxima
  std::vector<int> symbols;
};

MldEval evaluate_mld_node(const std::vector<std::complex<double>>& pilot_filters,
                          const std::vector<std::complex<double>>& data_filters, double doppler,
                          int subframe_l, double sampling_hz,
                          const std::vector<double>& cos_tab,
                          const std::vector<double>& sin_tab) {
  MldEval ev;
  const double step = -kTwoPi * doppler / sampling_hz;
  const std::complex<double> rot(std::cos(step), std::sin(step));
  std::complex<double> ph = rot;
  double re = 0.0;
  for (const auto& cf : pilot_filters) {
    re += (cf * ph).real();
    ph *= rot;
  }
  const double dstep = -kTwoPi * doppler * subframe_l / sampling_hz;
  const std::complex<double> drot(std::cos(dstep), std::sin(dstep));
  ev.symbols.reserve(data_filters.size());
  const int m_order = static_cast<int>(cos_tab.size());
  for (const auto& bf : data_filters) {
    const std::complex<double> r = bf * drot;
    int best = 0;
    double best_re = -std::numeric_limits<double>::infinity();
    for (int m = 0; m < m_order; ++m) {
      const double v = cos_tab[static_cast<size_t>(m)] * r.real() +
                       sin_tab[static_cast<size_t>(m)] * r.imag();
      if (v > best_re) {
        best_re = v;
        best = m;
      }
    }
    re += best_re;
    ev.symbols.push_back(best);
  }
  ev.correlation = re;
  return ev;
}

}  // namespace

MldResult joint_mld_detect(const Eigen::VectorXcd& y1,
                           const std::vector<Eigen::VectorXcd>& data_slots, int subframe_l,
                           const ArrayGeometry& g, const FrameConfig& c, const SearchSpec& spec) {
  validate(spec);
  if (spec.num_drones != 1)
    throw std::invalid_argument("joint detection is implemented for a single drone");
  if (y1.size() % g.antennas != 0) throw std::invalid_argument("y1 length not a pilot multiple");
  if (subframe_l < 1 || subframe_l > c.subframes) throw std::invalid_argument("subframe out of range");
  const int pilots_l = static_cast<int>(y1.size() / g.antennas);
  const int n = g.antennas;
  const int t_slots = static_cast<int>(data_slots.size());
  const double power = spec.tx_powers[0];

  // Decisions rotate by the symbol phases e^{-j 2 pi m / M}.
  std::vector<double> cos_tab(static_cast<size_t>(c.modulation_order));
  std::vector<double> sin_tab(static_cast<size_t>(c.modulation_order));
  for (int m = 0; m < c.modulation_order; ++m) {
    const double phase = kTwoPi * m / c.modulation_order;
    cos_tab[static_cast<size_t>(m)] = std::cos(phase);
    sin_tab[static_cast<size_t>(m)] = std::sin(phase);
  }

  const double fd_step =
      spec.doppler_step_hz > 0.0 ? spec.doppler_step_hz
                                 : c.sampling_hz / (20.0 * std::numbers::pi * pilots_l);
  std::vector<double> thetas;
  for (double th = spec.theta_bounds[0]; th <= spec.theta_bounds[1] + 1e-12;
       th += spec.theta_step_rad)
    thetas.push_back(std::min(th, spec.theta_bounds[1]));
  std::vector<double> dopplers;
  for (double fd = spec.doppler_bounds[0]; fd <= spec.doppler_bounds[1] + 1e-9; fd += fd_step)
    dopplers.push_back(std::min(fd, spec.doppler_bounds[1]));

  std::vector<std::complex<double>> pilot_filters(static_cast<size_t>(pilots_l));
  std::vector<std::complex<double>> data_filters(static_cast<size_t>(t_slots));
  double best_corr = -std::numeric_limits<double>::infinity();
  double best_theta = thetas.front();
  double best_fd = dopplers.front();

  for (const double theta : thetas) {
    const Eigen::VectorXcd a = steering_vector(g, theta);
    for (int i = 0; i < pilots_l; ++i)
      pilot_filters[static_cast<size_t>(i)] =
          a.dot(y1.segment(static_cast<Eigen::Index>(i) * n, n));
    for (int t = 0; t < t_slots; ++t) {
      if (data_slots[static_cast<size_t>(t)].size() != n)
        throw std::invalid_argument("data slot antenna count mismatch");
      data_filters[static_cast<size_t>(t)] = a.dot(data_slots[static_cast<size_t>(t)]);
    }
    for (const double fd : dopplers) {
      const MldEval ev = evaluate_mld_node(pilot_filters, data_filters, fd, subframe_l,
                                           c.sampling_hz, cos_tab, sin_tab);
      if (ev.correlation > best_corr) {
        best_corr = ev.correlation;
        best_theta = theta;
        best_fd = fd;
      }
    }
  }

  // Golden-section polish on the profiled correlation, one axis at a time.
  const auto corr_at = [&](double theta, double fd) {
    const Eigen::VectorXcd a = steering_vector(g, theta);
    for (int i = 0; i < pilots_l; ++i)
      pilot_filters[static_cast<size_t>(i)] =
          a.dot(y1.segment(static_cast<Eigen::Index>(i) * n, n));
    for (int t = 0; t < t_slots; ++t)
      data_filters[static_cast<size_t>(t)] = a.dot(data_slots[static_cast<size_t>(t)]);
    return evaluate_mld_node(pilot_filters, data_filters, fd, subframe_l, c.sampling_hz, cos_tab,
                             sin_tab)
        .correlation;
  };
  constexpr double kInvPhi = 0.6180339887498949;
  const double theta_w = 2.0 * spec.theta_step_rad;
  const double fd_w = 2.0 * fd_step;
  for (int cycle = 0; cycle < spec.max_refine_cycles; ++cycle) {
    const double start = best_corr;
    for (int axis = 0; axis < 2; ++axis) {
      double a_lo = axis == 0 ? std::max(spec.theta_bounds[0], best_theta - theta_w)
                              : std::max(spec.doppler_bounds[0], best_fd - fd_w);
      double a_hi = axis == 0 ? std::min(spec.theta_bounds[1], best_theta + theta_w)
                              : std::min(spec.doppler_bounds[1], best_fd + fd_w);
      const auto f = [&](double x) {
        return axis == 0 ? -corr_at(x, best_fd) : -corr_at(best_theta, x);
      };
      double x1 = a_hi - kInvPhi * (a_hi - a_lo);
      double x2 = a_lo + kInvPhi * (a_hi - a_lo);
      double f1 = f(x1), f2 = f(x2);
      double bx = f1 <= f2 ? x1 : x2;
      double bf = std::min(f1, f2);
      for (int it = 0; it < 100 && (a_hi - a_lo) > 1e-12 * (1.0 + std::abs(bx)); ++it) {
        if (f1 <= f2) {
          a_hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = a_hi - kInvPhi * (a_hi - a_lo);
          f1 = f(x1);
        } else {
          a_lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = a_lo + kInvPhi * (a_hi - a_lo);
          f2 = f(x2);
        }
        if (f1 < bf) {
          bf = f1;
          bx = x1;
        }
        if (f2 < bf) {
          bf = f2;
          bx = x2;
        }
      }
      if (-bf > best_corr) {
        best_corr = -bf;
        (axis == 0 ? best_theta : best_fd) = bx;
      }
    }
    if (best_corr - start < spec.refine_rel_tol * std::max(std::abs(start), 1e-300)) break;
  }

  const Eigen::VectorXcd a_best = steering_vector(g, best_theta);
  for (int i = 0; i < pilots_l; ++i)
    pilot_filters[static_cast<size_t>(i)] =
        a_best.dot(y1.segment(static_cast<Eigen::Index>(i) * n, n));
  for (int t = 0; t < t_slots; ++t)
    data_filters[static_cast<size_t>(t)] = a_best.dot(data_slots[static_cast<size_t>(t)]);
  const MldEval final_ev = evaluate_mld_node(pilot_filters, data_filters, best_fd, subframe_l,
                                             c.sampling_hz, cos_tab, sin_tab);

  const double denom = static_cast<double>(n) * (pilots_l + t_slots);
  double gain = std::max(final_ev.correlation, 0.0) / denom;
  const double g_lo = std::sqrt(power) * path_loss(g.wavelength_m, spec.range_bounds[1]);
  const double g_hi = std::sqrt(power) * path_loss(g.wavelength_m, spec.range_bounds[0]);
  gain = std::clamp(gain, g_lo, g_hi);

  MldResult res;
  res.theta_rad = best_theta;
  res.doppler_hz = best_fd;
  res.range_m = std::sqrt(power) * g.wavelength_m / (4.0 * std::numbers::pi * gain);
  res.symbols = final_ev.symbols;
  double energy = y1.squaredNorm();
  for (const auto& slot : data_slots) energy += slot.squaredNorm();
  // Residual norm at the clamped gain.
  res.objective = energy - 2.0 * gain * final_ev.correlation + gain * gain * denom;
  return res;
}

}  // namespace pilotloc
