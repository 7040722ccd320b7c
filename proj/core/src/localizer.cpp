#include "pilotloc/localizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace pilotloc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double gain_of_range(double range_m, double power, const ArrayGeometry& g) {
  return std::sqrt(power) * path_loss(g.wavelength_m, range_m);
}

double range_of_gain(double gain, double power, const ArrayGeometry& g) {
  return std::sqrt(power) * g.wavelength_m / (4.0 * std::numbers::pi * gain);
}

// Unit-modulus stacked template for one drone: entries a_n(theta) *
// exp(j 2 pi fD i / fs) for pilots i = 1..l, antenna-major per pilot.
void fill_template(Eigen::VectorXcd& u, const ArrayGeometry& g, const FrameConfig& c,
                   double theta, double doppler, int pilots_l) {
  const Eigen::VectorXcd a = steering_vector(g, theta);
  const double step = kTwoPi * doppler / c.sampling_hz;
  const std::complex<double> rot(std::cos(step), std::sin(step));
  std::complex<double> ph = rot;  // pilot i = 1
  for (int i = 0; i < pilots_l; ++i) {
    u.segment(static_cast<Eigen::Index>(i) * g.antennas, g.antennas) = a * ph;
    ph *= rot;
  }
}

struct CoarsePick {
  double theta = 0.0;
  double doppler = 0.0;
  double gain = 0.0;  // sqrt(P) * eta along the template
};

// Scan the (theta, fD) grid against the residual; the template correlation's
// positive real part gives the closed-form gain. Ties keep the smallest flat
// index (theta-major, then fD).
CoarsePick coarse_scan(const Eigen::VectorXcd& residual, const ArrayGeometry& g,
                       const FrameConfig& c, const SearchSpec& spec, int pilots_l) {
  const int n = g.antennas;
  const double fd_step =
      spec.doppler_step_hz > 0.0
          ? spec.doppler_step_hz
          : c.sampling_hz / (20.0 * std::numbers::pi * pilots_l);

  std::vector<double> thetas;
  for (double th = spec.theta_bounds[0]; th <= spec.theta_bounds[1] + 1e-12;
       th += spec.theta_step_rad)
    thetas.push_back(std::min(th, spec.theta_bounds[1]));
  std::vector<double> dopplers;
  for (double fd = spec.doppler_bounds[0]; fd <= spec.doppler_bounds[1] + 1e-9; fd += fd_step)
    dopplers.push_back(std::min(fd, spec.doppler_bounds[1]));

  CoarsePick best;
  double best_re = -std::numeric_limits<double>::infinity();
  std::vector<std::complex<double>> ci(static_cast<size_t>(pilots_l));
  for (const double theta : thetas) {
    // Per-pilot matched filter a(theta)^H r_i, reused across the fD scan.
    const Eigen::VectorXcd a = steering_vector(g, theta);
    for (int i = 0; i < pilots_l; ++i)
      ci[static_cast<size_t>(i)] =
          a.dot(residual.segment(static_cast<Eigen::Index>(i) * n, n));
    for (const double fd : dopplers) {
      const double step = -kTwoPi * fd / c.sampling_hz;
      const std::complex<double> rot(std::cos(step), std::sin(step));
      std::complex<double> ph = rot;
      double re = 0.0;
      for (int i = 0; i < pilots_l; ++i) {
        const auto v = ci[static_cast<size_t>(i)] * ph;
        re += v.real();
        ph *= rot;
      }
      if (re > best_re) {
        best_re = re;
        best.theta = theta;
        best.doppler = fd;
      }
    }
  }
  best.gain = std::max(best_re, 0.0) / (static_cast<double>(n) * pilots_l);
  return best;
}

struct Objective {
  const Eigen::VectorXcd& y1;
  const ArrayGeometry& g;
  const FrameConfig& c;
  const std::vector<double>& powers;
  int pilots_l;

  // Residual with drone k's contribution removed; refreshed by the caller
  // whenever another drone's parameters move.
  Eigen::VectorXcd residual_without(const ParameterVector& psi, int k) const {
    Eigen::VectorXcd r = y1;
    Eigen::VectorXcd u(y1.size());
    for (int j = 0; j < psi.drones(); ++j) {
      if (j == k) continue;
      fill_template(u, g, c, psi.theta_rad[static_cast<size_t>(j)],
                    psi.doppler_hz[static_cast<size_t>(j)], pilots_l);
      r -= gain_of_range(psi.range_m[static_cast<size_t>(j)],
                         powers[static_cast<size_t>(j)], g) *
           u;
    }
    return r;
  }

  double drone_term(const Eigen::VectorXcd& residual, double theta, double range,
                    double doppler, double power) const {
    Eigen::VectorXcd u(residual.size());
    fill_template(u, g, c, theta, doppler, pilots_l);
    return (residual - gain_of_range(range, power, g) * u).squaredNorm();
  }
};

// Golden-section minimization returning the best evaluated point. The best
// point only replaces `x0` when it strictly improves on `f0`, so an exact
// minimum at the start never drifts.
template <class F>
void golden_refine(double lo, double hi, double& x0, double& f0, F&& f) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  double bx = f1 <= f2 ? x1 : x2;
  double bf = std::min(f1, f2);
  for (int it = 0; it < 100 && (b - a) > 1e-12 * (1.0 + std::abs(bx)); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
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
  if (bf < f0) {
    f0 = bf;
    x0 = bx;
  }
}

}  // namespace

std::vector<double> ParameterVector::flatten() const {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(dim()));
  out.insert(out.end(), theta_rad.begin(), theta_rad.end());
  out.insert(out.end(), range_m.begin(), range_m.end());
  out.insert(out.end(), doppler_hz.begin(), doppler_hz.end());
  return out;
}

ParameterVector parameters_of(const std::vector<DroneState>& drones) {
  ParameterVector psi;
  for (const auto& d : drones) {
    psi.theta_rad.push_back(d.doa_rad);
    psi.range_m.push_back(d.range_m);
    psi.doppler_hz.push_back(d.doppler_hz);
  }
  return psi;
}

void validate(const SearchSpec& s) {
  if (s.num_drones < 1) throw std::invalid_argument("search needs at least one drone");
  if (s.tx_powers.size() != static_cast<size_t>(s.num_drones))
    throw std::invalid_argument("search needs one power per drone");
  for (double p : s.tx_powers)
    if (!(p > 0.0)) throw std::invalid_argument("model powers must be positive");
  if (!(s.theta_bounds[0] < s.theta_bounds[1]) ||
      !(s.range_bounds[0] < s.range_bounds[1]) ||
      !(s.doppler_bounds[0] < s.doppler_bounds[1]))
    throw std::invalid_argument("search bounds must be ordered");
  if (!(s.range_bounds[0] > 0.0)) throw std::invalid_argument("range bounds must be positive");
  if (!(s.theta_step_rad > 0.0)) throw std::invalid_argument("theta step must be positive");
  if (s.range_grid_points < 2) throw std::invalid_argument("range grid needs >= 2 points");
}

Eigen::VectorXcd mean_vector(const ParameterVector& psi, const std::vector<double>& powers,
                             const ArrayGeometry& g, const FrameConfig& c, int pilots_l) {
  if (powers.size() != static_cast<size_t>(psi.drones()))
    throw std::invalid_argument("one power per drone required");
  if (pilots_l < 1) throw std::invalid_argument("pilot count must be >= 1");
  Eigen::VectorXcd mu = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(pilots_l) * g.antennas);
  Eigen::VectorXcd u(mu.size());
  for (int k = 0; k < psi.drones(); ++k) {
    fill_template(u, g, c, psi.theta_rad[static_cast<size_t>(k)],
                  psi.doppler_hz[static_cast<size_t>(k)], pilots_l);
    mu += gain_of_range(psi.range_m[static_cast<size_t>(k)], powers[static_cast<size_t>(k)], g) * u;
  }
  return mu;
}

double neg_log_likelihood(const Eigen::VectorXcd& y1, const ParameterVector& psi,
                          const std::vector<double>& powers, const ArrayGeometry& g,
                          const FrameConfig& c) {
  if (y1.size() % g.antennas != 0) throw std::invalid_argument("y1 length not a pilot multiple");
  const int pilots_l = static_cast<int>(y1.size() / g.antennas);
  return (y1 - mean_vector(psi, powers, g, c, pilots_l)).squaredNorm();
}

namespace {

// Range behind a coarse pick: the closed-form gain when it lands inside the
// box, otherwise the best point of a log-spaced range grid.
double solve_range(const Eigen::VectorXcd& residual, const CoarsePick& pick, double power,
                   const ArrayGeometry& g, const FrameConfig& c, const SearchSpec& spec,
                   int pilots_l) {
  double range =
      pick.gain > 0.0 ? range_of_gain(pick.gain, power, g) : spec.range_bounds[1];
  if (range >= spec.range_bounds[0] && range <= spec.range_bounds[1]) return range;
  const double lo = spec.range_bounds[0], hi = spec.range_bounds[1];
  const int m = spec.range_grid_points;
  Eigen::VectorXcd u(residual.size());
  fill_template(u, g, c, pick.theta, pick.doppler, pilots_l);
  double best_f = std::numeric_limits<double>::infinity();
  double best_d = lo;
  for (int j = 0; j < m; ++j) {
    const double d = lo * std::pow(hi / lo, static_cast<double>(j) / (m - 1));
    const double f = (residual - gain_of_range(d, power, g) * u).squaredNorm();
    if (f < best_f) {
      best_f = f;
      best_d = d;
    }
  }
  return best_d;
}

}  // namespace

LocationEstimate mle_estimate(const Eigen::VectorXcd& y1, const ArrayGeometry& g,
                              const FrameConfig& c, const SearchSpec& spec,
                              const ParameterVector* warm) {
  validate(spec);
  if (y1.size() % g.antennas != 0) throw std::invalid_argument("y1 length not a pilot multiple");
  const int pilots_l = static_cast<int>(y1.size() / g.antennas);
  const int k_drones = spec.num_drones;

  ParameterVector psi;
  if (warm != nullptr) {
    if (warm->drones() != k_drones) throw std::invalid_argument("warm start drone count");
    psi = *warm;
  } else {
    // Successive coarse extraction: scan, solve range, subtract, repeat.
    Eigen::VectorXcd residual = y1;
    Eigen::VectorXcd u(y1.size());
    for (int k = 0; k < k_drones; ++k) {
      const double power = spec.tx_powers[static_cast<size_t>(k)];
      const CoarsePick pick = coarse_scan(residual, g, c, spec, pilots_l);
      const double range = solve_range(residual, pick, power, g, c, spec, pilots_l);
      psi.theta_rad.push_back(pick.theta);
      psi.range_m.push_back(range);
      psi.doppler_hz.push_back(pick.doppler);
      fill_template(u, g, c, pick.theta, pick.doppler, pilots_l);
      residual -= gain_of_range(range, power, g) * u;
    }
  }

  // Alternating re-extraction: the successive pass estimates the first drone
  // with the others still unsubtracted, which can lock a wrong lobe at low
  // SNR. Re-run each drone's full grid against the residual of the current
  // joint fit and keep every move that lowers the joint objective.
  if (warm == nullptr && k_drones > 1) {
    Objective rescan{y1, g, c, spec.tx_powers, pilots_l};
    double f_joint = neg_log_likelihood(y1, psi, spec.tx_powers, g, c);
    for (int round = 0; round < 2; ++round) {
      bool moved = false;
      for (int k = 0; k < k_drones; ++k) {
        const double power = spec.tx_powers[static_cast<size_t>(k)];
        const Eigen::VectorXcd r = rescan.residual_without(psi, k);
        const CoarsePick pick = coarse_scan(r, g, c, spec, pilots_l);
        ParameterVector cand = psi;
        cand.theta_rad[static_cast<size_t>(k)] = pick.theta;
        cand.doppler_hz[static_cast<size_t>(k)] = pick.doppler;
        cand.range_m[static_cast<size_t>(k)] = solve_range(r, pick, power, g, c, spec, pilots_l);
        const double f_cand = neg_log_likelihood(y1, cand, spec.tx_powers, g, c);
        if (f_cand < f_joint) {
          f_joint = f_cand;
          psi = cand;
          moved = true;
        }
      }
      if (!moved) break;
    }
  }

  // Joint cyclic refinement: golden-section over theta and fD, closed-form
  // conditional optimum for each range.
  Objective obj{y1, g, c, spec.tx_powers, pilots_l};
  double f_now = neg_log_likelihood(y1, psi, spec.tx_powers, g, c);
  const double theta_w = 2.0 * spec.theta_step_rad;
  const double fd_step = spec.doppler_step_hz > 0.0
                             ? spec.doppler_step_hz
                             : c.sampling_hz / (20.0 * std::numbers::pi * pilots_l);
  const double fd_w = 2.0 * fd_step;

  int cycles = 0;
  for (; cycles < spec.max_refine_cycles; ++cycles) {
    const double f_start = f_now;
    for (int k = 0; k < k_drones; ++k) {
      const double power = spec.tx_powers[static_cast<size_t>(k)];
      const Eigen::VectorXcd r = obj.residual_without(psi, k);
      auto& th = psi.theta_rad[static_cast<size_t>(k)];
      auto& dd = psi.range_m[static_cast<size_t>(k)];
      auto& fd = psi.doppler_hz[static_cast<size_t>(k)];

      double fk = obj.drone_term(r, th, dd, fd, power);
      golden_refine(std::max(spec.theta_bounds[0], th - theta_w),
                    std::min(spec.theta_bounds[1], th + theta_w), th, fk,
                    [&](double x) { return obj.drone_term(r, x, dd, fd, power); });
      golden_refine(std::max(spec.doppler_bounds[0], fd - fd_w),
                    std::min(spec.doppler_bounds[1], fd + fd_w), fd, fk,
                    [&](double x) { return obj.drone_term(r, th, dd, x, power); });
      // Conditional range optimum: project the residual onto the template.
      {
        Eigen::VectorXcd u(y1.size());
        fill_template(u, g, c, th, fd, pilots_l);
        double gain = std::max(u.dot(r).real(), 0.0) /
                      static_cast<double>(y1.size());
        const double g_lo = gain_of_range(spec.range_bounds[1], power, g);
        const double g_hi = gain_of_range(spec.range_bounds[0], power, g);
        gain = std::clamp(gain, g_lo, g_hi);
        const double cand = range_of_gain(gain, power, g);
        const double fc = obj.drone_term(r, th, cand, fd, power);
        if (fc < fk) {
          fk = fc;
          dd = cand;
        }
      }
      // fk tracked only drone k against its residual; recompute the full
      // objective so the cycle test sees the joint value.
      f_now = neg_log_likelihood(y1, psi, spec.tx_powers, g, c);
    }
    if (f_start - f_now < spec.refine_rel_tol * std::max(f_start, 1e-300)) break;
  }

  LocationEstimate est;
  est.psi = psi;
  est.objective = f_now;
  est.refine_cycles = cycles;
  return est;
}

std::vector<int> matching_permutation(const ParameterVector& estimate, const ParameterVector& truth,
                                      const SearchSpec& spec) {
  const int k = truth.drones();
  if (estimate.drones() != k) throw std::invalid_argument("drone count mismatch");
  if (k > 8) throw std::invalid_argument("permutation matching supports at most 8 drones");
  std::vector<int> perm(static_cast<size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  const double sth = spec.theta_bounds[1] - spec.theta_bounds[0];
  const double sd = spec.range_bounds[1] - spec.range_bounds[0];
  const double sf = spec.doppler_bounds[1] - spec.doppler_bounds[0];

  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < k; ++i) {
      const auto e = static_cast<size_t>(perm[static_cast<size_t>(i)]);
      const auto t = static_cast<size_t>(i);
      const double a = (estimate.theta_rad[e] - truth.theta_rad[t]) / sth;
      const double b = (estimate.range_m[e] - truth.range_m[t]) / sd;
      const double f = (estimate.doppler_hz[e] - truth.doppler_hz[t]) / sf;
      cost += a * a + b * b + f * f;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

ParameterVector match_to_truth(const ParameterVector& estimate, const ParameterVector& truth,
                               const SearchSpec& spec) {
  const std::vector<int> best = matching_permutation(estimate, truth, spec);
  ParameterVector out;
  for (size_t i = 0; i < best.size(); ++i) {
    const auto e = static_cast<size_t>(best[i]);
    out.theta_rad.push_back(estimate.theta_rad[e]);
    out.range_m.push_back(estimate.range_m[e]);
    out.doppler_hz.push_back(estimate.doppler_hz[e]);
  }
  return out;
}

ErrorStats error_statistics(const std::vector<ParameterVector>& estimates,
                            const ParameterVector& truth) {
  if (estimates.empty()) throw std::invalid_argument("no estimates");
  const auto t = truth.flatten();
  ErrorStats stats;
  stats.mean_error.assign(t.size(), 0.0);
  stats.rmse.assign(t.size(), 0.0);
  for (const auto& est : estimates) {
    const auto e = est.flatten();
    if (e.size() != t.size()) throw std::invalid_argument("estimate dimension mismatch");
    for (size_t i = 0; i < t.size(); ++i) {
      const double err = e[i] - t[i];
      stats.mean_error[i] += err;
      stats.rmse[i] += err * err;
    }
  }
  const double n = static_cast<double>(estimates.size());
  for (size_t i = 0; i < t.size(); ++i) {
    stats.mean_error[i] /= n;
    stats.rmse[i] = std::sqrt(stats.rmse[i] / n);
  }
  return stats;
}

}  // namespace pilotloc
