#include "pilotloc/ser_analytic.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pilotloc/cerf.hpp"

namespace pilotloc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;
using cplx = std::complex<double>;

// Relative threshold treating a statistic component as structurally zero.
constexpr double kZeroTol = 1e-14;

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
  return v;
}

double factorial(int n) {
  double v = 1.0;
  for (int i = 2; i <= n; ++i) v *= i;
  return v;
}

double normal_pdf(double x, double sigma) {
  return std::exp(-x * x / (2.0 * sigma * sigma)) / (std::sqrt(kTwoPi) * sigma);
}

// All symbol combinations with the target drone's index fixed at zero. The
// decision statistic depends only on symbol differences, so averaging this
// slice equals the full M^K average.
std::vector<SymbolCombo> target_slice_combos(int k_drones, int m_order, int target) {
  std::vector<SymbolCombo> out;
  SymbolCombo combo(static_cast<size_t>(k_drones), 0);
  for (;;) {
    out.push_back(combo);
    int pos = 0;
    for (; pos < k_drones; ++pos) {
      if (pos == target) continue;
      if (++combo[static_cast<size_t>(pos)] < m_order) break;
      combo[static_cast<size_t>(pos)] = 0;
    }
    if (pos == k_drones) return out;
  }
}

void validate_combo(const ScenarioSpec& s, const SymbolCombo& combo) {
  if (combo.size() != s.drones.size())
    throw std::invalid_argument("combo needs one symbol per drone");
  for (int m : combo)
    if (m < 0 || m >= s.config.modulation_order)
      throw std::invalid_argument("symbol index out of range");
}

// The eta-normalized statistic, derotated by the target's symbol, in the
// small-angle parameterization: nu = exp(-j c_fd dFd) * sum_g coeff_g
// exp(j c_theta g dTheta).
struct ComboPoly {
  std::vector<cplx> coeff;  // degree N-1 polynomial in exp(j c_theta dTheta)
  double c_theta = 0.0;     // 2 pi d0 cos(theta_k) / lambda
  double c_fd = 0.0;        // 2 pi / fs
  cplx nu0;                 // zero-error value, sum of coeff
  double scale = 0.0;       // sum_p N eta_p sqrt(P_p), for zero thresholds
};

ComboPoly build_combo_poly(const ScenarioSpec& s, const SymbolCombo& combo) {
  const int n = s.geometry.antennas;
  const int k = static_cast<int>(s.drones.size());
  const auto& tgt = s.drones[static_cast<size_t>(s.target)];
  ComboPoly cp;
  cp.coeff.assign(static_cast<size_t>(n), cplx(0.0, 0.0));
  cp.c_theta = kTwoPi * s.geometry.spacing_m * std::cos(tgt.doa_rad) / s.geometry.wavelength_m;
  cp.c_fd = kTwoPi / s.config.sampling_hz;
  const double sin_t = std::sin(tgt.doa_rad);
  for (int p = 0; p < k; ++p) {
    const auto& dp = s.drones[static_cast<size_t>(p)];
    const double w = path_loss(s.geometry.wavelength_m, dp.range_m) * std::sqrt(dp.tx_power);
    cp.scale += n * w;
    const double phi =
        static_cast<double>(combo[static_cast<size_t>(p)] - combo[static_cast<size_t>(s.target)]) /
            s.config.modulation_order +
        (dp.doppler_hz - tgt.doppler_hz) / s.config.sampling_hz;
    const double dstep = kTwoPi * s.geometry.spacing_m * (sin_t - std::sin(dp.doa_rad)) /
                         s.geometry.wavelength_m;
    for (int g = 0; g < n; ++g) {
      const double ang = dstep * g + kTwoPi * phi;
      cp.coeff[static_cast<size_t>(g)] += w * cplx(std::cos(ang), std::sin(ang));
    }
  }
  for (const auto& c : cp.coeff) cp.nu0 += c;
  return cp;
}

cplx nu_small_angle(const ComboPoly& cp, double dtheta, double dfd) {
  const double xa = cp.c_theta * dtheta;
  const cplx x(std::cos(xa), std::sin(xa));
  cplx acc(0.0, 0.0);
  for (size_t g = cp.coeff.size(); g-- > 0;) acc = acc * x + cp.coeff[g];
  const double ya = -cp.c_fd * dfd;
  return acc * cplx(std::cos(ya), std::sin(ya));
}

// Characteristic value of the truncated Gaussian error: integral of
// exp(j a x) times the full Gaussian pdf over [lo, hi]. Carries the
// truncated mass; a zero sigma is a point mass at the origin.
cplx chi_truncated(double a, double sigma, double lo, double hi) {
  if (sigma == 0.0) return (lo <= 0.0 && 0.0 <= hi) ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
  return gaussian_trig_integral(a, sigma, lo, hi) / (std::sqrt(kTwoPi) * sigma);
}

// E[nu^m conj(nu)^n] tables and the mixed real-part moments derived from
// them. Every product of nu powers is a Laurent polynomial in the theta
// phase factor, so each entry is one chi-weighted coefficient sum.
struct MomentTable {
  int order = 0;
  std::vector<std::vector<double>> m;  // m[a][b] = E[nu_x^a nu_y^b], a+b <= order
};

std::vector<cplx> poly_multiply(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  std::vector<cplx> out(a.size() + b.size() - 1, cplx(0.0, 0.0));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

MomentTable build_moments(const ComboPoly& cp, int order, const ErrorModel& em) {
  const auto [fd_lo, fd_hi] = resolve_fd_limits(em);
  // chi caches: theta at integer multiples of c_theta, doppler at integer
  // multiples of c_fd.
  const int deg = static_cast<int>(cp.coeff.size()) - 1;
  std::vector<cplx> chi_th_pos(static_cast<size_t>(order * deg) + 1);
  std::vector<cplx> chi_th_neg(static_cast<size_t>(order * deg) + 1);
  for (int g = 0; g <= order * deg; ++g) {
    chi_th_pos[static_cast<size_t>(g)] =
        chi_truncated(cp.c_theta * g, em.sigma_theta, -std::numbers::pi, std::numbers::pi);
    chi_th_neg[static_cast<size_t>(g)] =
        chi_truncated(-cp.c_theta * g, em.sigma_theta, -std::numbers::pi, std::numbers::pi);
  }
  std::vector<cplx> chi_fd_by_q(static_cast<size_t>(2 * order) + 1);
  for (int q = -order; q <= order; ++q)
    chi_fd_by_q[static_cast<size_t>(q + order)] =
        chi_truncated(-q * cp.c_fd, em.sigma_fd, fd_lo, fd_hi);

  // Powers of the polynomial and of its conjugate-reflected twin.
  std::vector<std::vector<cplx>> pow_p(static_cast<size_t>(order) + 1);
  std::vector<std::vector<cplx>> pow_q(static_cast<size_t>(order) + 1);
  pow_p[0] = {cplx(1.0, 0.0)};
  pow_q[0] = {cplx(1.0, 0.0)};
  std::vector<cplx> conj_rev(cp.coeff.size());
  for (size_t g = 0; g < cp.coeff.size(); ++g)
    conj_rev[g] = std::conj(cp.coeff[cp.coeff.size() - 1 - g]);
  for (int m = 1; m <= order; ++m) {
    pow_p[static_cast<size_t>(m)] = poly_multiply(pow_p[static_cast<size_t>(m - 1)], cp.coeff);
    pow_q[static_cast<size_t>(m)] = poly_multiply(pow_q[static_cast<size_t>(m - 1)], conj_rev);
  }

  // T[m][n] = E[nu^m conj(nu)^n].
  std::vector<std::vector<cplx>> t(static_cast<size_t>(order) + 1,
                                   std::vector<cplx>(static_cast<size_t>(order) + 1));
  for (int m = 0; m <= order; ++m) {
    for (int n = 0; n + m <= order; ++n) {
      const auto prod = poly_multiply(pow_p[static_cast<size_t>(m)], pow_q[static_cast<size_t>(n)]);
      // exponent of entry i is i - n*deg
      cplx sum(0.0, 0.0);
      for (size_t i = 0; i < prod.size(); ++i) {
        const int g = static_cast<int>(i) - n * deg;
        const cplx chi = g >= 0 ? chi_th_pos[static_cast<size_t>(g)]
                                : chi_th_neg[static_cast<size_t>(-g)];
        sum += prod[i] * chi;
      }
      t[static_cast<size_t>(m)][static_cast<size_t>(n)] =
          chi_fd_by_q[static_cast<size_t>(m - n + order)] * sum;
    }
  }

  MomentTable table;
  table.order = order;
  table.m.assign(static_cast<size_t>(order) + 1,
                 std::vector<double>(static_cast<size_t>(order) + 1, 0.0));
  for (int a = 0; a <= order; ++a) {
    for (int b = 0; a + b <= order; ++b) {
      cplx acc(0.0, 0.0);
      for (int u = 0; u <= a; ++u) {
        for (int v = 0; v <= b; ++v) {
          const double sign = ((b - v) % 2 == 0) ? 1.0 : -1.0;
          acc += binom(a, u) * binom(b, v) * sign *
                 t[static_cast<size_t>(u + v)][static_cast<size_t>(a + b - u - v)];
        }
      }
      // 1/(2^a (2j)^b) = (-j)^b / 2^(a+b)
      cplx factor(1.0, 0.0);
      for (int i = 0; i < b; ++i) factor *= cplx(0.0, -1.0);
      factor /= std::pow(2.0, a + b);
      table.m[static_cast<size_t>(a)][static_cast<size_t>(b)] = (factor * acc).real();
    }
  }
  return table;
}

// Union-bound SER from a concrete statistic value. Well-defined everywhere,
// including nu = 0 where both Q arguments vanish.
double union_bound_raw(cplx nu, int m_order, double n_antennas, double noise_variance) {
  const double s = std::sin(std::numbers::pi / m_order);
  const double c = std::cos(std::numbers::pi / m_order);
  const double denom = std::sqrt(n_antennas * noise_variance);
  const double d1 = s * nu.real() - c * nu.imag();
  const double d2 = s * nu.real() + c * nu.imag();
  return q_function(kSqrt2 * d1 / denom) + q_function(kSqrt2 * d2 / denom);
}

// As above, but a structurally zero statistic is a caller error.
double union_bound_of_nu(cplx nu, int m_order, double n_antennas, double noise_variance,
                         double zero_scale) {
  if (std::abs(nu.real()) <= kZeroTol * zero_scale && std::abs(nu.imag()) <= kZeroTol * zero_scale)
    throw std::domain_error("combining statistic is zero; SER undefined");
  return union_bound_raw(nu, m_order, n_antennas, noise_variance);
}

}  // namespace

void validate(const ScenarioSpec& s) {
  // No Nyquist guard here: the SER depends on each Doppler only through
  // phases modulo 2 pi, so a pricing scenario may carry any folded frequency
  // (callers fold per-subframe centers onto [-fs/2, fs/2], whose edge the
  // synthesis-side validate_scenario would reject).
  validate(s.geometry);
  validate(s.config);
  if (s.drones.empty()) throw std::invalid_argument("scenario needs at least one drone");
  for (const auto& d : s.drones) validate(d);
  if (s.target < 0 || s.target >= static_cast<int>(s.drones.size()))
    throw std::invalid_argument("target drone index out of range");
}

void validate(const ErrorModel& em) {
  if (!(em.sigma_theta >= 0.0) || !(em.sigma_fd >= 0.0) || !(em.sigma_d >= 0.0))
    throw std::invalid_argument("error sigmas must be nonnegative");
  const bool has_lo = !std::isnan(em.fd_lo);
  const bool has_hi = !std::isnan(em.fd_hi);
  if (has_lo != has_hi)
    throw std::invalid_argument("set both doppler limits or neither");
  if (has_lo && !(em.fd_lo <= em.fd_hi))
    throw std::invalid_argument("doppler limits must be ordered");
}

std::pair<double, double> resolve_fd_limits(const ErrorModel& em) {
  if (!std::isnan(em.fd_lo) && !std::isnan(em.fd_hi)) return {em.fd_lo, em.fd_hi};
  return {-6.0 * em.sigma_fd, 6.0 * em.sigma_fd};
}

double q_function(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double q_derivative(int r, double x0) {
  if (r < 0) throw std::invalid_argument("derivative order must be nonnegative");
  if (r == 0) return q_function(x0);
  // Physicists' Hermite recurrence at t = x0 / sqrt 2.
  const double t = x0 / kSqrt2;
  double h_prev = 1.0;  // H_0
  double h = 2.0 * t;   // H_1
  if (r - 1 == 0) h = h_prev;
  for (int n = 1; n < r - 1; ++n) {
    const double h_next = 2.0 * t * h - 2.0 * n * h_prev;
    h_prev = h;
    h = h_next;
  }
  const double sign = ((r + 1) % 2 == 0) ? 1.0 : -1.0;
  return -sign * std::exp(-x0 * x0 / 2.0) * h /
         (std::pow(kSqrt2, r) * std::sqrt(std::numbers::pi));
}

double conditional_ser(const ScenarioSpec& s, const SymbolCombo& combo, const DeltaPsi& delta) {
  validate(s);
  validate_combo(s, combo);
  const int n = s.geometry.antennas;
  const auto& tgt = s.drones[static_cast<size_t>(s.target)];
  const double sin_hat = std::sin(tgt.doa_rad + delta.dtheta_rad);
  cplx nu(0.0, 0.0);
  double scale = 0.0;
  for (size_t p = 0; p < s.drones.size(); ++p) {
    const auto& dp = s.drones[p];
    const double w = path_loss(s.geometry.wavelength_m, dp.range_m) * std::sqrt(dp.tx_power);
    scale += n * w;
    const double phi =
        static_cast<double>(combo[p] - combo[static_cast<size_t>(s.target)]) /
            s.config.modulation_order +
        (dp.doppler_hz - tgt.doppler_hz - delta.dfd_hz) / s.config.sampling_hz;
    const double dstep =
        kTwoPi * s.geometry.spacing_m * (sin_hat - std::sin(dp.doa_rad)) / s.geometry.wavelength_m;
    for (int g = 0; g < n; ++g) {
      const double ang = dstep * g + kTwoPi * phi;
      nu += w * cplx(std::cos(ang), std::sin(ang));
    }
  }
  return union_bound_of_nu(nu, s.config.modulation_order, n, s.config.noise_variance, scale);
}

double conditional_ser_avg(const ScenarioSpec& s, const DeltaPsi& delta, int combo_cap) {
  validate(s);
  const int k = static_cast<int>(s.drones.size());
  const int m = s.config.modulation_order;
  double total = 1.0;
  for (int i = 0; i < k; ++i) {
    total *= m;
    if (total > combo_cap) throw std::invalid_argument("combo count exceeds cap");
  }
  SymbolCombo combo(static_cast<size_t>(k), 0);
  double sum = 0.0;
  int count = 0;
  for (;;) {
    sum += conditional_ser(s, combo, delta);
    ++count;
    int pos = 0;
    while (pos < k && ++combo[static_cast<size_t>(pos)] == m) {
      combo[static_cast<size_t>(pos)] = 0;
      ++pos;
    }
    if (pos == k) break;
  }
  return sum / count;
}

std::complex<double> gaussian_trig_integral(double c, double sigma, double lo, double hi) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (!(lo <= hi)) throw std::invalid_argument("limits must be ordered");
  const double b = -c * sigma / kSqrt2;
  const auto a_of = [&](double x) { return x / (kSqrt2 * sigma); };
  return std::sqrt(kTwoPi) * sigma / 2.0 * (erf_scaled(a_of(hi), b) - erf_scaled(a_of(lo), b));
}

double trig_expectation(TrigKind kind, double a, double b, double c, const ErrorModel& em) {
  validate(em);
  const auto [fd_lo, fd_hi] = resolve_fd_limits(em);
  const cplx chi_th = chi_truncated(a, em.sigma_theta, -std::numbers::pi, std::numbers::pi);
  const cplx chi_fd = chi_truncated(c, em.sigma_fd, fd_lo, fd_hi);
  const cplx val = cplx(std::cos(b), std::sin(b)) * chi_th * chi_fd;
  return kind == TrigKind::kCos ? val.real() : val.imag();
}

double moment_e67(const ScenarioSpec& s, int q1, int q2, const SymbolCombo& combo,
                  const ErrorModel& em) {
  validate(s);
  validate(em);
  validate_combo(s, combo);
  if (q1 < 0 || q2 < 0 || q2 > q1) throw std::invalid_argument("need 0 <= q2 <= q1");
  if (q1 > 32) throw std::invalid_argument("moment order too large");
  const ComboPoly cp = build_combo_poly(s, combo);
  const MomentTable table = build_moments(cp, q1, em);
  return table.m[static_cast<size_t>(q2)][static_cast<size_t>(q1 - q2)];
}

SerBreakdown average_ser_mpsk_detailed(const ScenarioSpec& s, const ErrorModel& em,
                                       const TaylorSpec& taylor) {
  validate(s);
  validate(em);
  if (taylor.order < 0 || taylor.order > 12)
    throw std::invalid_argument("taylor order must be in 0..12");
  const int r_max = taylor.order;
  const int n = s.geometry.antennas;
  const int m_order = s.config.modulation_order;
  const auto combos = target_slice_combos(static_cast<int>(s.drones.size()), m_order, s.target);
  if (combos.size() > 65536) throw std::invalid_argument("combo count exceeds cap");

  const auto [fd_lo, fd_hi] = resolve_fd_limits(em);
  SerBreakdown out;

  // Zero error model: every moment collapses onto the expansion point, so
  // the Taylor sum telescopes to the conditional value for any R.
  if (em.sigma_theta == 0.0 && em.sigma_fd == 0.0 && fd_lo <= 0.0 && 0.0 <= fd_hi) {
    double sum = 0.0;
    for (const auto& combo : combos) {
      sum += conditional_ser(s, combo, DeltaPsi{});
      ++out.terms;
    }
    out.value = sum / static_cast<double>(combos.size());
    return out;
  }

  const double sin_m = std::sin(std::numbers::pi / m_order);
  const double cos_m = std::cos(std::numbers::pi / m_order);
  const double q_scale = kSqrt2 / std::sqrt(n * s.config.noise_variance);

  double sum = 0.0;
  for (const auto& combo : combos) {
    const ComboPoly cp = build_combo_poly(s, combo);
    const MomentTable table = build_moments(cp, r_max, em);
    const double nu_x0 = cp.nu0.real();
    const double nu_y0 = cp.nu0.imag();
    double s_eff = sin_m;
    if (std::abs(nu_x0) <= kZeroTol * cp.scale) {
      if (std::abs(nu_y0) <= kZeroTol * cp.scale)
        throw std::domain_error("combining statistic is zero at the expansion point");
      s_eff = 0.0;  // second branch: only the cosine component survives
    }

    for (int ell = 1; ell <= 2; ++ell) {
      const double c_ell = (ell % 2 == 0) ? cos_m : -cos_m;
      const double nu_t0 = s_eff * nu_x0 + c_ell * nu_y0;
      const double x0 = q_scale * nu_t0;

      // E[nu_tilde^q1] for q1 = 0..R.
      std::vector<double> e_pow(static_cast<size_t>(r_max) + 1, 0.0);
      std::vector<double> s_pows(static_cast<size_t>(r_max) + 1, 1.0);
      std::vector<double> c_pows(static_cast<size_t>(r_max) + 1, 1.0);
      for (int i = 1; i <= r_max; ++i) {
        s_pows[static_cast<size_t>(i)] = s_pows[static_cast<size_t>(i - 1)] * s_eff;
        c_pows[static_cast<size_t>(i)] = c_pows[static_cast<size_t>(i - 1)] * c_ell;
      }
      for (int q1 = 0; q1 <= r_max; ++q1) {
        double acc = 0.0;
        for (int q2 = 0; q2 <= q1; ++q2) {
          acc += binom(q1, q2) * s_pows[static_cast<size_t>(q2)] *
                 c_pows[static_cast<size_t>(q1 - q2)] *
                 table.m[static_cast<size_t>(q2)][static_cast<size_t>(q1 - q2)];
          ++out.terms;
        }
        e_pow[static_cast<size_t>(q1)] = acc;
      }

      // Central moments about nu_t0 and the Taylor sum.
      std::vector<double> neg_pows(static_cast<size_t>(r_max) + 1, 1.0);
      for (int i = 1; i <= r_max; ++i)
        neg_pows[static_cast<size_t>(i)] = neg_pows[static_cast<size_t>(i - 1)] * (-nu_t0);
      double scale_pow = 1.0;
      for (int r = 0; r <= r_max; ++r) {
        double central = 0.0;
        for (int q1 = 0; q1 <= r; ++q1)
          central += binom(r, q1) * neg_pows[static_cast<size_t>(r - q1)] *
                     e_pow[static_cast<size_t>(q1)];
        sum += q_derivative(r, x0) / factorial(r) * scale_pow * central;
        scale_pow *= q_scale;
      }
    }
  }
  out.value = sum / static_cast<double>(combos.size());
  return out;
}

double average_ser_mpsk(const ScenarioSpec& s, const ErrorModel& em, const TaylorSpec& taylor) {
  return average_ser_mpsk_detailed(s, em, taylor).value;
}

double average_ser_numeric_oracle(const ScenarioSpec& s, const ErrorModel& em,
                                  const QuadratureSpec& quad) {
  validate(s);
  validate(em);
  if (!(quad.tolerance > 0.0)) throw std::invalid_argument("quadrature tolerance must be positive");
  const int n = s.geometry.antennas;
  const int m_order = s.config.modulation_order;
  const auto combos = target_slice_combos(static_cast<int>(s.drones.size()), m_order, s.target);
  const auto [fd_lo, fd_hi] = resolve_fd_limits(em);
  using boost::math::quadrature::gauss_kronrod;

  double sum = 0.0;
  for (const auto& combo : combos) {
    const ComboPoly cp = build_combo_poly(s, combo);
    const auto ser_at = [&](double dtheta, double dfd) {
      return union_bound_raw(nu_small_angle(cp, dtheta, dfd), m_order, n,
                             s.config.noise_variance);
    };
    double value = 0.0;
    if (em.sigma_theta > 0.0 && em.sigma_fd > 0.0) {
      const auto outer = [&](double dtheta) {
        const auto inner = [&](double dfd) {
          return ser_at(dtheta, dfd) * normal_pdf(dfd, em.sigma_fd);
        };
        return normal_pdf(dtheta, em.sigma_theta) *
               gauss_kronrod<double, 61>::integrate(inner, fd_lo, fd_hi,
                                                    static_cast<unsigned>(quad.max_depth),
                                                    quad.tolerance);
      };
      value = gauss_kronrod<double, 61>::integrate(outer, -std::numbers::pi, std::numbers::pi,
                                                   static_cast<unsigned>(quad.max_depth),
                                                   quad.tolerance);
    } else if (em.sigma_theta > 0.0) {
      const double fd_mass = (fd_lo <= 0.0 && 0.0 <= fd_hi) ? 1.0 : 0.0;
      const auto f = [&](double dtheta) {
        return ser_at(dtheta, 0.0) * normal_pdf(dtheta, em.sigma_theta);
      };
      value = fd_mass * gauss_kronrod<double, 61>::integrate(
                            f, -std::numbers::pi, std::numbers::pi,
                            static_cast<unsigned>(quad.max_depth), quad.tolerance);
    } else if (em.sigma_fd > 0.0) {
      const auto f = [&](double dfd) { return ser_at(0.0, dfd) * normal_pdf(dfd, em.sigma_fd); };
      value = gauss_kronrod<double, 61>::integrate(f, fd_lo, fd_hi,
                                                   static_cast<unsigned>(quad.max_depth),
                                                   quad.tolerance);
    } else {
      const double fd_mass = (fd_lo <= 0.0 && 0.0 <= fd_hi) ? 1.0 : 0.0;
      value = fd_mass * ser_at(0.0, 0.0);
    }
    sum += value;
  }
  return sum / static_cast<double>(combos.size());
}

}  // namespace pilotloc
