#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "pilotloc/config.hpp"
#include "pilotloc/crlb.hpp"
#include "pilotloc/detector.hpp"
#include "pilotloc/localizer.hpp"
#include "pilotloc/rng.hpp"
#include "pilotloc/ser_analytic.hpp"
#include "pilotloc/signal_model.hpp"

using namespace pilotloc;
using cplx = std::complex<double>;
using quad31 = boost::math::quadrature::gauss_kronrod<double, 31>;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_rel(double got, double want, double tol) {
  CHECK(std::abs(got - want) <= tol * std::max(1.0, std::abs(want)));
}

double gauss_pdf(double x, double sigma) {
  return std::exp(-x * x / (2.0 * sigma * sigma)) / (std::sqrt(kTwoPi) * sigma);
}

// Gaussian mass inside [lo, hi].
double window_mass(double sigma, double lo, double hi) {
  if (sigma == 0.0) return (lo <= 0.0 && 0.0 <= hi) ? 1.0 : 0.0;
  const double s = sigma * std::sqrt(2.0);
  return 0.5 * (std::erf(hi / s) - std::erf(lo / s));
}

// Two-drone reference scenario: DOAs 20 and 40 degrees, both at 80 m,
// Dopplers 2 and 4 kHz, half-wavelength array at 1.6 mm.
ScenarioSpec two_drone_scenario(int antennas, int subframes) {
  ScenarioSpec s;
  s.geometry = make_array(antennas, 1.6e-3);
  s.drones = {DroneState{20.0 * kPi / 180.0, 80.0, 2000.0, 1.0, 0.0},
              DroneState{40.0 * kPi / 180.0, 80.0, 4000.0, 1.0, 0.0}};
  s.config.subframes = subframes;
  s.config.symbols = 100;
  s.config.sampling_hz = 1.0e5;
  s.config.modulation_order = 8;
  s.config.noise_variance = 1.0;
  s.target = 0;
  return s;
}

ScenarioSpec one_drone_scenario(int antennas, double power) {
  ScenarioSpec s;
  s.geometry = make_array(antennas, 1.6e-3);
  s.drones = {DroneState{40.0 * kPi / 180.0, 80.0, 4000.0, power, 0.0}};
  s.config.subframes = 5;
  s.config.symbols = 100;
  s.config.sampling_hz = 1.0e5;
  s.config.modulation_order = 8;
  s.config.noise_variance = 1.0;
  s.target = 0;
  return s;
}

// Error sigmas for the target drone taken from the CRLB diagonal at the
// scenario's full pilot budget.
ErrorModel crlb_error_model(const ScenarioSpec& s) {
  std::vector<double> powers;
  for (const auto& d : s.drones) powers.push_back(d.tx_power);
  const ParameterVector psi = parameters_of(s.drones);
  const Eigen::MatrixXd f = fisher_information(psi, powers, s.geometry, s.config,
                                               s.config.subframes, s.config.noise_variance);
  const Eigen::VectorXd b = crlb_bounds(f);
  const int k = static_cast<int>(s.drones.size());
  ErrorModel em;
  em.sigma_theta = std::sqrt(b[s.target]);
  em.sigma_d = std::sqrt(b[k + s.target]);
  em.sigma_fd = std::sqrt(b[2 * k + s.target]);
  return em;
}

// The statistic nu rebuilt from drone parameters with its own loop, in the
// same small-angle parameterization the moment machinery uses.
cplx nu_reference(const ScenarioSpec& s, const SymbolCombo& combo, double dtheta, double dfd) {
  const auto& tgt = s.drones[static_cast<size_t>(s.target)];
  const double c_theta = kTwoPi * s.geometry.spacing_m * std::cos(tgt.doa_rad) /
                         s.geometry.wavelength_m;
  cplx acc(0.0, 0.0);
  for (size_t p = 0; p < s.drones.size(); ++p) {
    const auto& dp = s.drones[p];
    const double w = path_loss(s.geometry.wavelength_m, dp.range_m) * std::sqrt(dp.tx_power);
    const double phi =
        static_cast<double>(combo[p] - combo[static_cast<size_t>(s.target)]) /
            s.config.modulation_order +
        (dp.doppler_hz - tgt.doppler_hz) / s.config.sampling_hz;
    const double dstep = kTwoPi * s.geometry.spacing_m *
                         (std::sin(tgt.doa_rad) - std::sin(dp.doa_rad)) / s.geometry.wavelength_m;
    for (int g = 0; g < s.geometry.antennas; ++g) {
      const double ang = dstep * g + kTwoPi * phi + c_theta * g * dtheta;
      acc += w * cplx(std::cos(ang), std::sin(ang));
    }
  }
  const double ya = -kTwoPi * dfd / s.config.sampling_hz;
  return acc * cplx(std::cos(ya), std::sin(ya));
}

// E[nu_x^a nu_y^b] by nested quadrature over the truncated error densities.
double moment_reference(const ScenarioSpec& s, int a, int b, const SymbolCombo& combo,
                        const ErrorModel& em) {
  const auto [fd_lo, fd_hi] = resolve_fd_limits(em);
  const double th = std::min(kPi, 10.0 * em.sigma_theta);
  auto outer = [&](double dtheta) {
    auto inner = [&](double dfd) {
      const cplx nu = nu_reference(s, combo, dtheta, dfd);
      return std::pow(nu.real(), a) * std::pow(nu.imag(), b) * gauss_pdf(dfd, em.sigma_fd);
    };
    return quad31::integrate(inner, fd_lo, fd_hi, 10, 1e-11) * gauss_pdf(dtheta, em.sigma_theta);
  };
  return quad31::integrate(outer, -th, th, 10, 1e-11);
}

}  // namespace

TEST_CASE("q_function basics") {
  CHECK(q_function(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  for (double x : {0.3, 1.1, 2.7}) {
    check_rel(q_function(-x), 1.0 - q_function(x), 1e-14);
  }
  // Reference value frozen from a 50-digit erfc evaluation.
  check_rel(q_function(2.2361), 1.2672610729809745e-02, 1e-13);
}

TEST_CASE("q_derivative matches the closed Hermite form") {
  // References frozen from an independent arbitrary-precision evaluation of
  // (-1)^r He_{r-1}(x) phi(x).
  check_rel(q_derivative(1, 0.8), -2.8969155276148273e-01, 1e-12);
  check_rel(q_derivative(2, -0.5), -1.7603266338214973e-01, 1e-12);
  check_rel(q_derivative(3, 1.7), -1.7775275624231629e-01, 1e-12);
  CHECK(std::abs(q_derivative(4, 0.0)) <= 1e-15);
  check_rel(q_derivative(5, 2.3), 2.1412407828876441e-02, 1e-12);
  check_rel(q_derivative(6, -1.1), -1.0458015543665289e+00, 1e-12);
  check_rel(q_derivative(7, 3.0), 4.2545744754604869e-01, 1e-12);
  check_rel(q_derivative(8, 0.25), -9.5235668038353118e+00, 1e-12);
  check_rel(q_derivative(10, 1.9), -2.5093872220524304e+01, 1e-12);
  check_rel(q_derivative(12, -2.7), 1.0087536817034795e+02, 1e-12);
  for (double x : {-1.2, 0.4, 2.1}) {
    CHECK(q_derivative(0, x) == q_function(x));
  }
  CHECK_THROWS_AS(q_derivative(-1, 0.0), std::invalid_argument);
}

TEST_CASE("q_derivative matches finite differences") {
  auto fd3 = [](double x, double h) {
    return (q_function(x + 2 * h) - 2 * q_function(x + h) + 2 * q_function(x - h) -
            q_function(x - 2 * h)) /
           (2 * h * h * h);
  };
  // The third derivative vanishes at x = 1 ((1 - x^2) phi(x)), so that point
  // is an absolute check and 1.3 carries the relative one.
  CHECK(std::abs(q_derivative(3, 1.0) - fd3(1.0, 1e-3)) <= 1e-6);
  check_rel(q_derivative(3, 1.3), fd3(1.3, 1e-3), 1e-6);
}

TEST_CASE("gaussian_trig_integral matches quadrature at the reference point") {
  const double c = 3.0;
  const double sigma = 0.2;
  auto re = [&](double x) { return std::cos(c * x) * std::exp(-x * x / (2 * sigma * sigma)); };
  auto im = [&](double x) { return std::sin(c * x) * std::exp(-x * x / (2 * sigma * sigma)); };
  const cplx got = gaussian_trig_integral(c, sigma, -kPi, kPi);
  const double want_re = quad31::integrate(re, -kPi, kPi, 12, 1e-13);
  const double want_im = quad31::integrate(im, -kPi, kPi, 12, 1e-13);
  CHECK(std::abs(got.real() - want_re) <= 1e-9);
  CHECK(std::abs(got.imag() - want_im) <= 1e-9);
}

TEST_CASE("gaussian_trig_integral matches quadrature on random cases") {
  std::mt19937_64 gen(20240817);
  std::uniform_real_distribution<double> uc(-20.0, 20.0);
  std::uniform_real_distribution<double> us(0.01, 2.0);
  std::uniform_real_distribution<double> uu(-6.0, 6.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double c = uc(gen);
    const double sigma = us(gen);
    double lo = uu(gen) * sigma;
    double hi = uu(gen) * sigma;
    if (lo > hi) std::swap(lo, hi);
    if (hi - lo < 1e-6 * sigma) hi = lo + sigma;
    auto re = [&](double x) { return std::cos(c * x) * std::exp(-x * x / (2 * sigma * sigma)); };
    auto im = [&](double x) { return std::sin(c * x) * std::exp(-x * x / (2 * sigma * sigma)); };
    const cplx got = gaussian_trig_integral(c, sigma, lo, hi);
    const double want_re = quad31::integrate(re, lo, hi, 15, 1e-12);
    const double want_im = quad31::integrate(im, lo, hi, 15, 1e-12);
    worst = std::max({worst, std::abs(got.real() - want_re), std::abs(got.imag() - want_im)});
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("gaussian_trig_integral conjugate symmetry on symmetric windows") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> uc(-15.0, 15.0);
  std::uniform_real_distribution<double> us(0.05, 1.5);
  for (int i = 0; i < 50; ++i) {
    const double c = uc(gen);
    const double sigma = us(gen);
    const double a = 4.0 * sigma;
    const cplx plus = gaussian_trig_integral(c, sigma, -a, a);
    const cplx minus = gaussian_trig_integral(-c, sigma, -a, a);
    CHECK(std::abs(minus - std::conj(plus)) <= 1e-13 * std::max(1.0, std::abs(plus)));
  }
}

TEST_CASE("trig_expectation with zero frequencies is the windowed cosine") {
  ErrorModel em;
  em.sigma_theta = 0.7;
  em.sigma_fd = 40.0;
  const double mass = window_mass(0.7, -kPi, kPi) * window_mass(40.0, -240.0, 240.0);
  for (double b : {0.0, 0.9, -2.2}) {
    check_rel(trig_expectation(TrigKind::kCos, 0.0, b, 0.0, em), std::cos(b) * mass, 1e-12);
    check_rel(trig_expectation(TrigKind::kSin, 0.0, b, 0.0, em), std::sin(b) * mass, 1e-12);
  }
  // Zero sigmas collapse to point masses.
  ErrorModel point;
  point.sigma_theta = 0.0;
  point.sigma_fd = 0.0;
  check_rel(trig_expectation(TrigKind::kCos, 1.3, 0.4, 0.02, point), std::cos(0.4), 1e-14);
}

TEST_CASE("trig_expectation matches 2-D quadrature") {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> ua(-3.0, 3.0);
  std::uniform_real_distribution<double> ub(-kPi, kPi);
  std::uniform_real_distribution<double> uc(-0.02, 0.02);
  std::uniform_real_distribution<double> ust(0.05, 1.5);
  std::uniform_real_distribution<double> usf(0.5, 300.0);
  for (int i = 0; i < 8; ++i) {
    ErrorModel em;
    em.sigma_theta = ust(gen);
    em.sigma_fd = usf(gen);
    const double a = ua(gen);
    const double b = ub(gen);
    const double c = uc(gen);
    const auto [fd_lo, fd_hi] = resolve_fd_limits(em);
    auto outer = [&](bool want_sin) {
      auto fth = [&](double x) {
        auto ffd = [&](double y) {
          const double arg = a * x + b + c * y;
          return (want_sin ? std::sin(arg) : std::cos(arg)) * gauss_pdf(y, em.sigma_fd);
        };
        return quad31::integrate(ffd, fd_lo, fd_hi, 10, 1e-11) * gauss_pdf(x, em.sigma_theta);
      };
      return quad31::integrate(fth, -kPi, kPi, 10, 1e-11);
    };
    CHECK(std::abs(trig_expectation(TrigKind::kCos, a, b, c, em) - outer(false)) <= 1e-8);
    CHECK(std::abs(trig_expectation(TrigKind::kSin, a, b, c, em) - outer(true)) <= 1e-8);
  }
}

TEST_CASE("trig_expectation stays inside the truncated mass") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> ua(-8.0, 8.0);
  std::uniform_real_distribution<double> ub(-kPi, kPi);
  std::uniform_real_distribution<double> uc(-0.05, 0.05);
  std::uniform_real_distribution<double> ust(0.01, 2.5);
  std::uniform_real_distribution<double> usf(0.1, 500.0);
  for (int i = 0; i < 30; ++i) {
    ErrorModel em;
    em.sigma_theta = ust(gen);
    em.sigma_fd = usf(gen);
    const auto [fd_lo, fd_hi] = resolve_fd_limits(em);
    const double mass =
        window_mass(em.sigma_theta, -kPi, kPi) * window_mass(em.sigma_fd, fd_lo, fd_hi);
    const double v = trig_expectation(TrigKind::kCos, ua(gen), ub(gen), uc(gen), em);
    CHECK(std::abs(v) <= mass + 1e-12);
  }
}

TEST_CASE("moment_e67 matches 2-D quadrature on a two-antenna single drone") {
  // Power chosen so the per-drone amplitude eta sqrt(P) is exactly one.
  const double eta = path_loss(1.6e-3, 80.0);
  ScenarioSpec s = one_drone_scenario(2, 1.0 / (eta * eta));
  s.config.modulation_order = 4;
  ErrorModel em;
  em.sigma_theta = 0.01;
  em.sigma_fd = 1.0;
  const SymbolCombo combo{0};
  const double got = moment_e67(s, 2, 1, combo, em);
  const double want = moment_reference(s, 1, 1, combo, em);
  CHECK(std::abs(got - want) <= 1e-6);
  // Zero order reduces to the truncated mass.
  const auto [fd_lo, fd_hi] = resolve_fd_limits(em);
  check_rel(moment_e67(s, 0, 0, combo, em),
            window_mass(em.sigma_theta, -kPi, kPi) * window_mass(em.sigma_fd, fd_lo, fd_hi),
            1e-12);
}

TEST_CASE("moment_e67 matches 2-D quadrature with an interferer") {
  const double eta80 = path_loss(1.6e-3, 80.0);
  const double eta120 = path_loss(1.6e-3, 120.0);
  ScenarioSpec s = two_drone_scenario(3, 5);
  s.drones[0].tx_power = 1.0 / (eta80 * eta80);
  s.drones[1].range_m = 120.0;
  s.drones[1].tx_power = 1.0 / (eta120 * eta120);
  ErrorModel em;
  em.sigma_theta = 0.02;
  em.sigma_fd = 50.0;
  const SymbolCombo combo{0, 5};
  const double got = moment_e67(s, 3, 2, combo, em);
  const double want = moment_reference(s, 2, 1, combo, em);
  CHECK(std::abs(got - want) <= 1e-6);
}

TEST_CASE("moment_e67 rejects malformed orders") {
  ScenarioSpec s = one_drone_scenario(2, 1.0);
  ErrorModel em;
  em.sigma_theta = 0.01;
  em.sigma_fd = 1.0;
  CHECK_THROWS_AS(moment_e67(s, 2, 3, {0}, em), std::invalid_argument);
  CHECK_THROWS_AS(moment_e67(s, -1, 0, {0}, em), std::invalid_argument);
  CHECK_THROWS_AS(moment_e67(s, 33, 0, {0}, em), std::invalid_argument);
  CHECK_THROWS_AS(moment_e67(s, 2, 1, {0, 1}, em), std::invalid_argument);
}

TEST_CASE("conditional SER at zero error equals the MPSK union bound") {
  for (int n : {2, 6}) {
    for (int m : {4, 8}) {
      ScenarioSpec s = one_drone_scenario(n, 2.5e11);
      s.config.modulation_order = m;
      const double eta = path_loss(s.geometry.wavelength_m, s.drones[0].range_m);
      const double gamma = s.drones[0].tx_power * eta * eta / s.config.noise_variance;
      const double want = 2.0 * q_function(std::sqrt(2.0 * n * gamma) * std::sin(kPi / m));
      check_rel(conditional_ser(s, {0}, DeltaPsi{}), want, 1e-12);
      check_rel(conditional_ser_avg(s, DeltaPsi{}), want, 1e-12);
    }
  }
}

TEST_CASE("orthogonal interferer leaves the conditional SER unchanged") {
  // sin spacing 0.5 across four half-wavelength elements sums the
  // interference phases to zero for every symbol.
  ScenarioSpec solo = one_drone_scenario(4, 3.0e11);
  solo.drones[0].doa_rad = std::asin(0.25);
  solo.config.modulation_order = 4;
  const double base = conditional_ser(solo, {0}, DeltaPsi{});

  ScenarioSpec pair = solo;
  pair.drones.push_back(solo.drones[0]);
  pair.drones[1].doa_rad = std::asin(-0.25);
  pair.drones[1].doppler_hz = 1000.0;
  for (int m = 0; m < 4; ++m) {
    check_rel(conditional_ser(pair, {0, m}, DeltaPsi{}), base, 1e-12);
  }
}

TEST_CASE("mirrored geometry swaps the union terms") {
  // Negating every DOA together with the DOA error conjugates the statistic
  // combo-by-combo, so the two Q arguments swap and the average is unchanged.
  ScenarioSpec a = two_drone_scenario(6, 5);
  a.drones[1].doppler_hz = a.drones[0].doppler_hz;
  apply_snr(a, 9.0);
  ScenarioSpec b = a;
  b.drones[0].doa_rad = -a.drones[0].doa_rad;
  b.drones[1].doa_rad = -a.drones[1].doa_rad;
  const int m_order = a.config.modulation_order;
  for (double d : {0.01, 0.02}) {
    DeltaPsi plus;
    plus.dtheta_rad = d;
    DeltaPsi minus;
    minus.dtheta_rad = -d;
    for (int m = 0; m < m_order; ++m) {
      check_rel(conditional_ser(b, {0, (m_order - m) % m_order}, minus),
                conditional_ser(a, {0, m}, plus), 1e-12);
    }
    check_rel(conditional_ser_avg(b, minus), conditional_ser_avg(a, plus), 1e-12);
  }
}

TEST_CASE("structurally zero statistic is rejected") {
  ScenarioSpec s = one_drone_scenario(4, 1.0e11);
  s.drones[0].doa_rad = 0.0;
  DeltaPsi delta;
  delta.dtheta_rad = std::asin(0.5);
  CHECK_THROWS_AS(conditional_ser(s, {0}, delta), std::domain_error);
}

TEST_CASE("conditional SER matches Monte-Carlo at fixed errors") {
  ScenarioSpec s = two_drone_scenario(6, 5);
  apply_snr(s, 9.0);
  DeltaPsi delta;
  delta.dtheta_rad = 0.002;
  delta.dd_m = 0.3;
  delta.dfd_hz = 5.0;
  const double want = conditional_ser_avg(s, delta);

  std::vector<DroneState> hat = s.drones;
  hat[0].doa_rad += delta.dtheta_rad;
  hat[0].range_m += delta.dd_m;
  hat[0].doppler_hz += delta.dfd_hz;
  const Eigen::MatrixXcd h_true = channel_matrix(s.geometry, s.drones, s.config, 1);
  const Eigen::VectorXcd h_hat = channel_column(s.geometry, hat[0], s.config, 1);
  const int m_order = s.config.modulation_order;
  RngStream rng(314159);
  const int draws = 1000000;
  int errors = 0;
  for (int i = 0; i < draws; ++i) {
    const int s0 = rng.symbol(m_order);
    const int s1 = rng.symbol(m_order);
    Eigen::VectorXcd y = h_true.col(0) * std::polar(std::sqrt(s.drones[0].tx_power),
                                                    kTwoPi * s0 / m_order) +
                         h_true.col(1) * std::polar(std::sqrt(s.drones[1].tx_power),
                                                    kTwoPi * s1 / m_order);
    for (int a = 0; a < y.size(); ++a) y[a] += rng.complex_gaussian(s.config.noise_variance);
    const cplx x = h_hat.dot(y);
    if (mpsk_detect(x, m_order) != s0) ++errors;
  }
  const double mc = static_cast<double>(errors) / draws;
  const double se = std::sqrt(mc * (1.0 - mc) / draws);
  CHECK(std::abs(mc - want) <= 3.0 * se);
}

TEST_CASE("combo cap is enforced") {
  ScenarioSpec s = two_drone_scenario(6, 5);
  apply_snr(s, 9.0);
  CHECK_THROWS_AS(conditional_ser_avg(s, DeltaPsi{}, 63), std::invalid_argument);
  CHECK_NOTHROW(conditional_ser_avg(s, DeltaPsi{}, 64));
}

TEST_CASE("analytic average collapses to the conditional value at zero spread") {
  ScenarioSpec s = two_drone_scenario(6, 5);
  apply_snr(s, 9.0);
  const double cond = conditional_ser_avg(s, DeltaPsi{});
  ErrorModel zero;
  check_rel(average_ser_mpsk(s, zero, TaylorSpec{}), cond, 1e-14);
  check_rel(average_ser_numeric_oracle(s, zero, QuadratureSpec{}), cond, 1e-14);
  // Narrow positive spreads must agree between the two entry points; widths
  // sit above the quadrature's bisection resolution.
  ErrorModel narrow;
  narrow.sigma_theta = 1e-3;
  narrow.sigma_fd = 1.0;
  check_rel(average_ser_numeric_oracle(s, narrow, QuadratureSpec{}),
            average_ser_mpsk(s, narrow, TaylorSpec{}), 1e-8);
}

TEST_CASE("range spread never enters the analytic value") {
  ScenarioSpec s = two_drone_scenario(6, 5);
  apply_snr(s, 9.0);
  ErrorModel em = crlb_error_model(s);
  em.sigma_d = 0.0;
  const double taylor0 = average_ser_mpsk(s, em, TaylorSpec{});
  const double oracle0 = average_ser_numeric_oracle(s, em, QuadratureSpec{});
  for (double sd : {1.0, 100.0}) {
    em.sigma_d = sd;
    CHECK(average_ser_mpsk(s, em, TaylorSpec{}) == taylor0);
    CHECK(average_ser_numeric_oracle(s, em, QuadratureSpec{}) == oracle0);
  }
}

TEST_CASE("taylor expansion tracks the numeric oracle") {
  // Envelopes sized to the measured behavior of the order-6 expansion under
  // CRLB-width errors; the series is asymptotic, so the envelope widens as
  // the sigmas grow toward low SNR.
  ScenarioSpec s = two_drone_scenario(6, 5);
  TaylorSpec r6;
  r6.order = 6;

  apply_snr(s, 9.0);
  ErrorModel em = crlb_error_model(s);
  double gap = std::abs(average_ser_mpsk(s, em, r6) -
                        average_ser_numeric_oracle(s, em, QuadratureSpec{}));
  CHECK(gap <= 8e-4);

  apply_snr(s, 18.0);
  em = crlb_error_model(s);
  gap = std::abs(average_ser_mpsk(s, em, r6) -
                 average_ser_numeric_oracle(s, em, QuadratureSpec{}));
  CHECK(gap <= 1e-7);

  ScenarioSpec wide = two_drone_scenario(30, 5);
  apply_snr(wide, 3.0);
  em = crlb_error_model(wide);
  gap = std::abs(average_ser_mpsk(wide, em, r6) -
                 average_ser_numeric_oracle(wide, em, QuadratureSpec{}));
  CHECK(gap <= 2e-5);
}

TEST_CASE("numeric oracle is monotone in the DOA spread") {
  ScenarioSpec s = one_drone_scenario(6, 1.0);
  apply_snr(s, 9.0);
  ErrorModel em;
  em.sigma_fd = 1.0;
  double prev = 0.0;
  for (double st : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2}) {
    em.sigma_theta = st;
    const double v = average_ser_numeric_oracle(s, em, QuadratureSpec{});
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
}

TEST_CASE("detailed breakdown agrees with the scalar entry point") {
  ScenarioSpec s = two_drone_scenario(6, 5);
  apply_snr(s, 12.0);
  const ErrorModel em = crlb_error_model(s);
  TaylorSpec r2;
  r2.order = 2;
  TaylorSpec r6;
  r6.order = 6;
  const SerBreakdown lo = average_ser_mpsk_detailed(s, em, r2);
  const SerBreakdown hi = average_ser_mpsk_detailed(s, em, r6);
  CHECK(lo.value == average_ser_mpsk(s, em, r2));
  CHECK(hi.value == average_ser_mpsk(s, em, r6));
  CHECK(lo.terms > 0);
  CHECK(hi.terms > lo.terms);
  TaylorSpec bad;
  bad.order = 13;
  CHECK_THROWS_AS(average_ser_mpsk(s, em, bad), std::invalid_argument);
}

TEST_CASE("error model validation") {
  ErrorModel em;
  em.sigma_theta = -0.1;
  CHECK_THROWS_AS(validate(em), std::invalid_argument);
  em.sigma_theta = 0.1;
  em.fd_lo = -5.0;
  CHECK_THROWS_AS(validate(em), std::invalid_argument);
  em.fd_hi = -10.0;
  CHECK_THROWS_AS(validate(em), std::invalid_argument);
  em.fd_hi = 5.0;
  CHECK_NOTHROW(validate(em));
}
