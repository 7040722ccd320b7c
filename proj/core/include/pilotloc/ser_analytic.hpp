#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <limits>
#include <utility>

#include "pilotloc/signal_model.hpp"

namespace pilotloc {

// Everything the closed-form SER of one target drone depends on.
struct ScenarioSpec {
  ArrayGeometry geometry;
  std::vector<DroneState> drones;
  FrameConfig config;
  int target = 0;  // index into drones
};

void validate(const ScenarioSpec& s);

// Gaussian location-error model. Doppler-error integration runs over
// [fd_lo, fd_hi]; leave both NaN to get the default +-6 sigma_fd window.
// sigma_d is carried for completeness only; range errors cancel out of the
// SER entirely.
struct ErrorModel {
  double sigma_theta = 0.0;
  double sigma_fd = 0.0;
  double sigma_d = 0.0;
  double fd_lo = std::numeric_limits<double>::quiet_NaN();
  double fd_hi = std::numeric_limits<double>::quiet_NaN();
};

void validate(const ErrorModel& em);
std::pair<double, double> resolve_fd_limits(const ErrorModel& em);

struct TaylorSpec {
  int order = 6;  // R, capped at 12
};

struct QuadratureSpec {
  double tolerance = 1e-10;
  int max_depth = 15;
};

// Per-drone MPSK symbol indices, each in 0..M-1.
using SymbolCombo = std::vector<int>;

// Concrete estimation errors for the target drone.
struct DeltaPsi {
  double dtheta_rad = 0.0;
  double dd_m = 0.0;
  double dfd_hz = 0.0;
};

// Gaussian tail probability Q(x) = P(Z > x).
double q_function(double x);

// r-th derivative of Q; r = 0 returns Q itself. Uses the physicists'
// Hermite polynomials: Q^{(r)}(x) = -(-1)^{r+1} e^{-x^2/2} H_{r-1}(x/sqrt 2)
// / (sqrt(2)^r sqrt(pi)).
double q_derivative(int r, double x0);

// Union-bound SER for the target drone's symbol, conditioned on concrete
// estimation errors and on every drone's transmitted symbol. Exact angles,
// no small-angle step. Throws std::domain_error when the combined statistic
// is exactly zero.
double conditional_ser(const ScenarioSpec& s, const SymbolCombo& combo, const DeltaPsi& delta);

// Mean of conditional_ser over all M^K symbol combinations.
double conditional_ser_avg(const ScenarioSpec& s, const DeltaPsi& delta, int combo_cap = 4096);

// Integral of exp(j c x - x^2 / (2 sigma^2)) over [lo, hi], in closed form
// via the complex error function.
std::complex<double> gaussian_trig_integral(double c, double sigma, double lo, double hi);

enum class TrigKind { kCos, kSin };

// E[cos(a dTheta + b + c dFd)] (or sin) over the independent truncated
// Gaussian error model; carries the truncated mass, so |result| <= mass.
double trig_expectation(TrigKind kind, double a, double b, double c, const ErrorModel& em);

// E[nu_x^{q2} nu_y^{q1-q2}] for the eta-normalized combining statistic nu,
// under the small-angle error model. The combo fixes every drone's symbol.
double moment_e67(const ScenarioSpec& s, int q1, int q2, const SymbolCombo& combo,
                  const ErrorModel& em);

struct SerBreakdown {
  double value = 0.0;
  std::uint64_t terms = 0;  // innermost Taylor summands evaluated
};

// Closed-form average SER of the target drone: Taylor expansion of the two
// Q terms around the zero-error statistic, with all trigonometric moments in
// closed form. Unclamped union-bound value.
SerBreakdown average_ser_mpsk_detailed(const ScenarioSpec& s, const ErrorModel& em,
                                       const TaylorSpec& taylor);
double average_ser_mpsk(const ScenarioSpec& s, const ErrorModel& em, const TaylorSpec& taylor);

// Taylor-free reference: adaptive 2-D quadrature of the same integrand.
double average_ser_numeric_oracle(const ScenarioSpec& s, const ErrorModel& em,
                                  const QuadratureSpec& quad);

}  // namespace pilotloc
