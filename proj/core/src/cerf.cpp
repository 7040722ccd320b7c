#include "pilotloc/cerf.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace pilotloc {
namespace {

using cplx = std::complex<double>;
constexpr double kSqrtPi = 1.7724538509055160273;

// Rational-series coefficients for w(z) on the upper half plane
// (Weideman 1994, SIAM Rev. 36). Built once by a direct DFT of the
// tangent-mapped Gaussian; N = 64 keeps the truncation error near 1e-15.
constexpr int kWeidemanN = 64;

const std::array<double, kWeidemanN>& weideman_coeffs() {
  static const std::array<double, kWeidemanN> coeffs = [] {
    const int N = kWeidemanN;
    const int M = 2 * N;
    const double L = std::sqrt(N / std::numbers::sqrt2);
    // Sample f(theta) = exp(-t^2) (L^2 + t^2), t = L tan(theta/2), with a
    // leading zero at the pole theta = -pi, then take the shifted DFT.
    std::array<double, 2 * kWeidemanN * 2> vbuf{};  // 2M entries
    double* v = vbuf.data();
    v[0] = 0.0;
    for (int idx = 1; idx < 2 * M; ++idx) {
      const int k = idx - M;  // k = -M+1 .. M-1
      const double theta = k * std::numbers::pi / M;
      const double t = L * std::tan(0.5 * theta);
      v[idx] = std::exp(-t * t) * (L * L + t * t);
    }
    std::array<double, kWeidemanN> a{};
    for (int j = 1; j <= N; ++j) {
      double re = 0.0;
      for (int n = 0; n < 2 * M; ++n) {
        const int shifted = (n + M) % (2 * M);  // fftshift
        const double ang = -2.0 * std::numbers::pi * j * n / (2 * M);
        re += v[shifted] * std::cos(ang);
      }
      a[static_cast<size_t>(j - 1)] = re / (2.0 * M);
    }
    return a;
  }();
  return coeffs;
}

// w(z) for Im(z) >= 0, |z| moderate.
cplx faddeeva_upper_weideman(cplx z) {
  const int N = kWeidemanN;
  const double L = std::sqrt(N / std::numbers::sqrt2);
  const auto& a = weideman_coeffs();
  const cplx iz(-z.imag(), z.real());
  const cplx denom = L - iz;
  const cplx Z = (L + iz) / denom;
  // p(Z) = sum_j a_j Z^{j-1}, highest power first for Horner.
  cplx p(0.0, 0.0);
  for (int j = N - 1; j >= 0; --j) p = p * Z + a[static_cast<size_t>(j)];
  return 2.0 * p / (denom * denom) + 1.0 / (kSqrtPi * denom);
}

// Laplace continued fraction, accurate for |z| >= ~8 on the upper half plane.
cplx faddeeva_upper_cf(cplx z) {
  constexpr int kDepth = 32;
  cplx t = z;
  for (int k = kDepth; k >= 1; --k) t = z - (0.5 * k) / t;
  return cplx(0.0, 1.0) / (kSqrtPi * t);
}

cplx faddeeva_upper(cplx z) {
  return std::norm(z) >= 64.0 ? faddeeva_upper_cf(z) : faddeeva_upper_weideman(z);
}

cplx cexp_of_neg_square(cplx z) {
  // exp(-z^2) = exp(b^2 - a^2) * (cos(2ab) - i sin(2ab)) for z = a + ib.
  const double a = z.real(), b = z.imag();
  const double mag = std::exp(b * b - a * a);
  const double ph = -2.0 * a * b;
  return {mag * std::cos(ph), mag * std::sin(ph)};
}

}  // namespace

std::complex<double> faddeeva_w(std::complex<double> z) {
  if (z.imag() >= 0.0) return faddeeva_upper(z);
  return 2.0 * cexp_of_neg_square(z) - faddeeva_upper(-z);
}

std::complex<double> cerf(std::complex<double> z) {
  if (z.real() < 0.0) return -cerf(-z);
  if (z.real() == 0.0) {
    // erf(ib) = i erfi(b), erfi(b) = exp(b^2) Im w(b) for real b >= 0.
    const double b = z.imag();
    const cplx w = faddeeva_upper(cplx(std::abs(b), 0.0));
    const double erfi = std::exp(b * b) * w.imag();
    return {0.0, b >= 0.0 ? erfi : -erfi};
  }
  // erf(z) = 1 - exp(-z^2) w(iz); Im(iz) = Re(z) > 0 keeps w on the upper
  // half plane where it is bounded by 1.
  const cplx iz(-z.imag(), z.real());
  return 1.0 - cexp_of_neg_square(z) * faddeeva_upper(iz);
}

std::complex<double> erf_scaled(double a, double b) {
  if (a < 0.0) return -erf_scaled(-a, -b);
  if (a == 0.0) {
    // exp(-b^2) erf(ib) = i (2/sqrt(pi)) Dawson(b) = i Im w(b), real b >= 0.
    const cplx w = faddeeva_upper(cplx(std::abs(b), 0.0));
    const double v = w.imag();
    return {0.0, b >= 0.0 ? v : -v};
  }
  // exp(-b^2) erfc(a+ib) = exp(-a^2) exp(-2iab) w(-b + ia); every factor is
  // bounded, so the difference below never overflows.
  const double eb2 = std::exp(-b * b);
  const cplx w = faddeeva_upper(cplx(-b, a));
  const double ea2 = std::exp(-a * a);
  const double ph = -2.0 * a * b;
  const cplx rot(std::cos(ph), std::sin(ph));
  return cplx(eb2, 0.0) - ea2 * rot * w;
}

}  // namespace pilotloc
