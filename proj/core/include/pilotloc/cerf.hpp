#pragma once

#include <complex>

namespace pilotloc {

// Faddeeva function w(z) = exp(-z^2) * erfc(-i z).
// Valid for any z; arguments below the real axis use the reflection
// w(z) = 2 exp(-z^2) - w(-z), which can overflow for strongly negative
// imaginary parts (that growth is genuine, not an algorithm artifact).
std::complex<double> faddeeva_w(std::complex<double> z);

// erf of a complex argument.
// Magnitude grows like exp(b^2 - a^2) for z = a + ib; callers that need a
// bounded quantity should use erf_scaled instead.
std::complex<double> cerf(std::complex<double> z);

// erf_scaled(a, b) = exp(-b^2) * erf(a + ib).
// Bounded by 2 for all real (a, b): the Gaussian prefactor of the
// Fourier-shifted integration variable is fused into the erf evaluation
// so no intermediate exceeds exp(0).
std::complex<double> erf_scaled(double a, double b);

}  // namespace pilotloc
