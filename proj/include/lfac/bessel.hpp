#pragma once

#include <complex>

namespace lfac {

/// Exponentially scaled modified Bessel functions of orders 0 and 1 at one
/// complex argument z with Re(z) > 0:
///   i0 = I0(z)·e^{-z},  i1 = I1(z)·e^{-z},  k0 = K0(z)·e^{z},  k1 = K1(z)·e^{z}.
/// The scaling keeps products such as I(a)·K(b) finite for large |z|.
struct ScaledBessel {
  std::complex<double> i0;
  std::complex<double> i1;
  std::complex<double> k0;
  std::complex<double> k1;
};

/// I0 and I1 use the ascending series (in extended precision) below this
/// |z| and the Hankel asymptotic expansion above it.
inline constexpr double kBesselSeriesLimit = 12.0;

/// K0 and K1 switch to a continued fraction from this |z| on, where the
/// ascending series loses accuracy to cancellation.
inline constexpr double kBesselContinuedFractionLimit = 2.0;

/// Throws NumericalError if Re(z) <= 0, z is not finite, or a series fails to
/// converge.
ScaledBessel scaled_bessel(std::complex<double> z);

/// I0(z)/I1(z), evaluated without forming either function unscaled.
std::complex<double> bessel_i0_over_i1(std::complex<double> z);

}  // namespace lfac
