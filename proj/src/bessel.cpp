#include "lfac/bessel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "lfac/errors.hpp"

namespace lfac {
namespace {

using cld = std::complex<long double>;

constexpr int kMaxTerms = 600;
constexpr long double kEulerGamma = 0.577215664901532860606512090082402431L;

ScaledBessel ascending_series(std::complex<double> zd) {
  const cld z(zd.real(), zd.imag());
  const cld q = z * z / 4.0L;
  const long double eps = std::numeric_limits<long double>::epsilon();

  // t_k = q^k/(k!)^2, u_k = q^k/(k!(k+1)!)
  cld t = 1.0L, u = 1.0L;
  cld sum_i0 = t, sum_i1 = u;
  cld sum_k0 = 0.0L;
  long double harmonic = 0.0L;  // H_k
  cld sum_k1 = 2.0L * (-kEulerGamma) + 1.0L;  // psi(1) + psi(2) at k = 0
  sum_k1 *= u;
  int k = 1;
  for (; k < kMaxTerms; ++k) {
    const long double kk = static_cast<long double>(k);
    t *= q / (kk * kk);
    u *= q / (kk * (kk + 1.0L));
    harmonic += 1.0L / kk;
    sum_i0 += t;
    sum_i1 += u;
    sum_k0 += t * harmonic;
    const long double psi_sum = 2.0L * (-kEulerGamma) + 2.0L * harmonic + 1.0L / (kk + 1.0L);
    sum_k1 += u * psi_sum;
    if (std::abs(t) * (1.0L + harmonic) <= eps * std::abs(sum_i0) &&
        std::abs(u) * (1.0L + harmonic) <= eps * std::abs(sum_i1) && k > 2)
      break;
  }
  if (k == kMaxTerms) throw NumericalError("Bessel ascending series did not converge");

  const cld log_half = std::log(z / 2.0L);
  const cld i0 = sum_i0;
  const cld i1 = z / 2.0L * sum_i1;
  const cld k0 = -(log_half + kEulerGamma) * i0 + sum_k0;
  const cld k1 = 1.0L / z + log_half * i1 - z / 4.0L * sum_k1;

  const cld down = std::exp(-z);
  const cld up = std::exp(z);
  auto narrow = [](cld v) { return std::complex<double>(static_cast<double>(v.real()), static_cast<double>(v.imag())); };
  return {narrow(i0 * down), narrow(i1 * down), narrow(k0 * up), narrow(k1 * up)};
}

// Sum of a_k(nu)·(sign/z)^k, truncated at the smallest term.
cld hankel_sum(long double nu, cld z, long double sign) {
  const long double eps = std::numeric_limits<long double>::epsilon();
  const long double mu = 4.0L * nu * nu;
  cld term = 1.0L, sum = 1.0L;
  long double last = std::numeric_limits<long double>::infinity();
  for (int k = 1; k < 80; ++k) {
    const long double odd = 2.0L * k - 1.0L;
    const cld next = term * (mu - odd * odd) / (8.0L * k) * sign / z;
    const long double mag = std::abs(next);
    if (mag >= last) break;
    term = next;
    sum += term;
    last = mag;
    if (mag <= eps * std::abs(sum)) break;
  }
  return sum;
}

// Steed's continued fraction for the scaled K0 and K1 (Temme's normalization).
std::pair<cld, cld> k_continued_fraction(cld z) {
  const long double eps = std::numeric_limits<long double>::epsilon();
  const long double pi = std::numbers::pi_v<long double>;
  cld b = 2.0L * (1.0L + z);
  cld d = 1.0L / b;
  cld h = d, delh = d;
  cld q1 = 0.0L, q2 = 1.0L;
  const long double a1 = 0.25L;
  cld q = a1, c = a1;
  long double a = -a1;
  cld s = 1.0L + q * delh;
  int i = 1;
  for (; i < 10 * kMaxTerms; ++i) {
    a -= 2.0L * i;
    c = -a * c / (i + 1.0L);
    const cld qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0L;
    d = 1.0L / (b + a * d);
    delh = (b * d - 1.0L) * delh;
    h += delh;
    const cld dels = q * delh;
    s += dels;
    if (std::abs(dels) < eps * std::abs(s)) break;
  }
  if (i == 10 * kMaxTerms) throw NumericalError("Bessel K continued fraction did not converge");
  h *= a1;
  const cld k0 = std::sqrt(pi / (2.0L * z)) / s;
  const cld k1 = k0 * (z + 0.5L - h) / z;
  return {k0, k1};
}

ScaledBessel asymptotic(std::complex<double> zd) {
  const cld z(zd.real(), zd.imag());
  const long double pi = std::numbers::pi_v<long double>;
  const cld j(0.0L, 1.0L);
  const cld k_pref = std::sqrt(pi / (2.0L * z));
  const cld i_pref = 1.0L / std::sqrt(2.0L * pi * z);
  const cld sk0 = hankel_sum(0.0L, z, 1.0L);
  const cld sk1 = hankel_sum(1.0L, z, 1.0L);
  const cld si0 = hankel_sum(0.0L, z, -1.0L);
  const cld si1 = hankel_sum(1.0L, z, -1.0L);
  // Subdominant e^{-z} contribution to I_nu, relative size e^{-2 Re z}.
  const cld tail = std::exp(-2.0L * z);
  const cld i0 = i_pref * (si0 + j * tail * sk0);
  const cld i1 = i_pref * (si1 - j * tail * sk1);
  auto narrow = [](cld v) { return std::complex<double>(static_cast<double>(v.real()), static_cast<double>(v.imag())); };
  return {narrow(i0), narrow(i1), narrow(k_pref * sk0), narrow(k_pref * sk1)};
}

}  // namespace

ScaledBessel scaled_bessel(std::complex<double> z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw NumericalError("Bessel argument is not finite");
  if (z.real() <= 0.0) throw NumericalError("Bessel argument must have a positive real part");
  ScaledBessel out = std::abs(z) < kBesselSeriesLimit ? ascending_series(z) : asymptotic(z);
  if (std::abs(z) >= kBesselContinuedFractionLimit) {
    const auto [k0, k1] = k_continued_fraction(cld(z.real(), z.imag()));
    out.k0 = {static_cast<double>(k0.real()), static_cast<double>(k0.imag())};
    out.k1 = {static_cast<double>(k1.real()), static_cast<double>(k1.imag())};
  }
  return out;
}

std::complex<double> bessel_i0_over_i1(std::complex<double> z) {
  const ScaledBessel b = scaled_bessel(z);
  return b.i0 / b.i1;
}

}  // namespace lfac
