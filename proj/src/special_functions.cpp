#include "critlab/special_functions.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace critlab {

double gamma_fn(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("gamma_fn requires x > 0");
  return std::tgamma(x);
}

double hyp2f1_series(double a, double b, double c, double x) {
  if (std::abs(x) > 0.5 + 1e-15) throw std::domain_error("hypergeometric series used outside |x| <= 1/2");
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < 2000; ++n) {
    term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * x;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

double hyp2f1_131343(double x) { return hyp2f1_131343(x, 1.0 - x); }

double hyp2f1_131343(double x, double one_minus_x) {
  if (!(x >= 0.0 && x < 1.0) || !(one_minus_x > 0.0))
    throw std::domain_error("2F1(1/3,2/3;4/3;x) requires x in [0,1)");
  constexpr double a = 1.0 / 3, b = 2.0 / 3, c = 4.0 / 3;
  if (x <= 0.5) return hyp2f1_series(a, b, c, x);
  // x -> 1 - x connection formula; here c - a - b = 1/3 and c - a = 1, so the first
  // hypergeometric collapses to (1 - y)^(-a) = x^(-1/3).
  const double y = one_minus_x;
  const double g1 = gamma_fn(c) * gamma_fn(c - a - b) / (gamma_fn(c - a) * gamma_fn(c - b));
  const double g2 = gamma_fn(c) * std::tgamma(a + b - c) / (gamma_fn(a) * gamma_fn(b));
  const double first = g1 * std::pow(x, -a);
  const double second = g2 * std::cbrt(y) * hyp2f1_series(c - a, c - b, c - a - b + 1, y);
  return first + second;
}

double agm(double a, double b) {
  if (!(a >= 0.0 && b >= 0.0)) throw std::domain_error("agm needs nonnegative arguments");
  for (int n = 0; n < 64 && std::abs(a - b) > 1e-16 * a; ++n) {
    const double m = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = m;
  }
  return 0.5 * (a + b);
}

double ellipk_from_kprime(double kprime) {
  if (!(kprime > 0.0 && kprime <= 1.0)) throw std::domain_error("complementary modulus must lie in (0,1]");
  return std::numbers::pi / (2.0 * agm(1.0, kprime));
}

double ellipk(double k) {
  if (!(k >= 0.0 && k < 1.0)) throw std::domain_error("modulus must lie in [0,1)");
  return ellipk_from_kprime(std::sqrt((1.0 - k) * (1.0 + k)));
}

JacobiTriple jacobi_real(double u, double k, double kp) {
  if (kp == 0.0) {
    const double s = std::tanh(u), c = 1.0 / std::cosh(u);
    return {s, c, c};
  }
  if (k == 0.0) return {std::sin(u), std::cos(u), 1.0};
  // Descending Landen / AGM scheme.
  constexpr int kMax = 40;
  std::array<double, kMax + 1> a{}, c{};
  a[0] = 1.0;
  double b = kp;
  c[0] = k;
  int n = 0;
  while (n < kMax && std::abs(c[n]) > 1e-17) {
    a[n + 1] = 0.5 * (a[n] + b);
    c[n + 1] = 0.5 * (a[n] - b);
    b = std::sqrt(a[n] * b);
    ++n;
  }
  double phi = std::ldexp(a[n] * u, n);
  for (int m = n; m > 0; --m) {
    phi = 0.5 * (phi + std::asin(c[m] / a[m] * std::sin(phi)));
  }
  const double sn = std::sin(phi), cn = std::cos(phi);
  // dn^2 = (1 - k|sn|)(1 + k|sn|) with 1 - k|sn| formed without cancellation.
  const double as = std::abs(sn);
  const double one_minus = kp * kp / (1.0 + k) + k * cn * cn / (1.0 + as);
  const double dn = std::sqrt(one_minus * (1.0 + k * as));
  return {sn, cn, dn};
}

JacobiTriple jacobi(std::complex<double> u, double k, double kp) {
  const JacobiTriple r = jacobi_real(u.real(), k, kp);
  const JacobiTriple i = jacobi_real(u.imag(), kp, k);
  const double s = r.sn.real(), c = r.cn.real(), d = r.dn.real();
  const double s1 = i.sn.real(), c1 = i.cn.real(), d1 = i.dn.real();
  const double m = k * k;
  const double den = c1 * c1 + m * s * s * s1 * s1;
  return {std::complex<double>(s * d1, c * d * s1 * c1) / den,
          std::complex<double>(c * c1, -s * d * s1 * d1) / den,
          std::complex<double>(d * c1 * d1, -m * s * c * s1) / den};
}

}  // namespace critlab
