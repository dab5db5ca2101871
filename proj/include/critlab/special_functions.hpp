#pragma once

#include <complex>

namespace critlab {

/// Gamma function for x > 0.
double gamma_fn(double x);

/// Gauss series of 2F1(a, b; c; x), valid for |x| <= 1/2 (throws otherwise).
double hyp2f1_series(double a, double b, double c, double x);

/// 2F1(1/3, 2/3; 4/3; x) on [0, 1). Pass `one_minus_x` when it is known more
/// accurately than 1 - x.
double hyp2f1_131343(double x);
double hyp2f1_131343(double x, double one_minus_x);

/// Arithmetic-geometric mean of positive a and b.
double agm(double a, double b);

/// Complete elliptic integral of the first kind K(k), given the complementary
/// modulus k' = sqrt(1 - k^2).
double ellipk_from_kprime(double kprime);
double ellipk(double k);

struct JacobiTriple {
  std::complex<double> sn;
  std::complex<double> cn;
  std::complex<double> dn;
};

/// sn, cn, dn of real argument u for modulus k (complementary modulus kp).
JacobiTriple jacobi_real(double u, double k, double kp);

/// sn, cn, dn of complex argument with real modulus 0 <= k < 1.
JacobiTriple jacobi(std::complex<double> u, double k, double kp);

}  // namespace critlab
