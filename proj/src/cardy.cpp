#include "critlab/cardy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "critlab/special_functions.hpp"

namespace critlab {

double aspect_of_angle(double phi) {
  // K(k') / (2 K(k)) with K(k) = pi / (2 agm(1, k')).
  return agm(1.0, std::cos(phi)) / (2.0 * agm(1.0, std::sin(phi)));
}

namespace {

struct Modulus {
  double k;
  double kprime;
  double one_minus_k;
};

/// Modulus for r >= 1/2, where k = sin(phi) with phi <= pi/4.
Modulus solve_tall(double r) {
  constexpr double kLogMin = -700.0;
  if (r > aspect_of_angle(std::exp(kLogMin))) {
    const double k = 4.0 * std::exp(-std::numbers::pi * r);
    return {k, 1.0, 1.0 - k};
  }
  double lo = kLogMin, hi = std::log(std::numbers::pi / 4);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    // aspect_of_angle decreases with phi.
    if (aspect_of_angle(std::exp(mid)) > r) lo = mid;
    else hi = mid;
  }
  const double phi = std::exp(0.5 * (lo + hi));
  return {std::sin(phi), std::cos(phi), 1.0 - std::sin(phi)};
}

}  // namespace

CardyInput theta_of_r(double r) {
  if (!(r > 1e-6 && r < 1e6)) throw std::domain_error("extreme aspect ratio");
  Modulus m;
  if (r >= 0.5) {
    m = solve_tall(r);
  } else {
    // Exchanging the sides maps r to 1/(4r) and k to k'.
    const Modulus d = solve_tall(1.0 / (4.0 * r));
    const double phi = std::atan2(d.k, d.kprime);
    const double s = std::sin(0.5 * phi);
    m = {d.kprime, d.k, 2.0 * s * s};
  }
  CardyInput in;
  in.k = m.k;
  in.kprime = m.kprime;
  in.one_minus_k = m.one_minus_k;
  const double ratio = m.one_minus_k / (1.0 + m.k);
  in.eta = ratio * ratio;
  in.one_minus_eta = 4.0 * m.k / ((1.0 + m.k) * (1.0 + m.k));
  in.theta = std::asin(ratio);
  return in;
}

double cardy_value(double eta) { return cardy_value(eta, 1.0 - eta); }

double cardy_value(double eta, double one_minus_eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::domain_error("cross-ratio must lie in [0,1]");
  if (eta == 0.0) return 0.0;
  if (one_minus_eta <= 0.0) return 1.0;
  const double prefactor = 3.0 * gamma_fn(2.0 / 3) / std::pow(gamma_fn(1.0 / 3), 2);
  return prefactor * std::cbrt(eta) * hyp2f1_131343(eta, one_minus_eta);
}

double cardy(double r) {
  const CardyInput in = theta_of_r(r);
  return cardy_value(in.eta, in.one_minus_eta);
}

double carleson_triangle(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("segment fraction must lie in [0,1]");
  return x;
}

}  // namespace critlab
