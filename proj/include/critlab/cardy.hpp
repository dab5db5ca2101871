#pragma once

namespace critlab {

/// Corner-angle data for a rectangle of aspect ratio r (vertical over horizontal side).
struct CardyInput {
  double theta = 0.0;       // corners map to e^{+-i theta}, -e^{-+i theta} on the unit circle
  double eta = 0.0;         // sin^2(theta)
  double one_minus_eta = 0.0;
  double k = 0.0;           // elliptic modulus, K(k') / (2 K(k)) = r
  double kprime = 0.0;
  double one_minus_k = 0.0;
};

/// Aspect ratio of the rectangle [-K(k), K(k)] x [0, K(k')], namely K(k') / (2 K(k)),
/// for k = sin(phi).
double aspect_of_angle(double phi);

/// Throws std::domain_error for r outside (1e-6, 1e6).
CardyInput theta_of_r(double r);

/// (3 Gamma(2/3) / Gamma(1/3)^2) eta^(1/3) 2F1(1/3, 2/3; 4/3; eta).
double cardy_value(double eta);
double cardy_value(double eta, double one_minus_eta);

/// Horizontal crossing probability of a rectangle with aspect ratio r.
double cardy(double r);

/// Crossing probability of the equilateral triangle from one side to a segment of length x
/// at the opposite vertex; throws for x outside [0,1].
double carleson_triangle(double x);

}  // namespace critlab
