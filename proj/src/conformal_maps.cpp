#include "critlab/conformal_maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "critlab/special_functions.hpp"

namespace critlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const Complex kI{0.0, 1.0};

}  // namespace

RectangleConformalMap::RectangleConformalMap(double width, double height, MapTarget target)
    : width_(width), height_(height), target_(target) {
  if (!(width > 0.0 && height > 0.0)) throw std::invalid_argument("rectangle sides must be positive");
  mod_ = theta_of_r(height / width);
  big_k_ = ellipk_from_kprime(mod_.kprime);
}

bool RectangleConformalMap::contains(Complex z) const {
  const double tol = 1e-9 * std::max(width_, height_);
  return z.real() >= -tol && z.real() <= width_ + tol && z.imag() >= -tol && z.imag() <= height_ + tol;
}

MapValue RectangleConformalMap::from_sn(Complex s, Complex ds) const {
  const double k = mod_.k;
  const double c = 1.0 / std::sqrt(k);
  switch (target_) {
    case MapTarget::sn_halfplane:
      return {s, ds};
    case MapTarget::halfplane: {
      const double lambda = 2.0 * k / mod_.one_minus_k;
      const Complex den = 1.0 - s;
      return {lambda * (s + 1.0 / k) / den, lambda * (1.0 + 1.0 / k) / (den * den) * ds};
    }
    case MapTarget::disk: {
      const Complex den = s + kI * c;
      return {kI * (s - kI * c) / den, -2.0 * c / (den * den) * ds};
    }
    case MapTarget::strip: {
      Complex ratio = (s + c) / (c - s);
      if (ratio.imag() == 0.0) ratio = Complex(ratio.real(), 0.0);
      double arg = std::arg(ratio);
      if (arg < 0.0) arg += 2.0 * std::numbers::pi;
      const Complex phi = Complex(std::log(std::abs(ratio)), arg) / std::numbers::pi;
      return {phi, 2.0 * c / (std::numbers::pi * (c * c - s * s)) * ds};
    }
  }
  throw std::logic_error("unknown map target");
}

MapValue RectangleConformalMap::operator()(Complex z) const {
  if (!contains(z)) throw std::domain_error("point outside the rectangle");
  const double scale = 2.0 * big_k_ / width_;
  const Complex u = scale * z - big_k_;
  const JacobiTriple t = jacobi(u, mod_.k, mod_.kprime);
  return from_sn(t.sn, t.cn * t.dn * scale);
}

MapValue RectangleConformalMap::disk_value(Complex z) const {
  const double scale = 2.0 * big_k_ / width_;
  const JacobiTriple t = jacobi(scale * z - big_k_, mod_.k, mod_.kprime);
  const double c = 1.0 / std::sqrt(mod_.k);
  const Complex den = t.sn + kI * c;
  return {kI * (t.sn - kI * c) / den, -2.0 * c / (den * den) * t.cn * t.dn * scale};
}

Complex RectangleConformalMap::to_sn(Complex w) const {
  const double k = mod_.k;
  const double c = 1.0 / std::sqrt(k);
  switch (target_) {
    case MapTarget::sn_halfplane:
      return w;
    case MapTarget::halfplane: {
      const double lambda = 2.0 * k / mod_.one_minus_k;
      // w = lambda (s + 1/k) / (1 - s)
      return (w - lambda / k) / (w + lambda);
    }
    case MapTarget::disk: {
      // w = i (s - ic) / (s + ic)
      const Complex v = -kI * w;
      return kI * c * (1.0 + v) / (1.0 - v);
    }
    case MapTarget::strip:
      return c * std::tanh(std::numbers::pi * w / 2.0);
  }
  throw std::logic_error("unknown map target");
}

Complex RectangleConformalMap::inverse(Complex w) const {
  const Complex s = to_sn(w);
  const double c = 1.0 / std::sqrt(mod_.k);
  const Complex target = kI * (s - kI * c) / (s + kI * c);
  // Coarse grid guess in disk coordinates, then damped Newton kept inside the rectangle.
  Complex z{width_ / 2, height_ / 2};
  double best = kInf;
  constexpr int kGrid = 24;
  for (int a = 0; a < kGrid; ++a)
    for (int b = 0; b < kGrid; ++b) {
      const Complex cand{width_ * (a + 0.5) / kGrid, height_ * (b + 0.5) / kGrid};
      const double d = std::abs(disk_value(cand).w - target);
      if (d < best) best = d, z = cand;
    }
  // The derivative vanishes at the corners, so steps are halved until the residual drops.
  for (int it = 0; it < 100 && best > 0.0; ++it) {
    const MapValue v = disk_value(z);
    Complex step = (v.w - target) / v.dw;
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
    bool improved = false;
    for (int h = 0; h < 40; ++h, step *= 0.5) {
      Complex next = z - step;
      next = Complex(std::clamp(next.real(), 0.0, width_), std::clamp(next.imag(), 0.0, height_));
      const double d = std::abs(disk_value(next).w - target);
      if (d < best) {
        best = d;
        z = next;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return z;
}

std::array<Complex, 4> RectangleConformalMap::corner_images() const {
  const double k = mod_.k;
  switch (target_) {
    case MapTarget::sn_halfplane:
      return {Complex(-1.0), Complex(1.0), Complex(1.0 / k), Complex(-1.0 / k)};
    case MapTarget::halfplane:
      return {Complex(1.0), Complex(kInf), Complex(halfplane_d()), Complex(0.0)};
    case MapTarget::disk: {
      const double th = mod_.theta;
      return {-std::polar(1.0, th), std::polar(1.0, -th), std::polar(1.0, th), -std::polar(1.0, -th)};
    }
    case MapTarget::strip:
    {
      const double c = 1.0 / std::sqrt(k);
      const double len = std::log((c + 1.0) / (c - 1.0)) / std::numbers::pi;
      return {Complex(-len, 0.0), Complex(len, 0.0), Complex(len, 1.0), Complex(-len, 1.0)};
    }
  }
  throw std::logic_error("unknown map target");
}

double RectangleConformalMap::halfplane_d() const {
  const double k = mod_.k;
  const double one_minus_k = mod_.one_minus_k;
  return -4.0 * k / (one_minus_k * one_minus_k);
}

RectangleConformalMap rect_to_disk(double r) { return {1.0, r, MapTarget::disk}; }
RectangleConformalMap rect_to_strip(double r) { return {1.0, r, MapTarget::strip}; }
RectangleConformalMap rect_to_halfplane(double r) { return {1.0, r, MapTarget::halfplane}; }

}  // namespace critlab
