#pragma once

#include <array>
#include <complex>

#include "critlab/cardy.hpp"

namespace critlab {

using Complex = std::complex<double>;

enum class MapTarget {
  sn_halfplane,    // corners BL, BR, TR, TL -> -1, 1, 1/k, -1/k
  halfplane,       // corners TL, BL, BR, TR -> 0, 1, infinity, d < 0
  disk,            // corners TR, BR, BL, TL -> e^{i theta}, e^{-i theta}, -e^{i theta}, -e^{-i theta}
  strip,           // {0 < Im < 1}; left-side midpoint -> -infinity, right-side midpoint -> +infinity
};

struct MapValue {
  Complex w;
  Complex dw;  // derivative with respect to z
};

/// Conformal map of the rectangle [0, width] x [0, height] built from the Jacobi sn
/// function of modulus k with K(k') / (2 K(k)) = height / width.
class RectangleConformalMap {
 public:
  RectangleConformalMap(double width, double height, MapTarget target);

  double width() const { return width_; }
  double height() const { return height_; }
  MapTarget target() const { return target_; }
  const CardyInput& modulus() const { return mod_; }
  double quarter_period() const { return big_k_; }

  bool contains(Complex z) const;

  /// Throws std::domain_error for z outside the closed rectangle.
  MapValue operator()(Complex z) const;
  Complex map(Complex z) const { return (*this)(z).w; }

  /// Numeric inverse (Newton from a coarse grid guess).
  Complex inverse(Complex w) const;

  /// Images of the corners BL, BR, TR, TL (infinite entries for points sent to infinity).
  std::array<Complex, 4> corner_images() const;

  /// Image of corner D for the half-plane target.
  double halfplane_d() const;

 private:
  MapValue from_sn(Complex s, Complex ds) const;
  Complex to_sn(Complex w) const;
  MapValue disk_value(Complex z) const;

  double width_;
  double height_;
  MapTarget target_;
  CardyInput mod_;
  double big_k_;
};

RectangleConformalMap rect_to_disk(double r);
RectangleConformalMap rect_to_strip(double r);
RectangleConformalMap rect_to_halfplane(double r);

}  // namespace critlab
