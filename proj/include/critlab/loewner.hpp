#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <ostream>
#include <string>
#include <vector>

namespace critlab {

using Complex = std::complex<double>;

enum class DrivingOrigin { synthetic_brownian, extracted, constant };

struct DrivingFunction {
  std::vector<double> times;   // strictly increasing, times[0] = 0
  std::vector<double> values;
  DrivingOrigin origin = DrivingOrigin::constant;
  double kappa = 0.0;          // for synthetic_brownian
  std::string curve_id;

  double final_time() const { return times.back(); }
  /// Linear interpolation; throws std::out_of_range outside [0, final_time()].
  double at(double t) const;
};

/// Throws std::invalid_argument unless the invariants hold.
void validate(const DrivingFunction& xi);

DrivingFunction constant_driving(double c, double t_end);

struct ForwardSolution {
  std::vector<double> t;
  std::vector<Complex> psi;
  bool swallowed = false;
  double swallow_time = 0.0;
};

/// Integrates d psi / dt = 2 / (psi - xi(t)) from psi(0) = z0 with an embedded
/// Runge-Kutta 5(4) pair, stopping at the grid times of xi and at t_end. The run stops
/// early, flagged as swallowed, once |psi - xi| drops below 1e-9 (1 + |z0|).
ForwardSolution solve_forward(const DrivingFunction& xi, Complex z0, double t_end,
                              double tolerance = 1e-13);

/// Elementary map removing the vertical slit [x, x + i h]: x + sqrt((z - x)^2 + h^2),
/// capacity h^2 / 4.
Complex slit_map(Complex z, double x, double h);
/// Inverse of slit_map, onto the upper half-plane minus the slit.
Complex slit_map_inverse(Complex w, double x, double h);

struct Trace {
  std::vector<double> times;
  std::vector<Complex> points;
  DrivingFunction driving;
  std::optional<double> kappa;
};

/// Brownian driving sqrt(kappa) B on a grid of step dt, constant on each step; the trace
/// is recovered at every `stride`-th step by composing inverse slit maps.
Trace sample_sle(double kappa, int n_steps, double dt, std::uint64_t seed, std::uint64_t k = 0,
                 int stride = 1);

/// Driving function only (no trace), for ensembles.
DrivingFunction sample_driving(double kappa, int n_steps, double dt, std::uint64_t seed,
                               std::uint64_t k = 0);

/// Forward composition of slit maps; the hydrodynamic normalization is
/// apply(z) = z + 2 capacity() / z + O(z^-2).
class Zipper {
 public:
  explicit Zipper(double start = 0.0) : tip_(start) {}

  /// Flattens the segment from the current tip to `z` (given in the original plane).
  /// Returns false, leaving the state unchanged, when the image of z is not above the
  /// real line by more than `min_height`.
  bool advance(Complex z, double min_height = 1e-14);
  /// Same with z already mapped by apply().
  bool advance_image(Complex w, double min_height = 1e-14);
  Complex apply(Complex z) const;
  double capacity() const { return capacity_; }
  double tip() const { return tip_; }
  std::size_t steps() const { return slits_.size(); }

 private:
  struct Slit {
    double x, h;
  };
  std::vector<Slit> slits_;
  double capacity_ = 0.0;
  double tip_;
};

struct ZipperReport {
  DrivingFunction driving;
  std::size_t skipped = 0;
};

class CurveRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Driving function of a polyline that starts on the real line and stays in the closed
/// upper half-plane. When max_points > 0 only the first max_points vertices are used, and
/// extraction stops once the capacity reaches t_max. Throws CurveRejected for curves
/// leaving the half-plane.
ZipperReport extract_driving(const std::vector<Complex>& curve, std::size_t max_points = 0,
                             const std::string& curve_id = "",
                             double t_max = std::numeric_limits<double>::infinity());

struct KappaEstimate {
  double kappa = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> grid;
  std::vector<double> variance;
  double skewness = 0.0;         // of increments scaled per grid interval
  double excess_kurtosis = 0.0;
  double lag1_correlation = 0.0;
  double markov_correlation = 0.0;  // corr(xi(t_e), xi(t_f) - xi(t_e)) with t_e mid-grid
  std::size_t n_curves = 0;
};

/// Geometric grid of n times between t_min and t_max. A positive `quantum` rounds the
/// times to its multiples (duplicates dropped) so they fall on a sampling grid.
std::vector<double> geometric_grid(double t_min, double t_max, int n, double quantum = 0.0);

/// Fits Var[xi(t) - xi(0)] = kappa t by least squares weighted by 1 / t^2 over `grid`;
/// bootstrap interval over curves. Throws std::invalid_argument for fewer than
/// `min_curves` curves or a grid beyond some curve's final time.
KappaEstimate estimate_kappa(const std::vector<DrivingFunction>& ensemble,
                             const std::vector<double>& grid, std::uint64_t seed,
                             int bootstrap = 200, std::size_t min_curves = 100);

/// Columns t,xi,curve_id.
void write_driving_csv(std::ostream& out, const std::vector<DrivingFunction>& ensemble);
/// Columns t,x,y,curve_id.
void write_trace_csv(std::ostream& out, const std::vector<Trace>& traces);

}  // namespace critlab
