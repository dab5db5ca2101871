#include "critlab/loewner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "critlab/rng.hpp"

namespace critlab {

namespace {

// Root of u in the closed upper half-plane; on the real axis the sign follows `side`.
Complex upper_sqrt(Complex u, double side) {
  Complex s = std::sqrt(u);
  if (s.imag() < 0.0 || (s.imag() == 0.0 && side < 0.0 && s.real() > 0.0)) s = -s;
  return s;
}

double interp(const std::vector<double>& ts, const std::vector<double>& vs, double t) {
  if (t < ts.front() || t > ts.back()) throw std::out_of_range("time outside the driving grid");
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  if (it == ts.end()) return vs.back();
  const std::size_t k = static_cast<std::size_t>(it - ts.begin());
  const double a = ts[k - 1], b = ts[k];
  const double f = (t - a) / (b - a);
  return vs[k - 1] + f * (vs[k] - vs[k - 1]);
}

}  // namespace

double DrivingFunction::at(double t) const { return interp(times, values, t); }

void validate(const DrivingFunction& xi) {
  if (xi.times.empty() || xi.times.size() != xi.values.size())
    throw std::invalid_argument("driving function needs matching, nonempty time and value lists");
  if (xi.times.front() != 0.0) throw std::invalid_argument("driving function must start at t = 0");
  for (std::size_t k = 1; k < xi.times.size(); ++k)
    if (!(xi.times[k] > xi.times[k - 1])) throw std::invalid_argument("times must increase strictly");
  for (double v : xi.values)
    if (!std::isfinite(v)) throw std::invalid_argument("driving values must be finite");
}

DrivingFunction constant_driving(double c, double t_end) {
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  return {{0.0, t_end}, {c, c}, DrivingOrigin::constant, 0.0, "constant"};
}

ForwardSolution solve_forward(const DrivingFunction& xi, Complex z0, double t_end,
                              double tolerance) {
  validate(xi);
  if (z0.imag() < 0.0) throw std::invalid_argument("starting point below the real line");
  if (t_end > xi.final_time() || t_end < 0.0) throw std::invalid_argument("t_end outside the driving grid");

  // Dormand-Prince coefficients.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double eps_swallow = 1e-9 * (1.0 + std::abs(z0));
  ForwardSolution out;
  out.t.push_back(0.0);
  out.psi.push_back(z0);
  Complex y = z0;
  double t = 0.0;
  double h = std::min(1e-3, t_end > 0 ? t_end : 1e-3);

  std::size_t seg = 1;
  while (t < t_end) {
    while (seg < xi.times.size() - 1 && xi.times[seg] <= t) ++seg;
    const double seg_end = std::min(t_end, xi.times[seg]);
    const double ta = xi.times[seg - 1], tb = xi.times[seg];
    const double xa = xi.values[seg - 1], xb = xi.values[seg];
    const auto drive = [&](double s) { return xa + (s - ta) / (tb - ta) * (xb - xa); };
    const auto f = [&](double s, Complex v) { return 2.0 / (v - drive(s)); };

    if (std::abs(y - drive(t)) < eps_swallow) {
      out.swallowed = true;
      out.swallow_time = t;
      return out;
    }
    h = std::min(h, seg_end - t);
    const Complex k1 = f(t, y);
    const Complex k2 = f(t + c2 * h, y + h * (a21 * k1));
    const Complex k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Complex k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Complex k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Complex k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Complex y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Complex k7 = f(t + h, y5);
    const Complex err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double scale = tolerance * std::max(1.0, std::abs(y));
    const double ratio = std::abs(err) / scale;
    const bool finite = std::isfinite(y5.real()) && std::isfinite(y5.imag()) && std::isfinite(ratio);
    if (finite && ratio <= 1.0) {
      t = (h == seg_end - t) ? seg_end : t + h;
      y = y5;
      if (y.imag() < 0.0) y = Complex(y.real(), 0.0);
      out.t.push_back(t);
      out.psi.push_back(y);
    }
    const double grow = finite ? 0.9 * std::pow(std::max(ratio, 1e-10), -0.2) : 0.1;
    h *= std::clamp(grow, 0.1, 5.0);
    if (h < 1e-15 * std::max(1.0, t_end)) {
      // The pole 2 / (psi - xi) is reached: the point is absorbed into the hull.
      out.swallowed = true;
      out.swallow_time = t;
      return out;
    }
  }
  return out;
}

Complex slit_map(Complex z, double x, double h) {
  const Complex d = z - x;
  return x + upper_sqrt(d * d + h * h, d.real());
}

Complex slit_map_inverse(Complex w, double x, double h) {
  const Complex d = w - x;
  return x + upper_sqrt(d * d - h * h, d.real());
}

DrivingFunction sample_driving(double kappa, int n_steps, double dt, std::uint64_t seed,
                               std::uint64_t k) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("kappa must be nonnegative");
  if (n_steps < 1 || !(dt > 0.0)) throw std::invalid_argument("need n_steps >= 1 and dt > 0");
  DrivingFunction xi;
  xi.origin = DrivingOrigin::synthetic_brownian;
  xi.kappa = kappa;
  xi.curve_id = "sle-" + std::to_string(k);
  xi.times.resize(n_steps + 1);
  xi.values.resize(n_steps + 1);
  CounterRng rng(seed, k);
  const double sd = std::sqrt(kappa * dt);
  double v = 0.0;
  for (int n = 0; n <= n_steps; ++n) {
    if (n > 0) v += sd * rng.normal();
    xi.times[n] = n * dt;
    xi.values[n] = v;
  }
  return xi;
}

Trace sample_sle(double kappa, int n_steps, double dt, std::uint64_t seed, std::uint64_t k,
                 int stride) {
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  if (stride < 1) throw std::invalid_argument("stride must be positive");
  Trace tr;
  tr.kappa = kappa;
  tr.driving = sample_driving(kappa, n_steps, dt, seed, k);
  const double h = 2.0 * std::sqrt(dt);
  const auto& xi = tr.driving.values;
  tr.times.push_back(0.0);
  tr.points.push_back(xi[0]);
  for (int n = stride; n <= n_steps; n += stride) {
    // Slit n sits at xi_n in the coordinates of g_{t_{n-1}}; unzip back to the start.
    Complex w = Complex(xi[n], h);
    for (int m = n - 1; m >= 1; --m) w = slit_map_inverse(w, xi[m], h);
    tr.times.push_back(n * dt);
    tr.points.push_back(w);
  }
  return tr;
}

bool Zipper::advance(Complex z, double min_height) { return advance_image(apply(z), min_height); }

bool Zipper::advance_image(Complex w, double min_height) {
  if (!(w.imag() > min_height)) return false;
  slits_.push_back({w.real(), w.imag()});
  capacity_ += 0.25 * w.imag() * w.imag();
  tip_ = w.real();
  return true;
}

Complex Zipper::apply(Complex z) const {
  for (const Slit& s : slits_) z = slit_map(z, s.x, s.h);
  return z;
}

ZipperReport extract_driving(const std::vector<Complex>& curve, std::size_t max_points,
                             const std::string& curve_id, double t_max) {
  if (curve.size() < 2) throw CurveRejected("curve needs at least two points");
  const std::size_t n = max_points > 0 ? std::min(max_points, curve.size()) : curve.size();
  const double scale = std::accumulate(curve.begin(), curve.begin() + n, 1.0,
                                       [](double m, Complex z) { return std::max(m, std::abs(z)); });
  const double tol = 1e-12 * scale;
  if (std::abs(curve[0].imag()) > tol) throw CurveRejected("curve does not start on the real line");
  for (std::size_t k = 0; k < n; ++k)
    if (curve[k].imag() < -tol) throw CurveRejected("curve leaves the upper half-plane");

  ZipperReport rep;
  rep.driving.origin = DrivingOrigin::extracted;
  rep.driving.curve_id = curve_id;
  rep.driving.times.push_back(0.0);
  rep.driving.values.push_back(curve[0].real());
  Zipper zip(curve[0].real());
  for (std::size_t k = 1; k < n && zip.capacity() < t_max; ++k) {
    const Complex w = zip.apply(curve[k]);
    if (w.imag() < -tol) throw CurveRejected("curve is not simple: a point fell below the real line");
    if (!zip.advance_image(w, tol)) {
      ++rep.skipped;
      continue;
    }
    rep.driving.times.push_back(zip.capacity());
    rep.driving.values.push_back(w.real());
  }
  if (rep.driving.times.size() < 2) throw CurveRejected("no usable segment in the curve");
  return rep;
}

std::vector<double> geometric_grid(double t_min, double t_max, int n, double quantum) {
  if (!(t_min > 0.0 && t_max > t_min) || n < 2) throw std::invalid_argument("bad geometric grid");
  std::vector<double> g;
  for (int k = 0; k < n; ++k) {
    double t = t_min * std::pow(t_max / t_min, static_cast<double>(k) / (n - 1));
    if (quantum > 0.0) t = std::max(1.0, std::round(t / quantum)) * quantum;
    if (g.empty() || t > g.back()) g.push_back(t);
  }
  return g;
}

namespace {

double fit_kappa(const std::vector<std::vector<double>>& v, const std::vector<std::size_t>& pick,
                 const std::vector<double>& grid, std::vector<double>* variance = nullptr) {
  double num = 0.0, den = 0.0;
  const double m = static_cast<double>(pick.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t c : pick) s += v[c][g], s2 += v[c][g] * v[c][g];
    const double var = (s2 - s * s / m) / (m - 1.0);
    if (variance) variance->push_back(var);
    const double w = 1.0 / (grid[g] * grid[g]);
    num += w * grid[g] * var;
    den += w * grid[g] * grid[g];
  }
  return num / den;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

KappaEstimate estimate_kappa(const std::vector<DrivingFunction>& ensemble,
                             const std::vector<double>& grid, std::uint64_t seed, int bootstrap,
                             std::size_t min_curves) {
  if (ensemble.size() < min_curves || ensemble.size() < 3)
    throw std::invalid_argument("too few driving functions for a kappa fit");
  if (grid.empty() || grid.front() <= 0.0) throw std::invalid_argument("grid must be positive");
  std::vector<std::vector<double>> v(ensemble.size(), std::vector<double>(grid.size()));
  for (std::size_t c = 0; c < ensemble.size(); ++c) {
    const DrivingFunction& xi = ensemble[c];
    if (xi.final_time() < grid.back())
      throw std::invalid_argument("grid extends beyond a driving function");
    for (std::size_t g = 0; g < grid.size(); ++g) v[c][g] = xi.at(grid[g]) - xi.values.front();
  }

  KappaEstimate est;
  est.n_curves = ensemble.size();
  est.grid = grid;
  std::vector<std::size_t> all(ensemble.size());
  std::iota(all.begin(), all.end(), 0);
  est.kappa = fit_kappa(v, all, grid, &est.variance);

  CounterRng rng(seed, 0x6b61707061ULL);
  std::vector<double> boot;
  std::vector<std::size_t> pick(ensemble.size());
  for (int b = 0; b < bootstrap; ++b) {
    for (auto& p : pick) p = rng.below(ensemble.size());
    boot.push_back(fit_kappa(v, pick, grid));
  }
  if (!boot.empty()) {
    std::sort(boot.begin(), boot.end());
    const auto q = [&](double f) {
      return boot[std::min(boot.size() - 1, static_cast<std::size_t>(f * (boot.size() - 1) + 0.5))];
    };
    est.ci_low = q(0.025);
    est.ci_high = q(0.975);
  }

  // Increments scaled to unit variance under the fitted law.
  std::vector<double> inc, first, second;
  for (std::size_t c = 0; c < ensemble.size(); ++c) {
    double prev_v = 0.0, prev_t = 0.0;
    double last = std::nan("");
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double z = (v[c][g] - prev_v) / std::sqrt(est.kappa * (grid[g] - prev_t));
      inc.push_back(z);
      if (!std::isnan(last)) first.push_back(last), second.push_back(z);
      last = z;
      prev_v = v[c][g];
      prev_t = grid[g];
    }
  }
  const double n = static_cast<double>(inc.size());
  const double mean = std::accumulate(inc.begin(), inc.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double z : inc) {
    const double d = z - mean;
    m2 += d * d, m3 += d * d * d, m4 += d * d * d * d;
  }
  m2 /= n, m3 /= n, m4 /= n;
  est.skewness = m3 / std::pow(m2, 1.5);
  est.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  est.lag1_correlation = first.empty() ? 0.0 : correlation(first, second);

  const std::size_t e = grid.size() / 2;
  std::vector<double> before, after;
  for (const auto& row : v) before.push_back(row[e]), after.push_back(row.back() - row[e]);
  est.markov_correlation = e + 1 < grid.size() ? correlation(before, after) : 0.0;
  return est;
}

void write_driving_csv(std::ostream& out, const std::vector<DrivingFunction>& ensemble) {
  out << "t,xi,curve_id\n";
  char buf[128];
  for (const auto& xi : ensemble)
    for (std::size_t k = 0; k < xi.times.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,", xi.times[k], xi.values[k]);
      out << buf << xi.curve_id << '\n';
    }
}

void write_trace_csv(std::ostream& out, const std::vector<Trace>& traces) {
  out << "t,x,y,curve_id\n";
  char buf[128];
  for (const auto& tr : traces)
    for (std::size_t k = 0; k < tr.points.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,", tr.times[k], tr.points[k].real(),
                    tr.points[k].imag());
      out << buf << tr.driving.curve_id << '\n';
    }
}

}  // namespace critlab
