#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "critlab/fk_ising.hpp"

using namespace critlab;

namespace {

const double kSqrt2 = std::numbers::sqrt2;

nlohmann::json load(const std::string& name) {
  std::ifstream in(std::string(CRITLAB_FIXTURE_DIR) + "/" + name);
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

LoopConfiguration config_from_rows(const TileDomain& dom, const std::vector<std::string>& rows) {
  LoopConfiguration cfg{&dom, std::vector<std::uint8_t>(dom.tile_count())};
  REQUIRE(static_cast<int>(rows.size()) == dom.rows());
  for (int r = 0; r < dom.rows(); ++r) {
    const int y = dom.rows() - 1 - r;
    for (int x = 0; x < dom.cols(); ++x) cfg.tiles[y * dom.cols() + x] = rows[r].at(x) == 'B';
  }
  return cfg;
}

LoopConfiguration from_mask(const TileDomain& dom, std::uint32_t mask) {
  LoopConfiguration cfg{&dom, std::vector<std::uint8_t>(dom.tile_count())};
  for (int t = 0; t < dom.tile_count(); ++t) cfg.tiles[t] = (mask >> t) & 1;
  return cfg;
}

std::uint32_t to_mask(const LoopConfiguration& cfg) {
  std::uint32_t m = 0;
  for (std::size_t t = 0; t < cfg.tiles.size(); ++t) m |= std::uint32_t{cfg.tiles[t]} << t;
  return m;
}

// Spin vector from a state bitmask over the domain's spins.
std::vector<int> spins_of(std::uint32_t state, int n) {
  std::vector<int> s(n);
  for (int k = 0; k < n; ++k) s[k] = (state >> k) & 1 ? 1 : -1;
  return s;
}

}  // namespace

TEST_CASE("critical point and coin probabilities") {
  CHECK(std::abs(std::sinh(2 * critical_beta()) - 1.0) < 1e-14);
  CHECK(cut_probability(critical_beta()) == doctest::Approx(kSqrt2 - 1).epsilon(1e-14));
  CHECK(1 - cut_probability(critical_beta()) == doctest::Approx(2 - kSqrt2).epsilon(1e-14));
  CHECK(critical_beta() == doctest::Approx(0.4406867935).epsilon(1e-9));
}

TEST_CASE("exact Ising measure on the 2 x 2 grid") {
  const SpinGraph g = grid_graph(2, 2);
  CHECK(g.edges.size() == 4);
  for (double p : ising_exact(g, 0.0)) CHECK(p == doctest::Approx(1.0 / 16));
  const auto cold = ising_exact(g, 20.0);
  CHECK(cold[0] + cold[15] > 1 - 1e-12);
  CHECK(cold[0] == doctest::Approx(0.5));
  // Ring of four spins: Z = (2 cosh b)^4 + (2 sinh b)^4.
  const double b = 0.3, c = 2 * std::cosh(b), s = 2 * std::sinh(b);
  const double nn = (c * c * c * s + s * s * s * c) / (c * c * c * c + s * s * s * s);
  const auto p = ising_exact(g, b);
  double corr = 0.0;
  for (std::uint32_t st = 0; st < 16; ++st)
    corr += p[st] * -ising_energy(g, st, 0.0) / 4.0;
  CHECK(corr == doctest::Approx(nn).epsilon(1e-12));
  CHECK_THROWS_AS(ising_exact(grid_graph(3, 7), 0.3), SizeCapExceeded);
}

TEST_CASE("Metropolis spin sampler matches enumeration on 2 x 2") {
  const SpinGraph g = grid_graph(2, 2);
  const double beta = 0.4, h = 0.2;
  const auto p = ising_exact(g, beta, h);
  double mag = 0.0, corr = 0.0;
  for (std::uint32_t st = 0; st < 16; ++st) {
    double m = 0.0;
    for (int k = 0; k < 4; ++k) m += (st >> k) & 1 ? 1 : -1;
    mag += p[st] * m / 4;
    corr += p[st] * (-ising_energy(g, st, 0.0) / 4.0);
  }
  // Ten chains of 1e5 sweeps; the spread of their means sets sigma.
  std::vector<double> ms, cs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SpinStatistics st = ising_metropolis(g, beta, h, 100000, 100, seed);
    ms.push_back(st.magnetization);
    cs.push_back(st.nn_correlation);
  }
  const auto check = [](const std::vector<double>& v, double exact) {
    double m = 0.0, var = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) var += (x - m) * (x - m);
    const double sigma = std::sqrt(var / (v.size() - 1) / v.size());
    CHECK(std::abs(m - exact) < 4 * sigma);
  };
  check(ms, mag);
  check(cs, corr);
}

TEST_CASE("tile domain layout") {
  const TileDomain dom(6, 8);
  CHECK(dom.tile_count() == 48);
  CHECK(dom.spin_count() == 31);
  CHECK(dom.spin_graph().edges.size() == 48);
  for (int s = 0; s < dom.side_count(); ++s) CHECK(dom.side_at(dom.midpoint(s)) == s);
  CHECK(dom.side_at({0.5, 0.5}) == -1);
  int boundary = 0;
  for (int s = 0; s < dom.side_count(); ++s)
    if (dom.on_boundary(s)) {
      ++boundary;
      CHECK(dom.boundary_partner(s) >= 0);
      CHECK(dom.boundary_partner(dom.boundary_partner(s)) == s);
    }
  CHECK(boundary == 2 * (6 + 8));
  const TileDomain probe(3, 4);
  CHECK_NOTHROW(TileDomain(3, 4, probe.horizontal(0, 0), probe.horizontal(1, 0)));
  CHECK_THROWS_AS(TileDomain(3, 4, probe.horizontal(0, 0), probe.horizontal(2, 0)), std::invalid_argument);
  CHECK_THROWS_AS(TileDomain(3, 4, probe.horizontal(0, 1), probe.horizontal(2, 0)), std::invalid_argument);
}

TEST_CASE("loop counts agree with the independent oracle") {
  // Frozen from tests/oracles/tile_oracle.py (masks in tile order).
  const std::vector<int> l22{2, 3, 1, 2, 1, 2, 2, 1, 3, 4, 2, 3, 2, 3, 1, 2};
  const std::vector<int> l23{3, 4, 2, 3, 4, 5, 3, 4, 2, 3, 3, 2, 3, 4, 4, 3, 4, 5, 3, 4, 5, 6,
                             4, 5, 3, 4, 2, 3, 4, 5, 3, 4, 2, 3, 1, 2, 3, 4, 2, 3, 1, 2, 2, 1,
                             2, 3, 3, 2, 3, 4, 2, 3, 4, 5, 3, 4, 2, 3, 1, 2, 3, 4, 2, 3};
  const TileDomain d22(2, 2), d23(2, 3);
  for (std::uint32_t m = 0; m < 16; ++m) CHECK(from_mask(d22, m).loop_count() == l22[m]);
  for (std::uint32_t m = 0; m < 64; ++m) CHECK(from_mask(d23, m).loop_count() == l23[m]);
}

TEST_CASE("loops bound the clusters: b = 2k + d - V") {
  for (auto [r, c] : {std::pair{2, 3}, std::pair{3, 3}, std::pair{3, 4}}) {
    const TileDomain dom(r, c);
    for (std::uint32_t m = 0; m < (1u << dom.tile_count()); ++m) {
      const LoopConfiguration cfg = from_mask(dom, m);
      CHECK(cfg.loop_count() == 2 * cfg.cluster_count() + cfg.preserve_count() - dom.spin_count());
    }
  }
}

TEST_CASE("spins to loops: degenerate coins") {
  const TileDomain dom(4, 5);
  const std::vector<int> plus(dom.spin_count(), 1);
  const LoopConfiguration keep = spins_to_loops(dom, plus, [](int) { return false; });
  CHECK(keep.preserve_count() == dom.tile_count());
  CHECK(keep.cluster_count() == 1);
  std::vector<int> chess(dom.spin_count());
  for (int s = 0; s < dom.spin_count(); ++s)
    chess[s] = static_cast<int>(dom.spin_position(s).x) % 2 == 0 ? 1 : -1;
  const LoopConfiguration cut = spins_to_loops(dom, chess, [](int) { return false; });
  CHECK(cut.cut_count() == dom.tile_count());
  CHECK(cut.preserve_count() == 0);
  CHECK(cut.loop_count() == dom.spin_count());
  // Seeded coins are reproducible.
  CHECK(spins_to_loops(dom, plus, 0.4, 3).tiles == spins_to_loops(dom, plus, 0.4, 3).tiles);
}

TEST_CASE("loop count fixture: b = 9, c = 26, d = 22") {
  const auto j = load("fig8.json");
  const TileDomain dom(j.at("rows").get<int>(), j.at("cols").get<int>());
  const LoopConfiguration cfg = config_from_rows(dom, j.at("tiles_top_first").get<std::vector<std::string>>());
  const LoopCounts n = counts(cfg);
  CHECK(n.b == j["expected"]["b"].get<int>());
  CHECK(n.c == j["expected"]["c"].get<int>());
  CHECK(n.d == j["expected"]["d"].get<int>());
  CHECK(n.c + n.d == 48);
  // The spins are compatible: opposite spins are always cut, and the fixture's tiles are
  // reproduced when equal spins are cut exactly where the fixture cuts.
  const auto rows = j.at("spins_top_first").get<std::vector<std::string>>();
  std::vector<int> spins(dom.spin_count());
  for (int s = 0; s < dom.spin_count(); ++s) {
    const Vec2 p = dom.spin_position(s);
    const char ch = rows.at(dom.rows() - static_cast<int>(p.y)).at(static_cast<int>(p.x));
    REQUIRE(ch != '.');
    spins[s] = ch == '+' ? 1 : -1;
  }
  const LoopConfiguration again = spins_to_loops(dom, spins, [&](int t) { return cfg.cuts(t); });
  CHECK(again.tiles == cfg.tiles);
  // Weight at the critical point.
  const double q = kSqrt2 - 1, p = 2 - kSqrt2;
  CHECK(cfg.cluster_count() == 9);
  CHECK(loop_weight(cfg, critical_beta()) ==
        doctest::Approx(std::pow(2.0, 9) * std::pow(q, 26) * std::pow(p, 22)).epsilon(1e-12));
  CHECK(critical_loop_weight(cfg) == doctest::Approx(std::pow(kSqrt2, 9)));
}

TEST_CASE("critical weight: proportional to sqrt(2)^b") {
  const TileDomain dom(2, 3);
  const double ratio = loop_weight(from_mask(dom, 0), critical_beta()) / critical_loop_weight(from_mask(dom, 0));
  for (std::uint32_t m = 0; m < 64; ++m) {
    const LoopConfiguration cfg = from_mask(dom, m);
    CHECK(loop_weight(cfg, critical_beta()) / critical_loop_weight(cfg) == doctest::Approx(ratio).epsilon(1e-12));
  }
  // One extra loop multiplies the critical weight by sqrt 2.
  LoopConfiguration a = from_mask(dom, 0), b = from_mask(dom, 0);
  b.tiles[0] ^= 1;
  const int db = b.loop_count() - a.loop_count();
  REQUIRE(std::abs(db) == 1);
  CHECK(critical_loop_weight(b) / critical_loop_weight(a) == doctest::Approx(std::pow(kSqrt2, db)));
  // A chordal configuration without closed loops has weight 1.
  const TileDomain strip = TileDomain::rectangle_chordal(1, 2);
  bool seen = false;
  for (std::uint32_t m = 0; m < 4; ++m) {
    const LoopConfiguration cfg = from_mask(strip, m);
    if (cfg.loop_count() == 0) {
      seen = true;
      CHECK(critical_loop_weight(cfg) == 1.0);
    }
  }
  CHECK(seen);
}

TEST_CASE("FK equivalence: spins plus coins induce the cluster-weighted loop law") {
  for (double beta : {critical_beta(), 0.3, 0.7}) {
    const TileDomain dom(2, 4);  // 8 tiles, 7 spins
    const SpinGraph g = dom.spin_graph();
    const auto ps = ising_exact(g, beta);
    const double q = cut_probability(beta);
    std::vector<double> induced(1u << dom.tile_count(), 0.0);
    for (std::uint32_t st = 0; st < ps.size(); ++st) {
      const auto spins = spins_of(st, g.n);
      std::vector<int> equal;
      for (int t = 0; t < dom.tile_count(); ++t) {
        const auto sp = dom.tile_spins(t);
        if (spins[sp[0]] == spins[sp[1]]) equal.push_back(t);
      }
      // Sum over the coins of the equal-spin tiles.
      for (std::uint32_t coins = 0; coins < (1u << equal.size()); ++coins) {
        double w = ps[st];
        std::vector<std::uint8_t> cut(dom.tile_count(), 0);
        for (std::size_t e = 0; e < equal.size(); ++e) {
          const bool c = (coins >> e) & 1;
          cut[equal[e]] = c;
          w *= c ? q : 1 - q;
        }
        const auto cfg = spins_to_loops(dom, spins, [&](int t) { return cut[t] != 0; });
        induced[to_mask(cfg)] += w;
      }
    }
    const auto law = exact_loop_law(dom, beta);
    double err = 0.0;
    for (std::size_t m = 0; m < law.size(); ++m) err = std::max(err, std::abs(law[m] - induced[m]));
    CHECK(err < 1e-10);
    const auto lib = induced_loop_law(dom, beta);
    double lib_err = 0.0;
    for (std::size_t m = 0; m < law.size(); ++m) lib_err = std::max(lib_err, std::abs(lib[m] - induced[m]));
    CHECK(lib_err < 1e-14);
    // Counting loops instead of clusters in the power of 2 gives a different law.
    std::vector<double> literal(law.size());
    double z = 0.0;
    for (std::uint32_t m = 0; m < law.size(); ++m) {
      const LoopConfiguration cfg = from_mask(dom, m);
      z += literal[m] = std::pow(q, cfg.cut_count()) * std::pow(1 - q, cfg.preserve_count()) *
                        std::pow(2.0, cfg.loop_count());
    }
    double gap = 0.0;
    for (std::size_t m = 0; m < law.size(); ++m) gap = std::max(gap, std::abs(literal[m] / z - induced[m]));
    CHECK(gap > 1e-3);
  }
}

TEST_CASE("tile-flip Metropolis matches enumeration") {
  // One tile: two states.
  {
    const TileDomain one(1, 1);
    const double b0 = from_mask(one, 0).loop_count(), b1 = from_mask(one, 1).loop_count();
    std::uint64_t ones = 0;
    const std::uint64_t n = 200000;
    sample_critical_loops(one, n, 4, {}, [&](const LoopConfiguration& c) { ones += c.tiles[0]; });
    const double p1 = std::pow(kSqrt2, b1) / (std::pow(kSqrt2, b0) + std::pow(kSqrt2, b1));
    CHECK(std::abs(static_cast<double>(ones) / n - p1) < 4 * std::sqrt(p1 * (1 - p1) / n) * 2);
  }
  // 2 x 2 tiles, free and chordal, critical and off-critical: batch means over 10 chains.
  struct Case {
    TileDomain dom;
    double beta;
  };
  const std::vector<Case> cases{{TileDomain(2, 2), 0.0}, {TileDomain::rectangle_chordal(2, 2), 0.0},
                                {TileDomain(2, 2), 0.3}};
  for (const Case& c : cases) {
    const auto law = exact_loop_law(c.dom, c.beta);
    std::vector<std::vector<double>> freq(10, std::vector<double>(law.size(), 0.0));
    LoopEnsembleOptions opt;
    opt.beta = c.beta;
    opt.burn_in_sweeps = 100;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const LoopChain chain = sample_critical_loops(c.dom, 100000, seed, opt, [&](const LoopConfiguration& cfg) {
        freq[seed][to_mask(cfg)] += 1e-5;
      });
      CHECK(chain.accepted > 0);
      CHECK(chain.proposed == (100000 + 100) * 4);
    }
    for (std::size_t m = 0; m < law.size(); ++m) {
      double mean = 0.0, var = 0.0;
      for (const auto& f : freq) mean += f[m] / 10;
      for (const auto& f : freq) var += (f[m] - mean) * (f[m] - mean);
      const double sigma = std::sqrt(var / 9 / 10);
      CHECK(std::abs(mean - law[m]) < 4 * sigma + 1e-4);
    }
  }
  // Direct sampling from the enumerated law.
  const TileDomain d(2, 2);
  const auto law = exact_loop_law(d);
  std::vector<double> f(16, 0.0);
  LoopEnsembleOptions opt;
  opt.method = LoopSampler::exact_enumeration;
  sample_critical_loops(d, 100000, 2, opt, [&](const LoopConfiguration& cfg) { f[to_mask(cfg)] += 1e-5; });
  for (std::size_t m = 0; m < 16; ++m) CHECK(std::abs(f[m] - law[m]) < 4 * std::sqrt(law[m] / 1e5));
  CHECK_THROWS_AS(exact_loop_law(TileDomain(3, 7)), SizeCapExceeded);
}

TEST_CASE("winding phases are eighth roots") {
  CHECK(winding_phase(0) == Complex(1, 0));
  CHECK(std::abs(winding_phase(2) - Complex(0, -1)) < 1e-15);
  CHECK(std::abs(winding_phase(-1) - std::exp(Complex(0, std::numbers::pi / 4))) < 1e-15);
  CHECK(std::abs(winding_phase(4) + 1.0) < 1e-15);
  CHECK(winding_phase(8) == winding_phase(0));
}

TEST_CASE("winding fixtures: 0, pi and -pi/2") {
  const auto j = load("fig10.json");
  const int rows = j.at("rows").get<int>(), cols = j.at("cols").get<int>();
  const TileDomain probe(rows, cols);
  const auto pt = [](const nlohmann::json& v) { return Vec2{v[0].get<double>(), v[1].get<double>()}; };
  const TileDomain dom(rows, cols, probe.side_at(pt(j["a"])), probe.side_at(pt(j["b"])));
  REQUIRE(j["cases"].size() == 3);
  for (const auto& c : j["cases"]) {
    const LoopConfiguration cfg = config_from_rows(dom, c.at("tiles_top_first").get<std::vector<std::string>>());
    const int side = dom.side_at(pt(c["side"]));
    const auto walk = walk_from_b(cfg);
    CHECK(walk.front().side == dom.side_b());
    CHECK(walk.back().side == dom.side_a());
    const auto it = std::find_if(walk.begin(), walk.end(), [&](const StrandStep& s) { return s.side == side; });
    REQUIRE(it != walk.end());
    CHECK(it->winding == c["winding_quarter_turns"].get<int>());
    CHECK(it->winding * std::numbers::pi / 2 == doctest::Approx(c["winding_radians"].get<double>()));
  }
}

TEST_CASE("observable: bounds, phase lines, unvisited sides") {
  const TileDomain dom = TileDomain::rectangle_chordal(3, 4);
  const Observable f = smirnov_observable_exact(dom);
  for (int s = 0; s < dom.side_count(); ++s) {
    CHECK(std::abs(f.values[s]) <= f.visits[s] + 1e-12);
    CHECK(f.visits[s] <= 1.0 + 1e-12);
  }
  CHECK(f.visits[dom.side_a()] == doctest::Approx(1.0));
  CHECK(f.visits[dom.side_b()] == doctest::Approx(1.0));
  // Every side is crossed in one direction only, so its values lie on one line through 0;
  // on the boundary that line is fixed by the perpendicular crossing.
  std::vector<Complex> line(dom.side_count());
  for (std::uint32_t m = 0; m < (1u << dom.tile_count()); m += 7)
    for (const StrandStep& st : walk_from_b(from_mask(dom, m))) line[st.side] = winding_phase(st.winding);
  for (int s = 0; s < dom.side_count(); ++s)
    if (std::abs(line[s]) > 0) CHECK(std::abs((f.values[s] * std::conj(line[s])).imag()) < 1e-12);
  // A single configuration: sides off the strand stay zero.
  ObservableAccumulator acc(dom);
  const LoopConfiguration cfg = from_mask(dom, 0);
  acc.add(cfg);
  const Observable one = acc.result();
  const auto walk = walk_from_b(cfg);
  int zero = 0;
  for (int s = 0; s < dom.side_count(); ++s) zero += one.values[s] == Complex{};
  CHECK(zero == dom.side_count() - static_cast<int>(walk.size()));
  CHECK_THROWS_AS(walk_from_b(from_mask(TileDomain(2, 2), 0)), std::invalid_argument);
}

TEST_CASE("observable: Metropolis agrees with enumeration on 2 x 2") {
  const TileDomain dom = TileDomain::rectangle_chordal(2, 2);
  const Observable exact = smirnov_observable_exact(dom);
  std::vector<Observable> runs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) runs.push_back(smirnov_observable_mc(dom, 100000, 50 + seed, 100));
  for (int s = 0; s < dom.side_count(); ++s)
    for (int part = 0; part < 2; ++part) {
      const auto comp = [&](const Complex& z) { return part == 0 ? z.real() : z.imag(); };
      double mean = 0.0, var = 0.0;
      for (const auto& r : runs) mean += comp(r.values[s]) / 10;
      for (const auto& r : runs) var += std::pow(comp(r.values[s]) - mean, 2);
      const double sigma = std::sqrt(var / 9 / 10);
      CHECK(std::abs(mean - comp(exact.values[s])) < 4 * sigma + 1e-12);
    }
}

TEST_CASE("discrete Cauchy-Riemann residual") {
  const TileDomain dom = TileDomain::rectangle_chordal(3, 6);
  Observable f;
  f.values.assign(dom.side_count(), Complex(0.3, -0.7));
  CHECK(discrete_cr_residual(dom, f).max_abs < 1e-15);
  for (int s = 0; s < dom.side_count(); ++s) f.values[s] = dom.midpoint(s).to_complex();
  CHECK(discrete_cr_residual(dom, f, false).max_abs < 1e-13);
  f.values[dom.vertical(3, 1)] += 1.0;
  CHECK(discrete_cr_residual(dom, f).max_abs > 0.5);
  const CrResidual inner = discrete_cr_residual(dom, f);
  CHECK(inner.skipped == 18 - 4);
  // Exact enumeration: the relation holds to rounding, boundary tiles included.
  const TileDomain eight = TileDomain::rectangle_chordal(2, 4);
  const CrResidual r8 = discrete_cr_residual(eight, smirnov_observable_exact(eight), false);
  MESSAGE("8-tile exact residual max " << r8.max_abs);
  CHECK(r8.max_abs < 1e-12);
  const CrResidual r18 = discrete_cr_residual(dom, smirnov_observable_exact(dom), false);
  CHECK(r18.max_abs < 1e-12);
}

TEST_CASE("strip reference") {
  // Long thin rectangle: the map is nearly affine in the middle.
  const TileDomain thin = TileDomain::rectangle_chordal(4, 64);
  const auto ref = strip_reference(thin);
  const Complex mid = ref[2 * 64 + 32];
  for (int x = 24; x < 40; ++x)
    for (int y = 0; y < 4; ++y) CHECK(std::abs(ref[y * 64 + x] / mid - 1.0) < 0.01);
  CHECK(std::abs(std::arg(mid)) < 1e-12);
  // Exact observable on 3 x 6 tiles: the tile values follow (Phi')^{1/2} up to a real factor.
  const TileDomain dom = TileDomain::rectangle_chordal(3, 6);
  const StripComparison c = compare_to_strip(dom, smirnov_observable_exact(dom));
  CHECK(c.tiles > 0);
  CHECK(c.mean_abs_phase < 0.15);
  CHECK(c.modulus_spread < 0.1);
  CHECK_THROWS_AS(strip_reference(TileDomain(3, 6)), std::invalid_argument);
}

TEST_CASE("Dobrushin spin interface") {
  DobrushinBox box(12, 16, critical_beta(), 5);
  box.sweep(50);
  const auto path = box.interface();
  CHECK(path.front() == Vec2{-0.5, 11.5});
  CHECK(path.back() == Vec2{15.5, -0.5});
  for (std::size_t n = 1; n < path.size(); ++n) {
    const Vec2 e = path[n] - path[n - 1];
    REQUIRE(e.norm() == 1.0);
    const Vec2 m = path[n - 1] + e * 0.5, l{-e.y, e.x};
    const Vec2 left = m + l * 0.5, right = m - l * 0.5;
    CHECK(box.spin(static_cast<int>(std::lround(left.x)), static_cast<int>(std::lround(left.y))) == -1);
    CHECK(box.spin(static_cast<int>(std::lround(right.x)), static_cast<int>(std::lround(right.y))) == 1);
  }
  const auto img = box.interface_halfplane();
  CHECK(img.size() == path.size() - 1);
  CHECK(std::abs(img.front()) < 1e-9);
  for (const Complex& w : img) CHECK(w.imag() > -1e-9 * std::max(1.0, std::abs(w)));
  DobrushinBox again(12, 16, critical_beta(), 5);
  again.sweep(50);
  CHECK(again.interface() == path);
  // Deep in the ordered phase the interface hugs the straight diagonal closely.
  DobrushinBox cold(10, 10, 3.0, 1);
  cold.sweep(200);
  CHECK(cold.interface().size() < 40);
}

TEST_CASE("observable CSV") {
  const TileDomain dom = TileDomain::rectangle_chordal(2, 2);
  std::ostringstream out;
  write_observable_csv(out, dom, smirnov_observable_exact(dom));
  const std::string s = out.str();
  CHECK(s.rfind("side_x,side_y,re,im,n\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == dom.side_count() + 1);
}
