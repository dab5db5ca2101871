#include "critlab/fk_ising.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "critlab/conformal_maps.hpp"
#include "critlab/rng.hpp"
#include "critlab/union_find.hpp"

namespace critlab {

// ---------------------------------------------------------------- spins

SpinGraph grid_graph(int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid_graph: empty grid");
  SpinGraph g;
  g.n = rows * cols;
  for (int y = 0; y < rows; ++y)
    for (int x = 0; x < cols; ++x) {
      const int v = y * cols + x;
      if (x + 1 < cols) g.edges.push_back({v, v + 1});
      if (y + 1 < rows) g.edges.push_back({v, v + cols});
    }
  return g;
}

namespace {

int spin_of(std::uint32_t state, int k) { return (state >> k) & 1 ? 1 : -1; }

}  // namespace

double ising_energy(const SpinGraph& g, std::uint32_t state, double h) {
  double e = 0.0;
  for (const auto& ed : g.edges) e -= spin_of(state, ed[0]) * spin_of(state, ed[1]);
  for (int k = 0; k < g.n; ++k) e -= h * spin_of(state, k);
  return e;
}

std::vector<double> ising_exact(const SpinGraph& g, double beta, double h) {
  if (g.n > 20) throw SizeCapExceeded("ising_exact: more than 20 spins");
  const std::uint32_t count = std::uint32_t{1} << g.n;
  std::vector<double> energy(count);
  double e_min = 0.0;
  for (std::uint32_t s = 0; s < count; ++s) {
    energy[s] = ising_energy(g, s, h);
    e_min = std::min(e_min, energy[s]);
  }
  std::vector<double> p(count);
  double z = 0.0;
  for (std::uint32_t s = 0; s < count; ++s) z += p[s] = std::exp(-beta * (energy[s] - e_min));
  for (double& x : p) x /= z;
  return p;
}

SpinStatistics ising_metropolis(const SpinGraph& g, double beta, double h, std::uint64_t sweeps,
                                std::uint64_t burn_in, std::uint64_t seed) {
  std::vector<std::vector<int>> nbr(g.n);
  for (const auto& e : g.edges) {
    nbr[e[0]].push_back(e[1]);
    nbr[e[1]].push_back(e[0]);
  }
  std::vector<int> s(g.n, 1);
  CounterRng rng(seed, 0x69736e67);
  SpinStatistics st;
  double mag = 0.0, corr = 0.0;
  for (std::uint64_t sw = 0; sw < burn_in + sweeps; ++sw) {
    for (int step = 0; step < g.n; ++step) {
      const int v = static_cast<int>(rng.below(g.n));
      double local = h;
      for (int u : nbr[v]) local += s[u];
      const double de = 2.0 * s[v] * local;
      if (de <= 0.0 || rng.uniform() < std::exp(-beta * de)) s[v] = -s[v];
    }
    if (sw < burn_in) continue;
    double m = 0.0, c = 0.0;
    for (int v = 0; v < g.n; ++v) m += s[v];
    for (const auto& e : g.edges) c += s[e[0]] * s[e[1]];
    mag += m / g.n;
    if (!g.edges.empty()) corr += c / static_cast<double>(g.edges.size());
  }
  st.sweeps = sweeps;
  if (sweeps > 0) {
    st.magnetization = mag / static_cast<double>(sweeps);
    st.nn_correlation = corr / static_cast<double>(sweeps);
  }
  return st;
}

double critical_beta() { return 0.5 * std::log(1.0 + std::numbers::sqrt2); }

double cut_probability(double beta) { return std::exp(-2.0 * beta); }

// ---------------------------------------------------------------- tiles

TileDomain::TileDomain(int rows, int cols) : rows_(rows), cols_(cols) {
  build();
  pair_boundary_free();
}

TileDomain::TileDomain(int rows, int cols, int side_a, int side_b)
    : rows_(rows), cols_(cols), boundary_(Boundary::chordal), a_(side_a), b_(side_b) {
  build();
  pair_boundary_chordal();
}

TileDomain TileDomain::rectangle_chordal(int rows, int cols) {
  const int ya = (rows - 1) / 2;
  const int yb = cols % 2 == 0 ? ya : ya + 1;
  if (yb >= rows) throw std::invalid_argument("rectangle_chordal: no opening pair of even routes");
  const TileDomain probe(rows, cols);
  return TileDomain(rows, cols, probe.vertical(0, ya), probe.vertical(cols, yb));
}

void TileDomain::build() {
  if (rows_ < 1 || cols_ < 1) throw std::invalid_argument("TileDomain: empty domain");
  const int nh = cols_ * (rows_ + 1);
  const int nv = (cols_ + 1) * rows_;
  mid_.resize(nh + nv);
  side_tiles_.assign(nh + nv, {-1, -1});
  boundary_arc_.assign(nh + nv, -2);
  for (int y = 0; y <= rows_; ++y)
    for (int x = 0; x < cols_; ++x) {
      const int s = horizontal(x, y);
      mid_[s] = {x + 0.5, static_cast<double>(y)};
      if (y > 0 && y < rows_)
        side_tiles_[s] = {(y - 1) * cols_ + x, y * cols_ + x};
      else
        side_tiles_[s] = {(y == 0 ? 0 : rows_ - 1) * cols_ + x, -1};
    }
  for (int y = 0; y < rows_; ++y)
    for (int x = 0; x <= cols_; ++x) {
      const int s = vertical(x, y);
      mid_[s] = {static_cast<double>(x), y + 0.5};
      if (x > 0 && x < cols_)
        side_tiles_[s] = {y * cols_ + x - 1, y * cols_ + x};
      else
        side_tiles_[s] = {y * cols_ + (x == 0 ? 0 : cols_ - 1), -1};
    }
  // Boundary sides counterclockwise from the bottom-left corner.
  boundary_cycle_.clear();
  for (int x = 0; x < cols_; ++x) boundary_cycle_.push_back(horizontal(x, 0));
  for (int y = 0; y < rows_; ++y) boundary_cycle_.push_back(vertical(cols_, y));
  for (int x = cols_ - 1; x >= 0; --x) boundary_cycle_.push_back(horizontal(x, rows_));
  for (int y = rows_ - 1; y >= 0; --y) boundary_cycle_.push_back(vertical(0, y));
  for (int s : boundary_cycle_) boundary_arc_[s] = -1;

  corner_spin_.assign((rows_ + 1) * (cols_ + 1), -1);
  spin_pos_.clear();
  for (int y = 0; y <= rows_; ++y)
    for (int x = 0; x <= cols_; ++x)
      if ((x + y) % 2 == 1) {
        corner_spin_[y * (cols_ + 1) + x] = static_cast<int>(spin_pos_.size());
        spin_pos_.push_back({static_cast<double>(x), static_cast<double>(y)});
      }
}

namespace {

// Lattice point shared by two sides that meet (unit sides given by their midpoints).
Vec2 shared_corner(Vec2 m1, Vec2 m2) {
  const auto ends = [](Vec2 m) {
    const bool horizontal = std::abs(m.y - std::round(m.y)) < 1e-9;
    return horizontal ? std::array<Vec2, 2>{Vec2{m.x - 0.5, m.y}, Vec2{m.x + 0.5, m.y}}
                      : std::array<Vec2, 2>{Vec2{m.x, m.y - 0.5}, Vec2{m.x, m.y + 0.5}};
  };
  const auto e1 = ends(m1), e2 = ends(m2);
  for (const Vec2& p : e1)
    for (const Vec2& q : e2)
      if ((p - q).norm() < 1e-9) return p;
  throw std::logic_error("shared_corner: sides do not meet");
}

}  // namespace

void TileDomain::pair_boundary_free() {
  const int n = static_cast<int>(boundary_cycle_.size());
  for (int k = 0; k < n; ++k) {
    const int s = boundary_cycle_[k];
    const int t = boundary_cycle_[(k + 1) % n];
    const Vec2 p = shared_corner(mid_[s], mid_[t]);
    if ((std::lround(p.x) + std::lround(p.y)) % 2 == 1) {
      boundary_arc_[s] = t;
      boundary_arc_[t] = s;
    }
  }
}

void TileDomain::pair_boundary_chordal() {
  const int n = static_cast<int>(boundary_cycle_.size());
  const auto ia = std::find(boundary_cycle_.begin(), boundary_cycle_.end(), a_);
  const auto ib = std::find(boundary_cycle_.begin(), boundary_cycle_.end(), b_);
  if (ia == boundary_cycle_.end() || ib == boundary_cycle_.end() || a_ == b_)
    throw std::invalid_argument("TileDomain: openings must be distinct boundary sides");
  const int pa = static_cast<int>(ia - boundary_cycle_.begin());
  const int pb = static_cast<int>(ib - boundary_cycle_.begin());
  const int route = ((pb - pa) % n + n) % n - 1;
  if (route % 2 != 0) throw std::invalid_argument("TileDomain: openings leave an odd boundary route");
  for (int from : {pa, pb}) {
    const int to = from == pa ? pb : pa;
    for (int k = (from + 1) % n; k != to; k = (k + 2) % n) {
      const int s = boundary_cycle_[k];
      const int t = boundary_cycle_[(k + 1) % n];
      boundary_arc_[s] = t;
      boundary_arc_[t] = s;
    }
  }
}

std::array<int, 4> TileDomain::tile_sides(int tile) const {
  const int x = tile % cols_, y = tile / cols_;
  return {horizontal(x, y), vertical(x + 1, y), horizontal(x, y + 1), vertical(x, y)};
}

bool TileDomain::spins_sw_ne(int tile) const {
  const int x = tile % cols_, y = tile / cols_;
  return (x + y) % 2 == 1;
}

std::array<int, 2> TileDomain::tile_spins(int tile) const {
  const int x = tile % cols_, y = tile / cols_;
  const int w = cols_ + 1;
  if (spins_sw_ne(tile)) return {corner_spin_[y * w + x], corner_spin_[(y + 1) * w + x + 1]};
  return {corner_spin_[y * w + x + 1], corner_spin_[(y + 1) * w + x]};
}

SpinGraph TileDomain::spin_graph() const {
  SpinGraph g;
  g.n = spin_count();
  for (int t = 0; t < tile_count(); ++t) g.edges.push_back(tile_spins(t));
  return g;
}

int TileDomain::side_at(Vec2 m) const {
  const double fx = m.x - std::floor(m.x), fy = m.y - std::floor(m.y);
  if (fy == 0.0 && fx == 0.5) {
    const int x = static_cast<int>(std::floor(m.x)), y = static_cast<int>(m.y);
    if (x >= 0 && x < cols_ && y >= 0 && y <= rows_) return horizontal(x, y);
  } else if (fx == 0.0 && fy == 0.5) {
    const int x = static_cast<int>(m.x), y = static_cast<int>(std::floor(m.y));
    if (x >= 0 && x <= cols_ && y >= 0 && y < rows_) return vertical(x, y);
  }
  return -1;
}

int TileDomain::nearest_boundary_side(Vec2 p) const {
  int best = boundary_cycle_.front();
  for (int s : boundary_cycle_)
    if ((mid_[s] - p).norm() < (mid_[best] - p).norm()) best = s;
  return best;
}

// ---------------------------------------------------------------- loops

namespace {

enum Dir { east = 0, north = 1, west = 2, south = 3 };

const Vec2 kDir[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};

// Slot of `tile` at `side`; slot 1 of a boundary side is its boundary arc.
int slot_of(const TileDomain& dom, int side, int tile) { return dom.side_tiles(side)[0] == tile ? 0 : 1; }

struct Step {
  int side;
  int slot;
};

// Follows the arc leaving `side` through `slot`; side -1 marks an opening.
Step follow(const LoopConfiguration& cfg, int side, int slot) {
  const TileDomain& dom = *cfg.domain;
  const int tile = dom.side_tiles(side)[slot];
  if (tile >= 0) {
    const int next = cfg.through_tile(tile, side);
    return {next, slot_of(dom, next, tile)};
  }
  const int partner = dom.boundary_partner(side);
  return {partner, 1};
}

// Direction of travel when leaving `tile` through `side`.
int exit_direction(const TileDomain& dom, int tile, int side) {
  const auto s = dom.tile_sides(tile);
  if (side == s[0]) return south;
  if (side == s[1]) return east;
  if (side == s[2]) return north;
  return west;
}

// Outward direction at a boundary side.
int outward(const TileDomain& dom, int side) {
  const Vec2 m = dom.midpoint(side);
  if (dom.is_horizontal(side)) return m.y == 0.0 ? south : north;
  return m.x == 0.0 ? west : east;
}

int turn_between(int d_from, int d_to) {
  const int t = ((d_to - d_from) % 4 + 4) % 4;
  return t == 1 ? 1 : -1;
}

// Quarter turns of the boundary arc from side s (leaving outward) to side t.
int boundary_turn(const TileDomain& dom, int s, int t) {
  const Vec2 ms = dom.midpoint(s), mt = dom.midpoint(t);
  const Vec2 p = shared_corner(ms, mt);
  const int sign = cross(ms - p, kDir[outward(dom, s)]) > 0.0 ? 1 : -1;
  const bool corner = dom.is_horizontal(s) != dom.is_horizontal(t);
  return sign * (corner ? 3 : 2);
}

}  // namespace

int LoopConfiguration::through_tile(int tile, int side) const {
  const auto s = domain->tile_sides(tile);  // S, E, N, W
  if (tiles[tile] == 0) {
    if (side == s[0]) return s[3];
    if (side == s[3]) return s[0];
    if (side == s[2]) return s[1];
    return s[2];
  }
  if (side == s[0]) return s[1];
  if (side == s[1]) return s[0];
  if (side == s[2]) return s[3];
  return s[2];
}

bool LoopConfiguration::cuts(int tile) const {
  return (tiles[tile] == 0) == domain->spins_sw_ne(tile);
}

int LoopConfiguration::cut_count() const {
  int c = 0;
  for (int t = 0; t < domain->tile_count(); ++t) c += cuts(t);
  return c;
}

int LoopConfiguration::preserve_count() const { return domain->tile_count() - cut_count(); }

int LoopConfiguration::loop_count() const {
  const int n = domain->side_count();
  std::vector<std::uint8_t> seen(n, 0);
  int loops = 0;
  for (int start = 0; start < n; ++start) {
    if (seen[start]) continue;
    seen[start] = 1;
    bool closed = true;
    Step at{start, 0};
    while (true) {
      const Step next = follow(*this, at.side, at.slot);
      if (next.side < 0) {
        closed = false;
        break;
      }
      if (next.side == start) break;
      seen[next.side] = 1;
      at = {next.side, 1 - next.slot};
    }
    if (closed) {
      ++loops;
      continue;
    }
    at = {start, 1};
    while (true) {
      const Step next = follow(*this, at.side, at.slot);
      if (next.side < 0) break;
      seen[next.side] = 1;
      at = {next.side, 1 - next.slot};
    }
  }
  return loops;
}

int LoopConfiguration::cluster_count() const {
  UnionFind uf(domain->spin_count());
  int k = domain->spin_count();
  for (int t = 0; t < domain->tile_count(); ++t)
    if (!cuts(t)) {
      const auto sp = domain->tile_spins(t);
      if (uf.unite(sp[0], sp[1])) --k;
    }
  return k;
}

LoopCounts counts(const LoopConfiguration& cfg) {
  return {cfg.loop_count(), cfg.cut_count(), cfg.preserve_count()};
}

LoopConfiguration spins_to_loops(const TileDomain& dom, const std::vector<int>& spins,
                                 const std::function<bool(int)>& cut_equal) {
  if (static_cast<int>(spins.size()) != dom.spin_count())
    throw std::invalid_argument("spins_to_loops: wrong number of spins");
  LoopConfiguration cfg{&dom, std::vector<std::uint8_t>(dom.tile_count())};
  for (int t = 0; t < dom.tile_count(); ++t) {
    const auto sp = dom.tile_spins(t);
    const bool cut = spins[sp[0]] != spins[sp[1]] || cut_equal(t);
    // Cutting arcs are centred on the spin corners.
    cfg.tiles[t] = (cut == dom.spins_sw_ne(t)) ? 0 : 1;
  }
  return cfg;
}

LoopConfiguration spins_to_loops(const TileDomain& dom, const std::vector<int>& spins, double q,
                                 std::uint64_t seed, std::uint64_t k) {
  const std::uint64_t key = stream_key(seed, k);
  return spins_to_loops(dom, spins, [&](int t) {
    return keyed_uniform(key, static_cast<std::uint64_t>(t)) < q;
  });
}

double loop_weight(const LoopConfiguration& cfg, double beta) {
  const double q = cut_probability(beta);
  return std::pow(q, cfg.cut_count()) * std::pow(1.0 - q, cfg.preserve_count()) *
         std::pow(2.0, cfg.cluster_count());
}

double critical_loop_weight(const LoopConfiguration& cfg) {
  return std::pow(std::numbers::sqrt2, cfg.loop_count());
}

namespace {

void check_enumerable(const TileDomain& dom) {
  if (dom.tile_count() > 20) throw SizeCapExceeded("exact enumeration: more than 20 tiles");
}

LoopConfiguration from_mask(const TileDomain& dom, std::uint32_t mask) {
  LoopConfiguration cfg{&dom, std::vector<std::uint8_t>(dom.tile_count())};
  for (int t = 0; t < dom.tile_count(); ++t) cfg.tiles[t] = (mask >> t) & 1;
  return cfg;
}

}  // namespace

std::vector<double> exact_loop_law(const TileDomain& dom, double beta) {
  check_enumerable(dom);
  const std::uint32_t count = std::uint32_t{1} << dom.tile_count();
  std::vector<double> w(count);
  double z = 0.0;
  for (std::uint32_t m = 0; m < count; ++m) {
    const LoopConfiguration cfg = from_mask(dom, m);
    z += w[m] = beta > 0.0 ? loop_weight(cfg, beta) : critical_loop_weight(cfg);
  }
  for (double& x : w) x /= z;
  return w;
}

std::vector<double> induced_loop_law(const TileDomain& dom, double beta) {
  check_enumerable(dom);
  if (beta <= 0.0) beta = critical_beta();
  const SpinGraph g = dom.spin_graph();
  const std::vector<double> ps = ising_exact(g, beta);
  const double q = cut_probability(beta);
  std::vector<double> law(std::size_t{1} << dom.tile_count(), 0.0);
  std::vector<int> spins(g.n);
  std::vector<int> equal;
  std::vector<std::uint8_t> cut(dom.tile_count());
  for (std::uint32_t st = 0; st < ps.size(); ++st) {
    for (int k = 0; k < g.n; ++k) spins[k] = (st >> k) & 1 ? 1 : -1;
    equal.clear();
    for (int t = 0; t < dom.tile_count(); ++t) {
      const auto sp = dom.tile_spins(t);
      if (spins[sp[0]] == spins[sp[1]]) equal.push_back(t);
    }
    for (std::uint32_t coins = 0; coins < (std::uint32_t{1} << equal.size()); ++coins) {
      double w = ps[st];
      std::fill(cut.begin(), cut.end(), 0);
      for (std::size_t e = 0; e < equal.size(); ++e) {
        const bool c = (coins >> e) & 1;
        cut[equal[e]] = c;
        w *= c ? q : 1 - q;
      }
      const LoopConfiguration cfg = spins_to_loops(dom, spins, [&](int t) { return cut[t] != 0; });
      std::uint32_t m = 0;
      for (int t = 0; t < dom.tile_count(); ++t) m |= std::uint32_t{cfg.tiles[t]} << t;
      law[m] += w;
    }
  }
  return law;
}

namespace {

// +1 when the two arcs of `tile` lie on the same strand (a flip splits it), -1 otherwise.
int flip_loop_change(const LoopConfiguration& cfg, int tile) {
  const TileDomain& dom = *cfg.domain;
  const auto s = dom.tile_sides(tile);
  const int s1 = s[0];
  const int s2 = cfg.through_tile(tile, s1);
  // Walks away from the tile starting at `from`; returns the side through which the
  // strand re-enters the tile, or -1 at an opening.
  const auto walk = [&](int from) {
    Step at{from, 1 - slot_of(dom, from, tile)};
    while (true) {
      const Step next = follow(cfg, at.side, at.slot);
      if (next.side < 0) return -1;
      const int out = 1 - next.slot;
      if (dom.side_tiles(next.side)[out] == tile) return next.side;
      at = {next.side, out};
    }
  };
  const int back = walk(s2);
  if (back >= 0) return (back == s1) ? -1 : 1;
  const int other = walk(s1);
  return other >= 0 && other != s2 ? 1 : -1;
}

}  // namespace

LoopChain sample_critical_loops(const TileDomain& dom, std::uint64_t n, std::uint64_t seed,
                                const LoopEnsembleOptions& opt,
                                const std::function<void(const LoopConfiguration&)>& visit) {
  LoopChain chain;
  if (opt.method == LoopSampler::exact_enumeration) {
    const auto law = exact_loop_law(dom, opt.beta);
    CounterRng rng(seed, 0x6c6f6f70);
    std::vector<double> cdf(law.size());
    double acc = 0.0;
    for (std::size_t m = 0; m < law.size(); ++m) cdf[m] = acc += law[m];
    for (std::uint64_t k = 0; k < n; ++k) {
      const double u = rng.uniform() * acc;
      const auto m = static_cast<std::uint32_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      const LoopConfiguration cfg = from_mask(dom, std::min<std::uint32_t>(m, law.size() - 1));
      visit(cfg);
    }
    return chain;
  }
  const double s2 = std::numbers::sqrt2;
  const double q = opt.beta > 0.0 ? cut_probability(opt.beta) : s2 - 1.0;
  const double pd = (1.0 - q) / (q * s2);
  LoopConfiguration cfg{&dom, std::vector<std::uint8_t>(dom.tile_count())};
  // Start from all tiles cut.
  for (int t = 0; t < dom.tile_count(); ++t) cfg.tiles[t] = dom.spins_sw_ne(t) ? 0 : 1;
  CounterRng rng(seed, 0x74696c65);
  const int tiles = dom.tile_count();
  const std::uint64_t thin = std::max<std::uint64_t>(1, opt.thin_sweeps);
  const std::uint64_t total = opt.burn_in_sweeps + n * thin;
  for (std::uint64_t sw = 0; sw < total; ++sw) {
    for (int step = 0; step < tiles; ++step) {
      const int t = static_cast<int>(rng.below(tiles));
      const int db = flip_loop_change(cfg, t);
      const int dd = cfg.cuts(t) ? 1 : -1;
      double ratio = db > 0 ? s2 : 1.0 / s2;
      ratio *= dd > 0 ? pd : 1.0 / pd;
      ++chain.proposed;
      if (ratio >= 1.0 || rng.uniform() < ratio) {
        cfg.tiles[t] ^= 1;
        ++chain.accepted;
      }
    }
    if (sw >= opt.burn_in_sweeps && (sw - opt.burn_in_sweeps + 1) % thin == 0) {
      const auto b = static_cast<std::size_t>(cfg.loop_count());
      if (chain.loop_histogram.size() <= b) chain.loop_histogram.resize(b + 1, 0);
      ++chain.loop_histogram[b];
      visit(cfg);
    }
  }
  return chain;
}

// ---------------------------------------------------------------- observable

std::vector<StrandStep> walk_from_b(const LoopConfiguration& cfg) {
  const TileDomain& dom = *cfg.domain;
  if (dom.boundary() != TileDomain::Boundary::chordal)
    throw std::invalid_argument("walk_from_b: domain has no openings");
  std::vector<StrandStep> out;
  int side = dom.side_b();
  int dir = (outward(dom, side) + 2) % 4;
  int w = 0;
  out.push_back({side, 0});
  int slot = 0;
  while (true) {
    const int tile = dom.side_tiles(side)[slot];
    if (tile >= 0) {
      const int next = cfg.through_tile(tile, side);
      const int d = exit_direction(dom, tile, next);
      w += turn_between(dir, d);
      dir = d;
      side = next;
      slot = 1 - slot_of(dom, side, tile);
    } else {
      const int next = dom.boundary_partner(side);
      if (next < 0) break;
      w += boundary_turn(dom, side, next);
      dir = (outward(dom, next) + 2) % 4;
      side = next;
      slot = 0;
    }
    out.push_back({side, w});
  }
  return out;
}

Complex winding_phase(int quarter_turns) {
  const int m = ((quarter_turns % 8) + 8) % 8;
  const double r = std::numbers::sqrt2 / 2;
  const Complex t[8] = {{1, 0}, {r, -r}, {0, -1}, {-r, -r}, {-1, 0}, {-r, r}, {0, 1}, {r, r}};
  return t[m];
}

ObservableAccumulator::ObservableAccumulator(const TileDomain& dom)
    : dom_(&dom), sum_(dom.side_count()), visit_(dom.side_count(), 0.0) {}

void ObservableAccumulator::add(const LoopConfiguration& cfg, double weight) {
  for (const StrandStep& s : walk_from_b(cfg)) {
    sum_[s.side] += weight * winding_phase(s.winding);
    visit_[s.side] += weight;
  }
  total_ += weight;
}

Observable ObservableAccumulator::result() const {
  Observable f;
  f.values.resize(sum_.size());
  f.visits.resize(sum_.size());
  for (std::size_t k = 0; k < sum_.size(); ++k) {
    f.values[k] = total_ > 0 ? sum_[k] / total_ : Complex{};
    f.visits[k] = total_ > 0 ? visit_[k] / total_ : 0.0;
  }
  f.n_samples = total_;
  return f;
}

Observable smirnov_observable_exact(const TileDomain& dom) {
  check_enumerable(dom);
  ObservableAccumulator acc(dom);
  const std::uint32_t count = std::uint32_t{1} << dom.tile_count();
  for (std::uint32_t m = 0; m < count; ++m) {
    const LoopConfiguration cfg = from_mask(dom, m);
    acc.add(cfg, critical_loop_weight(cfg));
  }
  Observable f = acc.result();
  f.n_samples = 0.0;
  return f;
}

Observable smirnov_observable_mc(const TileDomain& dom, std::uint64_t samples, std::uint64_t seed,
                                 std::uint64_t burn_in_sweeps) {
  ObservableAccumulator acc(dom);
  LoopEnsembleOptions opt;
  opt.burn_in_sweeps = burn_in_sweeps;
  sample_critical_loops(dom, samples, seed, opt, [&](const LoopConfiguration& cfg) { acc.add(cfg); });
  return acc.result();
}

CrResidual discrete_cr_residual(const TileDomain& dom, const Observable& f, bool interior_only) {
  CrResidual r;
  r.residual.assign(dom.tile_count(), Complex{});
  r.tested.assign(dom.tile_count(), 0);
  double sq = 0.0;
  std::size_t n = 0;
  for (int t = 0; t < dom.tile_count(); ++t) {
    const auto s = dom.tile_sides(t);  // S, E, N, W
    bool inside = true;
    for (int side : s) inside = inside && !dom.on_boundary(side);
    if (interior_only && !inside) {
      ++r.skipped;
      continue;
    }
    // Rotate so the spin diagonal runs south to north: the sides then face NW, NE, SE, SW.
    Complex nw, ne, se, sw;
    if (dom.spins_sw_ne(t)) {
      nw = f.values[s[2]];
      ne = f.values[s[1]];
      se = f.values[s[0]];
      sw = f.values[s[3]];
    } else {
      nw = f.values[s[3]];
      ne = f.values[s[2]];
      se = f.values[s[1]];
      sw = f.values[s[0]];
    }
    const Complex res = nw - se - Complex(0, 1) * (ne - sw);
    r.residual[t] = res;
    r.tested[t] = 1;
    r.max_abs = std::max(r.max_abs, std::abs(res));
    sq += std::norm(res);
    ++n;
  }
  r.rms = n > 0 ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
  return r;
}

CrNoiseSplit cr_residual_batches(const TileDomain& dom, std::uint64_t sweeps_per_batch, int batches,
                                 std::uint64_t seed, std::uint64_t burn_in_sweeps) {
  if (batches < 2) throw std::invalid_argument("cr_residual_batches: need at least two batches");
  std::vector<std::vector<Complex>> res;
  std::vector<std::uint8_t> tested;
  for (int b = 0; b < batches; ++b) {
    const Observable f = smirnov_observable_mc(dom, sweeps_per_batch, stream_key(seed, b), burn_in_sweeps);
    const CrResidual r = discrete_cr_residual(dom, f);
    res.push_back(r.residual);
    tested = r.tested;
  }
  std::vector<int> tiles;
  for (int t = 0; t < dom.tile_count(); ++t)
    if (tested[t]) tiles.push_back(t);
  const auto nb = static_cast<double>(batches);
  // Noise-corrected mean |R|^2 from a subset of batches (all but `skip`).
  const auto estimate = [&](int skip, double* rms, double* noise) {
    const double n = skip < 0 ? nb : nb - 1;
    double sys = 0.0, raw = 0.0, var = 0.0;
    for (int t : tiles) {
      Complex mean{};
      for (int b = 0; b < batches; ++b)
        if (b != skip) mean += res[b][t];
      mean /= n;
      double s2 = 0.0;
      for (int b = 0; b < batches; ++b)
        if (b != skip) s2 += std::norm(res[b][t] - mean);
      s2 /= (n - 1);
      raw += std::norm(mean);
      var += s2 / n;
      sys += std::norm(mean) - s2 / n;
    }
    const double k = tiles.empty() ? 1.0 : static_cast<double>(tiles.size());
    if (rms) *rms = std::sqrt(raw / k);
    if (noise) *noise = std::sqrt(var / k);
    return sys / k;
  };
  CrNoiseSplit out;
  out.tiles = tiles.size();
  out.sweeps = sweeps_per_batch * static_cast<std::uint64_t>(batches);
  out.systematic_sq = estimate(-1, &out.rms, &out.noise_rms);
  if (batches > 2) {
    std::vector<double> loo(batches);
    double m = 0.0;
    for (int b = 0; b < batches; ++b) m += loo[b] = estimate(b, nullptr, nullptr);
    m /= nb;
    double v = 0.0;
    for (double x : loo) v += (x - m) * (x - m);
    out.systematic_sq_se = std::sqrt((nb - 1) / nb * v);
  }
  return out;
}

std::vector<Complex> tile_values(const TileDomain& dom, const Observable& f) {
  std::vector<Complex> out(dom.tile_count());
  for (int t = 0; t < dom.tile_count(); ++t) {
    const auto s = dom.tile_sides(t);
    out[t] = f.values[s[0]] + f.values[s[2]];
  }
  return out;
}

std::vector<Complex> strip_reference(const TileDomain& dom) {
  if (dom.boundary() != TileDomain::Boundary::chordal)
    throw std::invalid_argument("strip_reference: domain has no openings");
  const double h = dom.rows();
  const double yc = 0.5 * (dom.midpoint(dom.side_a()).y + dom.midpoint(dom.side_b()).y);
  const RectangleConformalMap map(dom.cols(), h, MapTarget::strip);
  const double shift = yc - 0.5 * h;
  std::vector<Complex> out(dom.tile_count());
  for (int t = 0; t < dom.tile_count(); ++t) {
    const double x = t % dom.cols() + 0.5;
    const double y = std::clamp(t / dom.cols() + 0.5 - shift, 0.0, h);
    // Phi' is positive on the centre line, so the principal root is continuous.
    out[t] = std::sqrt(map(Complex(x, y)).dw);
  }
  return out;
}

StripComparison compare_to_strip(const TileDomain& dom, const Observable& f) {
  const auto val = tile_values(dom, f);
  const auto ref = strip_reference(dom);
  StripComparison c;
  std::vector<double> ratio;
  double phase = 0.0;
  for (int t = 0; t < dom.tile_count(); ++t) {
    const double x = t % dom.cols() + 0.5, y = t / dom.cols() + 0.5;
    if (std::abs(x - 0.5 * dom.cols()) > 0.25 * dom.cols() || std::abs(y - 0.5 * dom.rows()) > 0.25 * dom.rows())
      continue;
    if (std::abs(val[t]) == 0.0) continue;
    phase += std::abs(std::arg(val[t] / ref[t]));
    ratio.push_back(std::abs(val[t]) / std::abs(ref[t]));
  }
  c.tiles = ratio.size();
  if (ratio.empty()) return c;
  c.mean_abs_phase = phase / static_cast<double>(ratio.size());
  double m = 0.0, v = 0.0;
  for (double r : ratio) m += r;
  m /= static_cast<double>(ratio.size());
  for (double r : ratio) v += (r - m) * (r - m);
  c.modulus_ratio = m;
  c.modulus_spread = std::sqrt(v / static_cast<double>(ratio.size())) / m;
  return c;
}

DobrushinBox::DobrushinBox(int rows, int cols, double beta, std::uint64_t seed, std::uint64_t k)
    : rows_(rows), cols_(cols), beta_(beta), s_(static_cast<std::size_t>(rows) * cols), rng_(seed, k) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("DobrushinBox: empty box");
  for (int y = 0; y < rows_; ++y)
    for (int x = 0; x < cols_; ++x)
      s_[y * cols_ + x] = (x + 0.5) / cols_ + (y + 0.5) / rows_ < 1.0 ? 1 : -1;
  for (int m = 0; m < 5; ++m) accept_[m] = std::exp(-beta_ * 2.0 * (2 * m - 4));
}

int DobrushinBox::spin(int x, int y) const {
  if (x < 0) return 1;
  if (x >= cols_ || y >= rows_) return -1;
  if (y < 0) return 1;
  return s_[y * cols_ + x];
}

void DobrushinBox::sweep(std::uint64_t n) {
  for (std::uint64_t k = 0; k < n; ++k)
    for (int y = 0; y < rows_; ++y)
      for (int x = 0; x < cols_; ++x) {
        auto& v = s_[y * cols_ + x];
        const int sum = spin(x - 1, y) + spin(x + 1, y) + spin(x, y - 1) + spin(x, y + 1);
        const int m = (v * sum + 4) / 2;
        if (m <= 2 || rng_.uniform() < accept_[m]) v = static_cast<std::int8_t>(-v);
      }
}

std::vector<Vec2> DobrushinBox::interface() const {
  Vec2 v{-0.5, rows_ - 0.5};
  Vec2 d{0, -1};
  const Vec2 end{cols_ - 0.5, -0.5};
  const auto rot = [](Vec2 e) { return Vec2{-e.y, e.x}; };
  const auto site = [this](Vec2 p) { return spin(static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))); };
  std::vector<Vec2> path{v};
  const std::size_t limit = 4 * static_cast<std::size_t>(rows_ + 2) * (cols_ + 2);
  while (!(v == end)) {
    if (path.size() > limit) throw std::logic_error("DobrushinBox: interface does not terminate");
    bool moved = false;
    for (const Vec2 e : {rot(d), d, rot(rot(rot(d)))}) {
      const Vec2 m = v + e * 0.5;
      if (site(m + rot(e) * 0.5) == -1 && site(m - rot(e) * 0.5) == 1) {
        v = v + e;
        d = e;
        moved = true;
        break;
      }
    }
    if (!moved) throw std::logic_error("DobrushinBox: interface is stuck");
    path.push_back(v);
  }
  return path;
}

std::vector<Complex> DobrushinBox::interface_halfplane() const {
  const RectangleConformalMap map(cols_, rows_, MapTarget::halfplane);
  const auto path = interface();
  std::vector<Complex> out;
  out.reserve(path.size());
  for (std::size_t n = 0; n + 1 < path.size(); ++n) {
    const double x = std::clamp(path[n].x + 0.5, 0.0, map.width());
    const double y = std::clamp(path[n].y + 0.5, 0.0, map.height());
    out.push_back(map.map({x, y}));
  }
  return out;
}

void write_observable_csv(std::ostream& out, const TileDomain& dom, const Observable& f) {
  out << "side_x,side_y,re,im,n\n";
  char buf[160];
  for (int s = 0; s < dom.side_count(); ++s) {
    const Vec2 m = dom.midpoint(s);
    std::snprintf(buf, sizeof buf, "%.1f,%.1f,%.12g,%.12g,%.12g\n", m.x, m.y, f.values[s].real(),
                  f.values[s].imag(), f.visits[s]);
    out << buf;
  }
}

}  // namespace critlab
