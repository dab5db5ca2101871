#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "critlab/geometry.hpp"
#include "critlab/rng.hpp"

namespace critlab {

using Complex = std::complex<double>;

// ---------------------------------------------------------------- spins

/// Simple graph of Ising spins.
struct SpinGraph {
  int n = 0;
  std::vector<std::array<int, 2>> edges;
};

/// Axis-parallel M x N grid, nearest neighbours.
SpinGraph grid_graph(int rows, int cols);

class SizeCapExceeded : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Energy -sum s_p s_q - h sum s_p (J = 1, beta absorbs 1/kT). Bit k of a state is +1.
double ising_energy(const SpinGraph& g, std::uint32_t state, double h);

/// Exact Boltzmann probabilities of all 2^n states; n <= 20.
std::vector<double> ising_exact(const SpinGraph& g, double beta, double h = 0.0);

struct SpinStatistics {
  double magnetization = 0.0;   // mean of sum s_p / n
  double nn_correlation = 0.0;  // mean of s_p s_q over edges
  std::uint64_t sweeps = 0;
};

/// Single-spin-flip Metropolis from the all-plus state.
SpinStatistics ising_metropolis(const SpinGraph& g, double beta, double h, std::uint64_t sweeps,
                                std::uint64_t burn_in, std::uint64_t seed);

/// beta_c with sinh(2 beta_c) = 1.
double critical_beta();
/// Probability q = exp(-2 beta) that a tile between equal spins cuts their diagonal.
double cut_probability(double beta);

// ---------------------------------------------------------------- tiles and loops

/// Rectangle of rows x cols square tiles (tile (x, y) is [x, x+1] x [y, y+1]). Corners
/// with x + y odd carry spins, the others are dual sites; every tile joins two spins
/// along one diagonal. Tile sides are indexed horizontals first.
class TileDomain {
 public:
  enum class Boundary { free, chordal };

  /// Free boundary: arcs around every boundary spin, so all strands close.
  TileDomain(int rows, int cols);
  /// Chordal: openings at boundary sides a and b, boundary strands paired consecutively
  /// from a on both routes. Throws std::invalid_argument when the routes have odd length.
  TileDomain(int rows, int cols, int side_a, int side_b);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int tile_count() const { return rows_ * cols_; }
  int side_count() const { return static_cast<int>(mid_.size()); }
  Boundary boundary() const { return boundary_; }
  int side_a() const { return a_; }
  int side_b() const { return b_; }

  int horizontal(int x, int y) const { return y * cols_ + x; }
  int vertical(int x, int y) const { return cols_ * (rows_ + 1) + y * (cols_ + 1) + x; }
  bool is_horizontal(int side) const { return side < cols_ * (rows_ + 1); }
  Vec2 midpoint(int side) const { return mid_[side]; }
  /// Side with the given midpoint, or -1.
  int side_at(Vec2 midpoint) const;
  bool on_boundary(int side) const { return boundary_arc_[side] != -2; }
  /// Side paired with `side` by a boundary arc; -1 for the openings a, b; -2 inside.
  int boundary_partner(int side) const { return boundary_arc_[side]; }
  /// Sides S, E, N, W of a tile.
  std::array<int, 4> tile_sides(int tile) const;
  /// Tiles containing a side (second entry -1 on the boundary).
  std::array<int, 2> side_tiles(int side) const { return side_tiles_[side]; }
  /// True when the spins of the tile sit at its SW and NE corners.
  bool spins_sw_ne(int tile) const;

  int spin_count() const { return static_cast<int>(spin_pos_.size()); }
  Vec2 spin_position(int s) const { return spin_pos_[s]; }
  /// Spin indices at the two spin corners of a tile.
  std::array<int, 2> tile_spins(int tile) const;
  SpinGraph spin_graph() const;

  /// Boundary side midpoint closest to (x, y) in domain coordinates.
  int nearest_boundary_side(Vec2 p) const;
  /// Opening sides at the midpoints of the left and right edges.
  static TileDomain rectangle_chordal(int rows, int cols);

 private:
  void build();
  void pair_boundary_free();
  void pair_boundary_chordal();

  int rows_, cols_;
  Boundary boundary_ = Boundary::free;
  int a_ = -1, b_ = -1;
  std::vector<Vec2> mid_;
  std::vector<int> boundary_arc_;
  std::vector<std::array<int, 2>> side_tiles_;
  std::vector<int> boundary_cycle_;
  std::vector<Vec2> spin_pos_;
  std::vector<int> corner_spin_;
};

/// Per tile: false joins (S,W) and (N,E) by quarter circles, true joins (S,E) and (N,W).
struct LoopConfiguration {
  const TileDomain* domain = nullptr;
  std::vector<std::uint8_t> tiles;

  /// Whether the tile's arcs cross its spin diagonal.
  bool cuts(int tile) const;
  int cut_count() const;        // c
  int preserve_count() const;   // d
  /// Number of closed loops (the a -> b strand is not counted).
  int loop_count() const;       // b
  /// FK clusters of spins joined through preserved diagonals.
  int cluster_count() const;
  /// Side reached from `side` through the arc of `tile`.
  int through_tile(int tile, int side) const;
};

struct LoopCounts {
  int b = 0, c = 0, d = 0;
};
LoopCounts counts(const LoopConfiguration& cfg);

/// Tiles between opposite spins cut; equal spins cut when coin(tile) is true.
LoopConfiguration spins_to_loops(const TileDomain& dom, const std::vector<int>& spins,
                                 const std::function<bool(int)>& cut_equal);
/// Coins with P(cut) = q from the counter-based stream of (seed, k).
LoopConfiguration spins_to_loops(const TileDomain& dom, const std::vector<int>& spins, double q,
                                 std::uint64_t seed, std::uint64_t k = 0);

/// FK weight q^c p^d 2^k (k clusters) with q = exp(-2 beta).
double loop_weight(const LoopConfiguration& cfg, double beta);
/// Critical simplified weight sqrt(2)^b.
double critical_loop_weight(const LoopConfiguration& cfg);

enum class LoopSampler { exact_enumeration, tile_flip_metropolis };

struct LoopEnsembleOptions {
  LoopSampler method = LoopSampler::tile_flip_metropolis;
  double beta = 0.0;               // 0 selects the critical point
  std::uint64_t burn_in_sweeps = 1000;
  std::uint64_t thin_sweeps = 1;
};

/// Configuration enumeration is exact: state bit t is tile t. Weights normalized.
std::vector<double> exact_loop_law(const TileDomain& dom, double beta = 0.0);
/// Loop law induced by exact Ising spins and independent coins on equal-spin tiles.
std::vector<double> induced_loop_law(const TileDomain& dom, double beta = 0.0);

struct LoopChain {
  std::uint64_t accepted = 0;
  std::uint64_t proposed = 0;
  std::vector<std::uint64_t> loop_histogram;
};

/// Runs a tile-flip chain and hands every `thin_sweeps`-th state after burn-in to `visit`.
/// Acceptance min(1, ratio) with ratio sqrt(2)^db at criticality, else
/// (p / (q sqrt 2))^dd sqrt(2)^db.
LoopChain sample_critical_loops(const TileDomain& dom, std::uint64_t n, std::uint64_t seed,
                                const LoopEnsembleOptions& opt,
                                const std::function<void(const LoopConfiguration&)>& visit);

// ---------------------------------------------------------------- observable

/// Sides of the a -> b strand walked from b, with winding in quarter turns
/// (counterclockwise positive) relative to the direction of entry at b.
struct StrandStep {
  int side;
  int winding;
};
std::vector<StrandStep> walk_from_b(const LoopConfiguration& cfg);

/// Phase exp(-i pi w / 4) of a winding of w quarter turns (half the turning angle).
Complex winding_phase(int quarter_turns);

struct Observable {
  std::vector<Complex> values;  // per side
  std::vector<double> visits;   // visit frequency per side
  double n_samples = 0.0;
};

/// Accumulates F over an explicit weighted ensemble.
class ObservableAccumulator {
 public:
  explicit ObservableAccumulator(const TileDomain& dom);
  void add(const LoopConfiguration& cfg, double weight = 1.0);
  Observable result() const;

 private:
  const TileDomain* dom_;
  std::vector<Complex> sum_;
  std::vector<double> visit_;
  double total_ = 0.0;
};

Observable smirnov_observable_exact(const TileDomain& dom);
Observable smirnov_observable_mc(const TileDomain& dom, std::uint64_t samples, std::uint64_t seed,
                                 std::uint64_t burn_in_sweeps = 1000);

/// Residual F(c_nw) - F(c_se) - i (F(c_ne) - F(c_sw)) on the four sides around each tile,
/// read in the frame where the tile's spin diagonal is vertical.
struct CrResidual {
  std::vector<Complex> residual;  // per tile; zero for skipped tiles
  std::vector<std::uint8_t> tested;
  std::size_t skipped = 0;
  double max_abs = 0.0;
  double rms = 0.0;
};
CrResidual discrete_cr_residual(const TileDomain& dom, const Observable& f,
                                bool interior_only = true);

/// Residual of a Monte Carlo observable split into noise and systematic parts with
/// independent batches (chains seeded per batch).
struct CrNoiseSplit {
  double rms = 0.0;              // residual of the pooled observable
  double noise_rms = 0.0;        // its statistical part, from the batch spread
  double systematic_sq = 0.0;    // mean |R|^2 minus the noise variance
  double systematic_sq_se = 0.0; // jackknife standard error over batches
  std::size_t tiles = 0;
  std::uint64_t sweeps = 0;
};
CrNoiseSplit cr_residual_batches(const TileDomain& dom, std::uint64_t sweeps_per_batch, int batches,
                                 std::uint64_t seed, std::uint64_t burn_in_sweeps = 1000);

/// Tile value F(S) + F(N), equal to F(E) + F(W) where the local relation holds; its
/// projections onto the phase lines of the sides recover F.
std::vector<Complex> tile_values(const TileDomain& dom, const Observable& f);

/// (Phi')^{1/2} at tile centres for the map of the rectangle (centred on the openings)
/// onto the unit strip, a -> -infinity, b -> +infinity.
std::vector<Complex> strip_reference(const TileDomain& dom);

struct StripComparison {
  double mean_abs_phase = 0.0;   // mean |arg(f / reference)| over the central tiles
  double modulus_ratio = 0.0;    // mean |f| / |reference|
  double modulus_spread = 0.0;   // relative standard deviation of that ratio
  std::size_t tiles = 0;
};
/// Central tiles: centre within the middle half of the rectangle in both directions.
StripComparison compare_to_strip(const TileDomain& dom, const Observable& f);

// ---------------------------------------------------------------- spin interfaces

/// Spins on an axis-parallel rows x cols box at sites (x, y), with fixed plus spins on the
/// left and bottom and minus spins on the top and right. The interface between them runs
/// on the dual lattice from the top-left to the bottom-right corner.
class DobrushinBox {
 public:
  DobrushinBox(int rows, int cols, double beta, std::uint64_t seed, std::uint64_t k = 0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  /// Sequential Metropolis sweeps.
  void sweep(std::uint64_t n = 1);
  int spin(int x, int y) const;  // ghosts outside the box
  /// Dual vertices of the interface with minus on its left; ties at a vertex with four
  /// interface edges turn left.
  std::vector<Vec2> interface() const;
  /// Interface mapped to the upper half-plane: top-left corner to 0, bottom-right to
  /// infinity, bottom-left to 1. The final vertex (the far corner) is dropped.
  std::vector<Complex> interface_halfplane() const;

 private:
  int rows_, cols_;
  double beta_;
  std::vector<std::int8_t> s_;
  CounterRng rng_;
  double accept_[5];
};

/// Observable CSV: side_x,side_y,re,im,n with n the visit frequency.
void write_observable_csv(std::ostream& out, const TileDomain& dom, const Observable& f);

}  // namespace critlab
