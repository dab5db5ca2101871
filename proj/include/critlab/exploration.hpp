#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "critlab/conformal_maps.hpp"
#include "critlab/crossing.hpp"
#include "critlab/geometry.hpp"

namespace critlab {

/// Axial coordinates of a triangular-lattice site, seen as a hexagon.
struct Hex {
  int i = 0;
  int j = 0;
  bool operator==(const Hex&) const = default;
};

enum class HexState : std::uint8_t { unknown, open, closed };
enum class StopCause { hit_CD, hit_BC, exhausted };

const char* to_string(StopCause c);

/// Rectangle of width x height hexagons (rows offset by half a hexagon on odd rows) with
/// corners A top left, B bottom left, C bottom right, D top right. Outside hexagons along
/// AB count as open and those along DA as closed; BC and CD stop the exploration.
class HexBoard {
 public:
  HexBoard(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  int cell_count() const { return width_ * height_; }

  /// Board hexagon at column x, row y (row 0 at the bottom).
  Hex hex(int x, int y) const;
  int column(Hex h) const;
  bool inside(Hex h) const;
  int index(Hex h) const;
  Hex hex_at(int index) const;
  Vec2 center(Hex h) const;
  SiteRef site(Hex h) const { return {h.i, h.j, 0}; }

  /// Continuous rectangle halfway between board and outside hexagons.
  Vec2 lower_left() const;
  Vec2 upper_right() const;
  double aspect() const;

  /// Board hexagons followed by one guard column on each side; I edges join the left
  /// guards to the board and J edges the right guards.
  const DiscreteTriplet& triplet() const { return triplet_; }
  /// Site status for `triplet()` with board hexagons from `board` and open guards.
  std::vector<std::uint8_t> crossing_status(std::span<const std::uint8_t> board) const;
  /// Board status of sample k of the coupled triangular-site ensemble.
  std::vector<std::uint8_t> sample_board(double p, std::uint64_t seed, std::uint64_t k) const;

 private:
  int width_;
  int height_;
  DiscreteTriplet triplet_;
};

struct ExplorationPath {
  std::vector<Vec2> vertices;
  std::vector<char> turns;  // per vertex: 'L', 'R' or '-' where no hexagon was decided
  std::vector<HexState> revealed;        // per board hexagon
  std::vector<std::uint32_t> reveal_order;
  StopCause stop_cause = StopCause::exhausted;
};

/// Lazy exploration from A: each board hexagon met in front of the interface is revealed
/// once, open with probability p, using the uniforms of the coupled ensemble.
ExplorationPath explore(const HexBoard& board, double p, std::uint64_t seed, std::uint64_t k = 0);

/// Exploration through a fully specified board configuration.
ExplorationPath explore(const HexBoard& board, std::span<const std::uint8_t> status);

bool crossing_by_exploration(const HexBoard& board, std::span<const std::uint8_t> status);

/// Image of the path under the rectangle to half-plane map (A -> 0, B -> 1, C -> infinity).
std::vector<Complex> path_to_halfplane(const ExplorationPath& path, const HexBoard& board);

RectangleConformalMap board_halfplane_map(const HexBoard& board);

/// Columns t_index,x,y,turn.
void write_path_csv(std::ostream& out, const ExplorationPath& path);

}  // namespace critlab
