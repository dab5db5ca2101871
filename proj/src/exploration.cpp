#include "critlab/exploration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>

#include "critlab/rng.hpp"

namespace critlab {

namespace {

constexpr std::array<Hex, 6> kDirs{{{1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}}};
const double kRowHeight = std::sqrt(3.0) / 2.0;

int floor_half(int y) { return y >= 0 ? y / 2 : -((-y + 1) / 2); }

Hex operator+(Hex a, Hex b) { return {a.i + b.i, a.j + b.j}; }
Hex operator-(Hex a, Hex b) { return {a.i - b.i, a.j - b.j}; }

// Third hexagon at the vertex ahead of the edge between L and R when L lies on the left.
Hex ahead(Hex left, Hex right) {
  const Hex d = right - left;
  for (int n = 0; n < 6; ++n)
    if (kDirs[n] == d) return left + kDirs[(n + 1) % 6];
  throw std::logic_error("interface edge between non-adjacent hexagons");
}

enum class Side { board, open, closed, stop_bc, stop_cd };

template <class Reveal>
ExplorationPath run(const HexBoard& board, Reveal&& reveal) {
  ExplorationPath path;
  path.revealed.assign(board.cell_count(), HexState::unknown);
  const int w = board.width(), h = board.height();
  const auto side = [&](Hex x) {
    const int col = board.column(x);
    if (x.j < 0) return Side::stop_bc;
    if (x.j >= h) return Side::closed;
    if (col < 0) return Side::open;
    if (col >= w) return Side::stop_cd;
    return Side::board;
  };

  // Start on the edge between the closed hexagon above A and the open one to its left,
  // pointing at the corner hexagon of the board.
  const Hex first = board.hex(0, h - 1);
  Hex left = first + kDirs[2];
  Hex right = first + kDirs[3];
  const Vec2 lo = board.lower_left(), hi = board.upper_right();
  path.vertices.push_back({lo.x, hi.y});
  path.turns.push_back('-');

  const std::size_t max_steps = 6 * static_cast<std::size_t>(w + 4) * (h + 4);
  for (std::size_t step = 0; step < max_steps; ++step) {
    const Hex front = ahead(left, right);
    const Vec2 v = (board.center(left) + board.center(right) + board.center(front)) * (1.0 / 3.0);
    path.vertices.push_back(v);
    const Side s = side(front);
    if (s == Side::stop_bc || s == Side::stop_cd) {
      path.turns.push_back('-');
      path.stop_cause = s == Side::stop_bc ? StopCause::hit_BC : StopCause::hit_CD;
      path.vertices.push_back(s == Side::stop_bc ? Vec2{v.x, lo.y} : Vec2{hi.x, v.y});
      path.turns.push_back('-');
      return path;
    }
    bool open = s == Side::open;
    if (s == Side::board) {
      const int idx = board.index(front);
      if (path.revealed[idx] == HexState::unknown) {
        path.revealed[idx] = reveal(idx) ? HexState::open : HexState::closed;
        path.reveal_order.push_back(static_cast<std::uint32_t>(idx));
      }
      open = path.revealed[idx] == HexState::open;
    }
    // Open ahead: keep it on the right and turn left.
    path.turns.push_back(open ? 'L' : 'R');
    if (open)
      right = front;
    else
      left = front;
  }
  path.stop_cause = StopCause::exhausted;
  return path;
}

}  // namespace

const char* to_string(StopCause c) {
  switch (c) {
    case StopCause::hit_CD:
      return "hit_CD";
    case StopCause::hit_BC:
      return "hit_BC";
    case StopCause::exhausted:
      return "exhausted";
  }
  return "?";
}

HexBoard::HexBoard(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw std::invalid_argument("hex board needs positive dimensions");
  std::map<std::pair<int, int>, std::uint32_t> where;
  const auto add = [&](Hex h, bool board) {
    where[{h.i, h.j}] = static_cast<std::uint32_t>(triplet_.sites.size());
    triplet_.sites.push_back(site(h));
    triplet_.positions.push_back(center(h));
    triplet_.interior.push_back(board ? 1 : 0);
  };
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) add(hex(x, y), true);
  for (int y = 0; y < height; ++y) add(hex(-1, y), false);
  for (int y = 0; y < height; ++y) add(hex(width, y), false);

  const std::size_t n_board = static_cast<std::size_t>(width) * height;
  const auto guard = [&](std::uint32_t s) { return s < n_board ? 0 : (s < n_board + height ? 1 : 2); };
  // Triangular-lattice edge directions (1,0), (0,1), (1,-1) in axial coordinates.
  constexpr std::array<Hex, 3> kEdgeDirs{{{1, 0}, {0, 1}, {1, -1}}};
  for (std::uint32_t s = 0; s < triplet_.sites.size(); ++s) {
    const Hex h{triplet_.sites[s].i, triplet_.sites[s].j};
    for (int e = 0; e < 3; ++e) {
      const Hex t = h + kEdgeDirs[e];
      const auto it = where.find({t.i, t.j});
      if (it == where.end()) continue;
      const std::uint32_t u = it->second;
      const int gs = guard(s), gu = guard(u);
      if (gs != 0 && gu != 0) continue;
      DiscreteTriplet::Edge edge;
      edge.a = s;
      edge.b = u;
      edge.ref = {h.i, h.j, e};
      edge.in_i = gs == 1 || gu == 1;
      edge.in_j = gs == 2 || gu == 2;
      triplet_.edges.push_back(edge);
    }
  }
  triplet_.mesh = 1.0;
  triplet_.id = "hexboard-" + std::to_string(width) + "x" + std::to_string(height);
}

Hex HexBoard::hex(int x, int y) const { return {x - floor_half(y), y}; }

int HexBoard::column(Hex h) const { return h.i + floor_half(h.j); }

bool HexBoard::inside(Hex h) const {
  const int x = column(h);
  return h.j >= 0 && h.j < height_ && x >= 0 && x < width_;
}

int HexBoard::index(Hex h) const {
  if (!inside(h)) throw std::out_of_range("hexagon outside the board");
  return h.j * width_ + column(h);
}

Hex HexBoard::hex_at(int index) const { return hex(index % width_, index / width_); }

Vec2 HexBoard::center(Hex h) const { return {h.i + 0.5 * h.j, kRowHeight * h.j}; }

Vec2 HexBoard::lower_left() const { return {-0.25, -0.5 * kRowHeight}; }

Vec2 HexBoard::upper_right() const { return {width_ - 0.25, (height_ - 0.5) * kRowHeight}; }

double HexBoard::aspect() const { return height_ * kRowHeight / width_; }

std::vector<std::uint8_t> HexBoard::crossing_status(std::span<const std::uint8_t> board) const {
  if (board.size() != static_cast<std::size_t>(cell_count()))
    throw std::invalid_argument("board status has the wrong size");
  std::vector<std::uint8_t> status(triplet_.sites.size(), 1);
  std::copy(board.begin(), board.end(), status.begin());
  return status;
}

std::vector<std::uint8_t> HexBoard::sample_board(double p, std::uint64_t seed,
                                                 std::uint64_t k) const {
  const std::uint64_t key = sample_key(seed, k);
  std::vector<std::uint8_t> status(cell_count());
  for (int n = 0; n < cell_count(); ++n)
    status[n] = keyed_uniform(key, object_key(site(hex_at(n)))) < p ? 1 : 0;
  return status;
}

ExplorationPath explore(const HexBoard& board, double p, std::uint64_t seed, std::uint64_t k) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0,1]");
  const std::uint64_t key = sample_key(seed, k);
  return run(board, [&](int idx) {
    return keyed_uniform(key, object_key(board.site(board.hex_at(idx)))) < p;
  });
}

ExplorationPath explore(const HexBoard& board, std::span<const std::uint8_t> status) {
  if (status.size() != static_cast<std::size_t>(board.cell_count()))
    throw std::invalid_argument("board status has the wrong size");
  return run(board, [&](int idx) { return status[idx] != 0; });
}

bool crossing_by_exploration(const HexBoard& board, std::span<const std::uint8_t> status) {
  return explore(board, status).stop_cause == StopCause::hit_CD;
}

RectangleConformalMap board_halfplane_map(const HexBoard& board) {
  const Vec2 lo = board.lower_left(), hi = board.upper_right();
  return {hi.x - lo.x, hi.y - lo.y, MapTarget::halfplane};
}

std::vector<Complex> path_to_halfplane(const ExplorationPath& path, const HexBoard& board) {
  const RectangleConformalMap map = board_halfplane_map(board);
  const Vec2 lo = board.lower_left();
  std::vector<Complex> out;
  out.reserve(path.vertices.size());
  for (const Vec2& v : path.vertices) {
    const double x = std::clamp(v.x - lo.x, 0.0, map.width());
    const double y = std::clamp(v.y - lo.y, 0.0, map.height());
    out.push_back(map.map({x, y}));
  }
  return out;
}

void write_path_csv(std::ostream& out, const ExplorationPath& path) {
  out << "t_index,x,y,turn\n";
  char buf[96];
  for (std::size_t n = 0; n < path.vertices.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g,%c\n", n, path.vertices[n].x,
                  path.vertices[n].y, path.turns[n]);
    out << buf;
  }
}

}  // namespace critlab
