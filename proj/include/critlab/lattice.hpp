#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "critlab/geometry.hpp"

namespace critlab {

enum class LatticeKind { square, triangular, hexagonal };
enum class PercolationMode { site, bond };

/// How sites (or edges) are grouped into classes that share one open probability.
enum class ClassScheme {
  uniform,       // one class
  sublattice,    // site index within the cell (edge index in bond mode)
  checkerboard,  // sublattice index times parity of i + j
};

std::string to_string(LatticeKind kind);
std::string to_string(PercolationMode mode);
LatticeKind parse_lattice_kind(const std::string& name);
PercolationMode parse_mode(const std::string& name);

/// Edge of the fundamental cell: from site `from` in cell (i, j) to site `to`
/// in cell (i + di, j + dj).
struct CellEdge {
  int from = 0;
  int to = 0;
  int di = 0;
  int dj = 0;
};

struct SiteRef {
  std::int32_t i = 0;
  std::int32_t j = 0;
  std::int32_t s = 0;
  bool operator==(const SiteRef&) const = default;
};

/// Edge identified by the cell of its `from` endpoint and its index in the cell list.
struct EdgeRef {
  std::int32_t i = 0;
  std::int32_t j = 0;
  std::int32_t e = 0;
  bool operator==(const EdgeRef&) const = default;
};

/// Counter key of a site or edge, unique for |i| < 2^31, |j| < 2^23 and s, e < 128.
std::uint64_t object_key(SiteRef site);
std::uint64_t object_key(EdgeRef edge);

class PeriodicGraph {
 public:
  PeriodicGraph(LatticeKind kind, std::array<Vec2, 2> basis, std::vector<Vec2> site_offsets,
                std::vector<CellEdge> edges);

  LatticeKind kind() const { return kind_; }
  const std::array<Vec2, 2>& basis() const { return basis_; }
  const std::vector<Vec2>& site_offsets() const { return offsets_; }
  const std::vector<CellEdge>& edges() const { return edges_; }
  int sites_per_cell() const { return static_cast<int>(offsets_.size()); }

  Vec2 position(SiteRef site) const;
  SiteRef edge_source(EdgeRef e) const;
  SiteRef edge_target(EdgeRef e) const;
  Segment segment(EdgeRef e) const;

  /// Edges incident to a site, as references anchored at their source cell.
  std::vector<EdgeRef> incident_edges(SiteRef site) const;
  int degree(int s) const;

  /// Cell coordinates (fractional) of a plane point.
  Vec2 to_cell_coords(Vec2 p) const;

  double min_edge_length() const;
  double max_edge_length() const;

 private:
  LatticeKind kind_;
  std::array<Vec2, 2> basis_;
  std::vector<Vec2> offsets_;
  std::vector<CellEdge> edges_;
};

/// Checks no self loops, translation closure, degree bound 8, finite lengths and
/// connectivity. Throws std::logic_error naming the failed condition.
void validate(const PeriodicGraph& g);

/// Regular embedding with nearest-neighbour distance `mesh`.
PeriodicGraph build_graph(LatticeKind kind, double mesh);

class PlaneMap {
 public:
  PlaneMap(double a, double b, double c, double d);
  static PlaneMap identity() { return {1, 0, 0, 1}; }
  static PlaneMap rotation(double angle);
  static PlaneMap diagonal(double sx, double sy) { return {sx, 0, 0, sy}; }

  double det() const { return a_ * d_ - b_ * c_; }
  Vec2 operator()(Vec2 v) const { return {a_ * v.x + b_ * v.y, c_ * v.x + d_ * v.y}; }
  PlaneMap inverse() const;
  PlaneMap then(const PlaneMap& next) const;
  std::array<double, 4> entries() const { return {a_, b_, c_, d_}; }

 private:
  double a_, b_, c_, d_;
};

PeriodicGraph transform(const PeriodicGraph& g, const PlaneMap& map);
Polygon transform(const Polygon& poly, const PlaneMap& map);

class PercolationModel {
 public:
  PercolationModel(PeriodicGraph graph, PercolationMode mode, ClassScheme scheme,
                   std::vector<double> open_prob);

  static PercolationModel homogeneous(LatticeKind kind, PercolationMode mode, double p,
                                      double mesh = 1.0);

  const PeriodicGraph& graph() const { return graph_; }
  PercolationMode mode() const { return mode_; }
  ClassScheme scheme() const { return scheme_; }
  const std::vector<double>& open_prob() const { return prob_; }
  int class_count() const;

  int site_class(SiteRef site) const;
  int edge_class(EdgeRef edge) const;
  double site_prob(SiteRef site) const { return prob_[site_class(site)]; }
  double edge_prob(EdgeRef edge) const { return prob_[edge_class(edge)]; }

  bool is_homogeneous() const;
  PercolationModel with_probability(double p) const;
  PercolationModel with_mesh(double mesh) const;
  std::string id() const;

 private:
  PeriodicGraph graph_;
  PercolationMode mode_;
  ClassScheme scheme_;
  std::vector<double> prob_;
};

PercolationModel apply_map(const PercolationModel& model, const PlaneMap& map);

class NoCriticalValue : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double critical_probability(const PercolationModel& model);
double critical_probability(LatticeKind kind, PercolationMode mode);

/// Finite set of instantiated sites and edges.
struct Region {
  std::vector<SiteRef> sites;
  std::vector<EdgeRef> edges;
};

/// Sites with 0 <= i < ni, 0 <= j < nj and every edge with both ends in the box.
Region box_region(const PeriodicGraph& g, int ni, int nj);

struct Configuration {
  const PercolationModel* model = nullptr;
  Region region;
  std::vector<std::uint8_t> status;  // per site (site mode) or per edge (bond mode)
  std::uint64_t seed = 0;
  std::uint64_t sample = 0;

  std::size_t open_count() const;
};

/// Key shared by every object of one sample; status is a pure function of it.
std::uint64_t sample_key(std::uint64_t seed, std::uint64_t sample);

bool site_open(const PercolationModel& model, std::uint64_t key, SiteRef site);
bool edge_open(const PercolationModel& model, std::uint64_t key, EdgeRef edge);

Configuration sample_configuration(const PercolationModel& model, const Region& region,
                                   std::uint64_t seed, std::uint64_t sample = 0);

/// {"lattice": ..., "mode": ..., "p": number | "critical" | {"class": p}, "classes": ...,
/// "mesh": ...}
PercolationModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const PercolationModel& model);

}  // namespace critlab
