#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "critlab/geometry.hpp"
#include "critlab/lattice.hpp"

namespace critlab {

/// Closed boundary arc running counterclockwise (in vertex order) from the point at
/// parameter `start_t` on polygon edge `start_edge` to `end_t` on `end_edge`.
struct BoundaryArc {
  int start_edge = 0;
  double start_t = 0.0;
  int end_edge = 0;
  double end_t = 1.0;
};

/// Point at parameter t on polygon edge e.
Vec2 boundary_point(const Polygon& poly, int e, double t);

std::vector<Vec2> arc_polyline(const Polygon& poly, const BoundaryArc& arc);
double arc_length(const Polygon& poly, const BoundaryArc& arc);

struct Triplet {
  Polygon polygon;
  BoundaryArc arc_i;
  BoundaryArc arc_j;
  std::string id;
};

/// Throws std::invalid_argument for a non-simple polygon, empty or intersecting arcs.
void validate(const Triplet& t);

/// Axis-aligned rectangle [0,width]x[0,height]; I is the left side and J the right side.
Triplet rectangle_triplet(double width, double height);

/// Unit equilateral triangle A=(0,0), B=(1,0), C=(1/2,sqrt3/2): I is side BC and J the
/// segment of AB of length x starting at A.
Triplet carleson_triplet(double x);

class MeshTooCoarse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lattice content of a triplet: interior sites, their neighbours and every edge
/// with at least one interior endpoint.
struct DiscreteTriplet {
  struct Edge {
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    EdgeRef ref;
    bool in_i = false;
    bool in_j = false;
  };

  std::vector<SiteRef> sites;
  std::vector<Vec2> positions;
  std::vector<std::uint8_t> interior;
  std::vector<Edge> edges;
  double mesh = 0.0;
  std::string id;

  std::size_t interior_count() const;
  std::size_t count_i() const;
  std::size_t count_j() const;
  /// Region whose site and edge order matches this triplet.
  Region region() const;
};

DiscreteTriplet rasterize(const Triplet& triplet, const PeriodicGraph& graph);
DiscreteTriplet rasterize(const Triplet& triplet, const PercolationModel& model, double mesh);

/// `status` is indexed like `dt.sites` in site mode and like `dt.edges` in bond mode.
bool has_crossing(const DiscreteTriplet& dt, PercolationMode mode,
                  std::span<const std::uint8_t> status);
bool has_crossing(const Configuration& config, const DiscreteTriplet& dt);

struct CrossingEstimate {
  std::uint64_t successes = 0;
  std::uint64_t n_samples = 0;
  double mesh = 0.0;
  std::string model_id;
  std::string triplet_id;
  std::uint64_t seed = 0;

  double p_hat() const;
  double std_err() const;
};

/// Pools the samples of two estimates of the same quantity.
CrossingEstimate merge(const CrossingEstimate& a, const CrossingEstimate& b);

/// Crossing indicator of sample `k` of the coupled ensemble keyed by `seed`.
bool sample_crossing(const PercolationModel& model, const DiscreteTriplet& dt, std::uint64_t seed,
                     std::uint64_t k);

struct EstimateOptions {
  std::uint64_t first_sample = 0;
  unsigned threads = 0;  // 0 picks hardware concurrency
};

/// Monte Carlo estimate over samples [first_sample, first_sample + n_samples).
/// When `p` is given it replaces the model's class probabilities.
CrossingEstimate estimate_crossing(const PercolationModel& model, const Triplet& triplet,
                                   double mesh, std::optional<double> p, std::uint64_t n_samples,
                                   std::uint64_t seed, EstimateOptions options = {});
CrossingEstimate estimate_crossing(const PercolationModel& model, const DiscreteTriplet& dt,
                                   std::uint64_t n_samples, std::uint64_t seed,
                                   EstimateOptions options = {});

/// Exact crossing probability by summing over all configurations (at most 24 free objects).
double exact_crossing(const PercolationModel& model, const DiscreteTriplet& dt);

/// Smallest p at which sample k of the coupled ensemble crosses (homogeneous models).
double crossing_threshold(const PercolationModel& model, const DiscreteTriplet& dt,
                          std::uint64_t seed, std::uint64_t k);

struct AspectRow {
  double r = 0.0;
  int short_side = 0;
  double p = 0.0;
  CrossingEstimate estimate;
};

/// Horizontal crossing of rectangles of width 1 and height r with `short_side` lattice
/// spacings across the shorter side.
std::vector<AspectRow> sweep_aspect(const PercolationModel& model, const std::vector<double>& r_list,
                                    int short_side, std::optional<double> p,
                                    std::uint64_t n_samples, std::uint64_t seed,
                                    EstimateOptions options = {});

double rectangle_mesh(double r, int short_side);

struct UniversalityRow {
  std::string triplet_id;
  CrossingEstimate a;
  CrossingEstimate b;
  double z = 0.0;
};

struct UniversalityReport {
  std::vector<UniversalityRow> rows;
  double max_abs_z = 0.0;
};

double z_score(const CrossingEstimate& a, const CrossingEstimate& b);

/// Compares the mapped model gA against B on each triplet with independent seeds.
UniversalityReport universality_compare(const PercolationModel& model_a,
                                        const PercolationModel& model_b, const PlaneMap& g,
                                        const std::vector<Triplet>& triplets, double mesh,
                                        std::uint64_t n_samples, std::uint64_t seed,
                                        EstimateOptions options = {});

}  // namespace critlab
