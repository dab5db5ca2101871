#include "critlab/crossing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "critlab/rng.hpp"
#include "critlab/union_find.hpp"

namespace critlab {

Vec2 boundary_point(const Polygon& poly, int e, double t) {
  const Segment s = polygon_edge(poly, e);
  return s.a + (s.b - s.a) * t;
}

std::vector<Vec2> arc_polyline(const Polygon& poly, const BoundaryArc& arc) {
  const int n = static_cast<int>(poly.size());
  std::vector<Vec2> pts{boundary_point(poly, arc.start_edge, arc.start_t)};
  if (arc.start_edge == arc.end_edge && arc.end_t >= arc.start_t) {
    pts.push_back(boundary_point(poly, arc.end_edge, arc.end_t));
    return pts;
  }
  int e = arc.start_edge;
  do {
    e = (e + 1) % n;
    pts.push_back(poly[e]);
  } while (e != arc.end_edge);
  pts.push_back(boundary_point(poly, arc.end_edge, arc.end_t));
  return pts;
}

double arc_length(const Polygon& poly, const BoundaryArc& arc) {
  const auto pts = arc_polyline(poly, arc);
  double len = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) len += (pts[k] - pts[k - 1]).norm();
  return len;
}

namespace {

bool polylines_touch(const std::vector<Vec2>& a, const std::vector<Vec2>& b, double eps) {
  for (std::size_t i = 1; i < a.size(); ++i)
    for (std::size_t j = 1; j < b.size(); ++j)
      if (segments_intersect({a[i - 1], a[i]}, {b[j - 1], b[j]}, eps)) return true;
  return false;
}

void check_arc(const Polygon& poly, const BoundaryArc& arc, const char* name) {
  const int n = static_cast<int>(poly.size());
  if (arc.start_edge < 0 || arc.start_edge >= n || arc.end_edge < 0 || arc.end_edge >= n)
    throw std::invalid_argument(std::string("arc ") + name + " refers to a missing edge");
  if (!(arc.start_t >= 0.0 && arc.start_t <= 1.0 && arc.end_t >= 0.0 && arc.end_t <= 1.0))
    throw std::invalid_argument(std::string("arc ") + name + " parameter outside [0,1]");
  if (!(arc_length(poly, arc) > 0.0))
    throw std::invalid_argument(std::string("arc ") + name + " has zero length");
}

std::string describe(const Segment& s) {
  std::ostringstream os;
  os << "(" << s.a.x << "," << s.a.y << ")-(" << s.b.x << "," << s.b.y << ")";
  return os.str();
}

}  // namespace

void validate(const Triplet& t) {
  if (!is_simple(t.polygon)) throw std::invalid_argument("polygon is not simple");
  check_arc(t.polygon, t.arc_i, "I");
  check_arc(t.polygon, t.arc_j, "J");
  if (polylines_touch(arc_polyline(t.polygon, t.arc_i), arc_polyline(t.polygon, t.arc_j), 0.0))
    throw std::invalid_argument("arcs I and J intersect");
}

Triplet rectangle_triplet(double width, double height) {
  if (!(width > 0.0 && height > 0.0)) throw std::invalid_argument("rectangle sides must be positive");
  Triplet t;
  t.polygon = {{0, 0}, {width, 0}, {width, height}, {0, height}};
  t.arc_j = {1, 0.0, 1, 1.0};
  t.arc_i = {3, 0.0, 3, 1.0};
  std::ostringstream os;
  os << "rectangle-" << width << "x" << height;
  t.id = os.str();
  return t;
}

Triplet carleson_triplet(double x) {
  if (!(x > 0.0 && x <= 1.0)) throw std::invalid_argument("Carleson segment length must lie in (0,1]");
  Triplet t;
  t.polygon = {{0, 0}, {1, 0}, {0.5, std::numbers::sqrt3 / 2}};
  t.arc_i = {1, 0.0, 1, 1.0};
  t.arc_j = {0, 0.0, 0, x};
  if (x == 1.0) {
    // J would share vertex B with I; keep the closed arcs disjoint.
    t.arc_j.end_t = 1.0 - 1e-9;
  }
  std::ostringstream os;
  os << "carleson-" << x;
  t.id = os.str();
  return t;
}

std::size_t DiscreteTriplet::interior_count() const {
  return static_cast<std::size_t>(std::count(interior.begin(), interior.end(), std::uint8_t{1}));
}

std::size_t DiscreteTriplet::count_i() const {
  return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [](const Edge& e) { return e.in_i; }));
}

std::size_t DiscreteTriplet::count_j() const {
  return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [](const Edge& e) { return e.in_j; }));
}

Region DiscreteTriplet::region() const {
  Region r;
  r.sites = sites;
  r.edges.reserve(edges.size());
  for (const Edge& e : edges) r.edges.push_back(e.ref);
  return r;
}

DiscreteTriplet rasterize(const Triplet& triplet, const PeriodicGraph& graph) {
  validate(triplet);
  const double mesh = graph.min_edge_length();

  // Vertices sitting exactly on lattice points are nudged toward the centroid.
  Polygon poly = triplet.polygon;
  const Vec2 center = centroid(poly);
  for (Vec2& v : poly) {
    for (int s = 0; s < graph.sites_per_cell(); ++s) {
      const Vec2 c = graph.to_cell_coords(v - graph.site_offsets()[s]);
      if (std::abs(c.x - std::round(c.x)) < 1e-9 && std::abs(c.y - std::round(c.y)) < 1e-9) {
        const Vec2 d = center - v;
        v = v + d * (mesh * 1e-7 / d.norm());
        break;
      }
    }
  }
  const auto arc_i = arc_polyline(poly, triplet.arc_i);
  const auto arc_j = arc_polyline(poly, triplet.arc_j);

  double lo_i = INFINITY, hi_i = -INFINITY, lo_j = INFINITY, hi_j = -INFINITY;
  for (const Vec2& v : poly) {
    const Vec2 c = graph.to_cell_coords(v);
    lo_i = std::min(lo_i, c.x);
    hi_i = std::max(hi_i, c.x);
    lo_j = std::min(lo_j, c.y);
    hi_j = std::max(hi_j, c.y);
  }
  const int i0 = static_cast<int>(std::floor(lo_i)) - 2, i1 = static_cast<int>(std::ceil(hi_i)) + 2;
  const int j0 = static_cast<int>(std::floor(lo_j)) - 2, j1 = static_cast<int>(std::ceil(hi_j)) + 2;

  DiscreteTriplet dt;
  dt.mesh = mesh;
  dt.id = triplet.id;
  std::unordered_map<std::uint64_t, std::uint32_t> index;
  const double eps = mesh * 1e-9;
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i)
      for (int s = 0; s < graph.sites_per_cell(); ++s) {
        const SiteRef site{i, j, s};
        const Vec2 p = graph.position(site);
        if (!strictly_inside(poly, p, eps)) continue;
        index.emplace(object_key(site), static_cast<std::uint32_t>(dt.sites.size()));
        dt.sites.push_back(site);
        dt.positions.push_back(p);
        dt.interior.push_back(1);
      }
  if (dt.sites.empty()) throw MeshTooCoarse("mesh too coarse: no lattice site inside the domain");
  const std::size_t n_interior = dt.sites.size();

  const auto site_index = [&](SiteRef s) {
    const auto [it, inserted] = index.emplace(object_key(s), static_cast<std::uint32_t>(dt.sites.size()));
    if (inserted) {
      dt.sites.push_back(s);
      dt.positions.push_back(graph.position(s));
      dt.interior.push_back(0);
    }
    return it->second;
  };

  std::unordered_set<std::uint64_t> seen_edges;
  for (std::size_t k = 0; k < n_interior; ++k) {
    for (const EdgeRef& ref : graph.incident_edges(dt.sites[k])) {
      if (!seen_edges.insert(object_key(ref)).second) continue;
      DiscreteTriplet::Edge e;
      e.ref = ref;
      e.a = site_index(graph.edge_source(ref));
      e.b = site_index(graph.edge_target(ref));
      dt.edges.push_back(e);
    }
  }
  for (auto& e : dt.edges) {
    if (dt.interior[e.a] && dt.interior[e.b]) continue;
    const Segment seg{dt.positions[e.a], dt.positions[e.b]};
    for (std::size_t k = 1; k < arc_i.size() && !e.in_i; ++k)
      e.in_i = segments_intersect(seg, {arc_i[k - 1], arc_i[k]});
    for (std::size_t k = 1; k < arc_j.size() && !e.in_j; ++k)
      e.in_j = segments_intersect(seg, {arc_j[k - 1], arc_j[k]});
    if (e.in_i && e.in_j)
      throw MeshTooCoarse("mesh too coarse: edge " + describe(seg) + " meets both I and J");
  }
  if (dt.count_i() == 0 || dt.count_j() == 0)
    throw MeshTooCoarse("mesh too coarse: no lattice edge straddles one of the arcs");

  UnionFind uf(n_interior);
  std::size_t components = n_interior;
  for (const auto& e : dt.edges)
    if (e.a < n_interior && e.b < n_interior && uf.unite(e.a, e.b)) --components;
  if (components != 1) throw MeshTooCoarse("mesh too coarse: interior lattice sites are disconnected");
  return dt;
}

DiscreteTriplet rasterize(const Triplet& triplet, const PercolationModel& model, double mesh) {
  return rasterize(triplet, model.with_mesh(mesh).graph());
}

bool has_crossing(const DiscreteTriplet& dt, PercolationMode mode, std::span<const std::uint8_t> status) {
  const bool site_mode = mode == PercolationMode::site;
  if (status.size() != (site_mode ? dt.sites.size() : dt.edges.size()))
    throw std::invalid_argument("status vector does not match the discrete triplet");
  UnionFind uf(dt.sites.size());
  const auto usable = [&](std::size_t k) {
    const auto& e = dt.edges[k];
    return site_mode ? (status[e.a] && status[e.b]) : status[k] != 0;
  };
  for (std::size_t k = 0; k < dt.edges.size(); ++k)
    if (usable(k)) uf.unite(dt.edges[k].a, dt.edges[k].b);
  std::vector<std::uint8_t> reaches_i(dt.sites.size(), 0);
  bool any_i = false;
  for (std::size_t k = 0; k < dt.edges.size(); ++k)
    if (dt.edges[k].in_i && usable(k)) reaches_i[uf.find(dt.edges[k].a)] = 1, any_i = true;
  if (!any_i) return false;
  for (std::size_t k = 0; k < dt.edges.size(); ++k)
    if (dt.edges[k].in_j && usable(k) && reaches_i[uf.find(dt.edges[k].a)]) return true;
  return false;
}

bool has_crossing(const Configuration& config, const DiscreteTriplet& dt) {
  if (config.model == nullptr) throw std::invalid_argument("configuration has no model");
  return has_crossing(dt, config.model->mode(), config.status);
}

double CrossingEstimate::p_hat() const {
  return n_samples == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(n_samples);
}

double CrossingEstimate::std_err() const {
  if (n_samples == 0) return 0.0;
  const double p = p_hat();
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n_samples));
}

CrossingEstimate merge(const CrossingEstimate& a, const CrossingEstimate& b) {
  CrossingEstimate out = a;
  out.successes += b.successes;
  out.n_samples += b.n_samples;
  return out;
}

namespace {

/// Per-object keys and probabilities, reused across samples.
struct SampleKernel {
  std::vector<std::uint64_t> keys;
  std::vector<double> probs;
  PercolationMode mode;

  SampleKernel(const PercolationModel& model, const DiscreteTriplet& dt) : mode(model.mode()) {
    if (mode == PercolationMode::site) {
      for (const SiteRef& s : dt.sites) {
        keys.push_back(object_key(s));
        probs.push_back(model.site_prob(s));
      }
    } else {
      for (const auto& e : dt.edges) {
        keys.push_back(object_key(e.ref));
        probs.push_back(model.edge_prob(e.ref));
      }
    }
  }

  void fill(std::uint64_t key, std::vector<std::uint8_t>& status) const {
    status.resize(keys.size());
    for (std::size_t k = 0; k < keys.size(); ++k)
      status[k] = keyed_uniform(key, keys[k]) < probs[k] ? 1 : 0;
  }
};

}  // namespace

bool sample_crossing(const PercolationModel& model, const DiscreteTriplet& dt, std::uint64_t seed,
                     std::uint64_t k) {
  SampleKernel kernel(model, dt);
  std::vector<std::uint8_t> status;
  kernel.fill(sample_key(seed, k), status);
  return has_crossing(dt, model.mode(), status);
}

CrossingEstimate estimate_crossing(const PercolationModel& model, const DiscreteTriplet& dt,
                                   std::uint64_t n_samples, std::uint64_t seed,
                                   EstimateOptions options) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be at least 1");
  const SampleKernel kernel(model, dt);
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, n_samples));
  std::vector<std::uint64_t> hits(threads, 0);
  const auto work = [&](unsigned t) {
    std::vector<std::uint8_t> status;
    for (std::uint64_t k = t; k < n_samples; k += threads) {
      kernel.fill(sample_key(seed, options.first_sample + k), status);
      hits[t] += has_crossing(dt, model.mode(), status) ? 1 : 0;
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }
  CrossingEstimate est;
  for (auto h : hits) est.successes += h;
  est.n_samples = n_samples;
  est.mesh = dt.mesh;
  est.model_id = model.id();
  est.triplet_id = dt.id;
  est.seed = seed;
  return est;
}

CrossingEstimate estimate_crossing(const PercolationModel& model, const Triplet& triplet, double mesh,
                                   std::optional<double> p, std::uint64_t n_samples,
                                   std::uint64_t seed, EstimateOptions options) {
  const PercolationModel m = (p ? model.with_probability(*p) : model).with_mesh(mesh);
  const DiscreteTriplet dt = rasterize(triplet, m.graph());
  return estimate_crossing(m, dt, n_samples, seed, options);
}

double exact_crossing(const PercolationModel& model, const DiscreteTriplet& dt) {
  const bool site_mode = model.mode() == PercolationMode::site;
  const std::size_t m = site_mode ? dt.sites.size() : dt.edges.size();
  if (m > 24) throw std::invalid_argument("exact enumeration limited to 24 objects");
  std::vector<double> probs;
  for (std::size_t k = 0; k < m; ++k)
    probs.push_back(site_mode ? model.site_prob(dt.sites[k]) : model.edge_prob(dt.edges[k].ref));
  std::vector<std::uint8_t> status(m);
  double total = 0.0;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << m); ++code) {
    double w = 1.0;
    for (std::size_t k = 0; k < m; ++k) {
      status[k] = (code >> k) & 1;
      w *= status[k] ? probs[k] : 1.0 - probs[k];
    }
    if (w > 0.0 && has_crossing(dt, model.mode(), status)) total += w;
  }
  return total;
}

double crossing_threshold(const PercolationModel& model, const DiscreteTriplet& dt,
                          std::uint64_t seed, std::uint64_t k) {
  const std::uint64_t key = sample_key(seed, k);
  const bool site_mode = model.mode() == PercolationMode::site;
  const std::size_t m = site_mode ? dt.sites.size() : dt.edges.size();
  std::vector<std::pair<double, std::uint32_t>> order(m);
  for (std::size_t x = 0; x < m; ++x) {
    const std::uint64_t ok = site_mode ? object_key(dt.sites[x]) : object_key(dt.edges[x].ref);
    order[x] = {keyed_uniform(key, ok), static_cast<std::uint32_t>(x)};
  }
  std::sort(order.begin(), order.end());

  std::vector<std::vector<std::uint32_t>> incident;
  if (site_mode) {
    incident.resize(dt.sites.size());
    for (std::uint32_t e = 0; e < dt.edges.size(); ++e) {
      incident[dt.edges[e].a].push_back(e);
      incident[dt.edges[e].b].push_back(e);
    }
  }
  UnionFind uf(dt.sites.size());
  std::vector<std::uint8_t> open(dt.sites.size(), site_mode ? 0 : 1);
  std::vector<std::uint8_t> touch(dt.sites.size(), 0);  // bit 0: I, bit 1: J
  const auto activate = [&](std::uint32_t e) {
    const auto& edge = dt.edges[e];
    const std::uint8_t flags = (edge.in_i ? 1 : 0) | (edge.in_j ? 2 : 0);
    const std::uint32_t ra = uf.find(edge.a), rb = uf.find(edge.b);
    const std::uint8_t merged = touch[ra] | touch[rb] | flags;
    uf.unite(ra, rb);
    touch[uf.find(ra)] = merged;
    return merged == 3;
  };
  for (const auto& [u, x] : order) {
    if (site_mode) {
      open[x] = 1;
      for (std::uint32_t e : incident[x]) {
        const auto& edge = dt.edges[e];
        if (open[edge.a] && open[edge.b] && activate(e)) return u;
      }
    } else if (activate(x)) {
      return u;
    }
  }
  return 1.0;
}

double rectangle_mesh(double r, int short_side) {
  if (!(r > 0.0)) throw std::invalid_argument("aspect ratio must be positive");
  if (short_side < 1) throw std::invalid_argument("short side needs at least one lattice spacing");
  return std::min(1.0, r) / short_side;
}

std::vector<AspectRow> sweep_aspect(const PercolationModel& model, const std::vector<double>& r_list,
                                    int short_side, std::optional<double> p,
                                    std::uint64_t n_samples, std::uint64_t seed,
                                    EstimateOptions options) {
  if (r_list.empty()) throw std::invalid_argument("aspect ratio list is empty");
  std::vector<AspectRow> rows;
  for (double r : r_list) {
    const double mesh = rectangle_mesh(r, short_side);
    AspectRow row;
    row.r = r;
    row.short_side = short_side;
    row.p = p ? *p : model.open_prob().front();
    row.estimate = estimate_crossing(model, rectangle_triplet(1.0, r), mesh, p, n_samples, seed, options);
    rows.push_back(row);
  }
  return rows;
}

double z_score(const CrossingEstimate& a, const CrossingEstimate& b) {
  const double diff = a.p_hat() - b.p_hat();
  const double se = std::hypot(a.std_err(), b.std_err());
  if (se == 0.0) return diff == 0.0 ? 0.0 : INFINITY;
  return diff / se;
}

UniversalityReport universality_compare(const PercolationModel& model_a,
                                        const PercolationModel& model_b, const PlaneMap& g,
                                        const std::vector<Triplet>& triplets, double mesh,
                                        std::uint64_t n_samples, std::uint64_t seed,
                                        EstimateOptions options) {
  const PercolationModel mapped = apply_map(model_a.with_mesh(mesh), g);
  const PercolationModel other = model_b.with_mesh(mesh);
  UniversalityReport report;
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    UniversalityRow row;
    row.triplet_id = triplets[k].id;
    row.a = estimate_crossing(mapped, rasterize(triplets[k], mapped.graph()), n_samples,
                              stream_key(seed, 2 * k), options);
    row.b = estimate_crossing(other, rasterize(triplets[k], other.graph()), n_samples,
                              stream_key(seed, 2 * k + 1), options);
    row.z = z_score(row.a, row.b);
    report.max_abs_z = std::max(report.max_abs_z, std::abs(row.z));
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace critlab
