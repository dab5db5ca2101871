#include "critlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <queue>

#include "critlab/rng.hpp"

namespace critlab {

std::string to_string(LatticeKind kind) {
  switch (kind) {
    case LatticeKind::square: return "square";
    case LatticeKind::triangular: return "triangular";
    case LatticeKind::hexagonal: return "hexagonal";
  }
  return "unknown";
}

std::string to_string(PercolationMode mode) {
  return mode == PercolationMode::site ? "site" : "bond";
}

LatticeKind parse_lattice_kind(const std::string& name) {
  if (name == "square") return LatticeKind::square;
  if (name == "triangular") return LatticeKind::triangular;
  if (name == "hexagonal" || name == "honeycomb") return LatticeKind::hexagonal;
  throw std::invalid_argument("unknown lattice '" + name + "'");
}

PercolationMode parse_mode(const std::string& name) {
  if (name == "site") return PercolationMode::site;
  if (name == "bond") return PercolationMode::bond;
  throw std::invalid_argument("unknown percolation mode '" + name + "'");
}

namespace {

std::uint64_t pack(std::int32_t i, std::int32_t j, std::int32_t s, bool edge) {
  const auto ui = static_cast<std::uint64_t>(static_cast<std::int64_t>(i) + (std::int64_t{1} << 31));
  const auto uj = static_cast<std::uint64_t>(static_cast<std::int64_t>(j) + (std::int64_t{1} << 23)) & 0xffffffULL;
  return (ui << 32) | (uj << 8) | (edge ? 0x80ULL : 0ULL) | (static_cast<std::uint64_t>(s) & 0x7fULL);
}

}  // namespace

std::uint64_t object_key(SiteRef site) { return pack(site.i, site.j, site.s, false); }
std::uint64_t object_key(EdgeRef edge) { return pack(edge.i, edge.j, edge.e, true); }

PeriodicGraph::PeriodicGraph(LatticeKind kind, std::array<Vec2, 2> basis,
                             std::vector<Vec2> site_offsets, std::vector<CellEdge> edges)
    : kind_(kind), basis_(basis), offsets_(std::move(site_offsets)), edges_(std::move(edges)) {
  if (offsets_.empty()) throw std::invalid_argument("graph needs at least one site per cell");
  if (std::abs(cross(basis_[0], basis_[1])) == 0.0)
    throw std::invalid_argument("degenerate translation basis");
  for (const CellEdge& e : edges_) {
    if (e.from < 0 || e.to < 0 || e.from >= sites_per_cell() || e.to >= sites_per_cell())
      throw std::invalid_argument("edge refers to a site outside the cell");
  }
}

Vec2 PeriodicGraph::position(SiteRef site) const {
  return basis_[0] * site.i + basis_[1] * site.j + offsets_[site.s];
}

SiteRef PeriodicGraph::edge_source(EdgeRef e) const {
  return {e.i, e.j, edges_[e.e].from};
}

SiteRef PeriodicGraph::edge_target(EdgeRef e) const {
  const CellEdge& c = edges_[e.e];
  return {e.i + c.di, e.j + c.dj, c.to};
}

Segment PeriodicGraph::segment(EdgeRef e) const {
  return {position(edge_source(e)), position(edge_target(e))};
}

std::vector<EdgeRef> PeriodicGraph::incident_edges(SiteRef site) const {
  std::vector<EdgeRef> out;
  for (int k = 0; k < static_cast<int>(edges_.size()); ++k) {
    const CellEdge& c = edges_[k];
    if (c.from == site.s) out.push_back({site.i, site.j, k});
    if (c.to == site.s) out.push_back({site.i - c.di, site.j - c.dj, k});
  }
  return out;
}

int PeriodicGraph::degree(int s) const {
  int d = 0;
  for (const CellEdge& c : edges_) d += (c.from == s) + (c.to == s);
  return d;
}

Vec2 PeriodicGraph::to_cell_coords(Vec2 p) const {
  const double det = cross(basis_[0], basis_[1]);
  return {cross(p, basis_[1]) / det, cross(basis_[0], p) / det};
}

double PeriodicGraph::min_edge_length() const {
  double m = INFINITY;
  for (int k = 0; k < static_cast<int>(edges_.size()); ++k) {
    const Segment s = segment({0, 0, k});
    m = std::min(m, (s.b - s.a).norm());
  }
  return m;
}

double PeriodicGraph::max_edge_length() const {
  double m = 0.0;
  for (int k = 0; k < static_cast<int>(edges_.size()); ++k) {
    const Segment s = segment({0, 0, k});
    m = std::max(m, (s.b - s.a).norm());
  }
  return m;
}

void validate(const PeriodicGraph& g) {
  const int n = g.sites_per_cell();
  for (const CellEdge& e : g.edges()) {
    if (e.from == e.to && e.di == 0 && e.dj == 0)
      throw std::logic_error("graph has a self loop");
  }
  // Displacements seen from translated copies of each site must coincide.
  for (int s = 0; s < n; ++s) {
    for (const auto& [ti, tj] : {std::pair{1, 0}, std::pair{0, 1}}) {
      const SiteRef base{0, 0, s};
      const SiteRef moved{ti, tj, s};
      const auto eb = g.incident_edges(base);
      const auto em = g.incident_edges(moved);
      if (eb.size() != em.size()) throw std::logic_error("graph is not translation invariant");
      for (std::size_t k = 0; k < eb.size(); ++k) {
        const Segment a = g.segment(eb[k]);
        const Segment b = g.segment(em[k]);
        const Vec2 shift = g.basis()[0] * ti + g.basis()[1] * tj;
        if ((b.a - a.a - shift).norm() > 1e-9 || (b.b - a.b - shift).norm() > 1e-9)
          throw std::logic_error("graph is not translation invariant");
      }
    }
    if (g.degree(s) > 8) throw std::logic_error("site degree exceeds 8");
  }
  for (int k = 0; k < static_cast<int>(g.edges().size()); ++k) {
    const Segment s = g.segment({0, 0, k});
    const double len = (s.b - s.a).norm();
    if (!std::isfinite(len) || len <= 0.0) throw std::logic_error("edge has invalid length");
  }
  // Connected iff the quotient graph is connected and its cycle offsets span Z^2.
  std::vector<std::array<long, 2>> pot(n);
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  seen[0] = true;
  q.push(0);
  while (!q.empty()) {
    const int s = q.front();
    q.pop();
    for (const CellEdge& e : g.edges()) {
      if (e.from == s && !seen[e.to]) {
        seen[e.to] = true;
        pot[e.to] = {pot[s][0] + e.di, pot[s][1] + e.dj};
        q.push(e.to);
      } else if (e.to == s && !seen[e.from]) {
        seen[e.from] = true;
        pot[e.from] = {pot[s][0] - e.di, pot[s][1] - e.dj};
        q.push(e.from);
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw std::logic_error("graph is not connected");
  std::vector<std::array<long, 2>> cycles;
  for (const CellEdge& e : g.edges()) {
    cycles.push_back({pot[e.from][0] + e.di - pot[e.to][0], pot[e.from][1] + e.dj - pot[e.to][1]});
  }
  long index = 0;
  for (std::size_t a = 0; a < cycles.size(); ++a)
    for (std::size_t b = a + 1; b < cycles.size(); ++b)
      index = std::gcd(index, cycles[a][0] * cycles[b][1] - cycles[a][1] * cycles[b][0]);
  if (index != 1) throw std::logic_error("graph is not connected");
}

PeriodicGraph build_graph(LatticeKind kind, double mesh) {
  if (!(mesh > 0.0) || !std::isfinite(mesh)) throw std::invalid_argument("mesh must be positive");
  const double r3 = std::numbers::sqrt3;
  switch (kind) {
    case LatticeKind::square:
      return PeriodicGraph(kind, {Vec2{mesh, 0}, Vec2{0, mesh}}, {Vec2{0, 0}},
                           {{0, 0, 1, 0}, {0, 0, 0, 1}});
    case LatticeKind::triangular:
      return PeriodicGraph(kind, {Vec2{mesh, 0}, Vec2{mesh / 2, mesh * r3 / 2}}, {Vec2{0, 0}},
                           {{0, 0, 1, 0}, {0, 0, 0, 1}, {0, 0, 1, -1}});
    case LatticeKind::hexagonal:
      return PeriodicGraph(kind, {Vec2{r3 * mesh, 0}, Vec2{r3 * mesh / 2, 1.5 * mesh}},
                           {Vec2{0, 0}, Vec2{0, mesh}},
                           {{0, 1, 0, 0}, {0, 1, 1, -1}, {0, 1, 0, -1}});
  }
  throw std::invalid_argument("unknown lattice kind");
}

PlaneMap::PlaneMap(double a, double b, double c, double d) : a_(a), b_(b), c_(c), d_(d) {
  const double det = a * d - b * c;
  if (det == 0.0 || !std::isfinite(det)) throw std::invalid_argument("plane map is singular");
}

PlaneMap PlaneMap::rotation(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c, -s, s, c};
}

PlaneMap PlaneMap::inverse() const {
  const double det = this->det();
  return {d_ / det, -b_ / det, -c_ / det, a_ / det};
}

PlaneMap PlaneMap::then(const PlaneMap& next) const {
  const auto [p, q, r, s] = next.entries();
  return {p * a_ + q * c_, p * b_ + q * d_, r * a_ + s * c_, r * b_ + s * d_};
}

PeriodicGraph transform(const PeriodicGraph& g, const PlaneMap& map) {
  std::vector<Vec2> offsets;
  for (const Vec2& v : g.site_offsets()) offsets.push_back(map(v));
  return PeriodicGraph(g.kind(), {map(g.basis()[0]), map(g.basis()[1])}, std::move(offsets),
                       g.edges());
}

Polygon transform(const Polygon& poly, const PlaneMap& map) {
  Polygon out;
  out.reserve(poly.size());
  for (const Vec2& v : poly) out.push_back(map(v));
  return out;
}

PercolationModel::PercolationModel(PeriodicGraph graph, PercolationMode mode, ClassScheme scheme,
                                   std::vector<double> open_prob)
    : graph_(std::move(graph)), mode_(mode), scheme_(scheme), prob_(std::move(open_prob)) {
  if (static_cast<int>(prob_.size()) != class_count())
    throw std::invalid_argument("expected " + std::to_string(class_count()) +
                                " class probabilities, got " + std::to_string(prob_.size()));
  for (double p : prob_) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("open probability outside [0,1]");
  }
}

PercolationModel PercolationModel::homogeneous(LatticeKind kind, PercolationMode mode, double p,
                                               double mesh) {
  return PercolationModel(build_graph(kind, mesh), mode, ClassScheme::uniform, {p});
}

int PercolationModel::class_count() const {
  const int per_cell = mode_ == PercolationMode::site ? graph_.sites_per_cell()
                                                      : static_cast<int>(graph_.edges().size());
  switch (scheme_) {
    case ClassScheme::uniform: return 1;
    case ClassScheme::sublattice: return per_cell;
    case ClassScheme::checkerboard: return 2 * per_cell;
  }
  return 1;
}

int PercolationModel::site_class(SiteRef site) const {
  switch (scheme_) {
    case ClassScheme::uniform: return 0;
    case ClassScheme::sublattice: return site.s;
    case ClassScheme::checkerboard: return 2 * site.s + ((site.i + site.j) & 1);
  }
  return 0;
}

int PercolationModel::edge_class(EdgeRef edge) const {
  switch (scheme_) {
    case ClassScheme::uniform: return 0;
    case ClassScheme::sublattice: return edge.e;
    case ClassScheme::checkerboard: return 2 * edge.e + ((edge.i + edge.j) & 1);
  }
  return 0;
}

bool PercolationModel::is_homogeneous() const {
  return std::all_of(prob_.begin(), prob_.end(), [&](double p) { return p == prob_.front(); });
}

PercolationModel PercolationModel::with_probability(double p) const {
  return PercolationModel(graph_, mode_, ClassScheme::uniform, {p});
}

PercolationModel PercolationModel::with_mesh(double mesh) const {
  if (!(mesh > 0.0)) throw std::invalid_argument("mesh must be positive");
  const double s = mesh / graph_.min_edge_length();
  return PercolationModel(transform(graph_, PlaneMap::diagonal(s, s)), mode_, scheme_, prob_);
}

std::string PercolationModel::id() const {
  return to_string(graph_.kind()) + "-" + to_string(mode_);
}

PercolationModel apply_map(const PercolationModel& model, const PlaneMap& map) {
  return PercolationModel(transform(model.graph(), map), model.mode(), model.scheme(),
                          model.open_prob());
}

double critical_probability(LatticeKind kind, PercolationMode mode) {
  const double s18 = 2.0 * std::sin(std::numbers::pi / 18.0);
  if (mode == PercolationMode::site) {
    switch (kind) {
      case LatticeKind::square: return 0.592746050792;
      case LatticeKind::triangular: return 0.5;
      case LatticeKind::hexagonal: return 0.697040230;
    }
  } else {
    switch (kind) {
      case LatticeKind::square: return 0.5;
      case LatticeKind::triangular: return s18;
      case LatticeKind::hexagonal: return 1.0 - s18;
    }
  }
  throw NoCriticalValue("no stored p_c");
}

double critical_probability(const PercolationModel& model) {
  if (model.scheme() != ClassScheme::uniform && !model.is_homogeneous())
    throw NoCriticalValue("no stored p_c for non-uniform model " + model.id());
  return critical_probability(model.graph().kind(), model.mode());
}

Region box_region(const PeriodicGraph& g, int ni, int nj) {
  if (ni <= 0 || nj <= 0) throw std::invalid_argument("empty region");
  Region r;
  for (int j = 0; j < nj; ++j)
    for (int i = 0; i < ni; ++i)
      for (int s = 0; s < g.sites_per_cell(); ++s) r.sites.push_back({i, j, s});
  const auto inside = [&](SiteRef x) { return x.i >= 0 && x.i < ni && x.j >= 0 && x.j < nj; };
  for (int j = 0; j < nj; ++j)
    for (int i = 0; i < ni; ++i)
      for (int e = 0; e < static_cast<int>(g.edges().size()); ++e) {
        const EdgeRef ref{i, j, e};
        if (inside(g.edge_target(ref))) r.edges.push_back(ref);
      }
  return r;
}

std::size_t Configuration::open_count() const {
  return static_cast<std::size_t>(std::count(status.begin(), status.end(), std::uint8_t{1}));
}

std::uint64_t sample_key(std::uint64_t seed, std::uint64_t sample) {
  return stream_key(seed, sample);
}

bool site_open(const PercolationModel& model, std::uint64_t key, SiteRef site) {
  return keyed_uniform(key, object_key(site)) < model.site_prob(site);
}

bool edge_open(const PercolationModel& model, std::uint64_t key, EdgeRef edge) {
  return keyed_uniform(key, object_key(edge)) < model.edge_prob(edge);
}

Configuration sample_configuration(const PercolationModel& model, const Region& region,
                                   std::uint64_t seed, std::uint64_t sample) {
  Configuration c{&model, region, {}, seed, sample};
  const std::uint64_t key = sample_key(seed, sample);
  if (model.mode() == PercolationMode::site) {
    c.status.reserve(region.sites.size());
    for (const SiteRef& s : region.sites) c.status.push_back(site_open(model, key, s) ? 1 : 0);
  } else {
    c.status.reserve(region.edges.size());
    for (const EdgeRef& e : region.edges) c.status.push_back(edge_open(model, key, e) ? 1 : 0);
  }
  return c;
}

PercolationModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("model descriptor must be an object");
  if (!j.contains("lattice")) throw std::invalid_argument("model descriptor missing 'lattice'");
  const LatticeKind kind = parse_lattice_kind(j.at("lattice").get<std::string>());
  const PercolationMode mode = parse_mode(j.value("mode", std::string("site")));
  const double mesh = j.value("mesh", 1.0);
  PeriodicGraph graph = build_graph(kind, mesh);
  if (!j.contains("p")) throw std::invalid_argument("model descriptor missing 'p'");
  const auto& p = j.at("p");
  if (p.is_number()) return PercolationModel(graph, mode, ClassScheme::uniform, {p.get<double>()});
  if (p.is_string()) {
    if (p.get<std::string>() != "critical")
      throw std::invalid_argument("'p' must be a number, \"critical\" or a class map");
    return PercolationModel(graph, mode, ClassScheme::uniform, {critical_probability(kind, mode)});
  }
  if (!p.is_object()) throw std::invalid_argument("'p' must be a number, \"critical\" or a class map");
  const std::string scheme_name = j.value("classes", std::string("sublattice"));
  ClassScheme scheme;
  if (scheme_name == "sublattice") scheme = ClassScheme::sublattice;
  else if (scheme_name == "checkerboard") scheme = ClassScheme::checkerboard;
  else throw std::invalid_argument("unknown class scheme '" + scheme_name + "'");
  const int per_cell = mode == PercolationMode::site ? graph.sites_per_cell()
                                                     : static_cast<int>(graph.edges().size());
  const int classes = per_cell * (scheme == ClassScheme::checkerboard ? 2 : 1);
  std::vector<double> probs(classes, -1.0);
  for (const auto& [key, value] : p.items()) {
    std::size_t used = 0;
    int id = -1;
    try {
      id = std::stoi(key, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != key.size() || id < 0 || id >= classes)
      throw std::invalid_argument("class id '" + key + "' out of range [0," +
                                  std::to_string(classes) + ")");
    probs[id] = value.get<double>();
  }
  for (int k = 0; k < classes; ++k) {
    if (probs[k] < 0.0)
      throw std::invalid_argument("class " + std::to_string(k) + " has no probability");
  }
  return PercolationModel(graph, mode, scheme, std::move(probs));
}

nlohmann::json model_to_json(const PercolationModel& model) {
  nlohmann::json j;
  j["lattice"] = to_string(model.graph().kind());
  j["mode"] = to_string(model.mode());
  j["mesh"] = model.graph().min_edge_length();
  if (model.scheme() == ClassScheme::uniform) {
    j["p"] = model.open_prob().front();
  } else {
    j["classes"] = model.scheme() == ClassScheme::sublattice ? "sublattice" : "checkerboard";
    nlohmann::json m = nlohmann::json::object();
    for (std::size_t k = 0; k < model.open_prob().size(); ++k)
      m[std::to_string(k)] = model.open_prob()[k];
    j["p"] = m;
  }
  return j;
}

}  // namespace critlab
