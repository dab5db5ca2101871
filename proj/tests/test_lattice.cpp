#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

#include "critlab/lattice.hpp"

using namespace critlab;

namespace {

std::multiset<long> rounded_lengths(const PeriodicGraph& g) {
  std::multiset<long> out;
  for (int k = 0; k < static_cast<int>(g.edges().size()); ++k) {
    const Segment s = g.segment({0, 0, k});
    out.insert(std::lround((s.b - s.a).norm() * 1e6));
  }
  return out;
}

}  // namespace

TEST_CASE("built-in lattices have the expected degree and basis") {
  const PeriodicGraph sq = build_graph(LatticeKind::square, 1.0);
  CHECK(sq.degree(0) == 4);
  CHECK(sq.basis()[0] == Vec2{1, 0});
  CHECK(sq.basis()[1] == Vec2{0, 1});

  const PeriodicGraph tri = build_graph(LatticeKind::triangular, 1.0);
  CHECK(tri.degree(0) == 6);
  CHECK(tri.basis()[0] == Vec2{1, 0});
  CHECK(tri.basis()[1].x == doctest::Approx(0.5));
  CHECK(tri.basis()[1].y == doctest::Approx(std::sqrt(3.0) / 2));

  const PeriodicGraph hex = build_graph(LatticeKind::hexagonal, 1.0);
  CHECK(hex.sites_per_cell() == 2);
  CHECK(hex.degree(0) == 3);
  CHECK(hex.degree(1) == 3);

  for (auto kind : {LatticeKind::square, LatticeKind::triangular, LatticeKind::hexagonal}) {
    const PeriodicGraph g = build_graph(kind, 0.25);
    CHECK(g.min_edge_length() == doctest::Approx(0.25));
    CHECK(g.max_edge_length() == doctest::Approx(0.25));
    CHECK_NOTHROW(validate(g));
  }
}

TEST_CASE("nonpositive mesh is rejected") {
  CHECK_THROWS_AS(build_graph(LatticeKind::square, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_graph(LatticeKind::square, -1.0), std::invalid_argument);
}

TEST_CASE("validate reports broken periodic graphs") {
  const PeriodicGraph loop(LatticeKind::square, {Vec2{1, 0}, Vec2{0, 1}}, {Vec2{0, 0}},
                           {{0, 0, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}});
  CHECK_THROWS_AS(validate(loop), std::logic_error);

  const PeriodicGraph rows(LatticeKind::square, {Vec2{1, 0}, Vec2{0, 1}}, {Vec2{0, 0}},
                           {{0, 0, 1, 0}});
  CHECK_THROWS_AS(validate(rows), std::logic_error);

  // Only even cells are reachable: the cycle offsets span an index-2 sublattice.
  const PeriodicGraph diag(LatticeKind::square, {Vec2{1, 0}, Vec2{0, 1}}, {Vec2{0, 0}},
                           {{0, 0, 1, 1}, {0, 0, 1, -1}});
  CHECK_THROWS_AS(validate(diag), std::logic_error);

  const PeriodicGraph split(LatticeKind::hexagonal, {Vec2{1, 0}, Vec2{0, 1}},
                            {Vec2{0, 0}, Vec2{0.5, 0.5}}, {{0, 0, 1, 0}, {0, 0, 0, 1}});
  CHECK_THROWS_AS(validate(split), std::logic_error);
}

TEST_CASE("degenerate probabilities give deterministic configurations") {
  const PeriodicGraph g = build_graph(LatticeKind::triangular, 1.0);
  const Region region = box_region(g, 20, 20);
  const auto all_open = sample_configuration(
      PercolationModel::homogeneous(LatticeKind::triangular, PercolationMode::site, 1.0), region, 7);
  CHECK(all_open.open_count() == region.sites.size());
  const auto all_closed = sample_configuration(
      PercolationModel::homogeneous(LatticeKind::triangular, PercolationMode::site, 0.0), region, 7);
  CHECK(all_closed.open_count() == 0);
}

TEST_CASE("open fraction at p = 1/2 over a million sites") {
  const auto model = PercolationModel::homogeneous(LatticeKind::square, PercolationMode::site, 0.5);
  const Region region = box_region(model.graph(), 1000, 1000);
  const auto c = sample_configuration(model, region, 2024);
  const double frac = static_cast<double>(c.open_count()) / 1e6;
  // 4 sigma of a binomial(1e6, 1/2) fraction is 0.002.
  CHECK(std::abs(frac - 0.5) < 0.002);
}

TEST_CASE("sampling is a pure function of model, region and seed") {
  const auto model = PercolationModel::homogeneous(LatticeKind::hexagonal, PercolationMode::bond, 0.4);
  const Region region = box_region(model.graph(), 30, 17);
  const auto a = sample_configuration(model, region, 99, 3);
  const auto b = sample_configuration(model, region, 99, 3);
  const auto c = sample_configuration(model, region, 99, 4);
  CHECK(a.status == b.status);
  CHECK(a.status != c.status);
  CHECK(a.status.size() == region.edges.size());
}

TEST_CASE("2x2 square-site law matches the product measure") {
  const double p = 0.3;
  const auto model = PercolationModel::homogeneous(LatticeKind::square, PercolationMode::site, p);
  const Region region = box_region(model.graph(), 2, 2);
  REQUIRE(region.sites.size() == 4);
  const int n = 1000000;
  std::array<long, 16> counts{};
  for (int k = 0; k < n; ++k) {
    const auto c = sample_configuration(model, region, 5, static_cast<std::uint64_t>(k));
    int code = 0;
    for (int b = 0; b < 4; ++b) code |= c.status[b] << b;
    ++counts[code];
  }
  for (int code = 0; code < 16; ++code) {
    const int open = std::popcount(static_cast<unsigned>(code));
    const double pi = std::pow(p, open) * std::pow(1 - p, 4 - open);
    const double sigma = std::sqrt(n * pi * (1 - pi));
    CHECK(std::abs(counts[code] - n * pi) < 4 * sigma);
  }
}

TEST_CASE("bond sampling respects per-class probabilities") {
  const PeriodicGraph g = build_graph(LatticeKind::square, 1.0);
  const PercolationModel model(g, PercolationMode::bond, ClassScheme::sublattice, {1.0, 0.0});
  const Region region = box_region(g, 10, 10);
  const auto c = sample_configuration(model, region, 1);
  for (std::size_t k = 0; k < region.edges.size(); ++k)
    CHECK(c.status[k] == (region.edges[k].e == 0 ? 1 : 0));
}

TEST_CASE("checkerboard classes split sites by parity") {
  const PeriodicGraph g = build_graph(LatticeKind::square, 1.0);
  const PercolationModel model(g, PercolationMode::site, ClassScheme::checkerboard, {1.0, 0.0});
  const Region region = box_region(g, 8, 8);
  const auto c = sample_configuration(model, region, 3);
  for (std::size_t k = 0; k < region.sites.size(); ++k) {
    const SiteRef s = region.sites[k];
    CHECK(c.status[k] == (((s.i + s.j) & 1) == 0 ? 1 : 0));
  }
  CHECK_THROWS_AS(PercolationModel(g, PercolationMode::site, ClassScheme::checkerboard, {0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(PercolationModel(g, PercolationMode::site, ClassScheme::uniform, {1.5}),
                  std::invalid_argument);
}

TEST_CASE("plane maps act on the embedding only") {
  const auto model = PercolationModel::homogeneous(LatticeKind::square, PercolationMode::site, 0.6);

  const auto same = apply_map(model, PlaneMap::identity());
  CHECK(same.graph().basis() == model.graph().basis());
  CHECK(same.open_prob() == model.open_prob());

  const auto rotated = apply_map(model, PlaneMap::rotation(std::numbers::pi / 2));
  CHECK(rounded_lengths(rotated.graph()) == rounded_lengths(model.graph()));
  // Every rotated site is a site of the original lattice.
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j) {
      const Vec2 p = rotated.graph().position({i, j, 0});
      CHECK(std::abs(p.x - std::round(p.x)) < 1e-12);
      CHECK(std::abs(p.y - std::round(p.y)) < 1e-12);
    }

  const auto stretched = apply_map(model, PlaneMap::diagonal(2, 1));
  CHECK(rounded_lengths(stretched.graph()) == std::multiset<long>{1000000, 2000000});

  CHECK_THROWS_AS(PlaneMap(1, 2, 2, 4), std::invalid_argument);
}

TEST_CASE("applying a map and then its inverse restores the embedding") {
  const PlaneMap g(1.3, -0.4, 0.7, 2.1);
  for (auto kind : {LatticeKind::square, LatticeKind::triangular, LatticeKind::hexagonal}) {
    const auto model = PercolationModel::homogeneous(kind, PercolationMode::site, 0.5, 0.37);
    const auto back = apply_map(apply_map(model, g), g.inverse());
    for (int i = -5; i <= 5; ++i)
      for (int j = -5; j <= 5; ++j)
        for (int s = 0; s < model.graph().sites_per_cell(); ++s) {
          const Vec2 a = model.graph().position({i, j, s});
          const Vec2 b = back.graph().position({i, j, s});
          CHECK((a - b).norm() < 1e-12);
        }
  }
}

TEST_CASE("translating a site by a basis vector preserves its neighbourhood") {
  for (auto kind : {LatticeKind::square, LatticeKind::triangular, LatticeKind::hexagonal}) {
    const PeriodicGraph g = build_graph(kind, 1.0);
    for (int s = 0; s < g.sites_per_cell(); ++s) {
      const SiteRef base{4, -2, s};
      for (const auto& [di, dj] : {std::pair{1, 0}, std::pair{0, 1}, std::pair{-3, 5}}) {
        const SiteRef moved{base.i + di, base.j + dj, s};
        const auto a = g.incident_edges(base);
        const auto b = g.incident_edges(moved);
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
          CHECK(b[k].e == a[k].e);
          CHECK(b[k].i - a[k].i == di);
          CHECK(b[k].j - a[k].j == dj);
        }
      }
    }
  }
}

TEST_CASE("stored critical probabilities") {
  CHECK(critical_probability(LatticeKind::triangular, PercolationMode::site) == 0.5);
  CHECK(critical_probability(LatticeKind::square, PercolationMode::bond) == 0.5);
  CHECK(critical_probability(LatticeKind::square, PercolationMode::site) ==
        doctest::Approx(0.5927460).epsilon(1e-7));
  CHECK(critical_probability(LatticeKind::triangular, PercolationMode::bond) +
            critical_probability(LatticeKind::hexagonal, PercolationMode::bond) ==
        doctest::Approx(1.0));

  const PeriodicGraph g = build_graph(LatticeKind::square, 1.0);
  const PercolationModel mixed(g, PercolationMode::site, ClassScheme::checkerboard, {0.6, 0.5});
  CHECK_THROWS_AS(critical_probability(mixed), NoCriticalValue);
  const PercolationModel even(g, PercolationMode::site, ClassScheme::checkerboard, {0.6, 0.6});
  CHECK(critical_probability(even) == doctest::Approx(0.592746));
}

TEST_CASE("object keys are distinct for sites and edges") {
  std::set<std::uint64_t> keys;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j)
      for (int s = 0; s < 3; ++s) {
        keys.insert(object_key(SiteRef{i, j, s}));
        keys.insert(object_key(EdgeRef{i, j, s}));
      }
  CHECK(keys.size() == 7 * 7 * 3 * 2);
}

TEST_CASE("model descriptors") {
  const auto m = model_from_json(nlohmann::json::parse(R"({"lattice":"triangular","mode":"site","p":0.5})"));
  CHECK(m.graph().kind() == LatticeKind::triangular);
  CHECK(m.open_prob() == std::vector<double>{0.5});

  const auto c = model_from_json(nlohmann::json::parse(R"({"lattice":"square","mode":"bond","p":"critical"})"));
  CHECK(c.open_prob().front() == 0.5);

  const auto k = model_from_json(nlohmann::json::parse(
      R"({"lattice":"square","mode":"site","classes":"checkerboard","p":{"0":0.7,"1":0.4}})"));
  CHECK(k.scheme() == ClassScheme::checkerboard);
  CHECK(k.open_prob() == std::vector<double>{0.7, 0.4});
  const auto again = model_from_json(model_to_json(k));
  CHECK(again.open_prob() == k.open_prob());

  CHECK_THROWS_AS(model_from_json(nlohmann::json::parse(R"({"mode":"site","p":0.5})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(model_from_json(nlohmann::json::parse(R"({"lattice":"penrose","p":0.5})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(model_from_json(nlohmann::json::parse(
                      R"({"lattice":"square","classes":"checkerboard","p":{"0":0.7}})")),
                  std::invalid_argument);
}
