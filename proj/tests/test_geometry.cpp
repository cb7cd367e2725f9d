#include "sdot/geometry.hpp"
#include "sdot/predicates.hpp"
#include "sdot/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sdot;
using namespace sdot::predicates;

TEST_CASE("orient2d signs and exact fallback") {
  CHECK(orient2d(Point(0, 0), Point(1, 0), Point(0, 1)) == 1);
  CHECK(orient2d(Point(0, 0), Point(0, 1), Point(1, 0)) == -1);
  CHECK(orient2d(Point(0, 0), Point(1, 1), Point(2, 2)) == 0);

  // Points nearly on the line y = x far from the origin: the naive
  // determinant is dominated by round-off.
  const Point a(0.5, 0.5), b(12.0, 12.0);
  for (int k = 1; k <= 64; ++k) {
    const Point c(24.0 + std::ldexp(double(k), -48), 24.0);
    const int exact = orient2d_exact(a, b, c);
    CHECK(orient2d(a, b, c) == exact);
    CHECK(exact == -1);
  }
  CHECK(orient2d(a, b, Point(24.0, 24.0)) == 0);
}

TEST_CASE("clip_half_plane keeps ownership of new edges") {
  const CellPolygon sq = rectangle_polygon(Rect::unit());
  CHECK(sq.area() == doctest::Approx(1.0));
  const CellPolygon half = clip_half_plane(sq, Point(1, 0), 0.5, 7);
  CHECK(half.area() == doctest::Approx(0.5).epsilon(1e-15));
  int owned = 0;
  for (int o : half.edge_owner) owned += o == 7;
  CHECK(owned == 1);
  CHECK(is_convex_ccw(half.vertices));
  CHECK(clip_half_plane(sq, Point(1, 0), -0.1, 3).empty());
  CHECK(clip_half_plane(sq, Point(1, 0), 2.0, 3).vertices.size() == 4);
}

TEST_CASE("is_convex_ccw rejects clockwise and reflex polygons") {
  CHECK(is_convex_ccw({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)}));
  CHECK_FALSE(is_convex_ccw({Point(0, 0), Point(0, 1), Point(1, 1), Point(1, 0)}));
  CHECK_FALSE(is_convex_ccw({Point(0, 0), Point(2, 0), Point(1, 0.5), Point(2, 2), Point(0, 2)}));
}

TEST_CASE("two-site Laguerre bisector moves with the potential") {
  DiracCloud c = DiracCloud::uniform({Point(0.25, 0.5), Point(0.75, 0.5)});
  c.potentials << 0.05, 0.0;
  const LaguerreDiagram d = build_diagram(c);
  REQUIRE(d.num_interior_facets == 1);
  const Facet& f = d.facets[0];
  CHECK(f.i == 0);
  CHECK(f.j == 1);
  for (const Segment& s : f.segments) {
    CHECK(std::abs(s.a.x() - 0.6) < 1e-12);
    CHECK(std::abs(s.b.x() - 0.6) < 1e-12);
  }
  CHECK(f.length() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.cells[0].area() == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(d.cells[1].area() == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("single site owns the domain") {
  const DiracCloud c = DiracCloud::uniform({Point(0.3, 0.8)});
  const LaguerreDiagram d = build_diagram(c, Rect{-1, 0, 2, 1});
  CHECK(d.cells[0].area() == doctest::Approx(3.0));
  CHECK(d.num_interior_facets == 0);
}

TEST_CASE("cells tile the domain and respect the power inequality") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(u(rng) * 60);
    const DiracCloud c = oracle::random_cloud(rng, n, trial % 2 ? 0.5 : 0.0);
    const LaguerreDiagram d = build_diagram(c);
    double area = 0.0;
    for (int i = 0; i < n; ++i) {
      area += d.cells[i].area();
      if (!d.cells[i].empty()) CHECK(is_convex_ccw(d.cells[i].vertices));
      for (const Point& v : d.cells[i].vertices) {
        const double own = power_distance(v, i, c);
        for (int j = 0; j < n; ++j) CHECK(own <= power_distance(v, j, c) + 1e-12);
      }
    }
    CHECK(std::abs(area - 1.0) < 1e-12);
  }
}

TEST_CASE("interior facets pair up with both cells") {
  std::mt19937_64 rng(3);
  const DiracCloud c = oracle::random_cloud(rng, 25, 0.3);
  const LaguerreDiagram d = build_diagram(c);
  for (int k = 0; k < d.num_interior_facets; ++k) {
    const Facet& f = d.facets[k];
    CHECK(f.i < f.j);
    for (const Segment& s : f.segments) {
      const Point m = 0.5 * (s.a + s.b);
      CHECK(std::abs(power_distance(m, f.i, c) - power_distance(m, f.j, c)) < 1e-12);
    }
  }
  for (std::size_t k = d.num_interior_facets; k < d.facets.size(); ++k)
    CHECK(d.facets[k].j == kBoundary);
}

TEST_CASE("strongly negative potential empties a cell") {
  DiracCloud c = DiracCloud::uniform({Point(0.2, 0.5), Point(0.8, 0.5), Point(0.5, 0.5)});
  c.potentials << 0.0, 0.0, -1.0;
  const LaguerreDiagram d = build_diagram(c);
  REQUIRE(d.empty_cells().size() == 1);
  CHECK(d.empty_cells()[0] == 2);
  CHECK(d.cells[0].area() + d.cells[1].area() == doctest::Approx(1.0));
}

TEST_CASE("coincident sites are rejected or jittered") {
  const DiracCloud c = DiracCloud::uniform({Point(0.5, 0.5), Point(0.5, 0.5), Point(0.1, 0.1)});
  try {
    build_diagram(c);
    FAIL("expected CoincidentSites");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CoincidentSites);
  }
  GeometryOptions opt;
  opt.jitter_coincident = true;
  Points used;
  const LaguerreDiagram d = build_diagram(c, Rect::unit(), opt, &used);
  REQUIRE(used.size() == 3);
  CHECK((used[0] - used[1]).norm() > 0.0);
  CHECK((used[0] - used[1]).norm() < 1e-8);
  double area = 0.0;
  for (const CellPolygon& cell : d.cells) area += cell.area();
  CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("power_distance rejects bad indices") {
  const DiracCloud c = DiracCloud::uniform({Point(0.5, 0.5)});
  CHECK(power_distance(Point(0.5, 1.0), 0, c) == doctest::Approx(0.125));
  CHECK_THROWS_AS(power_distance(Point(0, 0), 1, c), Error);
  CHECK_THROWS_AS(power_distance(Point(0, 0), -1, c), Error);
}

TEST_CASE("cloud validation") {
  DiracCloud c = DiracCloud::uniform({Point(0.1, 0.1), Point(0.2, 0.2)});
  CHECK_NOTHROW(c.validate());
  c.masses << 0.7, 0.7;
  CHECK_THROWS_AS(c.validate(), Error);
  c.masses << 0.5, 0.5;
  c.positions[0].x() = std::nan("");
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("polygon centroid") {
  const Point g = polygon_centroid({Point(0, 0), Point(2, 0), Point(0, 2)});
  CHECK(g.x() == doctest::Approx(2.0 / 3.0));
  CHECK(g.y() == doctest::Approx(2.0 / 3.0));
}
