#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "wplab/curvature.hpp"
#include "wplab/measure.hpp"
#include "wplab/metric_space.hpp"

using namespace wplab;

namespace {

double s1_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

}  // namespace

TEST_CASE("edges are positive and the graph is connected") {
  const PoleConfiguration c = equator_configuration();
  const ProductGrid g = ProductGrid::warped(WarpField::finite(c, 3), ProductGridOptions{});
  const DistanceField d = shortest_distances(g, 0);
  std::size_t unreachable = 0, bad_edges = 0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!std::isfinite(d.distance[n])) ++unreachable;
    g.for_each_edge(n, [&](std::size_t, double len) {
      if (!(len > 0.0)) ++bad_edges;
    });
  }
  CHECK(unreachable == 0);
  CHECK(bad_edges == 0);
  CHECK(d.distance[0] == 0.0);
  CHECK(d.lipschitz_violation(g) <= 1e-12);
}

TEST_CASE("cell volumes add up to the warped volume") {
  PoleConfiguration c2 = poles_case2();
  c2.truncate = 64;
  for (const PoleConfiguration& c : {poles_case1(SpherePoint(0, 0)), c2, equator_configuration()}) {
    for (std::size_t j : {1, 4}) {
      const WarpField f = WarpField::finite(c, j);
      const ProductGrid g = ProductGrid::warped(f, ProductGridOptions{});
      const double v = volume(f, build_grid(GridOptions{}, level_singular_points(c, j)));
      CHECK(g.total_volume() == doctest::Approx(v).epsilon(0.02));
    }
  }
}

TEST_CASE("constant warp distances approach product-metric geodesics") {
  const double c = 1.7;
  const ProductGridOptions o{32, 64, 32, 2};
  const ProductGrid g = ProductGrid::warped(WarpField::constant(c), o);
  // same sphere node, fiber offsets
  const std::size_t p = g.index(10, 7, 0);
  const DistanceField d = shortest_distances(g, p);
  for (int l : {1, 5, 16, 23}) {
    const double exact = c * s1_distance(0.0, g.phi_of(l));
    CHECK(d.distance[g.index(10, 7, l)] == doctest::Approx(exact).epsilon(1e-12));
  }
  CHECK(shortest_distance(g, p, p) == 0.0);

  // generic pairs: graph distance overshoots the product geodesic by the
  // lattice bias, which shrinks under refinement
  auto errors = [](const ProductGridOptions& opts) {
    const ProductGrid unit = ProductGrid::warped(WarpField::constant(1.0), opts);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t src = unit.index(opts.n_r / 4, opts.n_theta / 8, 0);
    const DistanceField du = shortest_distances(unit, src);
    double worst = 0.0, mean = 0.0;
    int count = 0;
    for (int t = 0; t < 200; ++t) {
      const std::size_t q = unit.index(static_cast<int>(u(rng) * opts.n_r), static_cast<int>(u(rng) * opts.n_theta),
                                       static_cast<int>(u(rng) * opts.n_phi));
      const double ds2 = geodesic_distance(unit.sphere_point(src), unit.sphere_point(q));
      int i, k, l;
      unit.coords(q, i, k, l);
      const double exact = std::hypot(ds2, s1_distance(0.0, unit.phi_of(l)));
      if (exact < 1.0) continue;  // short pairs are dominated by lattice spacing
      REQUIRE(du.distance[q] >= exact - 1e-12);
      const double rel = du.distance[q] / exact - 1.0;
      worst = std::max(worst, rel);
      mean += rel;
      ++count;
    }
    return std::pair{worst, mean / count};
  };
  const auto coarse = errors(ProductGridOptions{16, 32, 16, 4});
  const auto fine = errors(ProductGridOptions{32, 64, 32, 4});
  MESSAGE("coarse worst " << coarse.first << " mean " << coarse.second);
  MESSAGE("fine worst " << fine.first << " mean " << fine.second);
  CHECK(fine.first < coarse.first);
  CHECK(fine.second <= 0.02);
  CHECK(fine.first <= 0.06);
}

TEST_CASE("shortest distance is symmetric and satisfies the triangle inequality") {
  const ProductGrid g = ProductGrid::warped(WarpField::finite(equator_configuration(), 2), ProductGridOptions{});
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  for (int t = 0; t < 10; ++t) {
    const std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    const DistanceField da = shortest_distances(g, a), db = shortest_distances(g, b);
    CHECK(std::abs(da.distance[b] - db.distance[a]) <= 1e-9);
    CHECK(da.distance[c] <= da.distance[b] + db.distance[c] + 1e-12);
  }
}

TEST_CASE("coordinate path bound") {
  const ProductGrid cg = ProductGrid::warped(WarpField::constant(2.0), ProductGridOptions{});
  const std::size_t p = cg.index(5, 3, 0);
  CHECK(distance_upper_bound(cg, p, p) == 0.0);
  const std::size_t q = cg.index(5, 3, cg.n_phi() / 2);
  CHECK(distance_upper_bound(cg, p, q) == doctest::Approx(2.0 * kPi));
  CHECK(shortest_distance(cg, p, q) <= 2.0 * kPi + 3.0 * cg.max_edge_length());

  const ProductGrid g = ProductGrid::warped(WarpField::finite(equator_configuration(), 4), ProductGridOptions{});
  const VerificationReport rep = check_distance_bound(g, 200, 7, "equator j=4");
  CHECK(rep.passed());
  CHECK(rep.records().front().details.at("failures").get<int>() == 0);
}

TEST_CASE("diameter estimates") {
  const ProductGrid unit = ProductGrid::warped(WarpField::constant(1.0), ProductGridOptions{});
  const DiameterEstimate d = diameter_estimate(unit, 16);
  CHECK(d.sources == 16);
  CHECK(d.value >= kPi);
  CHECK(d.value <= std::sqrt(2.0) * kPi + 3.0 * unit.max_edge_length());
  CHECK(d.value == doctest::Approx(std::sqrt(2.0) * kPi).epsilon(0.05));

  const ProductGrid fine = ProductGrid::warped(WarpField::constant(1.0), ProductGridOptions{32, 64, 32, 2});
  CHECK(diameter_estimate(fine, 4).value == doctest::Approx(diameter_estimate(unit, 4).value).epsilon(0.02));

  PoleConfiguration c2 = poles_case2();
  c2.truncate = 64;
  for (const PoleConfiguration& c : {poles_case1(SpherePoint(0, 0)), c2, equator_configuration()}) {
    for (std::size_t j : {1, 8}) {
      const ProductGrid g = ProductGrid::warped(WarpField::finite(c, j), ProductGridOptions{});
      CHECK(diameter_estimate(g, 16).value <= 4 * kPi + kTwoPi * c.K() * c.T());
    }
  }
}

TEST_CASE("ball volumes") {
  const WarpField one = WarpField::constant(1.0);
  const ProductGrid g = ProductGrid::patch(one, SpherePoint(1.0, 2.0), kPi / 8, ProductGridOptions{32, 32, 32, 3});
  const std::size_t c = g.center_node();
  CHECK(ball_volume(g, c, 0.0) == doctest::Approx(0.0).scale(1.0));
  double prev = 0.0;
  for (double r : {0.05, 0.1, 0.2, 0.3, kPi / 8}) {
    const double v = ball_volume(g, c, r);
    CHECK(v >= prev);
    prev = v;
  }
  const double r = kPi / 8;
  CHECK(ball_volume(g, c, r) == doctest::Approx(4.0 * kPi * r * r * r / 3.0).epsilon(0.05));

  const ProductGrid fine = ProductGrid::patch(one, SpherePoint(1.0, 2.0), kPi / 8, ProductGridOptions{64, 64, 64, 3});
  CHECK(ball_volume(fine, fine.center_node(), r) == doctest::Approx(ball_volume(g, c, r)).epsilon(0.05));
  CHECK_THROWS_AS(ball_volume(g, c, 1.0), ConfigError);
}

TEST_CASE("sublevel volume of a linear distance function is exact") {
  // distance = |r - r_c| on a flat box: the slab volume is exact under
  // trilinear interpolation
  const ProductGrid g = ProductGrid::frozen_like(
      ProductGrid::patch(WarpField::constant(1.0), SpherePoint(1.0, 1.0), 0.5, ProductGridOptions{16, 16, 16, 1}),
      0);
  std::vector<double> d(g.size());
  const double rc = kPi / 2;
  for (std::size_t n = 0; n < g.size(); ++n) {
    int i, k, l;
    g.coords(n, i, k, l);
    d[n] = g.r_of(i) - rc + 0.3;  // linear, crosses 0.3 at r = rc
  }
  const double width_t = (g.n_theta() - 1) * g.dtheta();
  const double width_p = (g.n_phi() - 1) * g.dphi();
  const double S = g.s_at(0), H = g.h_at(0);
  const double expected = (rc - g.r_of(0)) * S * width_t * H * width_p;
  CHECK(g.sublevel_volume(d, 0.3, 4) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("scalar probe on the product and flat metrics") {
  const std::vector<double> radii{0.35, 0.45, 0.55, 0.65, 0.75};
  const ProductGridOptions o{48, 48, 48, 8};
  const ProbeResult one = scalar_probe(WarpField::constant(1.0), SpherePoint(1.0, 2.0), radii, o);
  CHECK(one.calibrated == doctest::Approx(2.0).epsilon(0.15));
  CHECK_FALSE(one.truncated);
  CHECK(one.rows.size() == radii.size());

  // frozen coefficients: the flat reference and the probed metric coincide
  const ProductGrid curved = ProductGrid::patch(WarpField::constant(1.0), SpherePoint(1.0, 2.0), 0.75, o);
  const ProductGrid flat = ProductGrid::frozen_like(curved, curved.center_node());
  const ProbeResult zero = scalar_probe(flat, flat.center_node(), radii);
  CHECK(std::abs(zero.calibrated) <= 0.2);

  const std::vector<double> two{0.3, 0.5};
  CHECK_THROWS_AS(scalar_probe(flat, flat.center_node(), two), ConfigError);
  const std::vector<double> big{0.3, 0.5, 0.6, 1.2};
  CHECK_THROWS_AS(scalar_probe(flat, flat.center_node(), big), ConfigError);
}

TEST_CASE("scalar probe tracks the analytic curvature far from the poles") {
  const PoleConfiguration c = poles_case1(SpherePoint(0.0, 0.0));
  const WarpField f = WarpField::finite(c, 2);
  const std::vector<double> radii{0.35, 0.45, 0.55, 0.65, 0.75};
  const SpherePoint center(kPi, 0.0);
  const double analytic = scalar_curvature(f, Location(center));
  const ProbeResult p = scalar_probe(f, center, radii, ProductGridOptions{48, 48, 48, 8});
  CHECK(p.calibrated == doctest::Approx(analytic).epsilon(0.2));
}

TEST_CASE("distance field csv") {
  const ProductGrid g = ProductGrid::warped(WarpField::constant(1.0), ProductGridOptions{4, 4, 4, 1});
  std::ostringstream os;
  shortest_distances(g, 0).write_csv(g, os);
  CHECK(os.str().rfind("r,theta,phi,distance\n", 0) == 0);
}
