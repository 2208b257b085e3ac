#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "wplab/measure.hpp"

using namespace wplab;

namespace {

PoleConfiguration single_pole(double b = 2.0) {
  PoleConfiguration c = poles_case1(SpherePoint(0.0, 0.0));
  c.weights.kind = WeightRule::Kind::kExplicit;
  c.weights.values = {1.0};
  c.offsets.value = b;
  return c;
}

// 2 pi * integral_0^pi g(r) sin r dr by tanh-sinh.
template <class G>
double radial_oracle(G g) {
  boost::math::quadrature::tanh_sinh<double> ts;
  return kTwoPi * ts.integrate([&](double r) { return g(r) * std::sin(r); }, 0.0, kPi);
}

double f_base(double a, double b, double r) {
  const double s = std::sin(r);
  return std::log((1.0 + a) / (s * s + a)) + b;
}

}  // namespace

TEST_CASE("integrating one gives the sphere area") {
  GridOptions o;
  const SphereGrid g = build_grid(o, {});
  CHECK(integrate(g, [](const GridNode&) { return 1.0; }) == doctest::Approx(4 * kPi).epsilon(1e-12));
  CHECK(integrate(WarpField::constant(1.0), g) == doctest::Approx(4 * kPi).epsilon(1e-12));
}

TEST_CASE("infinite values are rejected") {
  GridOptions o;
  o.resolution = 8;
  const SphereGrid g = build_grid(o, {});
  CHECK_THROWS_AS(integrate(g, [](const GridNode&) { return std::numeric_limits<double>::infinity(); }),
                  SingularPointError);
}

TEST_CASE("log antiderivative differentiates to the integrand") {
  for (double r : {0.01, 0.5, 1.3, 2.2, 3.1}) {
    const double h = 1e-5;
    const double fd = (log_antiderivative(r + h) - log_antiderivative(r - h)) / (2 * h);
    CHECK(fd == doctest::Approx(-2.0 * std::log(std::sin(r)) * std::sin(r)).epsilon(1e-8));
  }
}

TEST_CASE("closed-form log integral against independent quadrature") {
  for (double b : {2.0, 3.0, 5.0}) {
    const double oracle = radial_oracle([&](double r) { return -2.0 * std::log(std::sin(r)) + b; });
    const double closed = 8 * kPi - 4 * kPi * std::log(4.0) + 4 * kPi * b;
    CHECK(oracle == doctest::Approx(closed).epsilon(1e-10));
    CHECK(log_term_integral(b) == doctest::Approx(closed).epsilon(1e-14));

    // pure quadrature on the refined grid, no splitting
    const PoleConfiguration c = single_pole(b);
    const WarpField inf = WarpField::limit(c);
    const SphereGrid g = build_grid(GridOptions{}, inf.singular_points());
    CHECK(integrate(inf, g) == doctest::Approx(closed).epsilon(1e-6));
    CHECK(integrate_log_split(inf, g) == doctest::Approx(closed).epsilon(1e-12));
  }
  CHECK(log_term_integral(2.0) == doctest::Approx(16 * kPi - 4 * kPi * std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("smoothed term integrals are squeezed between 8 pi and the log integral") {
  for (double a : {1.0, 0.1, 0.01}) {
    const double b = 2.0;
    const WarpField f = WarpField::from_terms({{1.0, {a, b}, SpherePoint(0.7, 0.3).embedding()}});
    const SphereGrid g = build_grid(GridOptions{}, f.singular_points());
    const double v = integrate(f, g);
    CHECK(v == doctest::Approx(radial_oracle([&](double r) { return f_base(a, b, r); })).epsilon(1e-10));
    CHECK(v > 8 * kPi);
    CHECK(v <= log_term_integral(b));
  }
}

TEST_CASE("volume of a constant warp") {
  const SphereGrid g = build_grid(GridOptions{}, {});
  CHECK(volume(WarpField::constant(2.5), g) == doctest::Approx(8 * kPi * kPi * 2.5).epsilon(1e-12));
}

TEST_CASE("equator case volume against a Monte-Carlo oracle") {
  const PoleConfiguration c = equator_configuration();
  const WarpField f = WarpField::finite(c, 2);
  const double quad = volume(f, build_grid(GridOptions{}, level_singular_points(c, 2)));
  std::mt19937_64 rng(20261017);
  std::uniform_real_distribution<double> uz(-1.0, 1.0), ut(0.0, kTwoPi);
  const std::size_t n = 10000000;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = uz(rng), t = ut(rng);
    const double rho = std::sqrt(1.0 - z * z);
    const double v = f.value(Location(Vec3{rho * std::cos(t), rho * std::sin(t), z}));
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double scale = 8 * kPi * kPi;  // 2 pi * 4 pi
  const double mc = scale * mean;
  const double se = scale * std::sqrt(var / n);
  CHECK(std::abs(quad - mc) <= 3.0 * se);
}

TEST_CASE("warp integral stays below K T at every level") {
  PoleConfiguration c2 = poles_case2();
  c2.truncate = 64;
  GridOptions o;
  o.resolution = 16;
  for (const PoleConfiguration& c : {poles_case1(SpherePoint(0, 0)), c2, equator_configuration()}) {
    for (std::size_t j : {1, 2, 4, 8, 16}) {
      const WarpField f = WarpField::finite(c, j);
      CHECK(integrate(f, build_grid(o, level_singular_points(c, j))) <= c.K() * c.T());
    }
  }
}

TEST_CASE("metric distance for a single pole against a radial oracle") {
  const PoleConfiguration c = single_pole();
  const WarpField inf = WarpField::limit(c);
  GridOptions o;
  o.exclusion_radius = 1e-12;
  const SphereGrid g = build_grid(o, inf.singular_points());
  double prev = 1e300;
  for (std::size_t j = 1; j <= 12; ++j) {
    const WarpField fj = WarpField::finite(c, j);
    const double v = lq_metric_distance(fj, inf, 1.0, g);
    const double a = c.a(j);
    const double oracle = kTwoPi * radial_oracle([&](double r) {
                            const double d = f_base(a, 2.0, r), e = -2.0 * std::log(std::sin(r)) + 2.0;
                            return std::abs(d * d - e * e);
                          });
    CHECK(v == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(v < prev);
    prev = v;
  }
  CHECK(lq_metric_distance(inf, inf, 1.0, g) == 0.0);
}

TEST_CASE("metric distance satisfies the triangle inequality across levels") {
  const PoleConfiguration c = equator_configuration();
  GridOptions o;
  o.resolution = 16;
  std::vector<Vec3> pts;
  for (std::size_t j : {2, 3, 5}) {
    for (const auto& v : level_singular_points(c, j)) pts.push_back(v);
  }
  const SphereGrid g = build_grid(o, with_antipodes(pts));
  const WarpField f2 = WarpField::finite(c, 2), f3 = WarpField::finite(c, 3), f5 = WarpField::finite(c, 5);
  for (double q : {1.0, 2.0, 3.5}) {
    CHECK(lq_metric_distance(f2, f5, q, g) <= lq_metric_distance(f2, f3, q, g) + lq_metric_distance(f3, f5, q, g));
    CHECK(lq_metric_distance(f2, f2, q, g) == 0.0);
  }
}

TEST_CASE("gradient seminorms of the single-pole limit warp") {
  const WarpField inf = WarpField::limit(single_pole());
  CHECK(w1p_seminorm(WarpField::constant(2.0), 1.0).value == 0.0);

  const W1pResult p1 = w1p_seminorm(inf, 1.0);
  CHECK(p1.value == doctest::Approx(8 * kPi).epsilon(1e-3));
  CHECK_FALSE(p1.divergent);

  std::vector<double> normalized;
  for (double p : {1.0, 1.5, 1.9}) {
    const W1pResult r = w1p_seminorm(inf, p);
    CHECK(r.stable);
    CHECK_FALSE(r.divergent);
    // power-mean inequality with the normalized measure
    normalized.push_back(r.value / std::pow(4 * kPi, 1.0 / p));
    // (2 pi * 2 * int_0^{pi/2} 2^p cos^p r sin^{1-p} r dr)^(1/p), a beta integral
    const double oracle =
        std::pow(kTwoPi * std::pow(2.0, p) * boost::math::beta((p + 1) / 2, (2 - p) / 2), 1.0 / p);
    CHECK(r.value == doctest::Approx(oracle).epsilon(0.01));
  }
  CHECK(normalized[0] <= normalized[1]);
  CHECK(normalized[1] <= normalized[2]);

  const W1pResult p2 = w1p_seminorm(inf, 2.0);
  CHECK(p2.divergent);
  CHECK_FALSE(p2.stable);
}

TEST_CASE("p = 2 divergence rate") {
  const WarpField inf = WarpField::limit(single_pole());
  std::vector<double> eps;
  for (int k = 0; k < 10; ++k) eps.push_back(1e-2 * std::ldexp(1.0, -k));
  const DivergenceScan scan = divergence_scan(inf, eps, 2.0);
  CHECK(scan.singular_points == 2);
  CHECK(scan.rate_per_point == doctest::Approx(8 * kPi).epsilon(0.1));
  CHECK(scan.total_rate == doctest::Approx(16 * kPi).epsilon(0.1));
  // successive halvings add 8 pi ln 2 per singular point
  const auto& rows = scan.rows;
  const double last = rows.back().integral_p - rows[rows.size() - 2].integral_p;
  CHECK(last / scan.singular_points == doctest::Approx(8 * kPi * std::log(2.0)).epsilon(1e-3));
  // the p = 1 column settles
  CHECK(std::abs(rows.back().integral_1 - rows[rows.size() - 2].integral_1) < 1e-3 * rows.back().integral_1);
  std::ostringstream os;
  scan.write_csv(os);
  CHECK(os.str().find("epsilon") != std::string::npos);
}

TEST_CASE("convergence table trends") {
  const PoleConfiguration c = poles_case1(SpherePoint(0.0, 0.0));
  const std::vector<std::size_t> levels{1, 2, 4};
  const std::vector<double> q{1.0}, p{1.0};
  ConvergenceOptions o;
  o.grid.resolution = 16;
  const ConvergenceTable t = convergence_table(c, levels, q, p, o);
  CHECK(t.rows.size() == 6);
  CHECK(t.strictly_decreasing("Lq_metric", 1.0));
  CHECK(t.strictly_decreasing("W1p_gradient", 1.0));
  for (const auto& r : t.rows) {
    CHECK(r.value >= 0.0);
    CHECK(r.tail_bound < 1e-8);
  }
  std::ostringstream os;
  t.write_csv(os);
  CHECK(os.str().rfind("level,norm,exponent,value,tail_bound\n", 0) == 0);

  const std::vector<std::size_t> none;
  CHECK_THROWS_AS(convergence_table(c, none, q, p, o), ConfigError);
  const std::vector<std::size_t> backwards{4, 2};
  CHECK_THROWS_AS(convergence_table(c, backwards, q, p, o), ConfigError);
  CHECK_THROWS_AS(convergence_table(equator_configuration(), levels, q, p, o), ConfigError);
}
