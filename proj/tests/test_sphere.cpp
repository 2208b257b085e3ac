#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>
#include <utility>

#include "wplab/sphere.hpp"

using namespace wplab;

namespace {

SpherePoint random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), t(0.0, kTwoPi);
  return SpherePoint(std::acos(u(rng)), t(rng));
}

double dot_distance(const SpherePoint& a, const SpherePoint& b) {
  const long double ra = a.colatitude(), ta = a.longitude(), rb = b.colatitude(), tb = b.longitude();
  const long double c = std::cos(ra) * std::cos(rb) + std::sin(ra) * std::sin(rb) * std::cos(ta - tb);
  return static_cast<double>(std::acos(std::clamp(c, -1.0L, 1.0L)));
}

}  // namespace

TEST_CASE("geodesic distance examples") {
  const SpherePoint n(0.0, 0.0), s(kPi, 0.0);
  CHECK(geodesic_distance(n, n) == 0.0);
  CHECK(geodesic_distance(n, s) == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(geodesic_distance(SpherePoint(kPi / 2, 0), SpherePoint(kPi / 2, kPi / 2)) ==
        doctest::Approx(kPi / 2).epsilon(1e-15));
}

TEST_CASE("geodesic distance agrees with the spherical law of cosines") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const SpherePoint a = random_point(rng), b = random_point(rng);
    CHECK(geodesic_distance(a, b) == doctest::Approx(dot_distance(a, b)).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("geodesic distance is a metric on random triples") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 10000; ++i) {
    const SpherePoint a = random_point(rng), b = random_point(rng), c = random_point(rng);
    const double ab = geodesic_distance(a, b), ba = geodesic_distance(b, a);
    REQUIRE(std::abs(ab - ba) <= 1e-12);
    REQUIRE(ab <= geodesic_distance(a, c) + geodesic_distance(c, b) + 1e-12);
    REQUIRE(ab >= 0.0);
    REQUIRE(ab <= kPi);
  }
}

TEST_CASE("sphere point invariants") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const SpherePoint p = random_point(rng);
    CHECK(norm(p.embedding()) == doctest::Approx(1.0).epsilon(1e-12));
    const SpherePoint q = SpherePoint::from_unit_vector(p.embedding());
    CHECK(geodesic_distance(p, q) < 1e-12);
  }
  CHECK(SpherePoint(1.0, -0.5).longitude() == doctest::Approx(kTwoPi - 0.5));
  CHECK(SpherePoint(1.0, kTwoPi).longitude() == doctest::Approx(0.0));
  CHECK_THROWS_AS(SpherePoint(-0.1, 0.0), ConfigError);
  CHECK_THROWS_AS(SpherePoint(4.0, 0.0), ConfigError);
}

TEST_CASE("move_along travels the requested distance") {
  const Vec3 from = SpherePoint(0.7, 1.1).embedding();
  const Vec3 dir = normalized(cross(from, Vec3{0, 0, 1}));
  for (double d : {1e-9, 0.3, 1.5, 3.0}) {
    CHECK(geodesic_distance(from, move_along(from, dir, d)) == doctest::Approx(d).epsilon(1e-9));
  }
}

TEST_CASE("converging poles") {
  const SpherePoint limit(0.4, 2.0);
  const PoleConfiguration c = poles_case1(limit);
  CHECK(geodesic_distance(c.pole(1, 1), limit) == doctest::Approx(1.0).epsilon(1e-12));
  double prev = kPi;
  for (std::size_t i = 1; i <= 50; ++i) {
    CHECK(geodesic_distance(c.pole(i, 1), c.pole(i, 7)) == 0.0);
    const double d = geodesic_distance(c.pole(i, 1), limit);
    CHECK(d == doctest::Approx(1.0 / i).epsilon(1e-9));
    CHECK(d < prev);
    prev = d;
  }
  REQUIRE(c.tail_radius(10).has_value());
  CHECK(*c.tail_radius(10) >= 1.0 / 11 - 1e-15);
}

TEST_CASE("dense enumeration prefix is distinct and dense") {
  const PoleConfiguration c = poles_case2();
  std::set<std::pair<double, double>> seen;
  for (std::size_t i = 1; i <= 100; ++i) {
    const SpherePoint p = c.pole(i, 1);
    CHECK(geodesic_distance(p, c.pole(i, 5)) == 0.0);
    CHECK(seen.insert({p.colatitude(), p.longitude()}).second);
  }
  // brute-force density: every target has an enumerated point within 0.1
  std::mt19937_64 rng(14);
  std::vector<SpherePoint> prefix;
  for (std::size_t i = 1; i <= 20000; ++i) prefix.push_back(dense_enumeration_point(i));
  for (int t = 0; t < 20; ++t) {
    const SpherePoint target = random_point(rng);
    double best = kPi;
    for (const auto& p : prefix) best = std::min(best, geodesic_distance(p, target));
    CHECK(best < 0.1);
  }
}

TEST_CASE("dense enumeration uses rational angles") {
  for (std::size_t i = 1; i <= 200; ++i) {
    const SpherePoint p = dense_enumeration_point(i);
    CHECK(p.colatitude() > 0.0);
    CHECK(p.colatitude() < kPi);
    bool rational_r = false;
    for (int q = 2; q <= 400 && !rational_r; ++q) {
      const double pq = p.colatitude() / kPi * q;
      rational_r = std::abs(pq - std::round(pq)) < 1e-9;
    }
    CHECK(rational_r);
  }
}

TEST_CASE("equator poles") {
  const SpherePoint a = poles_case3(1, 4);
  CHECK(a.colatitude() == doctest::Approx(kPi / 2));
  CHECK(a.longitude() == doctest::Approx(kPi / 2));
  const SpherePoint b = poles_case3(5, 5);
  CHECK(b.longitude() == doctest::Approx(0.0).scale(1.0));
  for (std::size_t i = 1; i <= 6; ++i) {
    const double d = geodesic_distance(poles_case3(i, 6), poles_case3(i % 6 + 1, 6));
    CHECK(d == doctest::Approx(kTwoPi / 6).epsilon(1e-12));
  }
  const PoleConfiguration c = equator_configuration();
  CHECK(geodesic_distance(c.pole(2, 8), poles_case3(2, 8)) == 0.0);
}

TEST_CASE("default sequences and derived constants") {
  const PoleConfiguration c = poles_case1(SpherePoint(0, 0));
  CHECK(c.weight(1) == 0.5);
  CHECK(c.K() == doctest::Approx(1.0));
  for (std::size_t n : {0, 1, 5, 30}) CHECK(c.weight_tail(n) == doctest::Approx(std::ldexp(1.0, -static_cast<int>(n))));
  CHECK(c.a(3) == doctest::Approx(1.0 / 9));
  CHECK(c.b(4) == 2.0);
  CHECK(c.Kbar() == 2.0);
  CHECK(c.T() == doctest::Approx(8 * kPi - 4 * kPi * std::log(4.0) + 8 * kPi));
  for (std::size_t j = 1; j < 40; ++j) CHECK(c.a(j + 1) <= c.a(j));
}

TEST_CASE("configuration JSON round trip") {
  PoleConfiguration c = poles_case1(SpherePoint(0.3, 1.0), 0.8, 1.5);
  c.offsets.kind = OffsetRule::Kind::kCyclic;
  c.offsets.values = {2.0, 3.0};
  const PoleConfiguration d = PoleConfiguration::from_json(c.to_json());
  CHECK(d.to_json() == c.to_json());
  for (std::size_t i = 1; i <= 5; ++i) CHECK(geodesic_distance(c.pole(i, 1), d.pole(i, 1)) < 1e-15);

  PoleConfiguration e = equator_configuration();
  CHECK(PoleConfiguration::from_json(e.to_json()).to_json() == e.to_json());
}

TEST_CASE("configuration errors") {
  auto j = poles_case1(SpherePoint(0, 0)).to_json();
  j["K"] = 3.0;
  CHECK_THROWS_AS(PoleConfiguration::from_json(j), ConfigError);
  CHECK_THROWS_AS(PoleConfiguration::from_json(nlohmann::json{{"case", "spiral"}}), ConfigError);
  CHECK_THROWS_AS(PoleConfiguration::from_json(nlohmann::json::array()), ConfigError);
  auto bad_weights = equator_configuration().to_json();
  bad_weights["weight_rule"] = {{"kind", "geometric"}, {"first", 0.5}, {"ratio", 1.5}};
  CHECK_THROWS_AS(PoleConfiguration::from_json(bad_weights), ConfigError);
}

TEST_CASE("offsets below two are reported as inadmissible") {
  PoleConfiguration c = equator_configuration();
  CHECK(c.admissibility_issues().empty());
  c.offsets.kind = OffsetRule::Kind::kCyclic;
  c.offsets.values = {1.0, 2.0};
  CHECK(c.admissibility_issues().size() == 1);
}
