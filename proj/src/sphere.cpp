#include "wplab/sphere.hpp"

#include <algorithm>
#include <limits>
#include <mutex>
#include <numeric>

namespace wplab {

SpherePoint::SpherePoint(double colatitude, double longitude) {
  if (!(colatitude >= 0.0 && colatitude <= kPi)) {
    throw ConfigError("SpherePoint: colatitude outside [0, pi]: " + std::to_string(colatitude));
  }
  if (!std::isfinite(longitude)) throw ConfigError("SpherePoint: non-finite longitude");
  r_ = colatitude;
  theta_ = std::fmod(longitude, kTwoPi);
  if (theta_ < 0.0) theta_ += kTwoPi;
  if (theta_ >= kTwoPi) theta_ = 0.0;
}

SpherePoint SpherePoint::from_unit_vector(const Vec3& v) {
  const double rho = std::hypot(v.x, v.y);
  const double r = std::atan2(rho, v.z);
  const double theta = rho == 0.0 ? 0.0 : std::atan2(v.y, v.x);
  return SpherePoint(std::clamp(r, 0.0, kPi), theta);
}

Vec3 SpherePoint::embedding() const {
  const double s = std::sin(r_);
  return {s * std::cos(theta_), s * std::sin(theta_), std::cos(r_)};
}

SpherePoint SpherePoint::antipode() const { return SpherePoint(kPi - r_, theta_ + kPi); }

double geodesic_distance(const Vec3& x, const Vec3& y) {
  return std::atan2(norm(cross(x, y)), dot(x, y));
}

double geodesic_distance(const SpherePoint& x, const SpherePoint& y) {
  return geodesic_distance(x.embedding(), y.embedding());
}

Vec3 move_along(const Vec3& from, const Vec3& direction, double dist) {
  return normalized(std::cos(dist) * from + std::sin(dist) * direction);
}

// --- sequences --------------------------------------------------------------

double WeightRule::weight(std::size_t i) const {
  if (i == 0) throw ConfigError("weight index starts at 1");
  if (kind == Kind::kGeometric) return first * std::pow(ratio, static_cast<double>(i - 1));
  return i <= values.size() ? values[i - 1] : 0.0;
}

double WeightRule::total() const { return tail(0); }

double WeightRule::tail(std::size_t n) const {
  if (kind == Kind::kGeometric) return first * std::pow(ratio, static_cast<double>(n)) / (1.0 - ratio);
  CompensatedSum s;
  for (std::size_t i = n; i < values.size(); ++i) s += values[i];
  return s.value();
}

std::optional<std::size_t> WeightRule::support() const {
  if (kind == Kind::kGeometric) {
    if (ratio == 0.0) return 1;
    return std::nullopt;
  }
  return values.size();
}

double SmoothingRule::a(std::size_t j) const {
  if (j == 0) throw ConfigError("smoothing index starts at 1");
  if (kind == Kind::kPower) return scale * std::pow(static_cast<double>(j), -power);
  return scale * std::pow(ratio, static_cast<double>(j - 1));
}

double OffsetRule::b(std::size_t i) const {
  if (i == 0) throw ConfigError("offset index starts at 1");
  if (kind == Kind::kConstant) return value;
  return values[(i - 1) % values.size()];
}

double OffsetRule::supremum() const {
  if (kind == Kind::kConstant) return value;
  return *std::max_element(values.begin(), values.end());
}

double OffsetRule::infimum() const {
  if (kind == Kind::kConstant) return value;
  return *std::min_element(values.begin(), values.end());
}

std::string_view to_string(PoleCase c) {
  switch (c) {
    case PoleCase::kConverging:
      return "converging";
    case PoleCase::kDense:
      return "dense";
    case PoleCase::kEquator:
      return "equator";
    case PoleCase::kCustom:
      return "custom";
  }
  return "unknown";
}

PoleCase pole_case_from_string(std::string_view s) {
  if (s == "converging") return PoleCase::kConverging;
  if (s == "dense") return PoleCase::kDense;
  if (s == "equator") return PoleCase::kEquator;
  if (s == "custom") return PoleCase::kCustom;
  throw ConfigError("unknown case '" + std::string(s) + "' (expected converging|dense|equator|custom)");
}

// --- dense enumeration ------------------------------------------------------

namespace {

struct Rational {
  int p;
  int q;
};

// Rationals p/q in (0, 1), lowest terms, ordered by (p + q, p).
const Rational& open_unit_rational(std::size_t k) {
  static std::mutex mutex;
  static std::vector<Rational> list;
  static int next_sum = 3;
  std::lock_guard lock(mutex);
  while (list.size() <= k) {
    const int s = next_sum++;
    for (int p = 1; 2 * p < s; ++p) {
      const int q = s - p;
      if (std::gcd(p, q) == 1) list.push_back({p, q});
    }
  }
  return list[k];
}

// Rationals in [0, 1): 0 followed by the open-interval list.
double half_open_unit_rational(std::size_t k) {
  if (k == 0) return 0.0;
  const Rational& r = open_unit_rational(k - 1);
  return static_cast<double>(r.p) / r.q;
}

}  // namespace

SpherePoint dense_enumeration_point(std::size_t i) {
  if (i == 0) throw ConfigError("dense enumeration index starts at 1");
  const std::size_t n = i - 1;
  // Cantor diagonal d with d(d+1)/2 <= n < (d+1)(d+2)/2.
  std::size_t d = static_cast<std::size_t>((std::sqrt(8.0 * static_cast<double>(n) + 1.0) - 1.0) / 2.0);
  while (d * (d + 1) / 2 > n) --d;
  while ((d + 1) * (d + 2) / 2 <= n) ++d;
  const std::size_t l = n - d * (d + 1) / 2;
  const std::size_t k = d - l;
  const Rational& rr = open_unit_rational(k);
  return SpherePoint(kPi * rr.p / rr.q, kTwoPi * half_open_unit_rational(l));
}

SpherePoint poles_case3(std::size_t i, std::size_t j) {
  if (i == 0 || j == 0) throw ConfigError("equator poles need i, j >= 1");
  const double frac = static_cast<double>(i % j) / static_cast<double>(j);
  return SpherePoint(kPi / 2.0, kTwoPi * frac);
}

// --- configuration ----------------------------------------------------------

namespace {

Vec3 approach_direction(const Vec3& limit) {
  Vec3 u = Vec3{1, 0, 0} - dot(Vec3{1, 0, 0}, limit) * limit;
  if (norm(u) < 1e-8) u = Vec3{0, 1, 0} - dot(Vec3{0, 1, 0}, limit) * limit;
  return normalized(u);
}

}  // namespace

SpherePoint PoleConfiguration::pole(std::size_t i, std::size_t j) const {
  if (i == 0 || j == 0) throw ConfigError("pole indices start at 1");
  switch (kind) {
    case PoleCase::kConverging: {
      const Vec3 L = limit_point.embedding();
      const double dist = approach_scale * std::pow(static_cast<double>(i), -approach_power);
      return SpherePoint::from_unit_vector(move_along(L, approach_direction(L), dist));
    }
    case PoleCase::kDense:
      return dense_enumeration_point(enumeration_seed + i);
    case PoleCase::kEquator:
      return poles_case3(i, j);
    case PoleCase::kCustom:
      if (i > points.size()) throw ConfigError("custom configuration has only " + std::to_string(points.size()) + " points");
      return points[i - 1];
  }
  throw ConfigError("unreachable pole case");
}

std::optional<std::size_t> PoleConfiguration::pole_count() const {
  std::optional<std::size_t> cap = weights.support();
  auto tighten = [&cap](std::size_t n) { cap = cap ? std::min(*cap, n) : n; };
  if (truncate) tighten(*truncate);
  if (kind == PoleCase::kCustom) tighten(points.size());
  return cap;
}

double PoleConfiguration::weight(std::size_t i) const {
  const auto cap = pole_count();
  if (cap && i > *cap) return 0.0;
  return weights.weight(i);
}

double PoleConfiguration::weight_tail(std::size_t n) const {
  const auto cap = pole_count();
  if (!cap) return weights.tail(n);
  if (n >= *cap) return 0.0;
  if (!weights.support()) return weights.tail(n) - weights.tail(*cap);
  CompensatedSum s;
  for (std::size_t i = n + 1; i <= *cap; ++i) s += weights.weight(i);
  return s.value();
}

double PoleConfiguration::K() const { return weight_tail(0); }

double PoleConfiguration::Kbar() const {
  return kbar_override ? std::max(*kbar_override, offsets.supremum()) : offsets.supremum();
}

double PoleConfiguration::T() const { return 8.0 * kPi - 4.0 * kPi * std::log(4.0) + 4.0 * kPi * Kbar(); }

std::optional<double> PoleConfiguration::tail_radius(std::size_t n) const {
  if (kind != PoleCase::kConverging) return std::nullopt;
  return approach_scale * std::pow(static_cast<double>(n + 1), -approach_power);
}

void PoleConfiguration::validate() const {
  if (weights.kind == WeightRule::Kind::kGeometric) {
    if (!(weights.first > 0.0)) throw ConfigError("weight_rule.first must be > 0 (A_1 > 0)");
    if (!(weights.ratio >= 0.0 && weights.ratio < 1.0)) {
      throw ConfigError("weight_rule.ratio must lie in [0, 1) for a summable sequence");
    }
  } else {
    if (weights.values.empty()) throw ConfigError("weight_rule.values must be nonempty");
    if (!(weights.values.front() > 0.0)) throw ConfigError("weight_rule.values[0] must be > 0 (A_1 > 0)");
    for (double v : weights.values) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("weight_rule.values must be finite and >= 0");
    }
  }
  if (smoothing.kind == SmoothingRule::Kind::kPower) {
    if (!(smoothing.scale > 0.0) || !(smoothing.power > 0.0)) {
      throw ConfigError("smoothing_rule needs scale > 0 and power > 0 so that a_j decreases to 0");
    }
  } else if (!(smoothing.scale > 0.0) || !(smoothing.ratio > 0.0 && smoothing.ratio < 1.0)) {
    throw ConfigError("smoothing_rule needs scale > 0 and ratio in (0, 1)");
  }
  if (offsets.kind == OffsetRule::Kind::kCyclic && offsets.values.empty()) {
    throw ConfigError("offset_rule.values must be nonempty");
  }
  if (!(offsets.infimum() > 0.0) || !std::isfinite(offsets.supremum())) {
    throw ConfigError("offset_rule values must be positive and finite");
  }
  if (truncate && *truncate == 0) throw ConfigError("truncate must be >= 1");
  switch (kind) {
    case PoleCase::kConverging:
      if (!(approach_power > 0.0)) throw ConfigError("approach.power must be > 0: rule does not converge to limit_point");
      if (!(approach_scale > 0.0 && approach_scale <= kPi)) throw ConfigError("approach.scale must lie in (0, pi]");
      break;
    case PoleCase::kCustom:
      if (points.empty()) throw ConfigError("custom case requires a nonempty points list");
      break;
    default:
      break;
  }
}

std::vector<std::string> PoleConfiguration::admissibility_issues() const {
  std::vector<std::string> issues;
  if (offsets.infimum() < 2.0) issues.push_back("offset b_i < 2 violates the lower bound f >= 2");
  if (kbar_override && *kbar_override < offsets.supremum()) {
    issues.push_back("Kbar is smaller than sup b_i");
  }
  return issues;
}

namespace {

SpherePoint point_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("points must be [colatitude, longitude] pairs");
  return SpherePoint(j.at(0).get<double>(), j.at(1).get<double>());
}

}  // namespace

nlohmann::json PoleConfiguration::to_json() const {
  nlohmann::json j;
  j["case"] = std::string(to_string(kind));
  if (weights.kind == WeightRule::Kind::kGeometric) {
    j["weight_rule"] = {{"kind", "geometric"}, {"first", weights.first}, {"ratio", weights.ratio}};
  } else {
    j["weight_rule"] = {{"kind", "explicit"}, {"values", weights.values}};
  }
  if (smoothing.kind == SmoothingRule::Kind::kPower) {
    j["smoothing_rule"] = {{"kind", "power"}, {"scale", smoothing.scale}, {"power", smoothing.power}};
  } else {
    j["smoothing_rule"] = {{"kind", "geometric"}, {"scale", smoothing.scale}, {"ratio", smoothing.ratio}};
  }
  if (offsets.kind == OffsetRule::Kind::kConstant) {
    j["offset_rule"] = {{"kind", "constant"}, {"value", offsets.value}};
  } else {
    j["offset_rule"] = {{"kind", "cyclic"}, {"values", offsets.values}};
  }
  j["K"] = K();
  j["Kbar"] = Kbar();
  if (truncate) j["truncate"] = *truncate;
  if (kind == PoleCase::kConverging) {
    j["limit_point"] = {limit_point.colatitude(), limit_point.longitude()};
    j["approach"] = {{"scale", approach_scale}, {"power", approach_power}};
  }
  if (kind == PoleCase::kDense) j["enumeration_seed"] = enumeration_seed;
  if (kind == PoleCase::kCustom) {
    auto arr = nlohmann::json::array();
    for (const auto& p : points) arr.push_back({p.colatitude(), p.longitude()});
    j["points"] = arr;
  }
  return j;
}

PoleConfiguration PoleConfiguration::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  PoleConfiguration c;
  try {
    c.kind = pole_case_from_string(j.at("case").get<std::string>());
    if (j.contains("weight_rule")) {
      const auto& w = j.at("weight_rule");
      const std::string kind = w.value("kind", "geometric");
      if (kind == "geometric") {
        c.weights.kind = WeightRule::Kind::kGeometric;
        c.weights.first = w.value("first", 0.5);
        c.weights.ratio = w.value("ratio", 0.5);
      } else if (kind == "explicit") {
        c.weights.kind = WeightRule::Kind::kExplicit;
        c.weights.values = w.at("values").get<std::vector<double>>();
      } else {
        throw ConfigError("weight_rule.kind must be geometric|explicit");
      }
    }
    if (j.contains("smoothing_rule")) {
      const auto& s = j.at("smoothing_rule");
      const std::string kind = s.value("kind", "power");
      if (kind == "power") {
        c.smoothing.kind = SmoothingRule::Kind::kPower;
        c.smoothing.scale = s.value("scale", 1.0);
        c.smoothing.power = s.value("power", 2.0);
      } else if (kind == "geometric") {
        c.smoothing.kind = SmoothingRule::Kind::kGeometric;
        c.smoothing.scale = s.value("scale", 1.0);
        c.smoothing.ratio = s.value("ratio", 0.5);
      } else {
        throw ConfigError("smoothing_rule.kind must be power|geometric");
      }
    }
    if (j.contains("offset_rule")) {
      const auto& o = j.at("offset_rule");
      const std::string kind = o.value("kind", "constant");
      if (kind == "constant") {
        c.offsets.kind = OffsetRule::Kind::kConstant;
        c.offsets.value = o.value("value", 2.0);
      } else if (kind == "cyclic") {
        c.offsets.kind = OffsetRule::Kind::kCyclic;
        c.offsets.values = o.at("values").get<std::vector<double>>();
      } else {
        throw ConfigError("offset_rule.kind must be constant|cyclic");
      }
    }
    if (j.contains("Kbar")) c.kbar_override = j.at("Kbar").get<double>();
    if (j.contains("truncate")) c.truncate = j.at("truncate").get<std::size_t>();
    if (j.contains("limit_point")) c.limit_point = point_from_json(j.at("limit_point"));
    if (j.contains("approach")) {
      c.approach_scale = j.at("approach").value("scale", 1.0);
      c.approach_power = j.at("approach").value("power", 1.0);
    }
    if (j.contains("enumeration_seed")) c.enumeration_seed = j.at("enumeration_seed").get<std::size_t>();
    if (j.contains("points")) {
      for (const auto& p : j.at("points")) c.points.push_back(point_from_json(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
  c.validate();
  if (j.contains("K")) {
    const double declared = j.at("K").get<double>();
    if (std::abs(declared - c.K()) > 1e-9 * std::max(1.0, std::abs(declared))) {
      throw ConfigError("declared K = " + std::to_string(declared) + " does not match weight rule sum " +
                        std::to_string(c.K()));
    }
  }
  return c;
}

PoleConfiguration poles_case1(const SpherePoint& limit_point, double scale, double power) {
  PoleConfiguration c;
  c.kind = PoleCase::kConverging;
  c.limit_point = limit_point;
  c.approach_scale = scale;
  c.approach_power = power;
  c.validate();
  return c;
}

PoleConfiguration poles_case2(std::size_t seed) {
  PoleConfiguration c;
  c.kind = PoleCase::kDense;
  c.enumeration_seed = seed;
  return c;
}

PoleConfiguration equator_configuration() {
  PoleConfiguration c;
  c.kind = PoleCase::kEquator;
  return c;
}

}  // namespace wplab

namespace wplab {

RadialCoord radial_coord(const Location& loc, const Vec3& pole) {
  if (loc.anchor && loc.anchor->rho < kAnchorTrustRadius) {
    const Anchor& a = *loc.anchor;
    const Vec3 d = a.point - pole;
    if (dot(d, d) < 1e-28) {
      return {std::sin(a.rho), std::cos(a.rho), -a.dir};
    }
    const Vec3 e = a.point + pole;
    if (dot(e, e) < 1e-28) {
      return {std::sin(a.rho), -std::cos(a.rho), a.dir};
    }
  }
  RadialCoord rc;
  rc.cos_r = dot(loc.x, pole);
  const Vec3 t = pole - rc.cos_r * loc.x;
  rc.sin_r = norm(t);
  if (rc.sin_r > 0.0) rc.toward_pole = t * (1.0 / rc.sin_r);
  return rc;
}

}  // namespace wplab
