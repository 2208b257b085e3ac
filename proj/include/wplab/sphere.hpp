#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "wplab/numerics.hpp"

namespace wplab {

/// Point on the unit sphere in polar coordinates: colatitude r in [0, pi],
/// longitude theta in [0, 2pi). Both in radians.
class SpherePoint {
 public:
  SpherePoint() = default;
  SpherePoint(double colatitude, double longitude);

  static SpherePoint from_unit_vector(const Vec3& v);

  double colatitude() const { return r_; }
  double longitude() const { return theta_; }
  Vec3 embedding() const;

  /// Antipodal point.
  SpherePoint antipode() const;

 private:
  double r_ = 0.0;
  double theta_ = 0.0;
};

/// Great-circle distance, in [0, pi]. Uses atan2 of cross and dot products,
/// which stays accurate for nearly coincident and nearly antipodal points.
double geodesic_distance(const Vec3& x, const Vec3& y);
double geodesic_distance(const SpherePoint& x, const SpherePoint& y);

/// Point reached by moving distance `dist` from `from` along the unit
/// tangent `direction`.
Vec3 move_along(const Vec3& from, const Vec3& direction, double dist);

/// Exact local coordinates of a location that sits very close to a known
/// singular point. Double precision cannot resolve distances below ~1e-16
/// from 3-vectors, so quadrature nodes generated around a singular point
/// carry their offset explicitly.
struct Anchor {
  Vec3 point;
  double rho = 0.0;  // geodesic distance from `point`
  Vec3 dir;          // unit tangent pointing away from `point`
};

/// Evaluation site for fields: a unit vector plus an optional anchor.
struct Location {
  Vec3 x;
  std::optional<Anchor> anchor;

  Location() = default;
  explicit Location(const Vec3& v) : x(v) {}
  Location(const SpherePoint& p) : x(p.embedding()) {}  // NOLINT(google-explicit-constructor)
};

/// Radial coordinate of a location about a pole, as (sin r, cos r) plus the
/// unit tangent pointing toward the pole (zero when r is 0 or pi).
struct RadialCoord {
  double sin_r = 0.0;
  double cos_r = 1.0;
  Vec3 toward_pole;

  double r() const { return std::atan2(sin_r, cos_r); }
};

/// Anchors are trusted below this distance; above it the 3-vector is exact
/// enough.
inline constexpr double kAnchorTrustRadius = 1e-8;

RadialCoord radial_coord(const Location& loc, const Vec3& pole);

// ---------------------------------------------------------------------------
// Parameter sequences A_i, a_j, b_i.
// ---------------------------------------------------------------------------

/// Weights A_i (i >= 1). Either geometric A_i = first * ratio^(i-1) or an
/// explicit finite list (zero beyond the list).
struct WeightRule {
  enum class Kind { kGeometric, kExplicit };
  Kind kind = Kind::kGeometric;
  double first = 0.5;
  double ratio = 0.5;
  std::vector<double> values;

  double weight(std::size_t i) const;
  /// Sum over all i (K).
  double total() const;
  /// Exact sum over i > n.
  double tail(std::size_t n) const;
  /// Number of nonzero weights, or nullopt when infinite.
  std::optional<std::size_t> support() const;
};

/// Smoothing sequence a_j: power law a_j = scale * j^(-power) or geometric
/// a_j = scale * ratio^(j-1).
struct SmoothingRule {
  enum class Kind { kPower, kGeometric };
  Kind kind = Kind::kPower;
  double scale = 1.0;
  double power = 2.0;
  double ratio = 0.5;

  double a(std::size_t j) const;
};

/// Offsets b_i: constant or cycling through an explicit list.
struct OffsetRule {
  enum class Kind { kConstant, kCyclic };
  Kind kind = Kind::kConstant;
  double value = 2.0;
  std::vector<double> values;

  double b(std::size_t i) const;
  double supremum() const;
  double infimum() const;
};

enum class PoleCase { kConverging, kDense, kEquator, kCustom };

std::string_view to_string(PoleCase c);
PoleCase pole_case_from_string(std::string_view s);

/// Full description of one example family: poles x_ij plus the sequences
/// A_i, a_j, b_i and the derived constants K, Kbar, T.
class PoleConfiguration {
 public:
  PoleCase kind = PoleCase::kEquator;
  WeightRule weights;
  SmoothingRule smoothing;
  OffsetRule offsets;

  /// Optional user override; must dominate every b_i. Defaults to sup b_i.
  std::optional<double> kbar_override;
  /// Keep only the first n poles (A_i = 0 beyond). Required for a finite
  /// limit evaluation of the dense case.
  std::optional<std::size_t> truncate;

  // Converging case: x_i at distance approach_scale / i^approach_power from
  // limit_point, along the geodesic leaving it in the theta = 0 direction.
  SpherePoint limit_point{0.0, 0.0};
  double approach_scale = 1.0;
  double approach_power = 1.0;

  // Dense case: index offset into the rational enumeration.
  std::size_t enumeration_seed = 0;

  // Custom case.
  std::vector<SpherePoint> points;

  /// Pole x_ij for i, j >= 1.
  SpherePoint pole(std::size_t i, std::size_t j) const;
  Vec3 pole_vector(std::size_t i, std::size_t j) const { return pole(i, j).embedding(); }

  bool depends_on_level() const { return kind == PoleCase::kEquator; }

  double weight(std::size_t i) const;
  double weight_tail(std::size_t n) const;
  /// Number of poles with possibly nonzero weight, nullopt if unbounded.
  std::optional<std::size_t> pole_count() const;

  double a(std::size_t j) const { return smoothing.a(j); }
  double b(std::size_t i) const { return offsets.b(i); }

  double K() const;
  double Kbar() const;
  /// T = 8pi - 4pi ln 4 + 4pi Kbar.
  double T() const;

  /// Upper bound on sup_{i > n} d(x_i, limit_point) for the converging
  /// case. nullopt when no bound exists (dense, equator).
  std::optional<double> tail_radius(std::size_t n) const;

  /// Structural checks (throws ConfigError). Admissibility of b_i >= 2 is
  /// not enforced here; see admissibility_issues().
  void validate() const;
  /// Human-readable list of violated admissibility constraints.
  std::vector<std::string> admissibility_issues() const;

  nlohmann::json to_json() const;
  static PoleConfiguration from_json(const nlohmann::json& j);
};

/// Converging poles with the given rule; i-th pole at distance
/// scale / i^power from limit_point.
PoleConfiguration poles_case1(const SpherePoint& limit_point, double scale = 1.0, double power = 1.0);
/// Dense rational enumeration, starting `seed` entries into the sequence.
PoleConfiguration poles_case2(std::size_t seed = 0);
/// Equator pole (pi/2, 2 pi i / j).
SpherePoint poles_case3(std::size_t i, std::size_t j);
/// Equator configuration with default sequences.
PoleConfiguration equator_configuration();

/// The i-th point (i >= 1) of the dense rational enumeration: colatitude
/// pi p/q with 0 < p/q < 1, longitude 2 pi p'/q' with 0 <= p'/q' < 1,
/// both in lowest terms, paired along Cantor diagonals.
SpherePoint dense_enumeration_point(std::size_t i);

}  // namespace wplab
