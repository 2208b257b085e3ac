#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "wplab/grid.hpp"
#include "wplab/report.hpp"
#include "wplab/sphere.hpp"

namespace wplab {

/// f_{a,b}(r) = ln((1 + a) / (sin^2 r + a)) + b. a = 0 gives -2 ln sin r + b.
struct BaseWarp {
  double a = 0.0;
  double b = 2.0;
};

/// Value of f_{a,b} at r in [0, pi]. Returns +inf for a = 0 at r in {0, pi}.
double eval_base(const BaseWarp& w, double r);

/// Value, radial derivative and Laplacian of f_{a,b}, given s = sin r >= 0
/// and c = cos r. Avoids forming r, so it stays accurate at the poles.
struct RadialTermValues {
  double value = 0.0;
  double dr = 0.0;         // df/dr
  double laplacian = 0.0;  // f'' + cot(r) f'
};
RadialTermValues radial_term(const BaseWarp& w, double s, double c);

struct WarpTerm {
  double weight = 0.0;  // A_i
  BaseWarp warp;
  Vec3 pole;
};

/// h, Delta h and grad h at a point. grad h is a tangent vector in R^3.
/// tail_bound is the rigorous bound on the neglected part of an infinite sum
/// (0 for finite sums).
struct WarpSample {
  double value = 0.0;
  double laplacian = 0.0;
  Vec3 gradient;
  double tail_bound = 0.0;
  std::size_t terms_used = 0;
};

/// h_j (finite level) or h_inf (limit) as a sum of radial terms, plus an
/// optional constant. Immutable; sample() may be called concurrently.
class WarpField {
 public:
  enum class Kind { kFinite, kLimit, kTerms };

  /// h_j = sum_{i<=j} A_i f_{a_j, b_i}(d(x, x_ij)).
  static WarpField finite(const PoleConfiguration& config, std::size_t level);
  /// h_inf = sum_i A_i f_{0, b_i}(d(x, x_i)), summed until the tail bound
  /// drops below tail_tolerance.
  static WarpField limit(const PoleConfiguration& config, double tail_tolerance = 1e-10);
  static WarpField constant(double c);
  static WarpField from_terms(std::vector<WarpTerm> terms, double constant = 0.0);

  WarpSample sample(const Location& x) const;
  double value(const Location& x) const { return sample(x).value; }
  double laplacian(const Location& x) const { return sample(x).laplacian; }
  Vec3 gradient(const Location& x) const { return sample(x).gradient; }

  Kind kind() const { return kind_; }
  bool is_limit() const { return kind_ == Kind::kLimit; }
  /// Level j for finite fields, 0 otherwise.
  std::size_t level() const { return level_; }
  double constant_part() const { return constant_; }
  double tail_tolerance() const { return tail_tolerance_; }
  std::size_t max_terms() const { return max_terms_; }
  const PoleConfiguration* config() const { return config_.get(); }

  /// Explicit terms. For limit fields this is the cached prefix only.
  const std::vector<WarpTerm>& terms() const { return terms_; }

  /// Points where a term is singular or steep (poles and antipodes), for
  /// grid refinement. Limit fields list at most max_poles poles.
  std::vector<Vec3> singular_points(std::size_t max_poles = 32) const;

  WarpField with_tail_tolerance(double tau) const;
  WarpField with_max_terms(std::size_t n) const;

 private:
  WarpTerm limit_term(std::size_t i) const;

  Kind kind_ = Kind::kTerms;
  std::shared_ptr<const PoleConfiguration> config_;
  std::size_t level_ = 0;
  double constant_ = 0.0;
  std::vector<WarpTerm> terms_;
  double tail_tolerance_ = 1e-10;
  std::size_t max_terms_ = 1000000;
};

/// A generic admissible term f: S^2 -> R with value, gradient and Laplacian
/// access and a declared integral bound T.
class GeneralWarpTerm {
 public:
  virtual ~GeneralWarpTerm() = default;
  virtual double value(const Location& x) const = 0;
  virtual Vec3 gradient(const Location& x) const = 0;
  virtual double laplacian(const Location& x) const = 0;
  virtual double integral_bound() const = 0;
  virtual std::vector<Vec3> singular_points() const { return {}; }
};

/// f_{a,b} composed with distance to a pole.
class RadialWarpTerm final : public GeneralWarpTerm {
 public:
  RadialWarpTerm(BaseWarp w, Vec3 pole, double integral_bound);
  double value(const Location& x) const override;
  Vec3 gradient(const Location& x) const override;
  double laplacian(const Location& x) const override;
  double integral_bound() const override { return bound_; }
  std::vector<Vec3> singular_points() const override;

 private:
  BaseWarp w_;
  Vec3 pole_;
  double bound_;
};

class ConstantWarpTerm final : public GeneralWarpTerm {
 public:
  ConstantWarpTerm(double c, double integral_bound) : c_(c), bound_(integral_bound) {}
  double value(const Location&) const override { return c_; }
  Vec3 gradient(const Location&) const override { return {}; }
  double laplacian(const Location&) const override { return 0.0; }
  double integral_bound() const override { return bound_; }

 private:
  double c_;
  double bound_;
};

/// Term built from callables; a test hook.
class FunctionWarpTerm final : public GeneralWarpTerm {
 public:
  using Scalar = std::function<double(const Location&)>;
  using Vector = std::function<Vec3(const Location&)>;
  FunctionWarpTerm(Scalar value, Vector gradient, Scalar laplacian, double integral_bound)
      : value_(std::move(value)), gradient_(std::move(gradient)), laplacian_(std::move(laplacian)),
        bound_(integral_bound) {}
  double value(const Location& x) const override { return value_(x); }
  Vec3 gradient(const Location& x) const override { return gradient_(x); }
  double laplacian(const Location& x) const override { return laplacian_(x); }
  double integral_bound() const override { return bound_; }

 private:
  Scalar value_;
  Vector gradient_;
  Scalar laplacian_;
  double bound_;
};

/// Admissibility of a single term: integral <= T, value >= 2 and
/// Delta f <= f at every grid node.
struct AdmissibilityTolerances {
  double integral_relative = 1e-9;
  double value_floor = 1e-12;
  double laplacian = 1e-9;
};
VerificationReport check_term_admissibility(const GeneralWarpTerm& term, const SphereGrid& grid, const AdmissibilityTolerances& tol = {},
                               const std::string& context = "");

/// Checks f_{a',b}(r) >= f_{a,b}(r) for a' <= a over the samples.
struct MonotonicityReport {
  double max_violation = 0.0;  // max of f_{a_k}(r) - f_{a_{k+1}}(r), <= 0 when monotone
  bool monotone = true;
  bool strictly_increasing = true;
  std::size_t comparisons = 0;
};
MonotonicityReport monotonicity_scan(double b, std::span<const double> r_samples, std::span<const double> a_sequence);

}  // namespace wplab
