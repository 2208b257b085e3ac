#include "wplab/warp.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace wplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kCachedLimitTerms = 256;

}  // namespace

double eval_base(const BaseWarp& w, double r) {
  if (!(r >= 0.0 && r <= kPi)) throw ConfigError("eval_base: r must lie in [0, pi]");
  const double s = (r == 0.0 || r == kPi) ? 0.0 : std::sin(r);
  return radial_term(w, s, std::cos(r)).value;
}

RadialTermValues radial_term(const BaseWarp& w, double s, double c) {
  RadialTermValues t;
  if (w.a == 0.0) {
    if (s > 0.0) {
      t.value = -2.0 * std::log(s) + w.b;
      t.dr = -2.0 * c / s;
    } else {
      t.value = kInf;
      t.dr = c > 0.0 ? -kInf : kInf;
    }
    // -2 ln sin r is harmonic up to the constant 2: f'' + cot f' = 2.
    t.laplacian = 2.0;
    return t;
  }
  const double q = s * s + w.a;
  const double c2 = c * c;
  t.value = std::log1p(c2 / q) + w.b;
  t.dr = -2.0 * s * c / q;
  t.laplacian = (2.0 * s * s - 4.0 * c2) / q + 4.0 * s * s * c2 / (q * q);
  return t;
}

WarpField WarpField::finite(const PoleConfiguration& config, std::size_t level) {
  config.validate();
  if (level == 0) throw ConfigError("warp level must be >= 1");
  WarpField f;
  f.kind_ = Kind::kFinite;
  f.config_ = std::make_shared<const PoleConfiguration>(config);
  f.level_ = level;
  const double a = config.a(level);
  for (std::size_t i = 1; i <= level; ++i) {
    const double A = config.weight(i);
    if (A == 0.0) continue;
    f.terms_.push_back({A, {a, config.b(i)}, config.pole_vector(i, level)});
  }
  return f;
}

WarpField WarpField::limit(const PoleConfiguration& config, double tail_tolerance) {
  config.validate();
  if (config.depends_on_level()) {
    throw ConfigError("the equator configuration has no pointwise limit warp");
  }
  if (!(tail_tolerance > 0.0)) throw ConfigError("tail tolerance must be > 0");
  WarpField f;
  f.kind_ = Kind::kLimit;
  f.config_ = std::make_shared<const PoleConfiguration>(config);
  f.tail_tolerance_ = tail_tolerance;
  std::size_t n = kCachedLimitTerms;
  if (auto cap = config.pole_count()) n = std::min(n, *cap);
  for (std::size_t i = 1; i <= n; ++i) f.terms_.push_back(f.limit_term(i));
  return f;
}

WarpField WarpField::constant(double c) {
  WarpField f;
  f.constant_ = c;
  return f;
}

WarpField WarpField::from_terms(std::vector<WarpTerm> terms, double constant) {
  WarpField f;
  f.terms_ = std::move(terms);
  f.constant_ = constant;
  return f;
}

WarpField WarpField::with_tail_tolerance(double tau) const {
  if (!(tau > 0.0)) throw ConfigError("tail tolerance must be > 0");
  WarpField f = *this;
  f.tail_tolerance_ = tau;
  return f;
}

WarpField WarpField::with_max_terms(std::size_t n) const {
  WarpField f = *this;
  f.max_terms_ = std::max<std::size_t>(n, 1);
  return f;
}

WarpTerm WarpField::limit_term(std::size_t i) const {
  return {config_->weight(i), {0.0, config_->b(i)}, config_->pole_vector(i, 1)};
}

namespace {

struct Accumulator {
  CompensatedSum value;
  CompensatedSum laplacian;
  CompensatedSum gx, gy, gz;
  bool on_pole = false;

  void add(const WarpTerm& term, const Location& x) {
    if (term.weight == 0.0) return;
    const RadialCoord rc = radial_coord(x, term.pole);
    const RadialTermValues t = radial_term(term.warp, rc.sin_r, rc.cos_r);
    value += term.weight * t.value;
    laplacian += term.weight * t.laplacian;
    if (std::isinf(t.value)) {
      on_pole = true;
      return;
    }
    // grad(f o r) = f'(r) grad r and grad r points away from the pole.
    const double g = -term.weight * t.dr;
    gx += g * rc.toward_pole.x;
    gy += g * rc.toward_pole.y;
    gz += g * rc.toward_pole.z;
  }

  WarpSample finish(double constant) const {
    WarpSample s;
    s.value = value.value() + constant;
    s.laplacian = laplacian.value();
    if (on_pole) {
      s.value = kInf;
      s.gradient = {kInf, kInf, kInf};
    } else {
      s.gradient = {gx.value(), gy.value(), gz.value()};
    }
    return s;
  }
};

}  // namespace

WarpSample WarpField::sample(const Location& x) const {
  Accumulator acc;
  if (kind_ != Kind::kLimit) {
    for (const auto& t : terms_) acc.add(t, x);
    WarpSample s = acc.finish(constant_);
    s.terms_used = terms_.size();
    return s;
  }

  const PoleConfiguration& cfg = *config_;
  const auto cap = cfg.pole_count();
  const bool can_bound = cfg.tail_radius(0).has_value();
  const double d_limit = can_bound ? geodesic_distance(x.x, cfg.limit_point.embedding()) : 0.0;
  const double kbar = cfg.Kbar();

  if (!can_bound && !cap) {
    throw TruncationError("limit warp: no tail bound for this configuration; set truncate", kInf);
  }
  double bound = kInf;
  std::size_t n = 0;
  while (true) {
    if (cap && n >= *cap) {
      bound = 0.0;
      break;
    }
    ++n;
    if (n <= terms_.size()) {
      acc.add(terms_[n - 1], x);
    } else {
      acc.add(limit_term(n), x);
    }
    const double tail = cfg.weight_tail(n);
    if (tail == 0.0) {
      bound = 0.0;
      break;
    }
    if (can_bound) {
      // Remaining poles lie within tail_radius(n) of the limit point, so
      // their distance to x lies in [lo, hi]; sin is smallest at an end.
      const double radius = *cfg.tail_radius(n);
      const double lo = std::clamp(d_limit - radius, 0.0, kPi);
      const double hi = std::clamp(d_limit + radius, 0.0, kPi);
      const double sin_min = std::min(std::sin(lo), std::sin(hi));
      if (sin_min > 0.0) {
        const double value_bound = tail * (-2.0 * std::log(sin_min) + kbar);
        const double grad_bound = 2.0 * tail / sin_min;
        bound = std::max({value_bound, 2.0 * tail, grad_bound});
        if (bound < tail_tolerance_) break;
      }
    }
    if (n >= max_terms_) {
      throw TruncationError("limit warp: tail bound not met after " + std::to_string(n) + " terms", bound);
    }
  }
  WarpSample s = acc.finish(constant_);
  s.tail_bound = bound;
  s.terms_used = n;
  return s;
}

std::vector<Vec3> WarpField::singular_points(std::size_t max_poles) const {
  std::vector<Vec3> poles;
  if (kind_ == Kind::kLimit) {
    std::size_t n = max_poles;
    if (auto cap = config_->pole_count()) n = std::min(n, *cap);
    for (std::size_t i = 1; i <= n; ++i) {
      const WarpTerm t = i <= terms_.size() ? terms_[i - 1] : limit_term(i);
      if (t.weight > 0.0) poles.push_back(t.pole);
    }
  } else {
    for (const auto& t : terms_) {
      if (t.weight != 0.0) poles.push_back(t.pole);
    }
  }
  return with_antipodes(poles);
}

RadialWarpTerm::RadialWarpTerm(BaseWarp w, Vec3 pole, double integral_bound)
    : w_(w), pole_(normalized(pole)), bound_(integral_bound) {
  if (w.a < 0.0) throw ConfigError("radial warp term needs a >= 0");
}

double RadialWarpTerm::value(const Location& x) const {
  const RadialCoord rc = radial_coord(x, pole_);
  return radial_term(w_, rc.sin_r, rc.cos_r).value;
}

Vec3 RadialWarpTerm::gradient(const Location& x) const {
  const RadialCoord rc = radial_coord(x, pole_);
  return -radial_term(w_, rc.sin_r, rc.cos_r).dr * rc.toward_pole;
}

double RadialWarpTerm::laplacian(const Location& x) const {
  const RadialCoord rc = radial_coord(x, pole_);
  return radial_term(w_, rc.sin_r, rc.cos_r).laplacian;
}

std::vector<Vec3> RadialWarpTerm::singular_points() const {
  const std::vector<Vec3> p{pole_};
  return with_antipodes(p);
}

VerificationReport check_term_admissibility(const GeneralWarpTerm& term, const SphereGrid& grid, const AdmissibilityTolerances& tol,
                               const std::string& context) {
  CompensatedSum integral;
  double min_value = kInf;
  double max_excess = -kInf;
  for (const auto& node : grid.nodes()) {
    const double v = term.value(node.loc);
    const double lap = term.laplacian(node.loc);
    integral += node.weight * v;
    min_value = std::min(min_value, v);
    max_excess = std::max(max_excess, lap - v);
  }
  const double T = term.integral_bound();
  VerificationReport report;
  report.add(make_claim("term_integral", "integral of the term over the sphere is at most T", context,
                        integral.value(), Relation::kLessEqual, T, tol.integral_relative * std::abs(T)));
  report.add(make_claim("term_value_floor", "term is at least 2 everywhere", context, min_value,
                        Relation::kGreaterEqual, 2.0, tol.value_floor));
  report.add(make_claim("term_laplacian", "Laplacian of the term is at most the term", context, max_excess,
                        Relation::kLessEqual, 0.0, tol.laplacian));
  return report;
}

MonotonicityReport monotonicity_scan(double b, std::span<const double> r_samples, std::span<const double> a_sequence) {
  for (std::size_t k = 0; k < a_sequence.size(); ++k) {
    if (!(a_sequence[k] > 0.0)) throw ConfigError("monotonicity_scan: a values must be > 0");
    if (k > 0 && !(a_sequence[k] < a_sequence[k - 1])) {
      throw ConfigError("monotonicity_scan: a sequence must be strictly decreasing");
    }
  }
  MonotonicityReport rep;
  rep.max_violation = -kInf;
  for (double r : r_samples) {
    for (std::size_t k = 0; k + 1 < a_sequence.size(); ++k) {
      const double before = eval_base({a_sequence[k], b}, r);
      const double after = eval_base({a_sequence[k + 1], b}, r);
      const double diff = before - after;
      rep.max_violation = std::max(rep.max_violation, diff);
      if (diff > 0.0) rep.monotone = false;
      if (!(after > before)) rep.strictly_increasing = false;
      ++rep.comparisons;
    }
  }
  if (rep.comparisons == 0) rep.max_violation = 0.0;
  return rep;
}

}  // namespace wplab
