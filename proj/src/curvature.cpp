#include "wplab/curvature.hpp"

#include <algorithm>
#include <limits>

namespace wplab {

RadialDerivatives radial_derivatives(double a, double b, double r) {
  if (!(r >= 0.0 && r <= kPi)) throw ConfigError("radial_derivatives: r must lie in [0, pi]");
  if (a < 0.0) throw ConfigError("radial_derivatives: a must be >= 0");
  const bool at_pole = r == 0.0 || r == kPi;
  if (a == 0.0 && at_pole) throw SingularPointError("radial_derivatives: f_{0,b} is singular at r = 0, pi");
  const double s = at_pole ? 0.0 : std::sin(r);
  const double c = std::cos(r);
  const RadialTermValues t = radial_term({a, b}, s, c);
  RadialDerivatives d;
  d.value = t.value;
  d.first = t.dr;
  d.laplacian = t.laplacian;
  if (a == 0.0) {
    d.second = 2.0 / (s * s);
  } else {
    const double q = s * s + a;
    d.second = -2.0 * (c * c - s * s) / q + 4.0 * s * s * c * c / (q * q);
  }
  return d;
}

double warp_laplacian(const WarpField& f, const Location& x) { return f.sample(x).laplacian; }

double scalar_curvature(const WarpSample& s) {
  if (!(s.value > 0.0)) throw SingularPointError("scalar curvature needs h > 0");
  if (std::isinf(s.value)) return 2.0;
  return 2.0 - 2.0 * s.laplacian / s.value;
}

double scalar_curvature(const WarpField& f, const Location& x) { return scalar_curvature(f.sample(x)); }

LaplacianInequalityReport check_laplacian_inequality(double a, double b, std::span<const double> r_samples,
                                                     double tolerance) {
  if (!(a > 0.0)) throw ConfigError("check_laplacian_inequality: a must be > 0");
  LaplacianInequalityReport rep;
  rep.max_excess = -std::numeric_limits<double>::infinity();
  for (double r : r_samples) {
    const RadialDerivatives d = radial_derivatives(a, b, r);
    const double excess = d.laplacian - d.value;
    if (excess > rep.max_excess) {
      rep.max_excess = excess;
      rep.worst_r = r;
    }
    ++rep.samples;
  }
  rep.pass = rep.samples == 0 || rep.max_excess <= tolerance;
  return rep;
}

ScalarField ScalarField::build(const WarpField& f, const SphereGrid& grid) {
  ScalarField out;
  const auto& nodes = grid.nodes();
  out.entries_.resize(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t k) {
    const WarpSample s = f.sample(nodes[k].loc);
    Entry& e = out.entries_[k];
    e.point = nodes[k].point;
    e.weight = nodes[k].weight;
    e.h = s.value;
    e.laplacian = s.laplacian;
    e.scal = scalar_curvature(s);
  });
  return out;
}

double ScalarField::min_scal() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : entries_) m = std::min(m, e.scal);
  return m;
}

double ScalarField::min_h() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : entries_) m = std::min(m, e.h);
  return m;
}

double ScalarField::integral_scal_h() const {
  CompensatedSum s;
  for (const auto& e : entries_) s += e.weight * e.scal * e.h;
  return s.value();
}

double ScalarField::integral_h() const {
  CompensatedSum s;
  for (const auto& e : entries_) s += e.weight * e.h;
  return s.value();
}

double ScalarField::integral_laplacian() const {
  CompensatedSum s;
  for (const auto& e : entries_) s += e.weight * e.laplacian;
  return s.value();
}

void ScalarField::write_csv(std::ostream& os) const {
  os << "r,theta,h,laplacian,scal\n";
  for (const auto& e : entries_) {
    os << format_double(e.point.colatitude()) << ',' << format_double(e.point.longitude()) << ','
       << format_double(e.h) << ',' << format_double(e.laplacian) << ',' << format_double(e.scal) << '\n';
  }
}

}  // namespace wplab
