#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "wplab/grid.hpp"
#include "wplab/warp.hpp"

namespace wplab {

/// f_{a,b} and its r-derivatives at one radius.
struct RadialDerivatives {
  double value = 0.0;
  double first = 0.0;      // f'
  double second = 0.0;     // f''
  double laplacian = 0.0;  // f'' + cot(r) f'
};

/// Closed-form derivatives of f_{a,b}. At r in {0, pi} with a > 0 the
/// Laplacian is the removable limit 2 f''. Throws SingularPointError for
/// a = 0 at r in {0, pi}.
RadialDerivatives radial_derivatives(double a, double b, double r);

/// Delta h at x, each term differentiated in its own polar frame.
double warp_laplacian(const WarpField& f, const Location& x);

/// 2 - 2 Delta h / h, the scalar curvature of S^2 x_h S^1.
double scalar_curvature(const WarpField& f, const Location& x);
double scalar_curvature(const WarpSample& s);

struct LaplacianInequalityReport {
  double max_excess = 0.0;  // max (Delta f - f)
  double worst_r = 0.0;
  std::size_t samples = 0;
  bool pass = true;
};

/// Scans Delta f_{a,b} - f_{a,b} over the radii; pass iff max <= tolerance.
LaplacianInequalityReport check_laplacian_inequality(double a, double b, std::span<const double> r_samples,
                                                     double tolerance = 1e-9);

/// h, Delta h and Scal at every node of a grid.
class ScalarField {
 public:
  struct Entry {
    SpherePoint point;
    double weight = 0.0;
    double h = 0.0;
    double laplacian = 0.0;
    double scal = 0.0;
  };

  static ScalarField build(const WarpField& f, const SphereGrid& grid);

  const std::vector<Entry>& entries() const { return entries_; }
  double min_scal() const;
  double min_h() const;
  /// Integral of Scal * h over S^2; times 2 pi this is the total scalar
  /// curvature of the warped product.
  double integral_scal_h() const;
  /// Integral of h over S^2.
  double integral_h() const;
  /// Integral of Delta h over S^2.
  double integral_laplacian() const;

  /// Columns r,theta,h,laplacian,scal.
  void write_csv(std::ostream& os) const;

 private:
  std::vector<Entry> entries_;
};

}  // namespace wplab
