#pragma once

#include <cstddef>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "wplab/grid.hpp"
#include "wplab/warp.hpp"

namespace wplab {

using NodeFunction = std::function<double(const GridNode&)>;

/// sum_k w_k g(x_k). Throws SingularPointError if g is not finite at a node.
double integrate(const SphereGrid& grid, const NodeFunction& g);
/// Integral of h over S^2.
double integrate(const WarpField& f, const SphereGrid& grid);

/// -2 (cos r + ln tan(r/2) - cos r ln sin r), an antiderivative of
/// -2 ln(sin r) sin r on (0, pi).
double log_antiderivative(double r);
/// 2 pi * integral_{r0}^{r1} (-2 ln sin r) sin r dr, via the antiderivative.
double log_annulus_integral(double r0, double r1);
/// Integral of f_{0,b} about one pole over the whole sphere.
double log_term_integral(double b);

/// Integral of h over S^2 where every a = 0 term is integrated in closed
/// form and only the remaining terms (a > 0) and the constant are
/// quadratured on the grid.
double integrate_log_split(const WarpField& f, const SphereGrid& grid);

/// 2 pi * integral of h: volume of S^2 x_h S^1.
double volume(const WarpField& f, const SphereGrid& grid);

/// (2 pi integral |h_j^2 - h_inf^2|^q)^{1/q}: L^q distance of the metrics
/// g_S2 + h^2 g_S1 with respect to the unit product metric.
double lq_metric_distance(const WarpField& fj, const WarpField& finf, double q, const SphereGrid& grid);

/// (integral |grad h|^p)^{1/p} on a fixed grid.
double gradient_lp_norm(const WarpField& f, double p, const SphereGrid& grid);
/// (integral |grad h_j - grad h_inf|^p)^{1/p} on a fixed grid.
double gradient_lp_distance(const WarpField& fj, const WarpField& finf, double p, const SphereGrid& grid);

/// Pole-exclusion radii used to refine singular gradient integrals.
std::vector<double> default_exclusion_ladder();

/// Grid options for a given exclusion radius, with the refinement depth
/// capped so that the finest panel stays well above the radius.
GridOptions options_for_exclusion(const GridOptions& base, double exclusion_radius);

struct W1pResult {
  double value = 0.0;        // finest-radius value of (integral |grad h|^p)^{1/p}
  bool divergent = false;    // last three refinements each grew by > 1%
  bool stable = true;        // last refinement changed the value by < 1%
  std::vector<double> exclusion_radii;
  std::vector<double> values;
};

/// W^{1,p} seminorm of h. Fields with singular terms are integrated on a
/// ladder of shrinking exclusion radii and checked for divergence.
W1pResult w1p_seminorm(const WarpField& f, double p, const GridOptions& base = {},
                       std::span<const double> exclusion_ladder = {});

struct DivergenceRow {
  double epsilon = 0.0;
  double integral_p = 0.0;  // integral over r_i > eps of |grad h|^p
  double integral_1 = 0.0;  // same with p = 1
};

/// integral_p ~ c ln(1/eps) + d. rate_per_point divides c by the number of
/// distinct singular points (poles and antipodes).
struct DivergenceScan {
  double p = 2.0;
  std::vector<DivergenceRow> rows;
  double total_rate = 0.0;
  double rate_per_point = 0.0;
  double intercept = 0.0;
  double fit_rms = 0.0;
  std::size_t singular_points = 0;

  void write_csv(std::ostream& os) const;
  nlohmann::json to_json() const;
};

DivergenceScan divergence_scan(const WarpField& f, std::span<const double> eps_list, double p = 2.0,
                               const GridOptions& base = {}, std::size_t max_poles = 32);

struct ConvergenceRow {
  std::size_t level = 0;
  std::string norm;  // "Lq_metric" or "W1p_gradient"
  double exponent = 1.0;
  double value = 0.0;
  double tail_bound = 0.0;  // largest limit-warp truncation bound over nodes
};

struct ConvergenceOptions {
  GridOptions grid{.resolution = 32, .depth_limit = 12, .panel_order = 8, .exclusion_radius = 1e-12};
  std::size_t refine_poles = 24;
  double tail_tolerance = 1e-10;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;

  /// Rows of one (norm, exponent) series in level order.
  std::vector<ConvergenceRow> series(const std::string& norm, double exponent) const;
  bool strictly_decreasing(const std::string& norm, double exponent) const;
  /// last / first value of a series.
  double reduction(const std::string& norm, double exponent) const;

  void write_csv(std::ostream& os) const;
  nlohmann::json to_json() const;
};

/// Distances from h_j to h_inf for each level, in L^q (metric) and W^{1,p}
/// (gradient) norms.
ConvergenceTable convergence_table(const PoleConfiguration& config, std::span<const std::size_t> levels,
                                   std::span<const double> q_list, std::span<const double> p_list,
                                   const ConvergenceOptions& options = {});

}  // namespace wplab
