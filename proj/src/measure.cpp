#include "wplab/measure.hpp"

#include <algorithm>
#include <limits>

namespace wplab {

namespace {

double lp_root(double integral, double p) { return std::pow(std::max(integral, 0.0), 1.0 / p); }

// Sum over nodes of w * g(node), evaluated in parallel and reduced in order.
double reduce_nodes(const SphereGrid& grid, const NodeFunction& g) {
  const auto& nodes = grid.nodes();
  std::vector<double> vals(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t k) { vals[k] = g(nodes[k]); });
  CompensatedSum s;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (!std::isfinite(vals[k])) {
      throw SingularPointError("integrand is not finite at node (r=" + std::to_string(nodes[k].point.colatitude()) +
                               ", theta=" + std::to_string(nodes[k].point.longitude()) + ")");
    }
    s += nodes[k].weight * vals[k];
  }
  return s.value();
}

bool has_singular_terms(const WarpField& f) {
  if (f.is_limit()) return true;
  return std::any_of(f.terms().begin(), f.terms().end(),
                     [](const WarpTerm& t) { return t.weight != 0.0 && t.warp.a == 0.0; });
}

}  // namespace

double integrate(const SphereGrid& grid, const NodeFunction& g) { return reduce_nodes(grid, g); }

double integrate(const WarpField& f, const SphereGrid& grid) {
  return reduce_nodes(grid, [&f](const GridNode& n) { return f.value(n.loc); });
}

double log_antiderivative(double r) {
  const double c = std::cos(r);
  return -2.0 * (c + std::log(std::tan(0.5 * r)) - c * std::log(std::sin(r)));
}

double log_annulus_integral(double r0, double r1) {
  if (!(0.0 <= r0 && r0 <= r1 && r1 <= kPi)) throw ConfigError("log_annulus_integral: need 0 <= r0 <= r1 <= pi");
  // One-sided limits of the antiderivative at the endpoints, where
  // ln tan(r/2) and cos r ln sin r diverge but their difference does not.
  const double at0 = -2.0 * (1.0 - std::log(2.0));
  const double atpi = -2.0 * (-1.0 + std::log(2.0));
  const double F1 = r1 == kPi ? atpi : log_antiderivative(r1);
  const double F0 = r0 == 0.0 ? at0 : log_antiderivative(r0);
  return kTwoPi * (F1 - F0);
}

double log_term_integral(double b) { return log_annulus_integral(0.0, kPi) + 4.0 * kPi * b; }

double integrate_log_split(const WarpField& f, const SphereGrid& grid) {
  CompensatedSum total;
  total += 4.0 * kPi * f.constant_part();
  std::vector<WarpTerm> smooth;
  auto add_term = [&](const WarpTerm& t) {
    if (t.weight == 0.0) return;
    if (t.warp.a == 0.0) {
      total += t.weight * log_term_integral(t.warp.b);
    } else {
      smooth.push_back(t);
    }
  };
  if (f.is_limit()) {
    const PoleConfiguration& cfg = *f.config();
    const auto cap = cfg.pole_count();
    const double per_term_max = log_term_integral(cfg.Kbar());
    for (std::size_t i = 1;; ++i) {
      if (cap && i > *cap) break;
      total += cfg.weight(i) * log_term_integral(cfg.b(i));
      if (cfg.weight_tail(i) * per_term_max < 1e-16 * std::abs(total.value())) break;
      if (i >= f.max_terms()) {
        throw TruncationError("integrate_log_split: series tail not resolved", cfg.weight_tail(i) * per_term_max);
      }
    }
  } else {
    for (const auto& t : f.terms()) add_term(t);
  }
  if (!smooth.empty()) {
    const WarpField rest = WarpField::from_terms(std::move(smooth));
    total += integrate(rest, grid);
  }
  return total.value();
}

double volume(const WarpField& f, const SphereGrid& grid) { return kTwoPi * integrate(f, grid); }

double lq_metric_distance(const WarpField& fj, const WarpField& finf, double q, const SphereGrid& grid) {
  if (!(q >= 1.0)) throw ConfigError("lq_metric_distance: q must be >= 1");
  const double integral = reduce_nodes(grid, [&](const GridNode& n) {
    const double a = fj.value(n.loc);
    const double b = finf.value(n.loc);
    return std::pow(std::abs(a * a - b * b), q);
  });
  return lp_root(kTwoPi * integral, q);
}

double gradient_lp_norm(const WarpField& f, double p, const SphereGrid& grid) {
  if (!(p >= 1.0)) throw ConfigError("gradient norm: p must be >= 1");
  return lp_root(reduce_nodes(grid, [&](const GridNode& n) { return std::pow(norm(f.gradient(n.loc)), p); }), p);
}

double gradient_lp_distance(const WarpField& fj, const WarpField& finf, double p, const SphereGrid& grid) {
  if (!(p >= 1.0)) throw ConfigError("gradient distance: p must be >= 1");
  return lp_root(reduce_nodes(grid,
                              [&](const GridNode& n) {
                                return std::pow(norm(fj.gradient(n.loc) - finf.gradient(n.loc)), p);
                              }),
                 p);
}

std::vector<double> default_exclusion_ladder() { return {1e-3, 1e-6, 1e-12, 1e-24, 1e-48, 1e-96}; }

GridOptions options_for_exclusion(const GridOptions& base, double exclusion_radius) {
  GridOptions o = base;
  o.exclusion_radius = exclusion_radius;
  const int nt = std::max(1, base.resolution / base.panel_order);
  const double panel = 2.0 / nt;
  const double room = std::floor(std::log2(panel / (10.0 * exclusion_radius)));
  o.depth_limit = static_cast<int>(std::clamp(room, 0.0, static_cast<double>(base.depth_limit)));
  return o;
}

W1pResult w1p_seminorm(const WarpField& f, double p, const GridOptions& base, std::span<const double> ladder) {
  if (!(p >= 1.0)) throw ConfigError("w1p_seminorm: p must be >= 1");
  W1pResult res;
  const std::vector<Vec3> points = f.singular_points();
  if (!has_singular_terms(f)) {
    const SphereGrid grid = build_grid(base, points);
    res.value = gradient_lp_norm(f, p, grid);
    res.exclusion_radii.push_back(base.exclusion_radius);
    res.values.push_back(res.value);
    return res;
  }
  std::vector<double> eps(ladder.begin(), ladder.end());
  if (eps.empty()) eps = default_exclusion_ladder();
  for (double e : eps) {
    const SphereGrid grid = build_grid(options_for_exclusion(base, e), points);
    res.exclusion_radii.push_back(e);
    res.values.push_back(gradient_lp_norm(f, p, grid));
  }
  res.value = res.values.back();
  std::vector<double> change;
  for (std::size_t k = 1; k < res.values.size(); ++k) {
    change.push_back(std::abs(res.values[k] - res.values[k - 1]) / std::max(std::abs(res.values[k - 1]), 1e-300));
  }
  res.stable = !change.empty() && change.back() < 0.01;
  res.divergent = change.size() >= 3 && std::all_of(change.end() - 3, change.end(), [](double c) { return c > 0.01; });
  return res;
}

DivergenceScan divergence_scan(const WarpField& f, std::span<const double> eps_list, double p, const GridOptions& base,
                               std::size_t max_poles) {
  if (eps_list.size() < 2) throw ConfigError("divergence_scan: need at least two radii");
  for (std::size_t k = 1; k < eps_list.size(); ++k) {
    if (!(eps_list[k] < eps_list[k - 1])) throw ConfigError("divergence_scan: radii must decrease");
  }
  DivergenceScan scan;
  scan.p = p;
  const std::vector<Vec3> points = f.singular_points(max_poles);
  scan.singular_points = points.size();
  std::vector<double> x, y;
  for (double e : eps_list) {
    const SphereGrid grid = build_grid(options_for_exclusion(base, e), points);
    DivergenceRow row;
    row.epsilon = e;
    row.integral_p = reduce_nodes(grid, [&](const GridNode& n) { return std::pow(norm(f.gradient(n.loc)), p); });
    row.integral_1 = reduce_nodes(grid, [&](const GridNode& n) { return norm(f.gradient(n.loc)); });
    scan.rows.push_back(row);
    x.push_back(std::log(1.0 / e));
    y.push_back(row.integral_p);
  }
  const LinearFit fit = fit_line(x, y);
  scan.total_rate = fit.slope;
  scan.intercept = fit.intercept;
  scan.fit_rms = fit.rms_residual;
  scan.rate_per_point = scan.singular_points ? fit.slope / static_cast<double>(scan.singular_points) : 0.0;
  return scan;
}

void DivergenceScan::write_csv(std::ostream& os) const {
  os << "epsilon,log_inv_epsilon,integral_p,integral_1\n";
  for (const auto& r : rows) {
    os << format_double(r.epsilon) << ',' << format_double(std::log(1.0 / r.epsilon)) << ','
       << format_double(r.integral_p) << ',' << format_double(r.integral_1) << '\n';
  }
}

nlohmann::json DivergenceScan::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"epsilon", r.epsilon}, {"integral_p", r.integral_p}, {"integral_1", r.integral_1}});
  }
  return {{"p", p},
          {"total_rate", total_rate},
          {"rate_per_point", rate_per_point},
          {"intercept", intercept},
          {"fit_rms", fit_rms},
          {"singular_points", singular_points},
          {"rows", rows_json}};
}

std::vector<ConvergenceRow> ConvergenceTable::series(const std::string& norm_name, double exponent) const {
  std::vector<ConvergenceRow> out;
  for (const auto& r : rows) {
    if (r.norm == norm_name && r.exponent == exponent) out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.level < b.level; });
  return out;
}

bool ConvergenceTable::strictly_decreasing(const std::string& norm_name, double exponent) const {
  const auto s = series(norm_name, exponent);
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (!(s[k].value < s[k - 1].value)) return false;
  }
  return !s.empty();
}

double ConvergenceTable::reduction(const std::string& norm_name, double exponent) const {
  const auto s = series(norm_name, exponent);
  if (s.empty() || s.front().value == 0.0) return 0.0;
  return s.back().value / s.front().value;
}

void ConvergenceTable::write_csv(std::ostream& os) const {
  os << "level,norm,exponent,value,tail_bound\n";
  for (const auto& r : rows) {
    os << r.level << ',' << r.norm << ',' << format_double(r.exponent) << ',' << format_double(r.value) << ','
       << format_double(r.tail_bound) << '\n';
  }
}

nlohmann::json ConvergenceTable::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  std::vector<std::pair<std::string, double>> keys;
  for (const auto& r : rows) {
    rows_json.push_back({{"level", r.level},
                         {"norm", r.norm},
                         {"exponent", r.exponent},
                         {"value", r.value},
                         {"tail_bound", r.tail_bound}});
    if (std::find(keys.begin(), keys.end(), std::make_pair(r.norm, r.exponent)) == keys.end()) {
      keys.emplace_back(r.norm, r.exponent);
    }
  }
  nlohmann::json trends = nlohmann::json::array();
  for (const auto& [n, e] : keys) {
    trends.push_back({{"norm", n},
                      {"exponent", e},
                      {"strictly_decreasing", strictly_decreasing(n, e)},
                      {"last_over_first", reduction(n, e)}});
  }
  return {{"rows", rows_json}, {"trends", trends}};
}

ConvergenceTable convergence_table(const PoleConfiguration& config, std::span<const std::size_t> levels,
                                   std::span<const double> q_list, std::span<const double> p_list,
                                   const ConvergenceOptions& options) {
  config.validate();
  if (config.depends_on_level()) {
    throw ConfigError("convergence tables need a configuration with an explicit limit (converging, dense or custom)");
  }
  if (levels.empty()) throw ConfigError("convergence_table: levels list is empty");
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (levels[k] == 0 || (k > 0 && levels[k] <= levels[k - 1])) {
      throw ConfigError("convergence_table: levels must be positive and ascending");
    }
  }
  for (double q : q_list) {
    if (!(q >= 1.0)) throw ConfigError("convergence_table: exponents must be >= 1");
  }
  for (double p : p_list) {
    if (!(p >= 1.0)) throw ConfigError("convergence_table: exponents must be >= 1");
  }

  const WarpField finf = WarpField::limit(config, options.tail_tolerance);
  std::vector<Vec3> points = finf.singular_points(options.refine_poles);
  for (std::size_t j : levels) {
    const auto lp = WarpField::finite(config, j).singular_points();
    points.insert(points.end(), lp.begin(), lp.end());
  }
  points = with_antipodes(points);
  const SphereGrid grid = build_grid(options.grid, points);
  const auto& nodes = grid.nodes();

  std::vector<WarpSample> limit_samples(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t k) { limit_samples[k] = finf.sample(nodes[k].loc); });
  double tail = 0.0;
  for (const auto& s : limit_samples) {
    if (!std::isfinite(s.value)) throw SingularPointError("limit warp is infinite at a quadrature node");
    tail = std::max(tail, s.tail_bound);
  }

  ConvergenceTable table;
  std::vector<WarpSample> level_samples(nodes.size());
  for (std::size_t j : levels) {
    const WarpField fj = WarpField::finite(config, j);
    parallel_for(nodes.size(), [&](std::size_t k) { level_samples[k] = fj.sample(nodes[k].loc); });
    for (double q : q_list) {
      CompensatedSum s;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double a = level_samples[k].value;
        const double b = limit_samples[k].value;
        s += nodes[k].weight * std::pow(std::abs(a * a - b * b), q);
      }
      table.rows.push_back({j, "Lq_metric", q, lp_root(kTwoPi * s.value(), q), tail});
    }
    for (double p : p_list) {
      CompensatedSum s;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        s += nodes[k].weight * std::pow(norm(level_samples[k].gradient - limit_samples[k].gradient), p);
      }
      table.rows.push_back({j, "W1p_gradient", p, lp_root(s.value(), p), tail});
    }
  }
  return table;
}

}  // namespace wplab
