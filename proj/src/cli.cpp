#include "wplab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "wplab/curvature.hpp"
#include "wplab/measure.hpp"
#include "wplab/warp.hpp"

namespace wplab {

namespace {

constexpr const char* kVersion = "wplab 1.0.0";
constexpr double kInf = std::numeric_limits<double>::infinity();

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::string& where, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) throw ConfigError(where + "/" + item.key() + ": unknown key");
  }
}

template <class T>
T read(const json& j, const std::string& key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "/" + key + ": " + e.what());
  }
}

SpherePoint point_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(where + ": expected [colatitude, longitude]");
  }
  return SpherePoint(j[0].get<double>(), j[1].get<double>());
}

GridOptions grid_from(const json& j, const std::string& where, GridOptions g) {
  reject_unknown_keys(j, where, {"resolution", "depth_limit", "panel_order", "exclusion_radius"});
  g.resolution = read(j, "resolution", where, g.resolution);
  g.depth_limit = read(j, "depth_limit", where, g.depth_limit);
  g.panel_order = read(j, "panel_order", where, g.panel_order);
  g.exclusion_radius = read(j, "exclusion_radius", where, g.exclusion_radius);
  return g;
}

json grid_to(const GridOptions& g) {
  return {{"resolution", g.resolution},
          {"depth_limit", g.depth_limit},
          {"panel_order", g.panel_order},
          {"exclusion_radius", g.exclusion_radius}};
}

ProductGridOptions product_from(const json& j, const std::string& where, ProductGridOptions p) {
  reject_unknown_keys(j, where, {"n_r", "n_theta", "n_phi", "stencil_radius"});
  p.n_r = read(j, "n_r", where, p.n_r);
  p.n_theta = read(j, "n_theta", where, p.n_theta);
  p.n_phi = read(j, "n_phi", where, p.n_phi);
  p.stencil_radius = read(j, "stencil_radius", where, p.stencil_radius);
  return p;
}

json product_to(const ProductGridOptions& p) {
  return {{"n_r", p.n_r}, {"n_theta", p.n_theta}, {"n_phi", p.n_phi}, {"stencil_radius", p.stencil_radius}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << text;
  if (!os) throw ConfigError("write failed: " + path.string());
}

void prepare_out(const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out.string() + ": " + ec.message());
}

void finish(CommandResult& res, const RunConfig* config, const std::string& name, const std::filesystem::path& out) {
  auto& prov = res.report.provenance();
  prov["command"] = name;
  prov["version"] = kVersion;
  if (config != nullptr) {
    prov["config_hash"] = config->hash();
    prov["config"] = config->to_json();
    prov["seed"] = config->seed;
  }
  res.exit_code = exit_code_for(res.report);
  write_text(out / (name + ".json"), res.report.to_json().dump(2) + "\n");
  write_text(out / (name + ".csv"), res.report.to_csv());
}

WarpField field_at(const RunConfig& c, std::size_t level) {
  if (c.constant_warp) return WarpField::constant(*c.constant_warp);
  return WarpField::finite(*c.poles, level);
}

SphereGrid grid_at(const RunConfig& c, const GridOptions& g, std::size_t level) {
  if (c.constant_warp) return build_grid(g, {});
  return build_grid(g, level_singular_points(*c.poles, level));
}

std::string level_context(const RunConfig& c, std::size_t level) {
  return c.label() + " j=" + std::to_string(level);
}

}  // namespace

// ---------------------------------------------------------------- config

RunConfig RunConfig::from_json(const json& j) {
  reject_unknown_keys(j, "config",
                      {"configuration", "constant_warp", "levels", "grid", "product_grid", "norms", "tolerances",
                       "distance_pairs", "diameter_sources", "probe", "field", "seed"});
  RunConfig c;
  if (j.contains("configuration") == j.contains("constant_warp")) {
    throw ConfigError("config: exactly one of configuration or constant_warp is required");
  }
  if (j.contains("configuration")) {
    c.poles = PoleConfiguration::from_json(j.at("configuration"));
  } else {
    c.constant_warp = read(j, "constant_warp", "config", 1.0);
  }
  if (j.contains("levels")) {
    const json& lv = j.at("levels");
    if (!lv.is_array()) throw ConfigError("config/levels: expected an array");
    c.levels.clear();
    for (const auto& v : lv) {
      if (!v.is_number_integer() || v.get<long long>() < 1) {
        throw ConfigError("config/levels: levels must be integers >= 1");
      }
      c.levels.push_back(v.get<std::size_t>());
    }
  }
  if (j.contains("grid")) c.grid = grid_from(j.at("grid"), "config/grid", c.grid);
  if (j.contains("product_grid")) c.product = product_from(j.at("product_grid"), "config/product_grid", c.product);
  if (j.contains("norms")) {
    const json& n = j.at("norms");
    reject_unknown_keys(n, "config/norms", {"q", "p"});
    c.q_list = read(n, "q", "config/norms", c.q_list);
    c.p_list = read(n, "p", "config/norms", c.p_list);
  }
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    const std::string w = "config/tolerances";
    reject_unknown_keys(t, w,
                        {"scal", "volume", "warp_floor", "total_curvature", "laplacian", "probe_relative",
                         "convergence_ratio"});
    c.tolerances.scal = read(t, "scal", w, c.tolerances.scal);
    c.tolerances.volume = read(t, "volume", w, c.tolerances.volume);
    c.tolerances.warp_floor = read(t, "warp_floor", w, c.tolerances.warp_floor);
    c.tolerances.total_curvature = read(t, "total_curvature", w, c.tolerances.total_curvature);
    c.tolerances.laplacian = read(t, "laplacian", w, c.tolerances.laplacian);
    c.tolerances.probe_relative = read(t, "probe_relative", w, c.tolerances.probe_relative);
    c.tolerances.convergence_ratio = read(t, "convergence_ratio", w, c.tolerances.convergence_ratio);
  }
  c.distance_pairs = read(j, "distance_pairs", "config", c.distance_pairs);
  c.diameter_sources = read(j, "diameter_sources", "config", c.diameter_sources);
  if (j.contains("probe")) {
    const json& p = j.at("probe");
    const std::string w = "config/probe";
    reject_unknown_keys(p, w, {"level", "centers", "radii", "grid", "pole_guard"});
    c.probe.level = read(p, "level", w, c.probe.level);
    c.probe.radii = read(p, "radii", w, c.probe.radii);
    c.probe.pole_guard = read(p, "pole_guard", w, c.probe.pole_guard);
    if (p.contains("grid")) c.probe.grid = product_from(p.at("grid"), w + "/grid", c.probe.grid);
    if (p.contains("centers")) {
      if (!p.at("centers").is_array()) throw ConfigError(w + "/centers: expected an array");
      for (const auto& pt : p.at("centers")) c.probe.centers.push_back(point_from(pt, w + "/centers"));
    }
  }
  if (j.contains("field")) {
    const json& f = j.at("field");
    reject_unknown_keys(f, "config/field", {"kind", "level"});
    c.field.kind = read(f, "kind", "config/field", c.field.kind);
    c.field.level = read(f, "level", "config/field", c.field.level);
  }
  c.seed = read(j, "seed", "config", c.seed);
  c.validate();
  return c;
}

json RunConfig::to_json() const {
  json j;
  if (poles) j["configuration"] = poles->to_json();
  if (constant_warp) j["constant_warp"] = *constant_warp;
  j["levels"] = levels;
  j["grid"] = grid_to(grid);
  j["product_grid"] = product_to(product);
  j["norms"] = {{"q", q_list}, {"p", p_list}};
  j["tolerances"] = {{"scal", tolerances.scal},
                     {"volume", tolerances.volume},
                     {"warp_floor", tolerances.warp_floor},
                     {"total_curvature", tolerances.total_curvature},
                     {"laplacian", tolerances.laplacian},
                     {"probe_relative", tolerances.probe_relative},
                     {"convergence_ratio", tolerances.convergence_ratio}};
  j["distance_pairs"] = distance_pairs;
  j["diameter_sources"] = diameter_sources;
  json centers = json::array();
  for (const auto& p : probe.centers) centers.push_back({p.colatitude(), p.longitude()});
  j["probe"] = {{"level", probe.level},
                {"centers", centers},
                {"radii", probe.radii},
                {"grid", product_to(probe.grid)},
                {"pole_guard", probe.pole_guard}};
  j["field"] = {{"kind", field.kind}, {"level", field.level}};
  j["seed"] = seed;
  return j;
}

void RunConfig::validate() const {
  if (poles.has_value() == constant_warp.has_value()) {
    throw ConfigError("config: exactly one of configuration or constant_warp is required");
  }
  if (poles) poles->validate();
  if (constant_warp && !(*constant_warp > 0.0)) throw ConfigError("config/constant_warp: must be > 0");
  if (levels.empty()) throw ConfigError("config/levels: must not be empty");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 1) throw ConfigError("config/levels: levels must be >= 1");
    if (i > 0 && levels[i] <= levels[i - 1]) throw ConfigError("config/levels: must be strictly ascending");
  }
  const Tolerances& t = tolerances;
  for (double v : {t.scal, t.volume, t.warp_floor, t.total_curvature, t.laplacian, t.probe_relative,
                   t.convergence_ratio}) {
    if (!(v > 0.0)) throw ConfigError("config/tolerances: every tolerance must be > 0");
  }
  if (grid.resolution < 4) throw ConfigError("config/grid/resolution: must be >= 4");
  for (double q : q_list) {
    if (!(q >= 1.0)) throw ConfigError("config/norms/q: exponents must be >= 1");
  }
  for (double p : p_list) {
    if (!(p >= 1.0)) throw ConfigError("config/norms/p: exponents must be >= 1");
  }
  if (probe.level < 1) throw ConfigError("config/probe/level: must be >= 1");
  if (field.level < 1) throw ConfigError("config/field/level: must be >= 1");
  if (distance_pairs < 1) throw ConfigError("config/distance_pairs: must be >= 1");
  if (diameter_sources < 1) throw ConfigError("config/diameter_sources: must be >= 1");
}

std::string RunConfig::hash() const { return fnv1a_hex(to_json().dump()); }

std::string RunConfig::label() const {
  if (constant_warp) return "constant " + format_double(*constant_warp);
  return std::string(to_string(poles->kind));
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    // The parser message carries the line and column.
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    return RunConfig::from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

RunConfig preset_run_config(const std::string& name) {
  RunConfig c;
  if (name == "case1") {
    c.poles = poles_case1(SpherePoint(0.0, 0.0));
  } else if (name == "case2") {
    c.poles = poles_case2();
    c.poles->truncate = 64;
  } else if (name == "case3") {
    c.poles = equator_configuration();
    c.levels = {1, 2, 3, 4, 5, 6, 7, 8};
  } else if (name == "constant") {
    c.constant_warp = 1.0;
    c.levels = {1};
  } else {
    throw ConfigError("unknown preset '" + name + "' (case1, case2, case3, constant)");
  }
  c.validate();
  return c;
}

std::vector<std::size_t> parse_levels(const std::string& text) {
  std::vector<std::size_t> levels;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(' ');
    const auto last = item.find_last_not_of(' ');
    if (first == std::string::npos) throw ConfigError("--levels: empty entry");
    item = item.substr(first, last - first + 1);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || ptr != item.data() + item.size() || v < 1) {
      throw ConfigError("--levels: '" + item + "' is not a level >= 1");
    }
    levels.push_back(v);
  }
  if (levels.empty()) throw ConfigError("--levels: must not be empty");
  return levels;
}

int exit_code_for(const VerificationReport& report) {
  bool quality = false;
  for (const auto& r : report.records()) {
    if (r.pass) continue;
    if (r.id.rfind("quality_", 0) == 0) {
      quality = true;
    } else {
      return kExitClaimFailure;
    }
  }
  return quality ? kExitNumericalQuality : kExitPass;
}

// ---------------------------------------------------------------- commands

CommandResult cmd_validate(const RunConfig& config, const std::filesystem::path& out, std::ostream& log) {
  config.validate();
  prepare_out(out);
  CommandResult res;
  const std::string ctx = config.label();
  if (config.poles) {
    const PoleConfiguration& p = *config.poles;
    ClaimRecord floor = make_claim("offset_floor", "every offset b_i is at least 2", ctx, p.offsets.infimum(),
                                   Relation::kGreaterEqual, 2.0, 0.0);
    res.report.add(std::move(floor));
    ClaimRecord kbar = make_claim("kbar_dominates", "Kbar bounds every offset b_i", ctx, p.Kbar(),
                                  Relation::kGreaterEqual, p.offsets.supremum(), 0.0);
    res.report.add(std::move(kbar));
    res.report.provenance()["constants"] = {{"A1", p.weight(1)}, {"K", p.K()}, {"Kbar", p.Kbar()}, {"T", p.T()}};
    json issues = json::array();
    for (const auto& s : p.admissibility_issues()) issues.push_back(s);
    res.report.provenance()["admissibility_issues"] = issues;
    log << "validate: " << ctx << " K=" << format_double(p.K()) << " Kbar=" << format_double(p.Kbar())
        << " T=" << format_double(p.T()) << '\n';
    for (const auto& s : p.admissibility_issues()) log << "  issue: " << s << '\n';
  } else {
    log << "validate: " << ctx << '\n';
  }
  finish(res, &config, "validate", out);
  return res;
}

CommandResult cmd_verify(const RunConfig& config, const std::filesystem::path& out, std::ostream& log) {
  config.validate();
  prepare_out(out);
  CommandResult res;
  VerificationReport& rep = res.report;
  const Tolerances& tol = config.tolerances;
  const bool has_poles = config.poles.has_value();
  double A1 = 0, K = 0, T = 0;
  if (has_poles) {
    A1 = config.poles->weight(1);
    K = config.poles->K();
    T = config.poles->T();
  }
  json per_level = json::array();

  for (std::size_t level : config.levels) {
    const std::string ctx = level_context(config, level);
    const WarpField f = field_at(config, level);
    const SphereGrid grid = grid_at(config, config.grid, level);
    rep.add(make_claim("quality_grid_weights", "quadrature weights sum to the sphere area", ctx, grid.weight_sum(),
                       Relation::kWithin, 4.0 * kPi, 1e-10));
    const ScalarField sf = ScalarField::build(f, grid);
    const double min_scal = sf.min_scal();
    const double min_h = sf.min_h();
    const double vol = kTwoPi * sf.integral_h();
    const double total = kTwoPi * sf.integral_scal_h();
    rep.add(make_claim("scal_nonnegative", "scalar curvature of the warped product is nonnegative", ctx, min_scal,
                       Relation::kGreaterEqual, 0.0, tol.scal));
    rep.add(make_claim("total_curvature", "total scalar curvature equals twice the volume", ctx, total,
                       Relation::kWithin, 2.0 * vol, tol.total_curvature * 2.0 * vol));
    json lv = {{"level", level}, {"min_scal", min_scal}, {"min_h", min_h}, {"volume", vol}, {"nodes", grid.size()}};

    if (has_poles) {
      const PoleConfiguration& p = *config.poles;
      rep.add(make_claim("volume_lower", "volume is at least 16 pi^2 A_1", ctx, vol, Relation::kGreaterEqual,
                         16.0 * kPi * kPi * A1, tol.volume));
      rep.add(make_claim("volume_upper", "volume is at most 2 pi K T", ctx, vol, Relation::kLessEqual,
                         kTwoPi * K * T, tol.volume));
      rep.add(make_claim("warp_floor", "warp is at least 2 A_1", ctx, min_h, Relation::kGreaterEqual, 2.0 * A1,
                         tol.warp_floor));
      rep.add(make_claim("warp_integral", "integral of the warp over the sphere is at most K T", ctx,
                         sf.integral_h(), Relation::kLessEqual, K * T, tol.volume));

      // Each term on its own, and the radial Laplacian inequality.
      const double a = p.a(level);
      std::vector<double> r_samples(1001);
      for (std::size_t s = 0; s < r_samples.size(); ++s) r_samples[s] = kPi * s / (r_samples.size() - 1);
      double worst_excess = -kInf;
      double worst_b = 0.0;
      for (std::size_t i = 1; i <= level; ++i) {
        if (p.weight(i) == 0.0) continue;
        const RadialWarpTerm term(BaseWarp{a, p.b(i)}, p.pole_vector(i, level), T);
        AdmissibilityTolerances dt;
        dt.value_floor = tol.warp_floor;
        dt.laplacian = tol.laplacian;
        rep.merge(check_term_admissibility(term, grid, dt, ctx + " i=" + std::to_string(i)));
        const auto li = check_laplacian_inequality(a, p.b(i), r_samples, tol.laplacian);
        if (li.max_excess > worst_excess) {
          worst_excess = li.max_excess;
          worst_b = p.b(i);
        }
      }
      ClaimRecord lap = make_claim("laplacian_inequality", "Laplacian of f_{a,b} is at most f_{a,b}", ctx,
                                   worst_excess, Relation::kLessEqual, 0.0, tol.laplacian);
      lap.details = {{"a", a}, {"b", worst_b}, {"samples", r_samples.size()}};
      rep.add(std::move(lap));
    }

    const ProductGrid pg = ProductGrid::warped(f, config.product);
    rep.merge(check_distance_bound(pg, config.distance_pairs, config.seed + level, ctx));
    const DiameterEstimate diam = diameter_estimate(pg, config.diameter_sources);
    if (has_poles) {
      rep.add(make_claim("diameter_upper", "diameter is at most 4 pi + 2 pi K T", ctx, diam.value,
                         Relation::kLessEqual, 4.0 * kPi + kTwoPi * K * T, 0.0));
    } else {
      const double c = *config.constant_warp;
      const double exact = kPi * std::sqrt(1.0 + c * c);
      rep.add(make_claim("diameter_product", "diameter of the product metric", ctx, diam.value, Relation::kWithin,
                         exact, 0.05 * exact));
    }
    lv["diameter"] = diam.value;
    per_level.push_back(lv);
    log << "verify " << ctx << ": min Scal " << format_double(min_scal) << ", volume " << format_double(vol)
        << ", min h " << format_double(min_h) << ", diameter " << format_double(diam.value) << '\n';
  }

  if (has_poles && config.levels.size() >= 2) {
    const PoleConfiguration& p = *config.poles;
    std::vector<double> as;
    for (std::size_t level : config.levels) as.push_back(p.a(level));
    std::vector<double> r_samples;
    for (int s = 0; s <= 200; ++s) r_samples.push_back(kPi * s / 200.0);
    bool decreasing = true;
    for (std::size_t k = 1; k < as.size(); ++k) decreasing = decreasing && as[k] < as[k - 1];
    if (decreasing) {
      const auto mono = monotonicity_scan(p.b(1), r_samples, as);
      rep.add(make_claim("warp_monotone_in_a", "f_{a,b} does not decrease as a decreases", config.label(),
                         mono.max_violation, Relation::kLessEqual, 0.0, 0.0));
    }
  }
  rep.provenance()["levels"] = per_level;
  rep.provenance()["grid"] = grid_to(config.grid);
  rep.provenance()["product_grid"] = product_to(config.product);
  finish(res, &config, "verify", out);
  log << "verify: " << (rep.passed() ? "pass" : "fail") << " (" << rep.failures() << " failures)\n";
  return res;
}

CommandResult cmd_field(const RunConfig& config, const std::filesystem::path& out, std::ostream& log) {
  config.validate();
  const std::string& kind = config.field.kind;
  if (kind != "warp" && kind != "laplacian" && kind != "scalar") {
    throw ConfigError("field: unknown kind '" + kind + "' (warp, laplacian, scalar)");
  }
  prepare_out(out);
  const std::size_t level = config.field.level;
  const WarpField f = field_at(config, level);
  const SphereGrid grid = grid_at(config, config.grid, level);
  const ScalarField sf = ScalarField::build(f, grid);
  std::ostringstream csv;
  csv << "r,theta,value\n";
  double lo = kInf, hi = -kInf;
  for (const auto& e : sf.entries()) {
    const double v = kind == "warp" ? e.h : (kind == "laplacian" ? e.laplacian : e.scal);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    csv << format_double(e.point.colatitude()) << ',' << format_double(e.point.longitude()) << ','
        << format_double(v) << '\n';
  }
  write_text(out / "field_values.csv", csv.str());
  CommandResult res;
  const std::string ctx = level_context(config, level);
  ClaimRecord rec = make_claim("quality_field_finite", "exported field is finite at every node", ctx,
                               std::isfinite(lo) && std::isfinite(hi) ? 1.0 : 0.0, Relation::kWithin, 1.0, 0.0);
  rec.details = {{"kind", kind}, {"min", lo}, {"max", hi}, {"nodes", grid.size()}};
  res.report.add(std::move(rec));
  res.report.provenance()["grid"] = grid_to(config.grid);
  finish(res, &config, "field", out);
  log << "field " << kind << " " << ctx << ": " << grid.size() << " nodes, range [" << format_double(lo) << ", "
      << format_double(hi) << "]\n";
  return res;
}

CommandResult cmd_converge(const RunConfig& config, const std::filesystem::path& out, std::ostream& log) {
  config.validate();
  if (!config.poles) throw ConfigError("converge: needs a pole configuration");
  if (config.poles->kind == PoleCase::kEquator) {
    throw ConfigError(
        "converge: the equator case has no explicit limit warp; only subsequential convergence is known, so no "
        "table is produced");
  }
  prepare_out(out);
  ConvergenceOptions opts;
  opts.grid.resolution = config.grid.resolution;
  opts.grid.depth_limit = config.grid.depth_limit;
  opts.grid.panel_order = config.grid.panel_order;
  const ConvergenceTable table = convergence_table(*config.poles, config.levels, config.q_list, config.p_list, opts);
  {
    std::ostringstream csv;
    table.write_csv(csv);
    write_text(out / "converge_table.csv", csv.str());
  }
  CommandResult res;
  const Tolerances& tol = config.tolerances;
  double worst_tail = 0.0;
  for (const auto& row : table.rows) worst_tail = std::max(worst_tail, row.tail_bound);
  auto add_series = [&](const std::string& norm, double e) {
    const std::string ctx = config.label() + " " + norm + " " + format_double(e);
    const auto s = table.series(norm, e);
    std::size_t bad = 0;
    for (std::size_t k = 1; k < s.size(); ++k) bad += s[k].value < s[k - 1].value ? 0 : 1;
    res.report.add(make_claim("convergence_decreasing", "distance to the limit decreases with the level", ctx,
                              static_cast<double>(bad), Relation::kLessEqual, 0.0, 0.0));
    if (s.size() >= 2) {
      res.report.add(make_claim("convergence_reduction", "final distance is a small fraction of the first", ctx,
                                table.reduction(norm, e), Relation::kLessEqual, tol.convergence_ratio, 0.0));
    }
    log << "converge " << ctx << ":";
    for (const auto& r : s) log << ' ' << format_double(r.value);
    log << '\n';
  };
  for (double q : config.q_list) add_series("Lq_metric", q);
  for (double p : config.p_list) add_series("W1p_gradient", p);
  res.report.add(make_claim("quality_tail_bound", "limit warp truncation bound is negligible", config.label(),
                            worst_tail, Relation::kLessEqual, 1e-8, 0.0));
  res.report.provenance()["table"] = table.to_json();
  res.report.provenance()["grid"] = grid_to(opts.grid);
  finish(res, &config, "converge", out);
  return res;
}

CommandResult cmd_probe(const RunConfig& config, const std::filesystem::path& out, std::ostream& log) {
  config.validate();
  const ProbeSettings& ps = config.probe;
  if (ps.radii.size() < 4) throw ConfigError("probe: need at least 4 radii for the fit");
  const std::size_t level = ps.level;
  const WarpField f = field_at(config, level);
  std::vector<Vec3> poles;
  if (config.poles) {
    for (std::size_t i = 1; i <= level; ++i) {
      if (config.poles->weight(i) != 0.0) poles.push_back(config.poles->pole_vector(i, level));
    }
  }
  auto pole_distance = [&](const SpherePoint& p) {
    double d = kInf;
    for (const auto& v : poles) d = std::min(d, geodesic_distance(p, SpherePoint::from_unit_vector(v)));
    return d;
  };
  std::vector<SpherePoint> centers = ps.centers;
  if (centers.empty()) {
    if (poles.empty()) {
      centers.push_back(SpherePoint(1.0, 2.0));
    } else {
      // Fibonacci candidate farthest from every pole.
      constexpr int kCandidates = 4000;
      const double golden = kPi * (3.0 - std::sqrt(5.0));
      SpherePoint best(0.0, 0.0);
      double best_d = -1.0;
      for (int n = 0; n < kCandidates; ++n) {
        const double z = 1.0 - 2.0 * (n + 0.5) / kCandidates;
        const double rho = std::sqrt(1.0 - z * z);
        const SpherePoint cand = SpherePoint::from_unit_vector({rho * std::cos(golden * n), rho * std::sin(golden * n), z});
        const double d = pole_distance(cand);
        if (d > best_d) {
          best_d = d;
          best = cand;
        }
      }
      centers.push_back(best);
    }
  }
  prepare_out(out);
  CommandResult res;
  std::ostringstream csv;
  csv << "center_r,center_theta,radius,volume,reference_volume,quotient,raw_quotient\n";
  json probes = json::array();
  for (const auto& c : centers) {
    const std::string ctx = level_context(config, level) + " center=(" + format_double(c.colatitude()) + "," +
                            format_double(c.longitude()) + ")";
    if (pole_distance(c) < ps.pole_guard) {
      log << "probe: warning: skipping center " << ctx << ", closer than " << format_double(ps.pole_guard)
          << " to a pole\n";
      continue;
    }
    const double analytic = scalar_curvature(f, Location(c));
    const ProbeResult pr = scalar_probe(f, c, ps.radii, ps.grid);
    ClaimRecord rec = make_claim("probe_scalar_curvature", "ball-volume estimate matches the scalar curvature", ctx,
                                 pr.calibrated, Relation::kWithin, analytic,
                                 config.tolerances.probe_relative * std::abs(analytic));
    rec.details = {{"raw_limit", pr.quotient_limit}, {"euclidean_raw_limit", pr.raw_limit}, {"fit_rms", pr.fit_rms}};
    res.report.add(std::move(rec));
    res.report.add(make_claim("quality_probe_fit", "probe quotient fit residual is small", ctx, pr.fit_rms,
                              Relation::kLessEqual, ProbeOptions{}.rms_threshold, 0.0));
    for (const auto& row : pr.rows) {
      csv << format_double(c.colatitude()) << ',' << format_double(c.longitude()) << ',' << format_double(row.radius)
          << ',' << format_double(row.volume) << ',' << format_double(row.reference_volume) << ','
          << format_double(row.quotient) << ',' << format_double(row.raw_quotient) << '\n';
    }
    json pj = pr.to_json();
    pj["center"] = {c.colatitude(), c.longitude()};
    pj["analytic"] = analytic;
    probes.push_back(pj);
    log << "probe " << ctx << ": calibrated " << format_double(pr.calibrated) << ", analytic "
        << format_double(analytic) << (pr.low_confidence ? " (low confidence)" : "") << '\n';
  }
  write_text(out / "probe_rows.csv", csv.str());
  res.report.provenance()["probes"] = probes;
  res.report.provenance()["grid"] = product_to(ps.grid);
  finish(res, &config, "probe", out);
  return res;
}

CommandResult cmd_report(const std::filesystem::path& out, std::ostream& log) {
  CommandResult res;
  json sources = json::array();
  for (const char* name : {"validate", "verify", "field", "converge", "probe"}) {
    const auto path = out / (std::string(name) + ".json");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream is(path);
    json j;
    try {
      j = json::parse(is);
    } catch (const json::parse_error& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    auto num = [](const json& v) {
      if (v.is_number()) return v.get<double>();
      const std::string s = v.get<std::string>();
      if (s == "inf") return kInf;
      if (s == "-inf") return -kInf;
      return std::numeric_limits<double>::quiet_NaN();
    };
    for (const auto& c : j.at("claims")) {
      ClaimRecord r;
      r.id = c.at("id").get<std::string>();
      r.anchor = c.at("anchor").get<std::string>();
      r.context = std::string(name) + ": " + c.at("context").get<std::string>();
      r.measured = num(c.at("measured"));
      r.bound = num(c.at("bound"));
      r.tolerance = num(c.at("tolerance"));
      const std::string rel = c.at("relation").get<std::string>();
      r.relation = rel == "<=" ? Relation::kLessEqual : (rel == ">=" ? Relation::kGreaterEqual : Relation::kWithin);
      r.pass = c.at("pass").get<bool>();
      r.details = c.value("details", json::object());
      res.report.add(std::move(r));
    }
    sources.push_back({{"command", name}, {"overall", j.at("overall")}, {"provenance", j.at("provenance")}});
    log << "report: " << name << " " << j.at("overall").get<std::string>() << '\n';
  }
  if (sources.empty()) throw ConfigError("report: no command reports found in " + out.string());
  res.report.provenance()["sources"] = sources;
  res.report.provenance()["version"] = kVersion;
  finish(res, nullptr, "report", out);
  return res;
}

}  // namespace wplab
