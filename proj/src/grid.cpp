#include "wplab/grid.hpp"

#include <algorithm>
#include <limits>
#include <optional>

namespace wplab {

namespace {

constexpr double kContainTol = 1e-13;

// Point of the grid frame with cos(colatitude) = t and longitude theta.
Vec3 frame_point(double t, double theta) {
  const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
  return {s * std::cos(theta), s * std::sin(theta), t};
}

Mat3 frame_with_axis(const Vec3& axis) {
  Vec3 helper = std::abs(axis.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const Vec3 e1 = normalized(helper - dot(helper, axis) * axis);
  const Vec3 e2 = cross(axis, e1);
  Mat3 m;
  // Columns e1, e2, axis.
  m.m = {e1.x, e2.x, axis.x, e1.y, e2.y, axis.y, e1.z, e2.z, axis.z};
  return m;
}

// Axis maximizing the angular clearance to every singular point (and its
// antipode). Candidate order is fixed, so the choice is deterministic.
Vec3 choose_axis(std::span<const Vec3> points) {
  std::vector<Vec3> candidates{{0, 0, 1}};
  constexpr int kFib = 96;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < kFib; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / kFib;
    const double rho = std::sqrt(1.0 - z * z);
    candidates.push_back({rho * std::cos(golden * k), rho * std::sin(golden * k), z});
  }
  Vec3 best = candidates.front();
  double best_score = -1.0;
  for (const auto& c : candidates) {
    double score = kPi;
    for (const auto& p : points) {
      const double d = geodesic_distance(c, p);
      score = std::min(score, std::min(d, kPi - d));
    }
    if (score > best_score + 1e-12) {
      best_score = score;
      best = c;
    }
  }
  return best;
}

struct FramePoint {
  double t;
  double theta;
  Vec3 x;  // frame coordinates
};

struct Panel {
  double t0, t1, th0, th1;
  int depth;
};

class GridBuilder {
 public:
  GridBuilder(const GridOptions& opt, std::vector<FramePoint> pts, const Mat3& frame,
              std::span<const Vec3> global_points)
      : opt_(opt), pts_(std::move(pts)), frame_(frame), global_(global_points.begin(), global_points.end()) {}

  void run(std::vector<GridNode>& out) {
    const int nt = std::max(1, opt_.resolution / opt_.panel_order);
    const int nth = 2 * nt;
    std::vector<Panel> stack;
    // Reverse push so panels are processed in natural order.
    for (int a = nt - 1; a >= 0; --a) {
      for (int b = nth - 1; b >= 0; --b) {
        stack.push_back({-1.0 + 2.0 * a / nt, -1.0 + 2.0 * (a + 1) / nt, kTwoPi * b / nth, kTwoPi * (b + 1) / nth, 0});
      }
    }
    while (!stack.empty()) {
      Panel p = stack.back();
      stack.pop_back();
      process(p, stack, out);
    }
  }

  std::size_t leaves = 0;
  std::size_t polar = 0;

 private:
  // Longitude representative of theta closest to [th0, th1].
  static double wrap_towards(double theta, double th0, double th1) {
    double best = theta;
    double best_gap = std::numeric_limits<double>::infinity();
    for (double cand : {theta - kTwoPi, theta, theta + kTwoPi}) {
      const double gap = cand < th0 ? th0 - cand : (cand > th1 ? cand - th1 : 0.0);
      if (gap < best_gap) {
        best_gap = gap;
        best = cand;
      }
    }
    return best;
  }

  std::optional<double> contains(const Panel& p, const FramePoint& fp) const {
    if (fp.t < p.t0 - kContainTol || fp.t > p.t1 + kContainTol) return std::nullopt;
    const double th = wrap_towards(fp.theta, p.th0, p.th1);
    if (th < p.th0 - kContainTol || th > p.th1 + kContainTol) return std::nullopt;
    return th;
  }

  double distance_to(const Panel& p, const FramePoint& fp) const {
    const double t = std::clamp(fp.t, p.t0, p.t1);
    const double th = std::clamp(wrap_towards(fp.theta, p.th0, p.th1), p.th0, p.th1);
    return geodesic_distance(frame_point(t, th), fp.x);
  }

  static double diameter(const Panel& p) {
    const double d1 = geodesic_distance(frame_point(p.t0, p.th0), frame_point(p.t1, p.th1));
    const double d2 = geodesic_distance(frame_point(p.t0, p.th1), frame_point(p.t1, p.th0));
    const double thm = 0.5 * (p.th0 + p.th1);
    const double d3 = geodesic_distance(frame_point(p.t0, thm), frame_point(p.t1, thm));
    return std::max({d1, d2, d3});
  }

  static double max_sin(const Panel& p) {
    if (p.t0 <= 0.0 && p.t1 >= 0.0) return 1.0;
    return std::max(std::sqrt(1.0 - p.t0 * p.t0), std::sqrt(1.0 - p.t1 * p.t1));
  }

  static double aspect(const Panel& p) {
    const double lt = std::abs(std::acos(std::clamp(p.t0, -1.0, 1.0)) - std::acos(std::clamp(p.t1, -1.0, 1.0)));
    const double lth = (p.th1 - p.th0) * max_sin(p);
    return std::max(lt, lth) / std::max(std::min(lt, lth), 1e-300);
  }

  static void split_mid(const Panel& p, std::vector<Panel>& stack) {
    const double lt = std::abs(std::acos(std::clamp(p.t0, -1.0, 1.0)) - std::acos(std::clamp(p.t1, -1.0, 1.0)));
    const double lth = (p.th1 - p.th0) * max_sin(p);
    const bool cut_t = lt >= 0.5 * lth;
    const bool cut_th = lth >= 0.5 * lt;
    split_at(p, cut_t ? std::optional<double>(0.5 * (p.t0 + p.t1)) : std::nullopt,
             cut_th ? std::optional<double>(0.5 * (p.th0 + p.th1)) : std::nullopt, stack);
  }

  static void split_at(const Panel& p, std::optional<double> tc, std::optional<double> thc,
                       std::vector<Panel>& stack) {
    std::vector<std::pair<double, double>> ts{{p.t0, p.t1}};
    std::vector<std::pair<double, double>> ths{{p.th0, p.th1}};
    if (tc) ts = {{p.t0, *tc}, {*tc, p.t1}};
    if (thc) ths = {{p.th0, *thc}, {*thc, p.th1}};
    for (auto it = ts.rbegin(); it != ts.rend(); ++it) {
      for (auto jt = ths.rbegin(); jt != ths.rend(); ++jt) {
        stack.push_back({it->first, it->second, jt->first, jt->second, p.depth + 1});
      }
    }
  }

  void process(const Panel& p, std::vector<Panel>& stack, std::vector<GridNode>& out) {
    const int hard_cap = opt_.depth_limit + 48;
    std::vector<std::pair<std::size_t, double>> inside;
    for (std::size_t k = 0; k < pts_.size(); ++k) {
      if (auto th = contains(p, pts_[k])) inside.emplace_back(k, *th);
    }
    if (inside.size() >= 2) {
      if (p.depth >= hard_cap) throw ConfigError("build_grid: singular points too close to be separated");
      split_mid(p, stack);
      return;
    }
    if (inside.size() == 1) {
      const FramePoint& fp = pts_[inside[0].first];
      const double th = inside[0].second;
      const double tol_t = 1e-12 * (p.t1 - p.t0);
      const double tol_th = 1e-12 * (p.th1 - p.th0);
      const bool interior_t = fp.t > p.t0 + tol_t && fp.t < p.t1 - tol_t;
      const bool interior_th = th > p.th0 + tol_th && th < p.th1 - tol_th;
      if ((interior_t || interior_th) && p.depth < hard_cap) {
        split_at(p, interior_t ? std::optional<double>(fp.t) : std::nullopt,
                 interior_th ? std::optional<double>(th) : std::nullopt, stack);
        return;
      }
      if ((p.depth < opt_.depth_limit || aspect(p) > 2.0) && p.depth < hard_cap) {
        split_mid(p, stack);
        return;
      }
      emit_polar(p, inside[0].first, th, out);
      return;
    }
    if (p.depth < opt_.depth_limit + opt_.near_field_extra_depth) {
      const double diam = diameter(p);
      for (const auto& fp : pts_) {
        if (distance_to(p, fp) < opt_.refine_factor * diam) {
          split_mid(p, stack);
          return;
        }
      }
    }
    emit_gauss(p, out);
  }

  void push_node(double t, double th, double w, std::vector<GridNode>& out,
                 std::optional<Anchor> anchor = std::nullopt) {
    GridNode n;
    n.loc.x = normalized(frame_.apply(frame_point(t, th)));
    n.loc.anchor = anchor;
    n.point = SpherePoint::from_unit_vector(n.loc.x);
    n.weight = w;
    out.push_back(std::move(n));
  }

  void emit_gauss(const Panel& p, std::vector<GridNode>& out) {
    ++leaves;
    const GaussRule& g = gauss_legendre(opt_.panel_order);
    const double ht = 0.5 * (p.t1 - p.t0);
    const double mt = 0.5 * (p.t1 + p.t0);
    const double hth = 0.5 * (p.th1 - p.th0);
    const double mth = 0.5 * (p.th1 + p.th0);
    for (std::size_t a = 0; a < g.nodes.size(); ++a) {
      for (std::size_t b = 0; b < g.nodes.size(); ++b) {
        push_node(mt + ht * g.nodes[a], mth + hth * g.nodes[b], g.weights[a] * g.weights[b] * ht * hth, out);
      }
    }
  }

  // Polar (Duffy) rule on a panel whose corner is the singular point k.
  void emit_polar(const Panel& p, std::size_t k, double th_local, std::vector<GridNode>& out) {
    ++leaves;
    ++polar;
    const FramePoint& fp = pts_[k];
    const double tp = std::clamp(fp.t, p.t0, p.t1);
    const double thp = std::clamp(th_local, p.th0, p.th1);
    const std::array<std::pair<double, double>, 4> corners{
        {{p.t0, p.th0}, {p.t1, p.th0}, {p.t1, p.th1}, {p.t0, p.th1}}};
    std::size_t ci = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < 4; ++c) {
      const double d = std::abs(corners[c].first - tp) / (p.t1 - p.t0) + std::abs(corners[c].second - thp) / (p.th1 - p.th0);
      if (d < best) {
        best = d;
        ci = c;
      }
    }
    const double sin2 = std::max(1e-300, 1.0 - tp * tp);
    const double sinp = std::sqrt(sin2);
    // Tangent basis at the point, frame coordinates; physical lengths of
    // dt and dtheta are dt / sin and sin * dtheta.
    const Vec3 xp = frame_point(tp, thp);
    const Vec3 e_t = normalized(Vec3{-tp / sinp * std::cos(thp), -tp / sinp * std::sin(thp), 1.0});
    const Vec3 e_th{-std::sin(thp), std::cos(thp), 0.0};
    (void)xp;

    const GaussRule& g = gauss_legendre(opt_.panel_order);
    const double eps = opt_.exclusion_radius;
    constexpr double kRatio = 4.0;
    const double log_ratio = std::log(kRatio);

    for (int tri = 0; tri < 2; ++tri) {
      const auto& y0 = corners[(ci + 1 + tri) % 4];
      const auto& y1 = corners[(ci + 2 + tri) % 4];
      const double a_t = y0.first - tp, a_th = y0.second - thp;
      const double d_t = y1.first - y0.first, d_th = y1.second - y0.second;
      const double det = std::abs(a_t * d_th - a_th * d_t);
      if (det <= 0.0) continue;
      for (std::size_t si = 0; si < g.nodes.size(); ++si) {
        const double s = 0.5 * (1.0 + g.nodes[si]);
        const double ws = 0.5 * g.weights[si];
        const double dt = a_t + s * d_t;
        const double dth = a_th + s * d_th;
        const double len = std::sqrt(dt * dt / sin2 + sin2 * dth * dth);
        const Vec3 dir_frame = normalized((dt / sinp) * e_t + (dth * sinp) * e_th);
        const Vec3 dir_global = frame_.apply(dir_frame);
        const double log_umin = std::log(eps / len);
        if (log_umin >= 0.0) continue;
        double upper = 0.0;  // log u
        while (upper > log_umin) {
          const double lower = std::max(upper - log_ratio, log_umin);
          const double hv = 0.5 * (upper - lower);
          const double mv = 0.5 * (upper + lower);
          for (std::size_t vi = 0; vi < g.nodes.size(); ++vi) {
            const double v = mv + hv * g.nodes[vi];
            const double u = std::exp(v);
            const double w = ws * g.weights[vi] * hv * det * u * u;
            Anchor anchor{global_[k], u * len, dir_global};
            push_node(tp + u * dt, thp + u * dth, w, out, anchor);
          }
          upper = lower;
        }
      }
    }
  }

  const GridOptions& opt_;
  std::vector<FramePoint> pts_;
  Mat3 frame_;
  std::vector<Vec3> global_;
};

}  // namespace

double SphereGrid::weight_sum() const {
  CompensatedSum s;
  for (const auto& n : nodes_) s += n.weight;
  return s.value();
}

double SphereGrid::min_distance_to_singular() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& n : nodes_) {
    for (const auto& p : singular_points_) {
      const RadialCoord rc = radial_coord(n.loc, p);
      best = std::min(best, rc.r());
    }
  }
  return best;
}

SphereGrid build_grid(const GridOptions& options, std::span<const Vec3> singular_points) {
  if (options.resolution < 8) throw ConfigError("build_grid: resolution must be >= 8");
  if (options.panel_order < 2) throw ConfigError("build_grid: panel_order must be >= 2");
  if (options.depth_limit < 0) throw ConfigError("build_grid: depth_limit must be >= 0");
  if (!(options.exclusion_radius > 0.0)) throw ConfigError("build_grid: exclusion_radius must be > 0");
  const int nt = std::max(1, options.resolution / options.panel_order);
  const double finest = (2.0 / nt) * std::ldexp(1.0, -options.depth_limit);
  if (finest < 1e-11 || finest < 10.0 * options.exclusion_radius) {
    throw ConfigError("build_grid: resolution too small for requested depth (finest panel " + std::to_string(finest) +
                      ")");
  }

  SphereGrid grid;
  grid.options_ = options;
  grid.singular_points_.assign(singular_points.begin(), singular_points.end());
  grid.frame_ = frame_with_axis(choose_axis(singular_points));

  std::vector<FramePoint> pts;
  pts.reserve(singular_points.size());
  for (const auto& g : singular_points) {
    const Vec3 f = grid.frame_.apply_transpose(g);
    double th = std::atan2(f.y, f.x);
    if (th < 0.0) th += kTwoPi;
    pts.push_back({std::clamp(f.z, -1.0, 1.0), th, f});
  }
  GridBuilder builder(options, std::move(pts), grid.frame_, singular_points);
  builder.run(grid.nodes_);
  grid.leaf_panels_ = builder.leaves;
  grid.polar_panels_ = builder.polar;
  return grid;
}

std::vector<Vec3> with_antipodes(std::span<const Vec3> poles) {
  std::vector<Vec3> out;
  auto add = [&out](const Vec3& v) {
    for (const auto& o : out) {
      const Vec3 d = o - v;
      if (dot(d, d) < 1e-24) return;
    }
    out.push_back(v);
  };
  for (const auto& p : poles) {
    add(p);
    add(-p);
  }
  return out;
}

std::vector<Vec3> level_singular_points(const PoleConfiguration& config, std::size_t level) {
  std::vector<Vec3> poles;
  for (std::size_t i = 1; i <= level; ++i) {
    if (config.weight(i) > 0.0) poles.push_back(config.pole_vector(i, level));
  }
  return with_antipodes(poles);
}

std::vector<Vec3> limit_singular_points(const PoleConfiguration& config, std::size_t count) {
  if (config.depends_on_level()) throw ConfigError("limit poles are undefined for level-dependent configurations");
  std::vector<Vec3> poles;
  const auto cap = config.pole_count();
  const std::size_t n = cap ? std::min(*cap, count) : count;
  for (std::size_t i = 1; i <= n; ++i) {
    if (config.weight(i) > 0.0) poles.push_back(config.pole_vector(i, 1));
  }
  return with_antipodes(poles);
}

}  // namespace wplab
