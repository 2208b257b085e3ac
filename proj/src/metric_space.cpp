#include "wplab/metric_space.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <queue>
#include <random>

namespace wplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec3 polar_vec(double r, double theta) {
  return {std::sin(r) * std::cos(theta), std::sin(r) * std::sin(theta), std::cos(r)};
}

double circle_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

// Orthonormal basis {u, e1, e2} completing a unit vector.
std::array<Vec3, 3> complete_basis(const Vec3& u) {
  const Vec3 helper = std::abs(u.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const Vec3 e1 = normalized(helper - dot(helper, u) * u);
  return {u, e1, cross(u, e1)};
}

// Rotation taking `from` to `to` (both unit).
Mat3 rotation_onto(const Vec3& from, const Vec3& to) {
  const auto u = complete_basis(from);
  const auto v = complete_basis(to);
  Mat3 m;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      double acc = 0.0;
      for (int e = 0; e < 3; ++e) {
        const double vr = row == 0 ? v[e].x : (row == 1 ? v[e].y : v[e].z);
        const double uc = col == 0 ? u[e].x : (col == 1 ? u[e].y : u[e].z);
        acc += vr * uc;
      }
      m.m[row * 3 + col] = acc;
    }
  }
  return m;
}

void check_options(const ProductGridOptions& options) {
  if (options.n_r < 4 || options.n_theta < 4 || options.n_phi < 4) {
    throw ConfigError("product grid: every resolution must be >= 4");
  }
  if (options.n_r % 2 != 0 || options.n_theta % 2 != 0 || options.n_phi % 2 != 0) {
    throw ConfigError("product grid: resolutions must be even");
  }
  if (options.stencil_radius < 1 || options.stencil_radius > 8) {
    throw ConfigError("product grid: stencil_radius must lie in [1, 8]");
  }
}

}  // namespace

void ProductGrid::init_offsets() {
  const int R = options_.stencil_radius;
  offsets_.clear();
  for (int di = -R; di <= R; ++di) {
    for (int dk = -R; dk <= R; ++dk) {
      for (int dl = -R; dl <= R; ++dl) {
        if (std::gcd(std::gcd(std::abs(di), std::abs(dk)), std::abs(dl)) != 1) continue;
        offsets_.push_back({di, dk, dl});
      }
    }
  }
}

int ProductGrid::half_theta(int b) const {
  if (periodic_) return ((b % nb_) + nb_) % nb_;
  return b >= 0 && b < nb_ ? b : -1;
}

void ProductGrid::fill_lengths() {
  const std::size_t no = offsets_.size();
  lengths_.assign(static_cast<std::size_t>(n_r_) * n_theta_ * no, kInf);
  max_edge_ = 0.0;
  for (int i = 0; i < n_r_; ++i) {
    for (int k = 0; k < n_theta_; ++k) {
      const std::size_t base = (static_cast<std::size_t>(i) * n_theta_ + k) * no;
      for (std::size_t o = 0; o < no; ++o) {
        const Offset& off = offsets_[o];
        if (i + off.di < 0 || i + off.di >= n_r_) continue;
        if (!periodic_ && (k + off.dk < 0 || k + off.dk >= n_theta_)) continue;
        const double x = off.di * dr_;
        auto speed = [&](int a, int b) {
          const double y = s_half(a) * off.dk * dtheta_;
          const double z = h_half(a, half_theta(b)) * off.dl * dphi_;
          return std::sqrt(x * x + y * y + z * z);
        };
        const double len = (speed(2 * i, 2 * k) + 4.0 * speed(2 * i + off.di, 2 * k + off.dk) +
                            speed(2 * (i + off.di), 2 * (k + off.dk))) /
                           6.0;
        lengths_[base + o] = len;
        if (std::isfinite(len)) max_edge_ = std::max(max_edge_, len);
      }
    }
  }
}

void ProductGrid::add_cross_pole_edges(const WarpField& f) {
  auto h_at_frame = [&](double r, double theta) {
    return f.value(Location(normalized(frame_.apply(polar_vec(r, theta)))));
  };
  // Geodesics near the coordinate poles pass through them; link the two
  // innermost rings across each pole.
  cross_.assign(static_cast<std::size_t>(n_r_) * n_theta_, {});
  const int half = n_theta_ / 2;
  for (int side = 0; side < 2; ++side) {
    for (int ri = 0; ri < 2; ++ri) {
      for (int rj = 0; rj < 2; ++rj) {
        const int i = side == 0 ? ri : n_r_ - 1 - ri;
        const int j = side == 0 ? rj : n_r_ - 1 - rj;
        for (int k = 0; k < n_theta_; ++k) {
          const int kk = (k + half) % n_theta_;
          const double di = side == 0 ? r_of(i) : kPi - r_of(i);
          const double dj = side == 0 ? r_of(j) : kPi - r_of(j);
          const double len = di + dj;
          // Midpoint lies on the side of the ring farther from the pole.
          const double off = 0.5 * std::abs(di - dj);
          const double theta = di >= dj ? theta_of(k) : theta_of(kk);
          const double r_mid = side == 0 ? off : kPi - off;
          const double h_mid = h_at_frame(r_mid, theta);
          cross_[static_cast<std::size_t>(i) * n_theta_ + k].push_back({j, kk, len, h_mid});
          max_edge_ = std::max(max_edge_, std::sqrt(len * len + h_mid * h_mid * dphi_ * dphi_));
        }
      }
    }
  }
}

ProductGrid ProductGrid::warped(const WarpField& f, const ProductGridOptions& options, const Mat3& frame) {
  check_options(options);
  ProductGrid g;
  g.options_ = options;
  g.n_r_ = options.n_r;
  g.n_theta_ = options.n_theta;
  g.n_phi_ = options.n_phi;
  g.dr_ = kPi / g.n_r_;
  g.dtheta_ = kTwoPi / g.n_theta_;
  g.dphi_ = kTwoPi / g.n_phi_;
  g.r0_ = 0.5 * g.dr_;
  g.theta0_ = 0.5 * g.dtheta_;
  g.phi0_ = 0.0;
  g.periodic_ = true;
  g.frame_ = frame;
  g.warped_ = true;
  g.center_ = g.index(g.n_r_ / 2, 0, 0);
  g.init_offsets();
  const int na = 2 * g.n_r_ - 1;
  g.nb_ = 2 * g.n_theta_;
  g.s_half_.resize(na);
  g.h_half_.resize(static_cast<std::size_t>(na) * g.nb_);
  for (int a = 0; a < na; ++a) g.s_half_[a] = std::sin(g.r0_ + a * 0.5 * g.dr_);
  parallel_for(g.h_half_.size(), [&](std::size_t idx) {
    const int a = static_cast<int>(idx / g.nb_);
    const int b = static_cast<int>(idx % g.nb_);
    const Vec3 v = polar_vec(g.r0_ + a * 0.5 * g.dr_, g.theta0_ + b * 0.5 * g.dtheta_);
    g.h_half_[idx] = f.value(Location(normalized(frame.apply(v))));
  });
  for (double h : g.h_half_) {
    if (!(h > 0.0)) throw ConfigError("product grid: warp must be positive at every lattice point");
  }
  g.fill_lengths();
  g.add_cross_pole_edges(f);
  return g;
}

ProductGrid ProductGrid::centered(const WarpField& f, const SpherePoint& center, const ProductGridOptions& options) {
  check_options(options);
  const double r = (options.n_r / 2 + 0.5) * kPi / options.n_r;
  const double theta = 0.5 * kTwoPi / options.n_theta;
  return warped(f, options, rotation_onto(polar_vec(r, theta), center.embedding()));
}

ProductGrid ProductGrid::frozen(double S, double H, const ProductGridOptions& options, const Mat3& frame) {
  if (!(S > 0.0 && H > 0.0)) throw ConfigError("frozen grid: coefficients must be positive");
  ProductGrid g = warped(WarpField::constant(H), options, frame);
  g.warped_ = false;
  g.cross_.clear();
  std::fill(g.s_half_.begin(), g.s_half_.end(), S);
  std::fill(g.h_half_.begin(), g.h_half_.end(), H);
  g.fill_lengths();
  return g;
}

ProductGrid ProductGrid::patch(const WarpField& f, const SpherePoint& center, double reach,
                               const ProductGridOptions& options) {
  check_options(options);
  constexpr double kMargin = 1.15;
  const double wr = kMargin * reach;
  if (!(reach > 0.0) || !(wr < 0.5 * kPi)) throw ConfigError("patch: reach must lie in (0, pi/2.3)");
  const Mat3 frame = rotation_onto(Vec3{1, 0, 0}, center.embedding());
  auto h_frame = [&](double r, double theta) {
    return f.value(Location(normalized(frame.apply(polar_vec(r, theta)))));
  };
  const double wt = wr / std::cos(wr);
  if (!(wt < kPi)) throw ConfigError("patch: reach too large for the theta range");
  // Smallest warp over the (r, theta) box, from a coarse sample.
  double h_min = kInf;
  constexpr int kSample = 16;
  for (int a = 0; a <= kSample; ++a) {
    for (int b = 0; b <= kSample; ++b) {
      const double h = h_frame(0.5 * kPi - wr + 2.0 * wr * a / kSample, -wt + 2.0 * wt * b / kSample);
      if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("patch: warp must be finite and positive on the patch");
      h_min = std::min(h_min, h);
    }
  }
  const double h_center = h_frame(0.5 * kPi, 0.0);
  const double wp = kMargin * reach / h_min;
  if (!(wp < kPi)) throw ConfigError("patch: reach exceeds half the fiber length");

  ProductGrid g;
  g.options_ = options;
  g.periodic_ = false;
  g.frame_ = frame;
  g.warped_ = true;
  const double spacing = 2.0 * wr / options.n_r;
  const int half_r = options.n_r / 2;
  const int half_t = static_cast<int>(std::ceil(wt / spacing));
  const int half_p = static_cast<int>(std::ceil(wp * h_center / spacing));
  g.n_r_ = 2 * half_r + 1;
  g.n_theta_ = 2 * half_t + 1;
  g.n_phi_ = 2 * half_p + 1;
  g.dr_ = spacing;
  g.dtheta_ = spacing;
  g.dphi_ = spacing / h_center;
  g.r0_ = 0.5 * kPi - half_r * g.dr_;
  g.theta0_ = -half_t * g.dtheta_;
  g.phi0_ = -half_p * g.dphi_;
  g.center_ = g.index(half_r, half_t, half_p);
  g.init_offsets();
  const int na = 2 * g.n_r_ - 1;
  g.nb_ = 2 * g.n_theta_ - 1;
  g.s_half_.resize(na);
  g.h_half_.resize(static_cast<std::size_t>(na) * g.nb_);
  for (int a = 0; a < na; ++a) g.s_half_[a] = std::sin(g.r0_ + a * 0.5 * g.dr_);
  parallel_for(g.h_half_.size(), [&](std::size_t idx) {
    const int a = static_cast<int>(idx / g.nb_);
    const int b = static_cast<int>(idx % g.nb_);
    g.h_half_[idx] = h_frame(g.r0_ + a * 0.5 * g.dr_, g.theta0_ + b * 0.5 * g.dtheta_);
  });
  for (double h : g.h_half_) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("patch: warp must be finite and positive on the patch");
  }
  g.fill_lengths();
  return g;
}

ProductGrid ProductGrid::frozen_like(const ProductGrid& like, std::size_t node) {
  if (node >= like.size()) throw ConfigError("frozen_like: node out of range");
  ProductGrid g = like;
  const double S = like.s_at(node);
  const double H = like.h_at(node);
  g.warped_ = false;
  g.cross_.clear();
  std::fill(g.s_half_.begin(), g.s_half_.end(), S);
  std::fill(g.h_half_.begin(), g.h_half_.end(), H);
  g.fill_lengths();
  return g;
}

std::size_t ProductGrid::index(int i, int k, int l) const {
  return (static_cast<std::size_t>(i) * n_theta_ + k) * n_phi_ + l;
}

void ProductGrid::coords(std::size_t node, int& i, int& k, int& l) const {
  l = static_cast<int>(node % n_phi_);
  node /= n_phi_;
  k = static_cast<int>(node % n_theta_);
  i = static_cast<int>(node / n_theta_);
}

SpherePoint ProductGrid::sphere_point(std::size_t node) const {
  int i, k, l;
  coords(node, i, k, l);
  return SpherePoint::from_unit_vector(normalized(frame_.apply(polar_vec(r_of(i), theta_of(k)))));
}

double ProductGrid::h_at(std::size_t node) const {
  int i, k, l;
  coords(node, i, k, l);
  return h_half(2 * i, 2 * k);
}

double ProductGrid::s_at(std::size_t node) const {
  int i, k, l;
  coords(node, i, k, l);
  return s_half(2 * i);
}

double ProductGrid::cell_volume(std::size_t node) const { return s_at(node) * h_at(node) * dr_ * dtheta_ * dphi_; }

double ProductGrid::total_volume() const {
  CompensatedSum s;
  for (std::size_t n = 0; n < size(); ++n) s += cell_volume(n);
  return s.value();
}

bool ProductGrid::on_boundary(std::size_t node) const {
  if (periodic_) return false;
  int i, k, l;
  coords(node, i, k, l);
  return i == 0 || i == n_r_ - 1 || k == 0 || k == n_theta_ - 1 || l == 0 || l == n_phi_ - 1;
}

std::size_t ProductGrid::nearest_node(const SpherePoint& p, double phi) const {
  const Vec3 v = frame_.apply_transpose(p.embedding());
  const double r = std::acos(std::clamp(v.z, -1.0, 1.0));
  double theta = std::atan2(v.y, v.x);
  const int i = std::clamp(static_cast<int>(std::lround((r - r0_) / dr_)), 0, n_r_ - 1);
  if (periodic_) {
    if (theta < 0.0) theta += kTwoPi;
    double ph = std::fmod(phi, kTwoPi);
    if (ph < 0.0) ph += kTwoPi;
    const int k = static_cast<int>(std::lround((theta - theta0_) / dtheta_) % n_theta_ + n_theta_) % n_theta_;
    const int l = static_cast<int>(std::lround((ph - phi0_) / dphi_)) % n_phi_;
    return index(i, k, l);
  }
  const int k = std::clamp(static_cast<int>(std::lround((theta - theta0_) / dtheta_)), 0, n_theta_ - 1);
  double ph = std::remainder(phi, kTwoPi);
  const int l = std::clamp(static_cast<int>(std::lround((ph - phi0_) / dphi_)), 0, n_phi_ - 1);
  return index(i, k, l);
}

double ProductGrid::sublevel_volume(std::span<const double> distance, double radius, int sub) const {
  if (distance.size() != size()) throw ConfigError("sublevel_volume: distance size mismatch");
  if (sub < 1) throw ConfigError("sublevel_volume: sub must be >= 1");
  const int nk = periodic_ ? n_theta_ : n_theta_ - 1;
  const int nl = periodic_ ? n_phi_ : n_phi_ - 1;
  const double cell = dr_ * dtheta_ * dphi_;
  std::vector<double> density(static_cast<std::size_t>(sub) * sub);
  std::vector<double> frac(sub);
  for (int p = 0; p < sub; ++p) frac[p] = (p + 0.5) / sub;
  CompensatedSum total;
  for (int i = 0; i + 1 < n_r_; ++i) {
    for (int k = 0; k < nk; ++k) {
      const int k1 = (k + 1) % n_theta_;
      bool densities_ready = false;
      double full = 0.0;
      for (int l = 0; l < nl; ++l) {
        const int l1 = (l + 1) % n_phi_;
        const double c[8] = {distance[index(i, k, l)],      distance[index(i, k, l1)],
                             distance[index(i, k1, l)],     distance[index(i, k1, l1)],
                             distance[index(i + 1, k, l)],  distance[index(i + 1, k, l1)],
                             distance[index(i + 1, k1, l)], distance[index(i + 1, k1, l1)]};
        const auto [lo, hi] = std::minmax_element(c, c + 8);
        if (*lo > radius) continue;
        if (!densities_ready) {
          // Volume density S H on the sub-samples, bilinear on the half lattice.
          full = 0.0;
          for (int p = 0; p < sub; ++p) {
            const double a = 2.0 * i + 2.0 * frac[p];
            const int a0 = std::min(static_cast<int>(a), 2 * i + 1);
            const double ta = a - a0;
            for (int q = 0; q < sub; ++q) {
              const double b = 2.0 * k + 2.0 * frac[q];
              const int b0 = std::min(static_cast<int>(b), 2 * k + 1);
              const double tb = b - b0;
              auto sh = [&](int aa, int bb) { return s_half(aa) * h_half(aa, half_theta(bb)); };
              const double d = (1 - ta) * (1 - tb) * sh(a0, b0) + (1 - ta) * tb * sh(a0, b0 + 1) +
                               ta * (1 - tb) * sh(a0 + 1, b0) + ta * tb * sh(a0 + 1, b0 + 1);
              density[static_cast<std::size_t>(p) * sub + q] = d;
              full += d;
            }
          }
          full *= cell / (static_cast<double>(sub) * sub);
          densities_ready = true;
        }
        if (*hi <= radius) {
          total += full;
          continue;
        }
        double part = 0.0;
        for (int p = 0; p < sub; ++p) {
          const double u = frac[p];
          for (int q = 0; q < sub; ++q) {
            const double v = frac[q];
            const double e0 = (1 - u) * (1 - v), e1 = (1 - u) * v, e2 = u * (1 - v), e3 = u * v;
            const double x0 = e0 * c[0] + e1 * c[2] + e2 * c[4] + e3 * c[6];
            const double x1 = e0 * c[1] + e1 * c[3] + e2 * c[5] + e3 * c[7];
            int inside = 0;
            for (int s = 0; s < sub; ++s) {
              const double w = frac[s];
              if ((1 - w) * x0 + w * x1 <= radius) ++inside;
            }
            part += inside * density[static_cast<std::size_t>(p) * sub + q];
          }
        }
        total += part * cell / (static_cast<double>(sub) * sub * sub);
      }
    }
  }
  return total.value();
}

DistanceField shortest_distances(const ProductGrid& grid, std::size_t source, double cutoff) {
  if (source >= grid.size()) throw ConfigError("shortest_distances: source out of range");
  DistanceField field;
  field.source = source;
  field.distance.assign(grid.size(), kInf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  field.distance[source] = 0.0;
  queue.push({0.0, source});
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > field.distance[u]) continue;
    grid.for_each_edge(u, [&](std::size_t v, double len) {
      const double nd = d + len;
      if (nd < field.distance[v] && nd <= cutoff) {
        field.distance[v] = nd;
        queue.push({nd, v});
      }
    });
  }
  return field;
}

double shortest_distance(const ProductGrid& grid, std::size_t p, std::size_t q) {
  if (q >= grid.size()) throw ConfigError("shortest_distance: target out of range");
  const double d = shortest_distances(grid, p).distance[q];
  if (!std::isfinite(d)) throw ConfigError("shortest_distance: graph is disconnected");
  return d;
}

double DistanceField::lipschitz_violation(const ProductGrid& grid) const {
  double worst = 0.0;
  for (std::size_t u = 0; u < grid.size(); ++u) {
    if (!std::isfinite(distance[u])) continue;
    grid.for_each_edge(u, [&](std::size_t v, double len) {
      if (std::isfinite(distance[v])) worst = std::max(worst, distance[v] - distance[u] - len);
    });
  }
  return worst;
}

void DistanceField::write_csv(const ProductGrid& grid, std::ostream& os) const {
  os << "r,theta,phi,distance\n";
  for (std::size_t n = 0; n < grid.size(); ++n) {
    int i, k, l;
    grid.coords(n, i, k, l);
    os << format_double(grid.r_of(i)) << ',' << format_double(grid.theta_of(k)) << ','
       << format_double(grid.phi_of(l)) << ',' << format_double(distance[n]) << '\n';
  }
}

double distance_upper_bound(const ProductGrid& grid, std::size_t p, std::size_t q) {
  int i1, k1, l1, i2, k2, l2;
  grid.coords(p, i1, k1, l1);
  grid.coords(q, i2, k2, l2);
  const double r1 = grid.r_of(i1);
  const double r2 = grid.r_of(i2);
  double dt = circle_distance(grid.theta_of(k1), grid.theta_of(k2));
  double dp = circle_distance(grid.phi_of(l1), grid.phi_of(l2));
  if (!grid.periodic()) {
    dt = std::abs(grid.theta_of(k1) - grid.theta_of(k2));
    dp = std::abs(grid.phi_of(l1) - grid.phi_of(l2));
  }
  return std::abs(r1 - r2) + grid.s_at(q) * dt + grid.h_at(q) * dp;
}

VerificationReport check_distance_bound(const ProductGrid& grid, std::size_t pairs, std::uint64_t seed,
                                        const std::string& context) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  constexpr std::size_t kTargetsPerSource = 10;
  const double slack = 3.0 * grid.max_edge_length();
  double worst = -kInf;
  double worst_ratio = 0.0;
  std::size_t done = 0;
  std::size_t failures = 0;
  while (done < pairs) {
    const std::size_t src = pick(rng);
    const DistanceField field = shortest_distances(grid, src);
    for (std::size_t t = 0; t < kTargetsPerSource && done < pairs; ++t, ++done) {
      const std::size_t dst = pick(rng);
      const double d = field.distance[dst];
      const double bound = distance_upper_bound(grid, src, dst);
      const double margin = d - bound;
      if (margin > slack) ++failures;
      if (margin > worst) {
        worst = margin;
        worst_ratio = bound > 0.0 ? d / bound : 0.0;
      }
    }
  }
  VerificationReport rep;
  ClaimRecord rec = make_claim("distance_upper_bound", "graph distance is at most the coordinate path bound plus slack",
                               context, worst, Relation::kLessEqual, 0.0, slack);
  rec.details = {{"pairs", pairs}, {"failures", failures}, {"slack", slack}, {"worst_ratio", worst_ratio}};
  rep.add(std::move(rec));
  return rep;
}

DiameterEstimate diameter_estimate(const ProductGrid& grid, std::size_t sources) {
  sources = std::max<std::size_t>(sources, 1);
  DiameterEstimate est;
  std::vector<double> min_dist(grid.size(), kInf);
  std::size_t src = 0;
  for (std::size_t s = 0; s < sources; ++s) {
    const DistanceField field = shortest_distances(grid, src);
    std::size_t far = src;
    for (std::size_t v = 0; v < grid.size(); ++v) {
      const double d = field.distance[v];
      if (!std::isfinite(d)) throw ConfigError("diameter_estimate: graph is disconnected");
      if (d > field.distance[far]) far = v;
      min_dist[v] = std::min(min_dist[v], d);
    }
    if (field.distance[far] > est.value) {
      est.value = field.distance[far];
      est.a = src;
      est.b = far;
    }
    ++est.sources;
    // Next source: farthest from all previous ones.
    src = static_cast<std::size_t>(std::max_element(min_dist.begin(), min_dist.end()) - min_dist.begin());
  }
  return est;
}

double ball_volume(const ProductGrid& grid, const DistanceField& field, double radius, double smoothing) {
  CompensatedSum s;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const double d = field.distance[n];
    if (!std::isfinite(d)) continue;
    double w;
    if (smoothing > 0.0) {
      w = std::clamp(0.5 + (radius - d) / smoothing, 0.0, 1.0);
    } else {
      w = d <= radius ? 1.0 : 0.0;
    }
    if (w > 0.0) s += w * grid.cell_volume(n);
  }
  return s.value();
}

double ball_volume(const ProductGrid& grid, std::size_t center, double radius, double guard) {
  if (!(radius >= 0.0)) throw ConfigError("ball_volume: radius must be >= 0");
  if (radius > guard) throw ConfigError("ball_volume: radius exceeds the guard radius");
  const DistanceField field = shortest_distances(grid, center, radius + grid.max_edge_length());
  return grid.sublevel_volume(field.distance, radius);
}

ProbeResult scalar_probe(const ProductGrid& grid, std::size_t center, std::span<const double> radii,
                         const ProbeOptions& options) {
  if (radii.size() < 4) throw ConfigError("scalar_probe: need at least 4 radii");
  for (double r : radii) {
    if (!(r > 0.0) || r > options.guard) throw ConfigError("scalar_probe: radii must lie in (0, guard]");
  }
  const ProductGrid flat = ProductGrid::frozen_like(grid, center);
  const double rmax = *std::max_element(radii.begin(), radii.end());
  const DistanceField curved_field = shortest_distances(grid, center, rmax + grid.max_edge_length());
  const DistanceField flat_field = shortest_distances(flat, center, rmax + flat.max_edge_length());

  ProbeResult res;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    if (grid.on_boundary(n) && (curved_field.distance[n] <= rmax || flat_field.distance[n] <= rmax)) {
      res.truncated = true;
      break;
    }
  }
  std::vector<double> x, y, yraw;
  for (double r : radii) {
    ProbeRow row;
    row.radius = r;
    row.volume = grid.sublevel_volume(curved_field.distance, r, options.subsamples);
    row.reference_volume = flat.sublevel_volume(flat_field.distance, r, options.subsamples);
    const double euclid = 4.0 * kPi * r * r * r / 3.0;
    row.quotient = (row.reference_volume - row.volume) / (r * r * row.reference_volume);
    row.raw_quotient = (euclid - row.volume) / (r * r * euclid);
    res.rows.push_back(row);
    x.push_back(r * r);
    y.push_back(row.quotient);
    yraw.push_back(row.raw_quotient);
  }
  const LinearFit fit = fit_line(x, y);
  const LinearFit raw = fit_line(x, yraw);
  res.quotient_limit = fit.intercept;
  res.calibrated = 30.0 * fit.intercept;
  res.raw_limit = raw.intercept;
  res.raw_calibrated = 30.0 * raw.intercept;
  res.fit_rms = fit.rms_residual;
  res.low_confidence = fit.rms_residual > options.rms_threshold || res.truncated;
  return res;
}

ProbeResult scalar_probe(const WarpField& f, const SpherePoint& center, std::span<const double> radii,
                         const ProductGridOptions& grid_options, const ProbeOptions& options) {
  if (radii.empty()) throw ConfigError("scalar_probe: need at least 4 radii");
  const double rmax = *std::max_element(radii.begin(), radii.end());
  const ProductGrid grid = ProductGrid::patch(f, center, rmax, grid_options);
  return scalar_probe(grid, grid.center_node(), radii, options);
}

nlohmann::json ProbeResult::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"radius", r.radius},
                         {"volume", r.volume},
                         {"reference_volume", r.reference_volume},
                         {"quotient", r.quotient},
                         {"raw_quotient", r.raw_quotient}});
  }
  return {{"quotient_limit", quotient_limit}, {"calibrated", calibrated},         {"raw_limit", raw_limit},
          {"raw_calibrated", raw_calibrated}, {"fit_rms", fit_rms},               {"low_confidence", low_confidence},
          {"truncated", truncated},           {"rows", rows_json}};
}

}  // namespace wplab
