#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "wplab/report.hpp"
#include "wplab/sphere.hpp"
#include "wplab/warp.hpp"

namespace wplab {

struct ProductGridOptions {
  int n_r = 32;
  int n_theta = 64;
  int n_phi = 32;
  /// Offsets per axis in the edge stencil; 2 gives all primitive offsets
  /// in {-2..2}^3 (98 directions), 1 gives the 26-neighborhood.
  int stencil_radius = 2;
};

/// Lattice over (r, theta, phi) carrying the metric
/// dr^2 + S(r)^2 dtheta^2 + H(r, theta)^2 dphi^2, in a polar frame that may
/// be rotated against the global one. Node (i, k, l) sits at
/// (r0 + i dr, theta0 + k dtheta, phi0 + l dphi). Edge lengths use
/// Simpson's rule along the coordinate segment.
class ProductGrid {
 public:
  /// Whole S^2 x S^1 with the warped metric g_S2 + h^2 g_S1. Nodes at
  /// r_i = (i + 1/2) dr, theta_k = (k + 1/2) dtheta, phi_l = l dphi.
  static ProductGrid warped(const WarpField& f, const ProductGridOptions& options, const Mat3& frame = Mat3{});
  /// warped() with the frame rotated so that `center` is the node
  /// (n_r / 2, 0, 0), near the frame equator.
  static ProductGrid centered(const WarpField& f, const SpherePoint& center, const ProductGridOptions& options);
  /// Same lattice as warped() with constant S and H: flat, periodic in
  /// theta and phi.
  static ProductGrid frozen(double S, double H, const ProductGridOptions& options, const Mat3& frame = Mat3{});

  /// Box around `center` (placed at r = pi/2, theta = 0, phi = 0 of a
  /// rotated frame) reaching at least `reach` in every metric direction.
  /// Node counts are n + 1 per axis; the center is node (n_r/2, n_theta/2,
  /// n_phi/2). Spacing is isotropic in the metric at the center when the
  /// counts are equal.
  static ProductGrid patch(const WarpField& f, const SpherePoint& center, double reach,
                           const ProductGridOptions& options);
  /// Lattice of `like` with its coefficients frozen at their node values.
  static ProductGrid frozen_like(const ProductGrid& like, std::size_t node);

  const ProductGridOptions& options() const { return options_; }
  std::size_t size() const { return static_cast<std::size_t>(n_r_) * n_theta_ * n_phi_; }
  int n_r() const { return n_r_; }
  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  std::size_t index(int i, int k, int l) const;
  void coords(std::size_t node, int& i, int& k, int& l) const;
  double dr() const { return dr_; }
  double dtheta() const { return dtheta_; }
  double dphi() const { return dphi_; }
  double r_of(int i) const { return r0_ + i * dr_; }
  double theta_of(int k) const { return theta0_ + k * dtheta_; }
  double phi_of(int l) const { return phi0_ + l * dphi_; }
  const Mat3& frame() const { return frame_; }
  bool is_warped() const { return warped_; }
  bool periodic() const { return periodic_; }
  /// Center node for patch grids, node (n_r/2, 0, 0) otherwise.
  std::size_t center_node() const { return center_; }

  /// Sphere point of a node in global coordinates.
  SpherePoint sphere_point(std::size_t node) const;
  /// Coefficient H at the node: the warp value, or the frozen constant.
  double h_at(std::size_t node) const;
  /// Coefficient S at the node: sin r, or the frozen constant.
  double s_at(std::size_t node) const;
  double cell_volume(std::size_t node) const;
  double total_volume() const;
  double max_edge_length() const { return max_edge_; }
  /// Node nearest to a global point and fiber angle.
  std::size_t nearest_node(const SpherePoint& p, double phi) const;
  /// True if the node lies on the outer face of a patch.
  bool on_boundary(std::size_t node) const;

  template <class Visit>
  void for_each_edge(std::size_t node, Visit&& visit) const;

  /// Volume of {d <= radius} with d trilinearly interpolated inside each
  /// lattice cell and sampled sub^3 times.
  double sublevel_volume(std::span<const double> distance, double radius, int sub = 4) const;

 private:
  struct Offset {
    int di, dk, dl;
  };
  // Sphere part of an edge across a coordinate pole.
  struct CrossEdge {
    int i, k;           // target ring node
    double sphere_len;  // arc length through the pole
    double h_mid;       // warp at the arc midpoint
  };

  ProductGrid() = default;
  void init_offsets();
  void fill_lengths();
  void add_cross_pole_edges(const WarpField& f);
  double s_half(int a) const { return s_half_[a]; }
  double h_half(int a, int b) const { return h_half_[static_cast<std::size_t>(a) * nb_ + b]; }
  // Half-lattice theta index, wrapped when periodic; -1 when outside.
  int half_theta(int b) const;

  ProductGridOptions options_;
  int n_r_ = 0, n_theta_ = 0, n_phi_ = 0;
  double dr_ = 0, dtheta_ = 0, dphi_ = 0;
  double r0_ = 0, theta0_ = 0, phi0_ = 0;
  bool periodic_ = true;  // theta and phi wrap (whole-sphere grids)
  Mat3 frame_;
  bool warped_ = false;
  std::size_t center_ = 0;
  std::vector<Offset> offsets_;
  // Coefficients on the half lattice: a in [0, 2 n_r - 1) at r0 + a dr / 2,
  // b at theta0 + b dtheta / 2 (nb_ entries).
  int nb_ = 0;
  std::vector<double> s_half_;
  std::vector<double> h_half_;
  // Edge lengths indexed [(i * n_theta + k) * offsets + o]; +inf when the
  // target is off the lattice.
  std::vector<double> lengths_;
  // Cross-pole edges per (i * n_theta + k); empty unless whole-sphere warped.
  std::vector<std::vector<CrossEdge>> cross_;
  double max_edge_ = 0.0;
};

template <class Visit>
void ProductGrid::for_each_edge(std::size_t node, Visit&& visit) const {
  int i, k, l;
  coords(node, i, k, l);
  const std::size_t base = (static_cast<std::size_t>(i) * n_theta_ + k) * offsets_.size();
  for (std::size_t o = 0; o < offsets_.size(); ++o) {
    const double len = lengths_[base + o];
    if (!(len < std::numeric_limits<double>::infinity())) continue;
    const Offset& off = offsets_[o];
    int kk = k + off.dk;
    int ll = l + off.dl;
    if (periodic_) {
      kk = (kk % n_theta_ + n_theta_) % n_theta_;
      ll = (ll % n_phi_ + n_phi_) % n_phi_;
    } else if (ll < 0 || ll >= n_phi_) {
      continue;
    }
    visit(index(i + off.di, kk, ll), len);
  }
  if (!cross_.empty()) {
    for (const CrossEdge& e : cross_[static_cast<std::size_t>(i) * n_theta_ + k]) {
      for (int dl = -1; dl <= 1; ++dl) {
        const double fiber = e.h_mid * dl * dphi_;
        const int ll = ((l + dl) % n_phi_ + n_phi_) % n_phi_;
        visit(index(e.i, e.k, ll), std::sqrt(e.sphere_len * e.sphere_len + fiber * fiber));
      }
    }
  }
}

/// Single-source shortest-path distances (Dijkstra).
struct DistanceField {
  std::size_t source = 0;
  std::vector<double> distance;

  /// Largest violation of d(v) <= d(u) + len(u, v) over all edges.
  double lipschitz_violation(const ProductGrid& grid) const;
  /// Columns r,theta,phi,distance (lattice frame).
  void write_csv(const ProductGrid& grid, std::ostream& os) const;
};

/// Distances from `source`; nodes farther than `cutoff` keep +inf.
DistanceField shortest_distances(const ProductGrid& grid, std::size_t source,
                                 double cutoff = std::numeric_limits<double>::infinity());
double shortest_distance(const ProductGrid& grid, std::size_t p, std::size_t q);

/// |r1 - r2| + S(r2) d(theta1, theta2) + H(r2, theta2) d(phi1, phi2) in
/// lattice coordinates: length of a coordinate path from p to q.
double distance_upper_bound(const ProductGrid& grid, std::size_t p, std::size_t q);

/// Checks graph distance <= bound + 3 * max edge length on random pairs.
VerificationReport check_distance_bound(const ProductGrid& grid, std::size_t pairs, std::uint64_t seed,
                                        const std::string& context = "");

struct DiameterEstimate {
  double value = 0.0;  // largest distance seen
  std::size_t sources = 0;
  std::size_t a = 0, b = 0;  // realizing pair
};

/// Farthest-point sampling from node 0 with `sources` sweeps (>= 1).
DiameterEstimate diameter_estimate(const ProductGrid& grid, std::size_t sources = 16);

/// Sum of cell volumes at distance <= radius; with smoothing > 0 the
/// indicator is a linear ramp of that width.
double ball_volume(const ProductGrid& grid, const DistanceField& field, double radius, double smoothing = 0.0);
/// Runs Dijkstra from `center`; radius must not exceed the guard.
double ball_volume(const ProductGrid& grid, std::size_t center, double radius, double guard = kPi / 4.0);

struct ProbeRow {
  double radius = 0.0;
  double volume = 0.0;            // curved ball volume
  double reference_volume = 0.0;  // frozen-coefficient ball on the same lattice
  double quotient = 0.0;          // (reference - volume) / (radius^2 reference)
  double raw_quotient = 0.0;      // same against 4 pi r^3 / 3
};

struct ProbeResult {
  std::vector<ProbeRow> rows;
  double quotient_limit = 0.0;  // c0 of quotient ~ c0 + c1 r^2
  double calibrated = 0.0;      // 30 c0
  double raw_limit = 0.0;       // c0 of the raw quotient
  double raw_calibrated = 0.0;
  double fit_rms = 0.0;
  bool low_confidence = false;
  bool truncated = false;  // the ball reached the edge of a patch

  nlohmann::json to_json() const;
};

struct ProbeOptions {
  double guard = kPi / 4.0;
  double rms_threshold = 2e-3;
  int subsamples = 4;
};

/// Ball-volume estimate of scalar curvature at a node. Needs >= 4 radii,
/// each in (0, guard].
ProbeResult scalar_probe(const ProductGrid& grid, std::size_t center, std::span<const double> radii,
                         const ProbeOptions& options = {});

/// Probes h at `center` on a patch lattice with the given node counts.
ProbeResult scalar_probe(const WarpField& f, const SpherePoint& center, std::span<const double> radii,
                         const ProductGridOptions& grid_options, const ProbeOptions& options = {});

}  // namespace wplab
