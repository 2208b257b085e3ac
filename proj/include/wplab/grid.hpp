#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wplab/numerics.hpp"
#include "wplab/sphere.hpp"

namespace wplab {

/// Build parameters for a SphereGrid.
///
/// The base grid has `resolution` Gauss nodes along cos r and twice as many
/// along longitude, grouped into panels of `panel_order` x `panel_order`
/// nodes. Panels near singular points are refined down to `depth_limit`
/// levels. Each singular point ends up on a panel corner, where the panel is
/// integrated in polar (Duffy) coordinates graded geometrically toward the
/// point, stopping at `exclusion_radius`.
struct GridOptions {
  int resolution = 32;
  int depth_limit = 12;
  int panel_order = 8;
  double exclusion_radius = 1e-24;
  /// A panel is refined while its distance to a singular point is below
  /// refine_factor times its diameter.
  double refine_factor = 1.0;
  /// Extra levels allowed for panels that are near but do not contain a
  /// singular point.
  int near_field_extra_depth = 6;
};

struct GridNode {
  Location loc;
  SpherePoint point;
  double weight = 0.0;
};

/// Quadrature on the unit sphere. Weights approximate the area element, so
/// integrate(f) = sum_k w_k f(x_k). The grid is immutable once built.
class SphereGrid {
 public:
  const std::vector<GridNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Vec3>& singular_points() const { return singular_points_; }
  const GridOptions& options() const { return options_; }
  /// Rotation taking grid-frame coordinates to global coordinates.
  const Mat3& frame() const { return frame_; }
  double exclusion_radius() const { return options_.exclusion_radius; }
  std::size_t leaf_panels() const { return leaf_panels_; }
  std::size_t polar_panels() const { return polar_panels_; }

  double weight_sum() const;
  /// Smallest distance from any node to any singular point.
  double min_distance_to_singular() const;

 private:
  friend SphereGrid build_grid(const GridOptions&, std::span<const Vec3>);
  std::vector<GridNode> nodes_;
  std::vector<Vec3> singular_points_;
  GridOptions options_;
  Mat3 frame_;
  std::size_t leaf_panels_ = 0;
  std::size_t polar_panels_ = 0;
};

/// Builds a grid refined around the given singular points.
SphereGrid build_grid(const GridOptions& options, std::span<const Vec3> singular_points);

/// Points {x_i} together with their antipodes, deduplicated. A radial warp
/// term about x is singular (a = 0) or steep (small a) at both x and -x.
std::vector<Vec3> with_antipodes(std::span<const Vec3> poles);

/// Poles x_ij (i <= j, A_i > 0) of level j together with their antipodes.
std::vector<Vec3> level_singular_points(const PoleConfiguration& config, std::size_t level);

/// First `count` poles of a level-independent configuration (A_i > 0), with
/// antipodes; used to refine grids for the limit warp.
std::vector<Vec3> limit_singular_points(const PoleConfiguration& config, std::size_t count);

}  // namespace wplab
