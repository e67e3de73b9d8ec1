#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "risloc/geometry.hpp"
#include "risloc/steering.hpp"

namespace risloc {

/// Evenly spaced axis with values origin + k * step for k in [first, last].
struct Axis {
  double origin = 0.0;
  double step = 1.0;
  long first = 0;
  long last = 0;

  /// start:step:stop with both ends inclusive when stop is hit.
  static Axis colon(double start, double step, double stop);
  /// center - half:step:center + half, with the centre value exact.
  static Axis centered(double center, double half_width, double step);

  Eigen::Index size() const { return static_cast<Eigen::Index>(last - first + 1); }
  double operator[](Eigen::Index i) const { return origin + static_cast<double>(first + i) * step; }
};

struct FineGridShape {
  double azimuth_half_deg = 1.0;
  double azimuth_step_deg = 0.1;
  double elevation_half_deg = 1.0;
  double elevation_step_deg = 0.1;
  double range_half_m = 0.2;
  double range_step_m = 0.005;
};

/// Cartesian product of azimuth (deg), elevation (deg) and range (m)
/// axes. Linear index = (i_az * N_el + i_el) * N_r + i_r.
struct GridSpec {
  Axis azimuth_deg;
  Axis elevation_deg;
  Axis range_m;

  Eigen::Index size() const { return azimuth_deg.size() * elevation_deg.size() * range_m.size(); }
  SphericalCoord node(Eigen::Index linear) const;
  void validate() const;

  /// -70:1:70 deg in azimuth and elevation, 0.1:0.2:4 m in range.
  static GridSpec coarse();
  static GridSpec fine_around(const SphericalCoord& center, const FineGridShape& shape = {});
};

struct GridResult {
  SphericalCoord coord{};
  Vec3 position = Vec3::Zero();
  double cost = 0.0;
  Eigen::Index index = -1;
};

/// One snapshot and the model it is matched against.
struct GridQuery {
  const Eigen::VectorXcd* y;
  const SteeringModel* model;
};

/// Exhaustive near-field search with v = 0; the lowest linear index wins
/// ties. Returned cost is re-evaluated in double precision.
GridResult nf_grid_search(const Eigen::VectorXcd& y, const SteeringModel& model,
                          const GridSpec& grid);

/// Same as nf_grid_search for many snapshots at once. Candidate phases are
/// computed once per block and shared; all models must describe the same
/// surface and BS geometry. Each result is identical to the single call.
std::vector<GridResult> nf_grid_search(std::span<const GridQuery> queries, const GridSpec& grid);

/// Near-field search on the refined grid centred on `coarse`. Candidates
/// with non-positive range are skipped; the centre node wins unless some
/// candidate is strictly cheaper.
GridResult nf_fine_grid_search(const Eigen::VectorXcd& y, const SteeringModel& model,
                               const SphericalCoord& coarse, const FineGridShape& shape = {});

/// Far-field baseline: (azimuth, elevation) from the planar-wavefront
/// phase ||p - q_m|| ~ r - u^T q_m, then a near-field line search across
/// the grid's range axis with the direction held fixed.
GridResult ff_grid_search(const Eigen::VectorXcd& y, const SteeringModel& model,
                          const GridSpec& grid);
std::vector<GridResult> ff_grid_search(std::span<const GridQuery> queries, const GridSpec& grid);

/// Per-cell phase (radians, before the BS term) of the far-field model for
/// unit direction u: exp(+j k u^T q_m).
Eigen::VectorXd ff_phase(const SteeringModel& model, const Vec3& direction);

/// Nominal range attached to the far-field direction estimate before the
/// range line search: the midpoint of the range axis.
double ff_nominal_range(const GridSpec& grid);

}  // namespace risloc
