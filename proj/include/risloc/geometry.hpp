#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <iosfwd>
#include <span>

#include "risloc/errors.hpp"

namespace risloc {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Planar RIS in the yz-plane. Column m of `cells` is the centre q_m of
/// unit cell m; the reference point q_r is the origin.
struct RisLayout {
  Eigen::Matrix3Xd cells;
  Vec3 reference = Vec3::Zero();
  double cell_dy = 0.0;
  double cell_dz = 0.0;
  double min_spacing = 0.0;

  Eigen::Index size() const { return cells.cols(); }
};

/// Azimuth is measured in the xy-plane from +x towards +y, elevation from
/// the xy-plane towards +z. Boresight of the RIS is +x.
template <typename Scalar>
struct Spherical {
  Scalar azimuth;
  Scalar elevation;
  Scalar range;
};

using SphericalCoord = Spherical<double>;

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> spherical_to_cartesian(const Spherical<Scalar>& s) {
  using std::cos;
  using std::sin;
  const Scalar ce = cos(s.elevation);
  return {s.range * ce * cos(s.azimuth), s.range * ce * sin(s.azimuth),
          s.range * sin(s.elevation)};
}

template <typename Derived>
Spherical<typename Derived::Scalar> cartesian_to_spherical(
    const Eigen::MatrixBase<Derived>& p) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3)
  using Scalar = typename Derived::Scalar;
  using std::atan2;
  const Scalar r = p.norm();
  if (!(r > Scalar(0))) throw OriginError("cartesian_to_spherical: zero vector");
  const Scalar rho = std::hypot(p.x(), p.y());
  return {atan2(p.y(), p.x()), atan2(p.z(), rho), r};
}

inline constexpr double kDegree = 3.14159265358979323846 / 180.0;

// Composite RIS constants, metres. kTilePitch is the centre-to-centre
// distance of neighbouring tiles in the 2x2 arrangement.
inline constexpr double kCellSpacing = 8.7e-3;
inline constexpr double kCellSize = 6.6e-3;
inline constexpr int kTileRings = 6;
inline constexpr double kTilePitch = 0.155;

/// Centred hexagonal patch in the yz-plane with `rings` rings around the
/// centre cell and nearest-neighbour distance `spacing`. Returns
/// 3*rings^2 + 3*rings + 1 points, centre first.
Eigen::Matrix3Xd build_hex_tile(int rings, double spacing);

/// Places four hexagonal tiles at the given yz-offsets and recentres the
/// result so that the cell centroid is the origin.
/// Throws std::invalid_argument unless exactly four offsets are supplied,
/// and OverlapError if two cells end up closer than the lattice spacing.
RisLayout build_composite_ris(std::span<const Vec2> tile_offsets, double spacing,
                              double cell_dy, double cell_dz,
                              int rings = kTileRings);

/// Tile centres of the default composite surface, (+-pitch/2, +-pitch/2).
std::array<Vec2, 4> default_tile_offsets(double pitch = kTilePitch);

/// Parameters of a 2x2 composite surface with default tile offsets.
struct CompositeSpec {
  int rings = kTileRings;
  double spacing = kCellSpacing;
  double cell_dy = kCellSize;
  double cell_dz = kCellSize;
  double tile_pitch = kTilePitch;
};

RisLayout build_composite_ris(const CompositeSpec& spec);

/// The 4 x 127 = 508 cell surface used throughout the experiments.
RisLayout default_composite_ris();

/// Largest distance between two cell centres. Throws DegenerateLayout for
/// fewer than two cells.
double aperture(const Eigen::Matrix3Xd& cells);
inline double aperture(const RisLayout& layout) { return aperture(layout.cells); }

double min_pairwise_distance(const Eigen::Matrix3Xd& cells);

/// 2 D^2 / lambda.
double fraunhofer_distance(const RisLayout& layout, double wavelength);

/// Plain-text table: a few `#` header lines followed by one
/// `index x y z` row per cell, 9 significant digits.
void write_layout(std::ostream& os, const RisLayout& layout);
RisLayout read_layout(std::istream& is);

}  // namespace risloc
