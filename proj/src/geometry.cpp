#include "risloc/geometry.hpp"

#include <cstdlib>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace risloc {

Eigen::Matrix3Xd build_hex_tile(int rings, double spacing) {
  if (rings < 0) throw std::invalid_argument("build_hex_tile: rings must be >= 0");
  if (!(spacing > 0.0)) throw std::invalid_argument("build_hex_tile: spacing must be > 0");

  // Axial coordinates (i, j) with |i|, |j|, |i + j| <= rings; lattice basis
  // a1 = d (1, 0), a2 = d (1/2, sqrt(3)/2) in the (y, z) plane.
  const Eigen::Index count = 3 * rings * rings + 3 * rings + 1;
  Eigen::Matrix3Xd pts(3, count);
  pts.col(0).setZero();
  const double h = spacing * std::sqrt(3.0) / 2.0;
  Eigen::Index k = 1;
  for (int i = -rings; i <= rings; ++i) {
    for (int j = -rings; j <= rings; ++j) {
      if ((i == 0 && j == 0) || std::abs(i + j) > rings) continue;
      pts.col(k++) << 0.0, spacing * (i + 0.5 * j), h * j;
    }
  }
  return pts;
}

double min_pairwise_distance(const Eigen::Matrix3Xd& cells) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < cells.cols(); ++a)
    for (Eigen::Index b = a + 1; b < cells.cols(); ++b)
      best = std::min(best, (cells.col(a) - cells.col(b)).squaredNorm());
  return std::sqrt(best);
}

RisLayout build_composite_ris(std::span<const Vec2> tile_offsets, double spacing,
                              double cell_dy, double cell_dz, int rings) {
  if (tile_offsets.size() != 4)
    throw std::invalid_argument("build_composite_ris: exactly four tile offsets required");

  const Eigen::Matrix3Xd tile = build_hex_tile(rings, spacing);
  RisLayout layout;
  layout.cells.resize(3, tile.cols() * 4);
  for (std::size_t t = 0; t < 4; ++t) {
    const Vec3 shift(0.0, tile_offsets[t].x(), tile_offsets[t].y());
    layout.cells.middleCols(static_cast<Eigen::Index>(t) * tile.cols(), tile.cols()) =
        tile.colwise() + shift;
  }

  const double closest = min_pairwise_distance(layout.cells);
  if (closest < spacing * (1.0 - 1e-6)) {
    std::ostringstream msg;
    msg << "build_composite_ris: tiles overlap (closest cells " << closest << " m apart)";
    throw OverlapError(msg.str());
  }

  const Vec3 centroid = layout.cells.rowwise().mean();
  layout.cells.colwise() -= centroid;
  layout.cells.row(0).setZero();
  layout.cell_dy = cell_dy;
  layout.cell_dz = cell_dz;
  layout.min_spacing = spacing;
  return layout;
}

std::array<Vec2, 4> default_tile_offsets(double pitch) {
  const double o = pitch / 2.0;
  return {Vec2(-o, -o), Vec2(o, -o), Vec2(-o, o), Vec2(o, o)};
}

RisLayout build_composite_ris(const CompositeSpec& spec) {
  const auto offsets = default_tile_offsets(spec.tile_pitch);
  return build_composite_ris(offsets, spec.spacing, spec.cell_dy, spec.cell_dz, spec.rings);
}

RisLayout default_composite_ris() { return build_composite_ris(CompositeSpec{}); }

double aperture(const Eigen::Matrix3Xd& cells) {
  if (cells.cols() < 2) throw DegenerateLayout("aperture: need at least two cells");
  double best = 0.0;
  for (Eigen::Index a = 0; a < cells.cols(); ++a)
    for (Eigen::Index b = a + 1; b < cells.cols(); ++b)
      best = std::max(best, (cells.col(a) - cells.col(b)).squaredNorm());
  return std::sqrt(best);
}

double fraunhofer_distance(const RisLayout& layout, double wavelength) {
  if (!(wavelength > 0.0)) throw std::invalid_argument("fraunhofer_distance: wavelength must be > 0");
  const double d = aperture(layout);
  return 2.0 * d * d / wavelength;
}

void write_layout(std::ostream& os, const RisLayout& layout) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(9);
  os << "# risloc layout\n";
  os << "# cells " << layout.size() << '\n';
  os << "# cell_dims " << layout.cell_dy << ' ' << layout.cell_dz << '\n';
  os << "# min_spacing " << layout.min_spacing << '\n';
  os << "# index x y z\n";
  for (Eigen::Index m = 0; m < layout.size(); ++m) {
    os << m << ' ' << layout.cells(0, m) << ' ' << layout.cells(1, m) << ' '
       << layout.cells(2, m) << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

RisLayout read_layout(std::istream& is) {
  RisLayout layout;
  std::vector<Vec3> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line.front() == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "cell_dims") ls >> layout.cell_dy >> layout.cell_dz;
      else if (key == "min_spacing") ls >> layout.min_spacing;
      continue;
    }
    long index = 0;
    Vec3 q;
    if (!(ls >> index >> q.x() >> q.y() >> q.z()))
      throw std::runtime_error("read_layout: malformed row: " + line);
    if (index != static_cast<long>(rows.size()))
      throw std::runtime_error("read_layout: rows out of order at index " + std::to_string(index));
    rows.push_back(q);
  }
  layout.cells.resize(3, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t m = 0; m < rows.size(); ++m) layout.cells.col(static_cast<Eigen::Index>(m)) = rows[m];
  return layout;
}

}  // namespace risloc
