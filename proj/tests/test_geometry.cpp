#include <doctest.h>

#include <random>
#include <sstream>

#include "risloc/errors.hpp"
#include "risloc/geometry.hpp"

using namespace risloc;

TEST_CASE("hex tile has 3n^2+3n+1 cells at lattice spacing") {
  for (int n = 0; n <= 7; ++n) {
    const Eigen::Matrix3Xd t = build_hex_tile(n, kCellSpacing);
    CHECK(t.cols() == 3 * n * n + 3 * n + 1);
    CHECK(t.row(0).cwiseAbs().maxCoeff() == 0.0);
    if (n > 0) CHECK(min_pairwise_distance(t) == doctest::Approx(kCellSpacing).epsilon(1e-12));
  }
  CHECK(build_hex_tile(6, kCellSpacing).cols() == 127);
  CHECK(build_hex_tile(6, kCellSpacing).col(0).norm() == 0.0);
}

TEST_CASE("hex tile points are distinct lattice sites of the triangular lattice") {
  const double d = 1.0;
  const Eigen::Matrix3Xd t = build_hex_tile(3, d);
  // Independent oracle: enumerate axial (a, b) with hex distance <= 3.
  int count = 0;
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b)
      if (std::max({std::abs(a), std::abs(b), std::abs(a + b)}) <= 3) {
        const double y = a * d + b * d / 2, z = b * d * std::sqrt(3.0) / 2;
        bool found = false;
        for (Eigen::Index m = 0; m < t.cols(); ++m)
          found |= std::hypot(t(1, m) - y, t(2, m) - z) < 1e-12;
        CHECK(found);
        ++count;
      }
  CHECK(count == t.cols());
}

TEST_CASE("default composite surface") {
  const RisLayout l = default_composite_ris();
  CHECK(l.size() == 508);
  CHECK(l.reference.norm() == 0.0);
  CHECK(l.cells.rowwise().mean().norm() < 1e-15);
  CHECK(l.cells.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(l.min_spacing >= kCellSpacing * (1 - 1e-9));
  const double lambda = 299792458.0 / 23.8e9;
  const double df = fraunhofer_distance(l, lambda);
  CHECK(df == doctest::Approx(16.3).epsilon(0.05));
}

TEST_CASE("composite surface rejects bad offsets") {
  const std::array<Vec2, 3> three{Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  CHECK_THROWS_AS(build_composite_ris(three, kCellSpacing, kCellSize, kCellSize), std::invalid_argument);
  const std::array<Vec2, 4> close{Vec2(0, 0), Vec2(0.05, 0), Vec2(1, 0), Vec2(0, 1)};
  CHECK_THROWS_AS(build_composite_ris(close, kCellSpacing, kCellSize, kCellSize), OverlapError);
}

TEST_CASE("aperture: brute-force oracle, rotation invariance and homogeneity") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Matrix3Xd pts(3, 40);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = n(rng);
  double brute = 0.0;
  for (Eigen::Index i = 0; i < pts.cols(); ++i)
    for (Eigen::Index j = 0; j < pts.cols(); ++j) brute = std::max(brute, (pts.col(i) - pts.col(j)).norm());
  CHECK(aperture(pts) == doctest::Approx(brute).epsilon(1e-14));
  const Eigen::Matrix3d r =
      Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  CHECK(aperture(Eigen::Matrix3Xd(r * pts)) == doctest::Approx(brute).epsilon(1e-12));
  CHECK(aperture(Eigen::Matrix3Xd(2.5 * pts)) == doctest::Approx(2.5 * brute).epsilon(1e-12));
  CHECK_THROWS_AS(aperture(Eigen::Matrix3Xd(pts.leftCols(1))), DegenerateLayout);
}

TEST_CASE("spherical conversion round trip") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(-80.0 * kDegree, 80.0 * kDegree), rad(0.05, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const SphericalCoord c{ang(rng), ang(rng), rad(rng)};
    const Vec3 p = spherical_to_cartesian(c);
    CHECK(p.norm() == doctest::Approx(c.range).epsilon(1e-14));
    const SphericalCoord back = cartesian_to_spherical(p);
    CHECK(std::abs(back.azimuth - c.azimuth) < 1e-12);
    CHECK(std::abs(back.elevation - c.elevation) < 1e-12);
    CHECK(back.range == doctest::Approx(c.range).epsilon(1e-12));
  }
  // Axis conventions: azimuth from +x towards +y, elevation towards +z.
  const Vec3 q = spherical_to_cartesian(SphericalCoord{90.0 * kDegree, 0.0, 2.0});
  CHECK(q.y() == doctest::Approx(2.0));
  const Vec3 up = spherical_to_cartesian(SphericalCoord{0.0, 90.0 * kDegree, 1.0});
  CHECK(up.z() == doctest::Approx(1.0));
  CHECK_THROWS_AS(cartesian_to_spherical(Vec3::Zero().eval()), OriginError);
}

TEST_CASE("layout text export round trip") {
  const RisLayout l = default_composite_ris();
  std::stringstream ss;
  write_layout(ss, l);
  const RisLayout back = read_layout(ss);
  REQUIRE(back.size() == l.size());
  CHECK((back.cells - l.cells).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(back.cell_dy == doctest::Approx(l.cell_dy));
}
