#include <doctest.h>

#include <numbers>

#include "risloc/channel.hpp"
#include "risloc/errors.hpp"
#include "risloc/projection.hpp"
#include "risloc/steering.hpp"

using namespace risloc;

namespace {

const Vec3 kTruthV = Vec3(1.0, -1.0, 2.0) / std::sqrt(6.0);

double wrap(double a) { return std::remainder(a, 2 * std::numbers::pi); }

}  // namespace

TEST_CASE("full channel and phase-only model agree in phase") {
  const Scenario s = Scenario::reference();
  const RisLayout l = default_composite_ris();
  const Vec3 p(2.0, 0.0, -0.5);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Codebook cb = random_codebook(l.size(), s.samples, s.reflection_set, seed);
    const Eigen::VectorXcd full = channel_coefficients(p, kTruthV, l, cb, s, false);
    const SteeringModel model(l, cb, s);
    const Eigen::VectorXcd h = steering_vector(model, p, kTruthV);
    const Eigen::VectorXcd fit = ml_alpha(full, h) * h;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < s.samples; ++i)
      worst = std::max(worst, std::abs(wrap(std::arg(full(i)) - std::arg(fit(i)))));
    MESSAGE("seed " << seed << " worst phase gap " << worst << " rad");
    CHECK(worst < 0.05);
  }
}

TEST_CASE("full channel with frozen cell amplitudes is a scaled phase-only model") {
  const Scenario s = Scenario::reference();
  const RisLayout l = default_composite_ris();
  const Vec3 p(2.0, 0.0, -0.5);
  const Codebook cb = random_codebook(l.size(), s.samples, s.reflection_set, 1);
  // Per-cell sum with unit amplitudes, otherwise identical to the full channel.
  Eigen::VectorXcd flat(s.samples);
  for (Eigen::Index i = 0; i < s.samples; ++i) {
    const Vec3 pl = p + kTruthV * (static_cast<double>(i) * s.sampling_time_s);
    Complex acc(0.0, 0.0);
    for (Eigen::Index c = 0; c < l.size(); ++c) {
      const double d = (s.bs_position - l.cells.col(c)).norm() + (pl - l.cells.col(c)).norm();
      acc += cb.gamma(c, i) * std::polar(1.0, -s.wavenumber() * d);
    }
    flat(i) = acc;
  }
  const SteeringModel model(l, cb, s);
  const Eigen::VectorXcd h = steering_vector(model, p, kTruthV);
  const Complex alpha = ml_alpha(flat, h);
  CHECK(std::abs(std::abs(alpha) - 1.0) < 1e-12);
  CHECK((flat - alpha * h).norm() < 1e-10 * flat.norm());
}

TEST_CASE("steering vector hand check on a single path") {
  Scenario s = Scenario::reference();
  RisLayout l;
  l.cells = Vec3(0.0, 0.01, 0.0);
  l.cell_dy = l.cell_dz = kCellSize;
  Codebook cb;
  cb.gamma = Eigen::MatrixXcd::Constant(1, s.samples, s.reflection_set[0]);
  const SteeringModel model(l, cb, s);
  const Vec3 p(1.0, 0.2, -0.3), v(0.5, 0.0, 0.0);
  const Eigen::VectorXcd h = steering_vector(model, p, v);
  const double k = 2 * std::numbers::pi / s.wavelength();
  for (Eigen::Index i = 0; i < s.samples; ++i) {
    const Vec3 pl = p + v * (i * s.sampling_time_s);
    const std::complex<double> want =
        s.reflection_set[0] * std::exp(std::complex<double>(
                                  0, -k * ((s.bs_position - l.cells.col(0)).norm() +
                                           (pl - l.cells.col(0)).norm() - p.norm())));
    CHECK(std::abs(h(i) - want) < 1e-9);
  }
  CHECK_THROWS_AS(steering_vector(model, Vec3::Zero(), v), OriginError);
}

TEST_CASE("analytic Jacobian matches central differences of the steering vector") {
  const Scenario s = Scenario::reference();
  const RisLayout l = default_composite_ris();
  const Codebook cb = random_codebook(l.size(), s.samples, s.reflection_set, 8);
  const SteeringModel model(l, cb, s);
  const Vec3 p(1.2, 0.3, -0.5);
  const SteeringDerivative d = steering_derivative(model, p, kTruthV);
  CHECK((d.h - steering_vector(model, p, kTruthV)).norm() < 1e-12 * d.h.norm());
  const double step = 1e-7;
  for (int c = 0; c < 6; ++c) {
    Vec3 pp = p, pm = p, vp = kTruthV, vm = kTruthV;
    if (c < 3) {
      pp(c) += step;
      pm(c) -= step;
    } else {
      vp(c - 3) += step;
      vm(c - 3) -= step;
    }
    const Eigen::VectorXcd fd = (steering_vector(model, pp, vp) - steering_vector(model, pm, vm)) / (2 * step);
    CHECK((fd - d.jacobian.col(c)).norm() < 1e-5 * std::max(1.0, d.jacobian.col(c).norm()));
  }
}

TEST_CASE("antipodal codebooks are detected") {
  const Scenario s = Scenario::reference();
  const RisLayout l = default_composite_ris();
  const Codebook cb = random_codebook(l.size(), s.samples, s.reflection_set, 8);
  const SteeringModel model(l, cb, s);
  REQUIRE(model.antipodal_signs().has_value());
  const Eigen::MatrixXd& sg = *model.antipodal_signs();
  CHECK((sg.transpose().cast<std::complex<double>>() * cb.gamma(0, 0) - cb.gamma).norm() < 1e-12);

  Scenario q = s;
  const double phases[] = {0.0, 90.0, 180.0, 270.0};
  q.reflection_set = reflection_set_from_degrees(phases);
  const Codebook cq = random_codebook(l.size(), s.samples, q.reflection_set, 8);
  CHECK_FALSE(SteeringModel(l, cq, q).antipodal_signs().has_value());
}
