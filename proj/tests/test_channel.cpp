#include <doctest.h>

#include <numbers>
#include <random>
#include <sstream>

#include "risloc/channel.hpp"
#include "risloc/errors.hpp"

using namespace risloc;

namespace {

RisLayout single_cell(const Vec3& q) {
  RisLayout l;
  l.cells = q;
  l.reference = Vec3::Zero();
  l.cell_dy = kCellSize;
  l.cell_dz = kCellSize;
  l.min_spacing = 0.0;
  return l;
}

// Angle-based pattern: acos of each boresight angle, then cos and power.
double pattern_oracle(const Vec3& q, const Vec3& p, const Vec3& bs, double g_bs, double g_ue) {
  auto angle = [](const Vec3& a, const Vec3& b) { return std::acos(a.dot(b) / (a.norm() * b.norm())); };
  const double a_bs = angle(-bs, q - bs);
  const double a_rx = angle(Vec3::UnitX(), bs - q);
  const double a_tx = angle(Vec3::UnitX(), p - q);
  const double a_ue = angle(-p, q - p);
  return std::pow(std::cos(a_bs), g_bs / 2 - 1) * std::cos(a_rx) * std::cos(a_tx) *
         std::pow(std::cos(a_ue), g_ue / 2 - 1);
}

const Vec3 kTruthV = Vec3(1.0, -1.0, 2.0) / std::sqrt(6.0);

}  // namespace

TEST_CASE("noise power from Boltzmann constant, temperature, bandwidth and noise figure") {
  const Scenario s = Scenario::reference();
  const double oracle = 1.380649e-23 * 293.0 * 1e6 * std::pow(10.0, 0.8);
  CHECK(noise_power(s) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(noise_power(s) == doctest::Approx(2.55e-14).epsilon(0.01));
  CHECK(linear_to_db(noise_power(s) * 1e3) == doctest::Approx(-105.9).epsilon(1e-3));
}

TEST_CASE("reference scenario constants") {
  const Scenario s = Scenario::reference();
  CHECK(s.wavelength() == doctest::Approx(0.0125963).epsilon(1e-5));
  CHECK(s.tx_power_w == doctest::Approx(0.1));
  CHECK(s.samples == 40);
  REQUIRE(s.reflection_set.size() == 2);
  CHECK(std::arg(s.reflection_set[0]) == doctest::Approx(-15.0 * kDegree));
  CHECK(std::abs(s.reflection_set[0] + s.reflection_set[1]) < 1e-15);
}

TEST_CASE("combined pattern matches the angle-based oracle") {
  const Scenario s = Scenario::reference();
  const RisLayout l = default_composite_ris();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(0.1, 3.1), uy(-1.5, 1.5);
  std::uniform_int_distribution<Eigen::Index> um(0, l.size() - 1);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p(ux(rng), uy(rng), -0.5);
    const Eigen::Index m = um(rng);
    const double f = combined_pattern(m, p, l, s);
    CHECK(f == doctest::Approx(pattern_oracle(l.cells.col(m), p, s.bs_position, s.gain_bs, s.gain_ue))
                   .epsilon(1e-12));
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
  CHECK_THROWS_AS(combined_pattern(0, Vec3(-1, 0, 0), l, s), GeometryError);
}

TEST_CASE("single-cell coefficient equals the closed form") {
  const Scenario s = Scenario::reference();
  const Vec3 q(0.0, 0.03, -0.02);
  const RisLayout l = single_cell(q);
  Codebook cb;
  cb.gamma = Eigen::MatrixXcd::Constant(1, 1, s.reflection_set[1]);
  const Vec3 p(1.3, 0.4, -0.5);
  const double db = (s.bs_position - q).norm(), du = (p - q).norm();
  const double k = 2 * std::numbers::pi / s.wavelength();
  const double f = pattern_oracle(q, p, s.bs_position, s.gain_bs, s.gain_ue);
  const Complex oracle = std::sqrt(s.gain_bs * s.gain_ue) * kCellSize * kCellSize /
                         (4 * std::numbers::pi) * s.reflection_set[1] * std::sqrt(f) *
                         std::exp(Complex(0, -k * (db + du))) / (db * du);
  const Complex h = channel_coefficient(0, p, Vec3::Zero(), l, cb, s);
  CHECK(std::abs(h - oracle) < 1e-12 * std::abs(oracle));
}

TEST_CASE("coefficients are linear in the codebook and reciprocal in BS/UE") {
  const Scenario s = Scenario::reference();
  const RisLayout l = default_composite_ris();
  const Codebook a = random_codebook(l.size(), 4, s.reflection_set, 1);
  const Codebook b = random_codebook(l.size(), 4, s.reflection_set, 2);
  const Vec3 p(2.0, 0.0, -0.5);
  Codebook mix;
  const Complex ca(0.3, -1.2), cbw(-0.7, 0.4);
  mix.gamma = ca * a.gamma + cbw * b.gamma;
  const Eigen::VectorXcd lin = ca * channel_coefficients(p, Vec3::Zero(), l, a, s) +
                               cbw * channel_coefficients(p, Vec3::Zero(), l, b, s);
  CHECK((channel_coefficients(p, Vec3::Zero(), l, mix, s) - lin).norm() < 1e-12 * lin.norm());

  // Swapping BS and UE together with their gains leaves h' unchanged.
  Scenario sw = s;
  sw.bs_position = p;
  std::swap(sw.gain_bs, sw.gain_ue);
  const Eigen::VectorXcd fwd = channel_coefficients(p, Vec3::Zero(), l, a, s);
  const Eigen::VectorXcd rev = channel_coefficients(s.bs_position, Vec3::Zero(), l, a, sw);
  CHECK((fwd - rev).norm() < 1e-12 * fwd.norm());
}

TEST_CASE("per-sample SNR at (2, 0, -0.5) over random codebooks") {
  const Scenario s = Scenario::reference();
  const RisLayout l = default_composite_ris();
  const Vec3 p(2.0, 0.0, -0.5);
  double acc = 0.0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 250; ++seed) {
    const Codebook cb = random_codebook(l.size(), 1, s.reflection_set, seed);
    acc += std::norm(channel_coefficient(0, p, Vec3::Zero(), l, cb, s)) * s.tx_power_w / noise_power(s);
    ++n;
  }
  const double snr_db = linear_to_db(acc / n);
  MESSAGE("mean SNR " << snr_db << " dB");
  CHECK(snr_db >= 14.0);
  CHECK(snr_db <= 46.0);
}

TEST_CASE("noise statistics, determinism and seed independence") {
  Scenario s = Scenario::reference();
  s.samples = 100000;
  RisLayout l = single_cell(Vec3::Zero());
  Codebook cb;
  cb.gamma = Eigen::MatrixXcd::Zero(1, s.samples);
  const Snapshot a = generate_snapshot(Vec3(2, 0, -0.5), Vec3::Zero(), l, cb, s, 42);
  const double pn = noise_power(s);
  CHECK(a.y.squaredNorm() / s.samples == doctest::Approx(pn).epsilon(0.02));
  CHECK(a.y.real().squaredNorm() / s.samples == doctest::Approx(pn / 2).epsilon(0.02));
  CHECK(std::abs(a.y.mean()) < 5 * std::sqrt(pn / s.samples));

  const Snapshot again = generate_snapshot(Vec3(2, 0, -0.5), Vec3::Zero(), l, cb, s, 42);
  CHECK(a.y == again.y);

  const Snapshot b = generate_snapshot(Vec3(2, 0, -0.5), Vec3::Zero(), l, cb, s, 43);
  // Normalised cross-correlation of independent draws: ~N(0, 1/n).
  const double rho = std::abs(a.y.dot(b.y)) / (a.y.norm() * b.y.norm());
  CHECK(rho < 3.0 / std::sqrt(static_cast<double>(s.samples)));
}

TEST_CASE("noiseless snapshot and reported SNR") {
  const Scenario s = Scenario::reference();
  const RisLayout l = default_composite_ris();
  const Codebook cb = random_codebook(l.size(), s.samples, s.reflection_set, 9);
  const Vec3 p(1.5, 0.2, -0.5);
  const Snapshot snap = generate_snapshot(p, kTruthV, l, cb, s, 1, {true, true});
  const Eigen::VectorXcd h = channel_coefficients(p, kTruthV, l, cb, s);
  const Eigen::VectorXcd want = std::sqrt(s.tx_power_w) * h;
  CHECK(snap.y == want);
  for (Eigen::Index i = 0; i < s.samples; ++i)
    CHECK(snap.snr_db(i) ==
          doctest::Approx(10 * std::log10(std::norm(h(i)) * s.tx_power_w / noise_power(s))).epsilon(1e-12));
}

TEST_CASE("codebook draws from the reflection set") {
  const Scenario s = Scenario::reference();
  const Codebook cb = random_codebook(508, 40, s.reflection_set, 77);
  int first = 0;
  for (Eigen::Index i = 0; i < cb.gamma.size(); ++i) {
    const Complex g = cb.gamma.data()[i];
    const bool a = g == s.reflection_set[0], b = g == s.reflection_set[1];
    CHECK((a || b));
    first += a;
  }
  const double n = static_cast<double>(cb.gamma.size());
  CHECK(std::abs(first - n / 2) < 4 * std::sqrt(n / 4));
  CHECK(random_codebook(508, 40, s.reflection_set, 77).gamma == cb.gamma);
}

TEST_CASE("snapshot text round trip") {
  const Scenario s = Scenario::reference();
  const RisLayout l = default_composite_ris();
  const Codebook cb = random_codebook(l.size(), s.samples, s.reflection_set, 3);
  Snapshot snap = generate_snapshot(Vec3(2, 0, -0.5), kTruthV, l, cb, s, 4);
  snap.codebook_seed = 3;
  snap.scenario_hash = "abc123";
  std::stringstream ss;
  write_snapshot(ss, snap);
  const Snapshot back = read_snapshot(ss);
  CHECK(back.codebook_seed == 3);
  CHECK(back.noise_seed == 4);
  CHECK(back.scenario_hash == "abc123");
  CHECK((back.truth_p - snap.truth_p).norm() < 1e-12);
  CHECK((back.truth_v - snap.truth_v).norm() < 1e-12);
  CHECK((back.y - snap.y).norm() < 1e-11 * snap.y.norm());
}
