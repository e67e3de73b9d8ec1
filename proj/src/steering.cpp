#include "risloc/steering.hpp"

#include <cmath>

namespace risloc {

namespace {

std::optional<Eigen::MatrixXd> detect_antipodal(const Eigen::MatrixXcd& gamma) {
  if (gamma.size() == 0) return std::nullopt;
  const std::complex<double> g0 = gamma(0, 0);
  Eigen::MatrixXd signs(gamma.cols(), gamma.rows());
  for (Eigen::Index l = 0; l < gamma.cols(); ++l) {
    for (Eigen::Index m = 0; m < gamma.rows(); ++m) {
      const std::complex<double> r = gamma(m, l) / g0;
      if (std::abs(r.imag()) > 1e-12 || std::abs(std::abs(r.real()) - 1.0) > 1e-12)
        return std::nullopt;
      signs(l, m) = r.real() > 0.0 ? 1.0 : -1.0;
    }
  }
  return signs;
}

void require_nonzero(const Vec3& p) {
  if (!(p.squaredNorm() > 0.0)) throw OriginError("steering model: position at RIS reference point");
}

}  // namespace

SteeringModel::SteeringModel(const RisLayout& layout, const Codebook& codebook,
                             const Scenario& scenario)
    : cells_(layout.cells),
      gamma_(codebook.gamma),
      wavelength_(scenario.wavelength()),
      wavenumber_(scenario.wavenumber()),
      sampling_time_(scenario.sampling_time_s) {
  if (codebook.cells() != layout.size())
    throw std::invalid_argument("SteeringModel: codebook/layout size mismatch");
  bs_dist_.resize(cells_.cols());
  for (Eigen::Index m = 0; m < cells_.cols(); ++m)
    bs_dist_(m) = (scenario.bs_position - cells_.col(m)).norm();
  weights_.resize(cells_.cols(), gamma_.cols());
  for (Eigen::Index m = 0; m < cells_.cols(); ++m) {
    const std::complex<double> phase = std::polar(1.0, -wavenumber_ * bs_dist_(m));
    weights_.row(m) = gamma_.row(m) * phase;
  }
  cell_sq_ = cells_.colwise().squaredNorm().transpose();
  signs_ = detect_antipodal(gamma_);
}

Eigen::VectorXcd steering_vector(const SteeringModel& model, const Vec3& p, const Vec3& v) {
  require_nonzero(p);
  const double k = model.wavenumber();
  const double dr = p.norm();
  const Eigen::Matrix3Xd& q = model.cells();
  const Eigen::MatrixXcd& w = model.weights();
  Eigen::VectorXcd h(model.samples());
  for (Eigen::Index l = 0; l < model.samples(); ++l) {
    const Vec3 pl = p + v * (static_cast<double>(l) * model.sampling_time());
    std::complex<double> acc(0.0, 0.0);
    for (Eigen::Index m = 0; m < q.cols(); ++m)
      acc += w(m, l) * std::polar(1.0, -k * ((pl - q.col(m)).norm() - dr));
    h(l) = acc;
  }
  return h;
}

SteeringDerivative steering_derivative(const SteeringModel& model, const Vec3& p, const Vec3& v) {
  require_nonzero(p);
  const double k = model.wavenumber();
  const double dr = p.norm();
  const Vec3 u0 = p / dr;
  const Eigen::Matrix3Xd& q = model.cells();
  const Eigen::MatrixXcd& w = model.weights();
  const std::complex<double> minus_jk(0.0, -k);

  SteeringDerivative out;
  out.h.resize(model.samples());
  out.jacobian.resize(model.samples(), 6);
  for (Eigen::Index l = 0; l < model.samples(); ++l) {
    const double t = static_cast<double>(l) * model.sampling_time();
    const Vec3 pl = p + v * t;
    std::complex<double> acc(0.0, 0.0);
    Eigen::Matrix<std::complex<double>, 3, 1> du = Eigen::Matrix<std::complex<double>, 3, 1>::Zero();
    Eigen::Matrix<std::complex<double>, 3, 1> dv = Eigen::Matrix<std::complex<double>, 3, 1>::Zero();
    for (Eigen::Index m = 0; m < q.cols(); ++m) {
      const Vec3 d = pl - q.col(m);
      const double dist = d.norm();
      const Vec3 u = d / dist;
      const std::complex<double> term = w(m, l) * std::polar(1.0, -k * (dist - dr));
      acc += term;
      // d/dp of the exponent is -k (u_m - u0); d/dv is -k t u_m.
      du += term * (u - u0).cast<std::complex<double>>();
      dv += term * u.cast<std::complex<double>>();
    }
    out.h(l) = acc;
    out.jacobian.block<1, 3>(l, 0) = (minus_jk * du).transpose();
    out.jacobian.block<1, 3>(l, 3) = (minus_jk * t * dv).transpose();
  }
  return out;
}

}  // namespace risloc
