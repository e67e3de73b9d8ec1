#pragma once

#include <Eigen/Dense>

#include <optional>

#include "risloc/channel.hpp"
#include "risloc/geometry.hpp"

namespace risloc {

/// Simplified phase-only response of the surface used by every estimator
/// stage. Per-cell weights w_{m,l} = gamma_{m,l} exp(-j k ||p_BS - q_m||)
/// absorb the known codebook and BS geometry; amplitude terms are dropped.
/// Immutable after construction.
class SteeringModel {
 public:
  SteeringModel(const RisLayout& layout, const Codebook& codebook, const Scenario& scenario);

  const Eigen::Matrix3Xd& cells() const { return cells_; }
  Eigen::Index cell_count() const { return cells_.cols(); }
  Eigen::Index samples() const { return weights_.cols(); }
  double wavelength() const { return wavelength_; }
  double wavenumber() const { return wavenumber_; }
  double sampling_time() const { return sampling_time_; }

  /// M x L.
  const Eigen::MatrixXcd& weights() const { return weights_; }
  const Eigen::MatrixXcd& codebook() const { return gamma_; }
  /// ||p_BS - q_m|| for every cell.
  const Eigen::VectorXd& bs_distances() const { return bs_dist_; }
  const Eigen::VectorXd& cell_squared_norms() const { return cell_sq_; }

  /// When every gamma_{m,l} equals +-g0 for one unit-modulus g0, the
  /// L x M sign matrix; grid searches then run on real arithmetic since the
  /// common factor g0 is a global phase the projection cost ignores.
  const std::optional<Eigen::MatrixXd>& antipodal_signs() const { return signs_; }

 private:
  Eigen::Matrix3Xd cells_;
  Eigen::MatrixXcd gamma_;
  Eigen::MatrixXcd weights_;
  Eigen::VectorXd bs_dist_;
  Eigen::VectorXd cell_sq_;
  std::optional<Eigen::MatrixXd> signs_;
  double wavelength_;
  double wavenumber_;
  double sampling_time_;
};

/// h_l(p, v) = sum_m w_{m,l} exp(-j k (||p + v l T_s - q_m|| - ||p||)).
/// Throws OriginError for p = 0.
Eigen::VectorXcd steering_vector(const SteeringModel& model, const Vec3& p, const Vec3& v);

/// Steering vector together with its L x 6 complex Jacobian with respect
/// to (p, v).
struct SteeringDerivative {
  Eigen::VectorXcd h;
  Eigen::Matrix<std::complex<double>, Eigen::Dynamic, 6> jacobian;
};

SteeringDerivative steering_derivative(const SteeringModel& model, const Vec3& p, const Vec3& v);

}  // namespace risloc
