#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "risloc/steering.hpp"

namespace risloc {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// projection_cost(y, h(p, v)); +inf where the model is undefined
/// (p at the reference point or a zero model vector).
double ml_cost(const Eigen::VectorXcd& y, const SteeringModel& model, const Vec3& p, const Vec3& v);

/// Cost, gradient and Gauss-Newton metric of the gain-eliminated ML
/// criterion over x = (p, v). With r = y - alpha h and
/// A = alpha (I - h h^H / ||h||^2) dh/dx, the gradient is -2 Re(A^H r) and
/// the metric 2 Re(A^H A).
struct Objective {
  double cost = 0.0;
  Vec6 gradient = Vec6::Zero();
  Mat6 metric = Mat6::Zero();
  std::complex<double> alpha{};
};

Objective ml_objective(const Eigen::VectorXcd& y, const SteeringModel& model, const Vec3& p,
                       const Vec3& v);

/// Central-difference gradient of ml_cost, step `rel_step * max(1, |x_i|)`.
/// Test oracle only; not used by the estimator.
Vec6 finite_difference_gradient(const Eigen::VectorXcd& y, const SteeringModel& model,
                                const Vec3& p, const Vec3& v, double rel_step = 1e-7);

struct RefineStep {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 position_step = Vec3::Zero();
  Vec3 velocity_step = Vec3::Zero();
  double cost_before = 0.0;
  double cost = 0.0;
  bool converged = false;
};

inline constexpr double kRefineConvergence = 1e-6;
inline constexpr double kRankTolerance = 1e-10;

/// One closed-form round: the phase response is linearised (first order in
/// the displacement, e^{jx} ~ 1 + jx) around the current estimate, the
/// position displacement is obtained from the 3 x 3 least-squares normal
/// equations, then the velocity displacement at the updated position.
/// A displacement that does not lower the cost is halved up to three times
/// and then dropped. Throws SingularSystemError when a normal matrix has
/// eigenvalue ratio below kRankTolerance.
RefineStep cf_refine(const Eigen::VectorXcd& y, const SteeringModel& model, const Vec3& p,
                     const Vec3& v);

struct RefineResult {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Cost at the start and after every round.
  std::vector<double> cost_history;
};

/// Repeats cf_refine until it reports convergence or `max_iter` rounds ran.
RefineResult refine_loop(const Eigen::VectorXcd& y, const SteeringModel& model, const Vec3& p,
                         const Vec3& v, int max_iter = 10);

struct DescentOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-9;
  /// Relative to ||y||^2.
  double gradient_tolerance = 1e-9;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  double min_step = 1e-12;
};

struct DescentResult {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  double cost = 0.0;
  int iterations = 0;
};

/// Joint descent over (p, v) with Armijo backtracking. The search direction
/// is the gradient scaled by the (lightly damped) Gauss-Newton metric;
/// plain steepest descent is used whenever that fails to be a descent
/// direction. The final cost never exceeds the starting cost.
DescentResult gradient_descent_6d(const Eigen::VectorXcd& y, const SteeringModel& model,
                                  const Vec3& p, const Vec3& v, const DescentOptions& opts = {});

}  // namespace risloc
