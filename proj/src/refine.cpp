#include "risloc/refine.hpp"

#include <cmath>
#include <limits>

#include "risloc/projection.hpp"

namespace risloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Linearisation {
  double cost;
  std::complex<double> alpha;
  Eigen::VectorXcd residual;                                  // y - alpha h
  Eigen::Matrix<std::complex<double>, Eigen::Dynamic, 6> a;   // alpha P_perp J
};

Linearisation linearise(const Eigen::VectorXcd& y, const SteeringModel& model, const Vec3& p,
                        const Vec3& v) {
  const SteeringDerivative d = steering_derivative(model, p, v);
  const double energy = d.h.squaredNorm();
  if (!(energy > 0.0)) throw ZeroModelError("ml_objective: zero model vector");
  Linearisation lin;
  lin.cost = projection_cost(y, d.h);
  lin.alpha = d.h.dot(y) / energy;
  lin.residual = y - lin.alpha * d.h;
  const Eigen::Matrix<std::complex<double>, 1, 6> along = d.h.adjoint() * d.jacobian / energy;
  lin.a = lin.alpha * (d.jacobian - d.h * along);
  return lin;
}

// Least-squares displacement over the parameter block [offset, offset + 3).
// Small systems are factorised in heap storage so the vectorised kernels see
// the same alignment on every thread.
Vec3 block_step(const Linearisation& lin, Eigen::Index offset) {
  const auto a = lin.a.middleCols<3>(offset);
  const Eigen::MatrixXd normal = (a.adjoint() * a).real();
  const Eigen::VectorXd rhs = (a.adjoint() * lin.residual).real();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
  const double largest = eig.eigenvalues().maxCoeff();
  if (!(largest > 0.0) || eig.eigenvalues().minCoeff() <= kRankTolerance * largest)
    throw SingularSystemError("cf_refine: rank-deficient normal equations");
  return Vec3(normal.ldlt().solve(rhs));
}

bool finite_position(const Vec3& p) { return p.allFinite() && p.squaredNorm() > 0.0; }

}  // namespace

double ml_cost(const Eigen::VectorXcd& y, const SteeringModel& model, const Vec3& p, const Vec3& v) {
  if (!finite_position(p) || !v.allFinite()) return kInf;
  const Eigen::VectorXcd h = steering_vector(model, p, v);
  if (!(h.squaredNorm() > 0.0)) return kInf;
  return projection_cost(y, h);
}

Objective ml_objective(const Eigen::VectorXcd& y, const SteeringModel& model, const Vec3& p,
                       const Vec3& v) {
  const Linearisation lin = linearise(y, model, p, v);
  Objective obj;
  obj.cost = lin.cost;
  obj.alpha = lin.alpha;
  obj.gradient = -2.0 * (lin.a.adjoint() * lin.residual).real();
  obj.metric = 2.0 * (lin.a.adjoint() * lin.a).real();
  return obj;
}

Vec6 finite_difference_gradient(const Eigen::VectorXcd& y, const SteeringModel& model,
                                const Vec3& p, const Vec3& v, double rel_step) {
  Vec6 x;
  x << p, v;
  Vec6 g;
  for (int i = 0; i < 6; ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x(i)));
    Vec6 xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (ml_cost(y, model, xp.head<3>(), xp.tail<3>()) -
            ml_cost(y, model, xm.head<3>(), xm.tail<3>())) /
           (xp(i) - xm(i));
  }
  return g;
}

RefineStep cf_refine(const Eigen::VectorXcd& y, const SteeringModel& model, const Vec3& p,
                     const Vec3& v) {
  if (!finite_position(p)) throw OriginError("cf_refine: position at RIS reference point");
  RefineStep out;
  out.p = p;
  out.v = v;

  auto accept = [&](const Vec3& step, bool position, double& cost) {
    double t = 1.0;
    for (int halving = 0; halving < 4; ++halving, t *= 0.5) {
      const Vec3 cand_p = position ? Vec3(out.p + t * step) : out.p;
      const Vec3 cand_v = position ? out.v : Vec3(out.v + t * step);
      const double c = ml_cost(y, model, cand_p, cand_v);
      if (c < cost) {
        cost = c;
        out.p = cand_p;
        out.v = cand_v;
        return Vec3(t * step);
      }
    }
    return Vec3(Vec3::Zero());
  };

  Linearisation lin = linearise(y, model, out.p, out.v);
  out.cost_before = lin.cost;
  double cost = lin.cost;
  out.position_step = accept(block_step(lin, 0), true, cost);

  lin = linearise(y, model, out.p, out.v);
  out.velocity_step = accept(block_step(lin, 3), false, cost);

  out.cost = cost;
  out.converged = !(out.cost_before - out.cost > kRefineConvergence * out.cost_before);
  return out;
}

RefineResult refine_loop(const Eigen::VectorXcd& y, const SteeringModel& model, const Vec3& p,
                         const Vec3& v, int max_iter) {
  if (max_iter < 1) throw std::invalid_argument("refine_loop: max_iter must be >= 1");
  RefineResult out;
  out.p = p;
  out.v = v;
  out.cost = ml_cost(y, model, p, v);
  out.cost_history.push_back(out.cost);
  for (int it = 0; it < max_iter; ++it) {
    const RefineStep step = cf_refine(y, model, out.p, out.v);
    out.p = step.p;
    out.v = step.v;
    out.cost = step.cost;
    out.cost_history.push_back(step.cost);
    out.iterations = it + 1;
    if (step.converged) {
      out.converged = true;
      break;
    }
  }
  return out;
}

DescentResult gradient_descent_6d(const Eigen::VectorXcd& y, const SteeringModel& model,
                                  const Vec3& p, const Vec3& v, const DescentOptions& opts) {
  DescentResult out;
  out.p = p;
  out.v = v;
  if (!finite_position(p)) {
    out.cost = kInf;
    return out;
  }
  const double scale = y.squaredNorm();
  Objective obj = ml_objective(y, model, p, v);
  out.cost = obj.cost;

  for (int it = 0; it < opts.max_iterations; ++it) {
    if (obj.gradient.norm() < opts.gradient_tolerance * scale) break;

    const double damping = 1e-12 * std::max(obj.metric.trace() / 6.0, 1e-300);
    Eigen::MatrixXd system = obj.metric;
    system.diagonal().array() += damping;
    const Eigen::VectorXd gradient = obj.gradient;
    Vec6 dir = -system.ldlt().solve(gradient);
    double slope = obj.gradient.dot(dir);
    if (!dir.allFinite() || !(slope < 0.0)) {
      dir = -obj.gradient;
      slope = -obj.gradient.squaredNorm();
    }

    Vec6 x;
    x << out.p, out.v;
    double t = 1.0;
    bool moved = false;
    double trial_cost = kInf;
    Vec6 trial;
    while (t >= opts.min_step) {
      trial = x + t * dir;
      trial_cost = ml_cost(y, model, trial.head<3>(), trial.tail<3>());
      if (trial_cost <= out.cost + opts.sufficient_decrease * t * slope) {
        moved = trial_cost < out.cost;
        break;
      }
      t *= opts.shrink;
    }
    if (!moved) break;

    const double decrease = out.cost - trial_cost;
    out.p = trial.head<3>();
    out.v = trial.tail<3>();
    const double previous = out.cost;
    out.cost = trial_cost;
    out.iterations = it + 1;
    if (decrease < opts.relative_tolerance * previous) break;
    obj = ml_objective(y, model, out.p, out.v);
  }
  return out;
}

}  // namespace risloc
