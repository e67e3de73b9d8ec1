#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>

#include "risloc/errors.hpp"

namespace risloc {

/// Conditional ML gain h^H y / ||h||^2. Throws ZeroModelError for h = 0.
template <typename DerivedY, typename DerivedH>
std::complex<typename DerivedY::RealScalar> ml_alpha(const Eigen::MatrixBase<DerivedY>& y,
                                                     const Eigen::MatrixBase<DerivedH>& h) {
  using Real = typename DerivedY::RealScalar;
  const Real energy = h.squaredNorm();
  if (!(energy > Real(0))) throw ZeroModelError("ml_alpha: model vector has zero norm");
  return h.dot(y) / energy;
}

/// ||(I - h h^H / ||h||^2) y||^2 evaluated as ||y||^2 - |h^H y|^2 / ||h||^2.
/// Round-off can push the difference slightly below zero; it is clamped.
template <typename DerivedY, typename DerivedH>
typename DerivedY::RealScalar projection_cost(const Eigen::MatrixBase<DerivedY>& y,
                                              const Eigen::MatrixBase<DerivedH>& h) {
  using Real = typename DerivedY::RealScalar;
  const Real energy = h.squaredNorm();
  if (!(energy > Real(0))) throw ZeroModelError("projection_cost: model vector has zero norm");
  const Real cost = y.squaredNorm() - std::norm(h.dot(y)) / energy;
  return std::max(cost, Real(0));
}

}  // namespace risloc
