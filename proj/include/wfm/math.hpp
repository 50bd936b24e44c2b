#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>

namespace wfm {

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return -std::numeric_limits<Scalar>::infinity();
  const Scalar peak = x.maxCoeff();
  if (!std::isfinite(peak)) return peak;
  return peak + std::log((x.derived().array() - peak).exp().sum());
}

/// Planar Euclidean distance between two (x, y) positions.
template <typename Scalar>
Scalar planar_distance(Scalar ax, Scalar ay, Scalar bx, Scalar by) {
  return std::hypot(ax - bx, ay - by);
}

}  // namespace wfm
