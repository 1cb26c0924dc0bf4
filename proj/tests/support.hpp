// Small fixtures and brute-force oracles shared by the unit tests.
#pragma once

#include <cmath>
#include <memory>

#include <Eigen/Dense>

#include "aglm/core.hpp"
#include "aglm/problems.hpp"
#include "aglm/rng.hpp"

namespace aglm::testing {

/// c(x) = x^2 - 2 with h = y^2 / 2 and g = 0; the 1-D quadratic-model fixture.
inline CompositeProblem half_square_toy() {
  CompositeProblem p;
  p.name = "half_square_toy";
  p.dim_x = 1;
  p.dim_r = 1;
  p.residual = [](const Vector& x) { return Vector::Constant(1, x[0] * x[0] - 2.0); };
  p.jvp_at = [](const Vector& x) {
    const double slope = 2.0 * x[0];
    return JacobianOperator{[slope](const Vector& u) { return Vector(slope * u); },
                            [slope](const Vector& v) { return Vector(slope * v); }};
  };
  p.loss = std::make_shared<SquaredNormLoss>(1.0);
  p.regularizer = std::make_shared<ZeroRegularizer>();
  return p;
}

/// c(x) = x, h = |y|^2 / 2, with the given regularizer (zero by default).
inline CompositeProblem identity_problem(Eigen::Index d,
                                         std::shared_ptr<const Regularizer> g = nullptr) {
  CompositeProblem p;
  p.name = "identity";
  p.dim_x = d;
  p.dim_r = d;
  p.residual = [](const Vector& x) { return x; };
  p.jvp_at = [](const Vector&) {
    return JacobianOperator{[](const Vector& u) { return u; }, [](const Vector& v) { return v; }};
  };
  p.loss = std::make_shared<SquaredNormLoss>(1.0);
  p.regularizer = g ? std::move(g) : std::make_shared<ZeroRegularizer>();
  p.lipschitz_jac = 1.0;
  return p;
}

/// Dense Jacobian assembled column by column from the JVP oracle.
inline Matrix dense_jacobian(const CompositeProblem& p, const Vector& x) {
  const JacobianOperator jac = p.jvp_at(x);
  Matrix J(p.dim_r, p.dim_x);
  for (Eigen::Index j = 0; j < p.dim_x; ++j) J.col(j) = jac.apply(Vector::Unit(p.dim_x, j));
  return J;
}

/// Exact minimizer of |c + J s|^2 / 2 + (mu/2)|s|^2 by a dense Cholesky solve.
inline Vector dense_damped_step(const Matrix& J, const Vector& c, double mu) {
  const Matrix normal = J.transpose() * J + mu * Matrix::Identity(J.cols(), J.cols());
  return normal.llt().solve(-J.transpose() * c);
}

inline Vector random_vector(Eigen::Index n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

inline Vector uniform_vector(Eigen::Index n, Rng& rng, double lo, double hi) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

}  // namespace aglm::testing
