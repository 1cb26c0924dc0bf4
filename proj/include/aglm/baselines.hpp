#pragma once

#include "aglm/apg.hpp"
#include "aglm/core.hpp"
#include "aglm/trace.hpp"

namespace aglm {

/// Proximal gradient with monotone step-size backtracking.
struct PgConfig {
  double l_min = 1.0;  // initial curvature estimate L
  double alpha = 2.0;  // L growth on a failed test, > 1
  StopRule stop;

  void validate() const;
};

/// Levenberg-Marquardt with a constant damping parameter and accelerated inner solves.
struct DpConfig {
  double mu_fixed = 1.0;
  double L = 1.0;  // stand-in for L_h sigma^2; the inner eta starts at mu_fixed + L
  double theta = 0.5;
  StopRule stop;
  ApgConfig apg;   // apg.theta is overridden by theta

  void validate() const;
};

/// x_{k+1} = prox_L(x_k - grad H(x_k) / L), accepted when
/// H(x_{k+1}) <= H(x_k) + <grad H(x_k), x_{k+1} - x_k> + (L/2)||x_{k+1} - x_k||^2,
/// otherwise L <- alpha L and retry. L never decreases. The trace's rho column holds L.
RunTrace pg_solve(const CompositeProblem& problem, const Vector& x0, const PgConfig& config);

/// Outer loop without a decrease test: x_{k+1} is the certified APG solution of the
/// linearized model damped by mu_fixed.
RunTrace dp_solve(const CompositeProblem& problem, const Vector& x0, const DpConfig& config);

}  // namespace aglm
