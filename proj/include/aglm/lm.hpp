#pragma once

#include "aglm/apg.hpp"
#include "aglm/core.hpp"
#include "aglm/trace.hpp"

namespace aglm {

enum class Subsolver { Apg, Cg };

struct LmConfig {
  double theta = 0.5;      // descent / certificate factor, 0 < theta < 1
  double rho_min = 1e-2;   // initial rho
  double alpha = 2.0;      // rho growth on a rejected step, > 1
  double delta_floor = 1e-14;
  StopRule stop;
  ApgConfig apg;           // apg.theta is overridden by theta
  Subsolver subsolver = Subsolver::Apg;

  void validate() const;
};

/// mu = rho * sqrt(delta_k).
double damping(double rho, double delta_k);

/// F_new <= F_old - ((1 - theta)/2) * mu * step_norm^2.
bool accept_test(double f_new, double f_old, double theta, double mu, double step_norm);

/// Generalized Levenberg-Marquardt with damping mu = rho * sqrt(F(x_k) - (g* + h*)).
///
/// Each outer iteration computes a certified inexact minimizer of the damped
/// linearized model and accepts it only under sufficient decrease; otherwise rho
/// grows by alpha and the same iteration is retried on the cached linearization.
/// rho never decreases. Inner-solver stalls end the run with status SubproblemStall.
RunTrace lm_solve(const CompositeProblem& problem, const Vector& x0, const LmConfig& config);

/// Total number of rho increases over a run.
long rho_backtrack_count(const RunTrace& trace);

/// Smallest rho for which every certified subproblem solution is a descent step:
/// L_c sqrt(2 L_h) / (1 - theta).
double descent_rho_threshold(double lipschitz_jac, double lipschitz_loss, double theta);

}  // namespace aglm
