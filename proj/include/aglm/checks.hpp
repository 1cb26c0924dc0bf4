#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aglm/core.hpp"
#include "aglm/trace.hpp"

namespace aglm {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Worst adjoint and finite-difference JVP errors over `points`, one random
/// direction pair per point.
CheckResult check_adjoint(const CompositeProblem& problem, const std::vector<Vector>& points,
                          std::uint64_t seed, double tol = 1e-10);
CheckResult check_jvp(const CompositeProblem& problem, const std::vector<Vector>& points,
                      std::uint64_t seed, double tol = 1e-5);

/// dist(s (x - z), subdifferential of g at z) for z = prox(x, s) at random (x, s).
CheckResult check_prox_optimality(const CompositeProblem& problem, const Vector& center,
                                  std::uint64_t seed, int samples = 20, double tol = 1e-10);

/// The remaining checks read an lm_solve trace recorded with iterates.

/// F(x_{k+1}) <= F(x_k) - ((1-theta)/2) mu_k ||x_{k+1} - x_k||^2, slack -1e-12 (1 + |F(x_k)|).
CheckResult check_descent(const RunTrace& trace, double theta);

/// Exact dist(-grad model(x_{k+1}), subdifferential of g) <= theta mu_k ||x_{k+1} - x_k|| + 1e-10
/// on a fresh linearization at x_k. Requires a separable g.
CheckResult check_membership(const CompositeProblem& problem, const RunTrace& trace, double theta);

/// rho_min sqrt(delta_k) <= mu_k <= rho_final sqrt(delta_k), with relative slack 1e-12.
CheckResult check_mu_bracketing(const RunTrace& trace, double rho_min);

/// Ledger recomputation matches the incremental cost; cost column nondecreasing.
CheckResult check_ledger(const RunTrace& trace);

/// F and delta columns nonincreasing.
CheckResult check_monotone(const RunTrace& trace);

}  // namespace aglm
