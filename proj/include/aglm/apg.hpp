#pragma once

#include <optional>

#include "aglm/core.hpp"

namespace aglm {

/// Tunables of the accelerated proximal gradient subproblem solver.
struct ApgConfig {
  double theta = 0.5;        // certificate factor, 0 < theta < 1
  double alpha_bar = 2.0;    // eta growth on a failed curvature test, > 1
  double beta_bar = 0.95;    // eta shrink after an accepted step, in (0, 1)
  int check_interval = 1;    // evaluate the termination test every T iterations
  long max_inner_iters = 0;  // 0 selects the adaptive cap (see apg_solve)
  double eta_floor_factor = 1.0 + 1e-6;  // eta is kept >= eta_floor_factor * mu

  void validate() const;
};

/// Hard upper limit on inner iterations regardless of configuration.
inline constexpr long kMaxInnerItersHardCap = 100000;

struct MomentumStep {
  double b_next;
  double tau;
};

/// One evaluation of the estimate-sequence recurrence: b_{t+1} and the
/// extrapolation weight tau for the current (b_t, mu, eta). Requires eta > mu.
MomentumStep momentum_step(double b_t, double mu, double eta);

/// Curvature test for accepting eta:
///   model(x_next) <= model(y) + <grad model(y), x_next - y> + (eta/2) ||x_next - y||^2.
/// Charges 2 jvp + 1 vjp. The solver itself uses the cached-residual overload.
bool backtrack_condition(const LinearizedModel& model, const Vector& y, const Vector& x_next,
                         double eta, OracleLedger& ledger);

/// Same test with the linearized residual and gradient at y already available, and
/// jac_step = J (x_next - y). Quadratic losses use the curvature form of the test.
bool backtrack_condition(const LinearizedModel& model, const Vector& y, const Vector& res_y,
                         const Vector& grad_y, const Vector& x_next, const Vector& jac_step,
                         double eta);

struct ApgReport {
  long inner_iters = 0;      // accepted iterations
  long eta_increases = 0;    // failed curvature tests
  long eta_clamps = 0;       // times the eta floor was active
  double eta_final = 0.0;
  double eta_peak = 0.0;
  double residual_final = 0.0;  // left-hand side of the termination test
};

/// The inner solver ran out of iterations before certifying its output.
class SubproblemStall : public Error {
 public:
  SubproblemStall(const std::string& what, Vector best, double residual, ApgReport report)
      : Error(what), best_(std::move(best)), residual_(residual), report_(report) {}
  const Vector& best_iterate() const { return best_; }
  double residual() const { return residual_; }
  const ApgReport& report() const { return report_; }

 private:
  Vector best_;
  double residual_;
  ApgReport report_;
};

struct ApgResult {
  Vector x;
  ApgReport report;
};

/// Finds x with dist(-grad model(x), subdifferential of g at x) <= theta * mu * ||x - x_k||
/// using accelerated proximal gradient steps with eta backtracking.
///
/// eta starts at alpha_bar * mu unless `eta_init` is given. When
/// `max_inner_iters` is 0 the cap is 50 * (2 + sqrt(eta_peak / mu)) with
/// eta_peak the largest eta seen so far, bounded by kMaxInnerItersHardCap.
/// Throws SubproblemStall when the cap is reached.
ApgResult apg_solve(const LinearizedModel& model, const ApgConfig& config, OracleLedger& ledger,
                    std::optional<double> eta_init = std::nullopt);

/// Matrix-free conjugate gradient on (w J^T J + mu I) s = -w J^T c(x_k) for
/// g == 0 and h = (w/2)||.||^2. Stops once ||grad model(x)|| <= tol * mu * ||x - x_k||.
/// Throws UnsupportedRegularizer when the problem does not have that form.
ApgResult cg_solve(const LinearizedModel& model, OracleLedger& ledger, double tol,
                   long max_iters = 0);

}  // namespace aglm
