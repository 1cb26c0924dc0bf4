#include "aglm/apg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aglm {

namespace {

// Bound on consecutive eta increases within one iteration; reaching it means
// the model curvature is not finite along the step.
constexpr int kMaxConsecutiveIncreases = 200;

long adaptive_cap(const ApgConfig& config, double eta_peak, double mu) {
  if (config.max_inner_iters > 0) return std::min(config.max_inner_iters, kMaxInnerItersHardCap);
  const double cap = std::ceil(50.0 * (2.0 + std::sqrt(eta_peak / mu)));
  return cap >= static_cast<double>(kMaxInnerItersHardCap) ? kMaxInnerItersHardCap
                                                            : static_cast<long>(cap);
}

}  // namespace

void ApgConfig::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) throw ParameterDomain("apg: theta must lie in (0,1)");
  if (!(alpha_bar > 1.0)) throw ParameterDomain("apg: alpha_bar must exceed 1");
  if (!(beta_bar > 0.0 && beta_bar < 1.0)) throw ParameterDomain("apg: beta_bar must lie in (0,1)");
  if (check_interval < 1) throw ParameterDomain("apg: check interval must be >= 1");
  if (max_inner_iters < 0) throw ParameterDomain("apg: max_inner_iters must be >= 0");
  if (!(eta_floor_factor > 1.0)) throw ParameterDomain("apg: eta_floor_factor must exceed 1");
}

MomentumStep momentum_step(double b_t, double mu, double eta) {
  if (!(eta > mu)) throw ParameterDomain("momentum_step requires eta > mu");
  if (!(b_t >= 0.0)) throw ParameterDomain("momentum_step requires b_t >= 0");
  const double b_next =
      (1.0 + 2.0 * eta * b_t + std::sqrt(1.0 + 4.0 * eta * b_t * (1.0 + mu * b_t))) /
      (2.0 * (eta - mu));
  const double gap = b_next - b_t;
  const double tau =
      (gap * (1.0 + mu * b_t)) / (b_next * (1.0 + mu * b_t) + mu * b_t * gap);
  return {b_next, std::clamp(tau, 0.0, 1.0)};
}

bool backtrack_condition(const LinearizedModel& model, const Vector& y, const Vector& res_y,
                         const Vector& grad_y, const Vector& x_next, const Vector& jac_step,
                         double eta) {
  const Vector step = x_next - y;
  const double step_sq = step.squaredNorm();
  if (const auto w = model.problem().loss->quadratic_weight()) {
    // For quadratic h the test is exactly w |J s|^2 + mu |s|^2 <= eta |s|^2. Evaluating it
    // in this form avoids subtracting two O(1) model values once s is tiny, where rounding
    // would otherwise fail the test and drive eta up without bound.
    const double curvature = *w * jac_step.squaredNorm() + model.mu() * step_sq;
    return curvature <= eta * step_sq * (1.0 + 4.0 * std::numeric_limits<double>::epsilon());
  }
  const Vector res_next = res_y + jac_step;
  const double lhs = model.value_difference(x_next, res_next, y, res_y);
  const double rhs = grad_y.dot(step) + 0.5 * eta * step_sq;
  return lhs <= rhs;
}

bool backtrack_condition(const LinearizedModel& model, const Vector& y, const Vector& x_next,
                         double eta, OracleLedger& ledger) {
  const Vector res_y = model.linear_residual(y, ledger);
  const Vector grad_y = model.grad_from(y, res_y, ledger);
  ledger.charge(Oracle::JvpApply);
  const Vector jac_step = model.jacobian().apply(x_next - y);
  return backtrack_condition(model, y, res_y, grad_y, x_next, jac_step, eta);
}

ApgResult apg_solve(const LinearizedModel& model, const ApgConfig& config, OracleLedger& ledger,
                    std::optional<double> eta_init) {
  config.validate();
  const double mu = model.mu();
  const Regularizer& g = *model.problem().regularizer;
  const Vector& base = model.base_point();

  double eta = eta_init.value_or(config.alpha_bar * mu);
  if (!(eta > mu)) throw ParameterDomain("apg: initial eta must exceed mu");

  ApgReport report;
  report.eta_peak = eta;

  Vector x_bar = base;
  Vector z = base;
  double b = 0.0;

  for (long t = 0;; ++t) {
    if (t >= adaptive_cap(config, report.eta_peak, mu)) {
      report.eta_final = eta;
      throw SubproblemStall("apg: inner iteration cap reached", x_bar, report.residual_final,
                            report);
    }

    MomentumStep mom{};
    Vector y, res_y, grad_y, x_next, jac_step;
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxConsecutiveIncreases) {
        throw NumericalFailure("apg: curvature test failed repeatedly", x_bar);
      }
      mom = momentum_step(b, mu, eta);
      y = x_bar + mom.tau * (z - x_bar);
      res_y = model.linear_residual(y, ledger);
      grad_y = model.grad_from(y, res_y, ledger);
      ledger.charge(Oracle::ProxApply);
      x_next = g.prox(y - grad_y / eta, eta);
      // The residual at x_next is res_y + J (x_next - y), one jvp like a fresh evaluation.
      ledger.charge(Oracle::JvpApply);
      jac_step = model.jacobian().apply(x_next - y);
      if (!jac_step.allFinite()) throw NumericalFailure("apg: non-finite Jacobian-vector product", y);
      if (backtrack_condition(model, y, res_y, grad_y, x_next, jac_step, eta)) break;
      eta *= config.alpha_bar;
      ++report.eta_increases;
      report.eta_peak = std::max(report.eta_peak, eta);
    }
    report.inner_iters = t + 1;

    if ((t + 1) % config.check_interval == 0) {
      const Vector grad_next = model.grad_from(x_next, res_y + jac_step, ledger);
      report.residual_final = (grad_next - grad_y - eta * (x_next - y)).norm();
      const double bound = config.theta * mu * (x_next - base).norm();
      // Once the prox step falls below the rounding level of y the vector above
      // stops being a subgradient, so separable g is also held to the exact
      // distance (never larger in exact arithmetic), up to the rounding error
      // of eta * (x_next - y).
      const double rounding = 4.0 * std::numeric_limits<double>::epsilon() * eta * y.norm();
      const bool certified =
          report.residual_final <= bound &&
          (!g.separable() || g.subdiff_distance(x_next, -grad_next) <= bound + rounding);
      if (certified) {
        report.eta_final = eta;
        return {std::move(x_next), report};
      }
    }

    const double phi = (mom.b_next - b) / (1.0 + mu * mom.b_next);
    z = (1.0 - mu * phi) * z + (mu * phi) * y + (eta * phi) * (x_next - y);
    x_bar = std::move(x_next);
    b = mom.b_next;

    const double floor = config.eta_floor_factor * mu;
    eta *= config.beta_bar;
    if (eta < floor) {
      eta = floor;
      ++report.eta_clamps;
    }
  }
}

ApgResult cg_solve(const LinearizedModel& model, OracleLedger& ledger, double tol,
                   long max_iters) {
  const CompositeProblem& problem = model.problem();
  const auto weight = problem.loss->quadratic_weight();
  if (!problem.regularizer->is_zero() || !weight) {
    throw UnsupportedRegularizer("cg_solve requires g == 0 and a squared-norm loss");
  }
  if (!(tol > 0.0)) throw ParameterDomain("cg_solve: tol must be positive");
  if (max_iters <= 0) max_iters = std::max<long>(1000, 10 * problem.dim_x);

  const double mu = model.mu();
  const Vector& base = model.base_point();
  const JacobianOperator& jac = model.jacobian();
  auto normal_apply = [&](const Vector& p) {
    ledger.charge(Oracle::JvpApply);
    ledger.charge(Oracle::VjpApply);
    return Vector(*weight * jac.apply_transpose(jac.apply(p)) + mu * p);
  };

  ApgReport report;
  Vector s = Vector::Zero(base.size());
  Vector r = -model.model_grad(base, ledger);
  report.residual_final = r.norm();
  if (report.residual_final == 0.0) return {base, report};

  Vector p = r;
  double rr = r.squaredNorm();
  for (long it = 0; it < max_iters; ++it) {
    const Vector ap = normal_apply(p);
    const double step = rr / p.dot(ap);
    s += step * p;
    r -= step * ap;
    report.inner_iters = it + 1;

    if (r.norm() <= tol * mu * s.norm()) {
      // Confirm against the model gradient; the recursive residual drifts.
      const Vector x = base + s;
      r = -model.model_grad(x, ledger);
      report.residual_final = r.norm();
      if (report.residual_final <= tol * mu * s.norm()) return {x, report};
      p = r;
      rr = r.squaredNorm();
      continue;
    }
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  report.residual_final = r.norm();
  throw SubproblemStall("cg: iteration cap reached", base + s, report.residual_final, report);
}

}  // namespace aglm
