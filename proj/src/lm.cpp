#include "aglm/lm.hpp"

#include <cmath>
#include <limits>

namespace aglm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Trial points whose residual or loss overflows are rejected like any other
// point that fails the decrease test.
PointEval evaluate_trial(const CompositeProblem& problem, const Vector& x, OracleLedger& ledger) {
  try {
    return evaluate_point(problem, x, ledger);
  } catch (const NumericalFailure&) {
    PointEval bad;
    bad.x = x;
    bad.objective = std::numeric_limits<double>::infinity();
    return bad;
  }
}

}  // namespace

void LmConfig::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) throw ParameterDomain("lm: theta must lie in (0,1)");
  if (!(rho_min > 0.0)) throw ParameterDomain("lm: rho_min must be positive");
  if (!(alpha > 1.0)) throw ParameterDomain("lm: alpha must exceed 1");
  if (!(delta_floor >= 0.0)) throw ParameterDomain("lm: delta_floor must be nonnegative");
  if (!(stop.epsilon >= 0.0)) throw ParameterDomain("lm: epsilon must be nonnegative");
  if (stop.max_outer_iters < 0) throw ParameterDomain("lm: max_outer_iters must be >= 0");
  apg.validate();
}

double damping(double rho, double delta_k) {
  if (!(rho > 0.0)) throw ParameterDomain("damping: rho must be positive");
  if (!(delta_k > 0.0)) throw ParameterDomain("damping: delta must be positive");
  return rho * std::sqrt(delta_k);
}

bool accept_test(double f_new, double f_old, double theta, double mu, double step_norm) {
  return f_new <= f_old - 0.5 * (1.0 - theta) * mu * step_norm * step_norm;
}

double descent_rho_threshold(double lipschitz_jac, double lipschitz_loss, double theta) {
  return lipschitz_jac * std::sqrt(2.0 * lipschitz_loss) / (1.0 - theta);
}

long rho_backtrack_count(const RunTrace& trace) {
  long total = 0;
  for (const TraceRow& row : trace.rows) total += row.backtracks;
  return total;
}

RunTrace lm_solve(const CompositeProblem& problem, const Vector& x0, const LmConfig& config) {
  config.validate();
  const Stopwatch clock;
  RunTrace trace;
  OracleLedger& ledger = trace.ledger;
  const StopRule& stop = config.stop;

  ApgConfig apg = config.apg;
  apg.theta = config.theta;

  const double lower = problem.lower_bound();
  PointEval current = evaluate_point(problem, x0, ledger);
  if (!std::isfinite(current.objective)) throw ParameterDomain("lm: x0 is outside dom g");

  double rho = config.rho_min;
  double omega_weight = 1.0;  // prox-residual weight for non-separable g: last eta seen

  TraceRow pending;
  pending.k = 0;
  pending.rho = rho;

  for (long k = 0;; ++k) {
    const double delta = std::max(current.objective - lower, 0.0);
    pending.objective = current.objective;
    pending.delta = delta;
    pending.oracle_cost = ledger_cost(ledger);

    LinearizedModel model = linearize(problem, current.x, 1.0, ledger, &current.residual);
    const Vector grad_h = model.smooth_grad_at_base(ledger);
    pending.omega =
        stationarity_or_surrogate(problem, current.x, grad_h, omega_weight, &trace.omega_measure);
    pending.wall_seconds = clock.seconds();
    trace.rows.push_back(pending);
    if (stop.record_iterates) trace.iterates.push_back(current.x);
    trace.final_x = current.x;

    if (pending.omega <= stop.epsilon) {
      trace.status = RunStatus::Stationary;
      break;
    }
    if (delta <= config.delta_floor * (1.0 + std::abs(current.objective))) {
      trace.status = RunStatus::DeltaFloor;
      break;
    }
    if (stop.objective_target && current.objective <= *stop.objective_target) {
      trace.status = RunStatus::TargetReached;
      break;
    }
    if (ledger_cost(ledger) > stop.budget) {
      trace.status = RunStatus::BudgetExhausted;
      break;
    }
    if (k >= stop.max_outer_iters) {
      trace.status = RunStatus::MaxIters;
      break;
    }

    long inner = 0;
    long backtracks = 0;
    double mu = kNaN;
    PointEval trial;
    for (;;) {
      mu = damping(rho, delta);
      model.set_mu(mu);
      ApgResult sub;
      try {
        sub = config.subsolver == Subsolver::Cg ? cg_solve(model, ledger, config.theta)
                                                : apg_solve(model, apg, ledger);
      } catch (const SubproblemStall& stall) {
        trace.status = RunStatus::SubproblemStall;
        trace.message = stall.what();
        return trace;
      }
      inner += sub.report.inner_iters;
      trace.eta_clamps += sub.report.eta_clamps;
      if (sub.report.eta_final > 0.0) omega_weight = sub.report.eta_final;

      trial = evaluate_trial(problem, sub.x, ledger);
      if (accept_test(trial.objective, current.objective, config.theta, mu,
                      (sub.x - current.x).norm())) {
        break;
      }
      rho *= config.alpha;
      ++backtracks;
      if (ledger_cost(ledger) > stop.budget) {
        trace.status = RunStatus::BudgetExhausted;
        return trace;
      }
    }

    current = std::move(trial);
    pending = TraceRow{};
    pending.k = k + 1;
    pending.rho = rho;
    pending.mu = mu;
    pending.inner_iters = inner;
    pending.backtracks = backtracks;
  }
  return trace;
}

}  // namespace aglm
