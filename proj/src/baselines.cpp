#include "aglm/baselines.hpp"

#include <cmath>
#include <limits>

namespace aglm {

namespace {

// Shared stopping checks for the row just pushed. Returns true when the run ends.
bool should_stop(RunTrace& trace, const StopRule& stop, const TraceRow& row, long k,
                 const OracleLedger& ledger) {
  if (row.omega <= stop.epsilon) {
    trace.status = RunStatus::Stationary;
  } else if (stop.objective_target && row.objective <= *stop.objective_target) {
    trace.status = RunStatus::TargetReached;
  } else if (ledger_cost(ledger) > stop.budget) {
    trace.status = RunStatus::BudgetExhausted;
  } else if (k >= stop.max_outer_iters) {
    trace.status = RunStatus::MaxIters;
  } else {
    return false;
  }
  return true;
}

}  // namespace

void PgConfig::validate() const {
  if (!(l_min > 0.0)) throw ParameterDomain("pg: L_min must be positive");
  if (!(alpha > 1.0)) throw ParameterDomain("pg: alpha must exceed 1");
  if (stop.max_outer_iters < 0) throw ParameterDomain("pg: max_iters must be >= 0");
}

void DpConfig::validate() const {
  if (!(mu_fixed > 0.0)) throw ParameterDomain("dp: mu must be positive");
  if (!(L > 0.0)) throw ParameterDomain("dp: L must be positive");
  if (!(theta > 0.0 && theta < 1.0)) throw ParameterDomain("dp: theta must lie in (0,1)");
  if (stop.max_outer_iters < 0) throw ParameterDomain("dp: max_iters must be >= 0");
  apg.validate();
}

RunTrace pg_solve(const CompositeProblem& problem, const Vector& x0, const PgConfig& config) {
  config.validate();
  const Stopwatch clock;
  RunTrace trace;
  OracleLedger& ledger = trace.ledger;
  const StopRule& stop = config.stop;
  const double lower = problem.lower_bound();

  PointEval current = evaluate_point(problem, x0, ledger);
  if (!std::isfinite(current.objective)) throw ParameterDomain("pg: x0 is outside dom g");

  double L = config.l_min;
  TraceRow pending;
  pending.rho = L;

  for (long k = 0;; ++k) {
    pending.k = k;
    pending.objective = current.objective;
    pending.delta = std::max(current.objective - lower, 0.0);
    pending.oracle_cost = ledger_cost(ledger);

    const LinearizedModel lin = linearize(problem, current.x, 1.0, ledger, &current.residual);
    const Vector grad = lin.smooth_grad_at_base(ledger);
    pending.omega = stationarity_or_surrogate(problem, current.x, grad, L, &trace.omega_measure);
    pending.wall_seconds = clock.seconds();
    trace.rows.push_back(pending);
    if (stop.record_iterates) trace.iterates.push_back(current.x);
    trace.final_x = current.x;
    if (should_stop(trace, stop, pending, k, ledger)) break;

    long backtracks = 0;
    PointEval trial;
    for (;;) {
      ledger.charge(Oracle::ProxApply);
      const Vector x_new = problem.regularizer->prox(current.x - grad / L, L);
      const Vector step = x_new - current.x;
      bool accepted = false;
      try {
        trial = evaluate_point(problem, x_new, ledger);
        if (std::isfinite(trial.objective)) {
          const double dh = problem.loss->difference(trial.residual, current.residual);
          accepted = dh <= grad.dot(step) + 0.5 * L * step.squaredNorm();
        }
      } catch (const NumericalFailure&) {
        accepted = false;
      }
      if (accepted) break;
      L *= config.alpha;
      ++backtracks;
      if (ledger_cost(ledger) > stop.budget) {
        trace.status = RunStatus::BudgetExhausted;
        return trace;
      }
    }

    current = std::move(trial);
    pending = TraceRow{};
    pending.rho = L;
    pending.mu = L;
    pending.inner_iters = 1;
    pending.backtracks = backtracks;
  }
  return trace;
}

RunTrace dp_solve(const CompositeProblem& problem, const Vector& x0, const DpConfig& config) {
  config.validate();
  const Stopwatch clock;
  RunTrace trace;
  OracleLedger& ledger = trace.ledger;
  const StopRule& stop = config.stop;
  const double lower = problem.lower_bound();

  ApgConfig apg = config.apg;
  apg.theta = config.theta;

  PointEval current = evaluate_point(problem, x0, ledger);
  if (!std::isfinite(current.objective)) throw ParameterDomain("dp: x0 is outside dom g");

  const double eta0 = config.mu_fixed + config.L;
  double omega_weight = eta0;
  TraceRow pending;

  for (long k = 0;; ++k) {
    pending.k = k;
    pending.objective = current.objective;
    pending.delta = std::max(current.objective - lower, 0.0);
    pending.oracle_cost = ledger_cost(ledger);

    LinearizedModel model =
        linearize(problem, current.x, config.mu_fixed, ledger, &current.residual);
    const Vector grad_h = model.smooth_grad_at_base(ledger);
    pending.omega =
        stationarity_or_surrogate(problem, current.x, grad_h, omega_weight, &trace.omega_measure);
    pending.wall_seconds = clock.seconds();
    trace.rows.push_back(pending);
    if (stop.record_iterates) trace.iterates.push_back(current.x);
    trace.final_x = current.x;
    if (should_stop(trace, stop, pending, k, ledger)) break;

    ApgResult sub;
    try {
      sub = apg_solve(model, apg, ledger, eta0);
    } catch (const SubproblemStall& stall) {
      trace.status = RunStatus::SubproblemStall;
      trace.message = stall.what();
      return trace;
    }
    trace.eta_clamps += sub.report.eta_clamps;
    omega_weight = sub.report.eta_final;
    current = evaluate_point(problem, sub.x, ledger);

    pending = TraceRow{};
    pending.mu = config.mu_fixed;
    pending.inner_iters = sub.report.inner_iters;
  }
  return trace;
}

}  // namespace aglm
