#include "aglm/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "aglm/problems.hpp"
#include "aglm/rng.hpp"

namespace aglm {

namespace {

Vector random_vector(Eigen::Index n, Rng& rng) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

std::string format(const char* label, double value, double tol) {
  std::ostringstream os;
  os.precision(3);
  os << label << " " << std::scientific << value << " (tol " << tol << ")";
  return os.str();
}

CheckResult require_iterates(const char* name, const RunTrace& trace) {
  CheckResult r{name, false, ""};
  if (trace.iterates.size() != trace.rows.size()) {
    r.detail = "trace was recorded without iterates";
  }
  return r;
}

}  // namespace

CheckResult check_adjoint(const CompositeProblem& problem, const std::vector<Vector>& points,
                          std::uint64_t seed, double tol) {
  Rng rng(seed);
  double worst = 0.0;
  for (const Vector& x : points) {
    const Vector u = random_vector(problem.dim_x, rng);
    const Vector v = random_vector(problem.dim_r, rng);
    worst = std::max(worst, adjoint_error(problem, x, u, v));
  }
  return {"adjoint", worst <= tol, format("max error", worst, tol)};
}

CheckResult check_jvp(const CompositeProblem& problem, const std::vector<Vector>& points,
                      std::uint64_t seed, double tol) {
  Rng rng(seed);
  double worst = 0.0;
  for (const Vector& x : points) {
    Vector u = random_vector(problem.dim_x, rng);
    u /= u.norm();
    worst = std::max(worst, jvp_error(problem, x, u));
  }
  return {"jvp_finite_difference", worst <= tol, format("max relative error", worst, tol)};
}

CheckResult check_prox_optimality(const CompositeProblem& problem, const Vector& center,
                                  std::uint64_t seed, int samples, double tol) {
  const Regularizer& g = *problem.regularizer;
  if (!g.separable()) return {"prox_optimality", true, "skipped: non-separable regularizer"};
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Vector x = center + 2.0 * random_vector(center.size(), rng);
    const double weight = std::pow(10.0, rng.uniform(-3.0, 3.0));
    const Vector z = g.prox(x, weight);
    worst = std::max(worst, g.subdiff_distance(z, weight * (x - z)) / (1.0 + weight * (x - z).norm()));
  }
  return {"prox_optimality", worst <= tol, format("max relative distance", worst, tol)};
}

CheckResult check_descent(const RunTrace& trace, double theta) {
  CheckResult r = require_iterates("descent", trace);
  if (!r.detail.empty()) return r;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < trace.rows.size(); ++k) {
    const double step = (trace.iterates[k + 1] - trace.iterates[k]).norm();
    const double f_old = trace.rows[k].objective;
    const double bound = f_old - 0.5 * (1.0 - theta) * trace.rows[k + 1].mu * step * step;
    const double slack = (bound - trace.rows[k + 1].objective) / (1.0 + std::abs(f_old));
    worst = std::min(worst, slack);
  }
  r.passed = !(worst < -1e-12);
  r.detail = trace.rows.size() < 2 ? "no accepted steps" : format("min relative slack", worst, -1e-12);
  return r;
}

CheckResult check_membership(const CompositeProblem& problem, const RunTrace& trace,
                             double theta) {
  CheckResult r = require_iterates("membership", trace);
  if (!r.detail.empty()) return r;
  if (!problem.regularizer->separable()) {
    return {"membership", true, "skipped: non-separable regularizer"};
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < trace.rows.size(); ++k) {
    OracleLedger scratch;
    const double mu = trace.rows[k + 1].mu;
    const LinearizedModel model = linearize(problem, trace.iterates[k], mu, scratch);
    const Vector& x_next = trace.iterates[k + 1];
    const Vector grad = model.model_grad(x_next, scratch);
    const double omega_bar = problem.regularizer->subdiff_distance(x_next, -grad);
    const double bound = theta * mu * (x_next - trace.iterates[k]).norm();
    worst = std::max(worst, omega_bar - bound);
  }
  r.passed = !(worst > 1e-10);
  r.detail = trace.rows.size() < 2 ? "no accepted steps" : format("max excess", worst, 1e-10);
  return r;
}

CheckResult check_mu_bracketing(const RunTrace& trace, double rho_min) {
  if (trace.rows.size() < 2) return {"mu_bracketing", true, "no accepted steps"};
  const double rho_final = trace.rows.back().rho;
  bool ok = true;
  for (std::size_t k = 0; k + 1 < trace.rows.size(); ++k) {
    const double root = std::sqrt(trace.rows[k].delta);
    const double mu = trace.rows[k + 1].mu;
    const double tol = 1e-12 * mu;
    if (mu < rho_min * root - tol || mu > rho_final * root + tol) ok = false;
  }
  std::ostringstream os;
  os << "rho_min " << rho_min << ", rho_final " << rho_final;
  return {"mu_bracketing", ok, os.str()};
}

CheckResult check_ledger(const RunTrace& trace) {
  bool ok = trace.ledger.recompute_cost() == trace.ledger.weighted_cost();
  for (std::size_t k = 1; k < trace.rows.size(); ++k) {
    if (trace.rows[k].oracle_cost < trace.rows[k - 1].oracle_cost) ok = false;
  }
  // A row cannot report more cost than the ledger has charged in total.
  if (!trace.rows.empty() &&
      trace.rows.back().oracle_cost > static_cast<double>(trace.ledger.weighted_cost())) {
    ok = false;
  }
  std::ostringstream os;
  os << "weighted cost " << trace.ledger.weighted_cost() << ", recomputed "
     << trace.ledger.recompute_cost();
  return {"ledger", ok, os.str()};
}

CheckResult check_monotone(const RunTrace& trace) {
  bool ok = true;
  for (std::size_t k = 1; k < trace.rows.size(); ++k) {
    if (trace.rows[k].objective > trace.rows[k - 1].objective) ok = false;
    if (trace.rows[k].delta > trace.rows[k - 1].delta) ok = false;
  }
  return {"monotone_objective", ok, std::to_string(trace.rows.size()) + " rows"};
}

}  // namespace aglm
