#include "aglm/core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace aglm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(const Vector& v, const char* what, const Vector& x) {
  if (!v.allFinite()) {
    throw NumericalFailure(std::string("non-finite ") + what, x);
  }
}

void require_finite(double v, const char* what, const Vector& x) {
  if (!std::isfinite(v)) {
    throw NumericalFailure(std::string("non-finite ") + what, x);
  }
}

}  // namespace

const char* oracle_name(Oracle kind) {
  switch (kind) {
    case Oracle::ResidualEval: return "residual_eval";
    case Oracle::Linearize: return "linearize";
    case Oracle::TransposeDerive: return "transpose_derive";
    case Oracle::JvpApply: return "jvp_apply";
    case Oracle::VjpApply: return "vjp_apply";
    case Oracle::LossEval: return "loss_eval";
    case Oracle::LossGrad: return "loss_grad";
    case Oracle::ProxApply: return "prox_apply";
  }
  return "unknown";
}

std::uint64_t OracleLedger::recompute_cost() const {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < kOracleKinds; ++i) total += kOracleWeights[i] * counts_[i];
  return total;
}

double ledger_cost(const OracleLedger& ledger) {
  return static_cast<double>(ledger.weighted_cost());
}

// --- losses ----------------------------------------------------------------

SquaredNormLoss::SquaredNormLoss(double weight) : weight_(weight) {
  if (!(weight > 0.0)) throw ParameterDomain("squared-norm loss weight must be positive");
}

double SquaredNormLoss::value(const Vector& y) const { return 0.5 * weight_ * y.squaredNorm(); }

Vector SquaredNormLoss::gradient(const Vector& y) const { return weight_ * y; }

double SquaredNormLoss::difference(const Vector& y1, const Vector& y0) const {
  // (w/2)(|y1|^2 - |y0|^2) = (w/2) <y1 - y0, y1 + y0>
  return 0.5 * weight_ * (y1 - y0).dot(y1 + y0);
}

// --- regularizers -----------------------------------------------------------

double Regularizer::subdiff_distance(const Vector&, const Vector&) const {
  throw UnsupportedRegularizer("closed-form subdifferential distance not available for " + name());
}

double ZeroRegularizer::subdiff_distance(const Vector&, const Vector& v) const { return v.norm(); }

BoxIndicator::BoxIndicator(double lower, double upper) : lower_(lower), upper_(upper) {
  if (!(lower <= upper)) throw ParameterDomain("box indicator requires lower <= upper");
}

double BoxIndicator::value(const Vector& x) const {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower_ && x[i] <= upper_)) return kInf;
  }
  return 0.0;
}

Vector BoxIndicator::prox(const Vector& x, double) const {
  return x.cwiseMax(lower_).cwiseMin(upper_);
}

double BoxIndicator::subdiff_distance(const Vector& x, const Vector& v) const {
  // Normal cone per coordinate: {0} inside, (-inf,0] at the lower face,
  // [0,inf) at the upper face, R when both faces coincide.
  double sq = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower_ && x[i] <= upper_)) return kInf;
    const bool at_lower = x[i] == lower_;
    const bool at_upper = x[i] == upper_;
    double d;
    if (at_lower && at_upper) {
      d = 0.0;
    } else if (at_lower) {
      d = std::max(v[i], 0.0);
    } else if (at_upper) {
      d = std::max(-v[i], 0.0);
    } else {
      d = v[i];
    }
    sq += d * d;
  }
  return std::sqrt(sq);
}

std::string BoxIndicator::name() const {
  std::ostringstream os;
  os << "box[" << lower_ << "," << upper_ << "]";
  return os.str();
}

std::shared_ptr<const BoxIndicator> make_nonnegative_orthant() {
  return std::make_shared<BoxIndicator>(0.0, kInf);
}

L1Norm::L1Norm(double lambda) : lambda_(lambda) {
  if (!(lambda >= 0.0)) throw ParameterDomain("l1 weight must be nonnegative");
}

double L1Norm::value(const Vector& x) const { return lambda_ * x.lpNorm<1>(); }

Vector L1Norm::prox(const Vector& x, double weight) const {
  const double t = lambda_ / weight;
  Vector z(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]) - t;
    z[i] = a > 0.0 ? std::copysign(a, x[i]) : 0.0;
  }
  return z;
}

double L1Norm::subdiff_distance(const Vector& x, const Vector& v) const {
  double sq = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double d;
    if (x[i] > 0.0) {
      d = v[i] - lambda_;
    } else if (x[i] < 0.0) {
      d = v[i] + lambda_;
    } else {
      d = std::max(std::abs(v[i]) - lambda_, 0.0);
    }
    sq += d * d;
  }
  return std::sqrt(sq);
}

EuclideanBallIndicator::EuclideanBallIndicator(double radius) : radius_(radius) {
  if (!(radius > 0.0)) throw ParameterDomain("ball radius must be positive");
}

double EuclideanBallIndicator::value(const Vector& x) const {
  return x.norm() <= radius_ ? 0.0 : kInf;
}

Vector EuclideanBallIndicator::prox(const Vector& x, double) const {
  const double n = x.norm();
  if (n <= radius_) return x;
  return x * (radius_ / n);
}

// --- evaluation -------------------------------------------------------------

PointEval evaluate_point(const CompositeProblem& problem, const Vector& x, OracleLedger& ledger) {
  PointEval out;
  out.x = x;
  out.g = problem.regularizer->value(x);
  if (std::isinf(out.g)) {
    out.objective = kInf;
    return out;
  }
  ledger.charge(Oracle::ResidualEval);
  out.residual = problem.residual(x);
  require_finite(out.residual, "residual", x);
  ledger.charge(Oracle::LossEval);
  const double h = problem.loss->value(out.residual);
  require_finite(h, "loss value", x);
  out.objective = out.g + h;
  return out;
}

double eval_objective(const CompositeProblem& problem, const Vector& x, OracleLedger& ledger) {
  return evaluate_point(problem, x, ledger).objective;
}

Vector grad_smooth_part(const CompositeProblem& problem, const Vector& x, OracleLedger& ledger) {
  ledger.charge(Oracle::ResidualEval);
  Vector c = problem.residual(x);
  require_finite(c, "residual", x);
  const LinearizedModel model = linearize(problem, x, 1.0, ledger, &c);
  return model.smooth_grad_at_base(ledger);
}

double stationarity(const CompositeProblem& problem, const Vector& x, const Vector& grad_h) {
  if (!problem.regularizer->separable()) {
    throw UnsupportedRegularizer("stationarity requires a separable regularizer, got " +
                                 problem.regularizer->name());
  }
  return problem.regularizer->subdiff_distance(x, -grad_h);
}

double prox_residual(const CompositeProblem& problem, const Vector& x, const Vector& grad_h,
                     double weight) {
  const Vector z = problem.regularizer->prox(x - grad_h / weight, weight);
  return weight * (x - z).norm();
}

const char* to_string(StationarityMeasure m) {
  return m == StationarityMeasure::Exact ? "exact" : "prox_residual";
}

double stationarity_or_surrogate(const CompositeProblem& problem, const Vector& x,
                                 const Vector& grad_h, double weight, StationarityMeasure* used) {
  if (problem.regularizer->separable()) {
    if (used) *used = StationarityMeasure::Exact;
    return stationarity(problem, x, grad_h);
  }
  if (used) *used = StationarityMeasure::ProxResidual;
  return prox_residual(problem, x, grad_h, weight);
}

// --- linearized model ---------------------------------------------------------

LinearizedModel::LinearizedModel(const CompositeProblem& problem, Vector base,
                                 Vector residual_at_base, JacobianOperator jac, double mu)
    : problem_(&problem),
      base_(std::move(base)),
      residual_base_(std::move(residual_at_base)),
      jac_(std::move(jac)),
      mu_(mu) {
  set_mu(mu);
}

void LinearizedModel::set_mu(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ParameterDomain("damping must be positive");
  mu_ = mu;
}

Vector LinearizedModel::linear_residual(const Vector& x, OracleLedger& ledger) const {
  ledger.charge(Oracle::JvpApply);
  Vector r = residual_base_ + jac_.apply(x - base_);
  require_finite(r, "Jacobian-vector product", x);
  return r;
}

double LinearizedModel::value_from(const Vector& x, const Vector& lin_res,
                                   OracleLedger& ledger) const {
  ledger.charge(Oracle::LossEval);
  return problem_->loss->value(lin_res) + 0.5 * mu_ * (x - base_).squaredNorm();
}

Vector LinearizedModel::grad_from(const Vector& x, const Vector& lin_res,
                                  OracleLedger& ledger) const {
  ledger.charge(Oracle::LossGrad);
  ledger.charge(Oracle::VjpApply);
  Vector g = jac_.apply_transpose(problem_->loss->gradient(lin_res)) + mu_ * (x - base_);
  require_finite(g, "vector-Jacobian product", x);
  return g;
}

double LinearizedModel::value_difference(const Vector& x1, const Vector& r1, const Vector& x0,
                                         const Vector& r0) const {
  // (mu/2)(|x1 - b|^2 - |x0 - b|^2) = (mu/2) <x1 - x0, x1 + x0 - 2b>
  const double damping = 0.5 * mu_ * (x1 - x0).dot(x1 + x0 - 2.0 * base_);
  return problem_->loss->difference(r1, r0) + damping;
}

double LinearizedModel::model_value(const Vector& x, OracleLedger& ledger) const {
  return value_from(x, linear_residual(x, ledger), ledger);
}

Vector LinearizedModel::model_grad(const Vector& x, OracleLedger& ledger) const {
  return grad_from(x, linear_residual(x, ledger), ledger);
}

Vector LinearizedModel::smooth_grad_at_base(OracleLedger& ledger) const {
  ledger.charge(Oracle::LossGrad);
  ledger.charge(Oracle::VjpApply);
  Vector g = jac_.apply_transpose(problem_->loss->gradient(residual_base_));
  require_finite(g, "vector-Jacobian product", base_);
  return g;
}

LinearizedModel linearize(const CompositeProblem& problem, const Vector& x_k, double mu,
                          OracleLedger& ledger, const Vector* cached_residual) {
  Vector c;
  if (cached_residual != nullptr && cached_residual->size() == problem.dim_r) {
    c = *cached_residual;
  } else {
    ledger.charge(Oracle::ResidualEval);
    c = problem.residual(x_k);
    require_finite(c, "residual", x_k);
  }
  ledger.charge(Oracle::Linearize);
  ledger.charge(Oracle::TransposeDerive);
  return LinearizedModel(problem, x_k, std::move(c), problem.jvp_at(x_k), mu);
}

}  // namespace aglm
