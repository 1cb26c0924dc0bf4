#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace aglm {

using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class for all solver-library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A residual or loss evaluation produced a non-finite value.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, Vector point)
      : Error(what), point_(std::move(point)) {}
  const Vector& point() const { return point_; }

 private:
  Vector point_;
};

/// The regularizer does not support the requested closed-form operation.
class UnsupportedRegularizer : public Error {
 public:
  using Error::Error;
};

/// A parameter is outside the domain an operation accepts.
class ParameterDomain : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Oracle accounting
// ---------------------------------------------------------------------------

enum class Oracle : std::size_t {
  ResidualEval = 0,  // x -> c(x)
  Linearize,         // build u -> J(x) u at a base point
  TransposeDerive,   // derive v -> J(x)^T v from the linearization
  JvpApply,          // u -> J u
  VjpApply,          // v -> J^T v
  LossEval,          // y -> h(y)
  LossGrad,          // y -> grad h(y)
  ProxApply,         // prox of g
};

inline constexpr std::size_t kOracleKinds = 8;

/// Oracle weights used for the weighted cost, indexed by Oracle.
inline constexpr std::array<std::uint64_t, kOracleKinds> kOracleWeights = {1, 2, 0, 1, 1, 0, 0, 0};

const char* oracle_name(Oracle kind);

/// Per-oracle call counts for one run plus the weighted cost, maintained
/// incrementally. A ledger belongs to a single run and is not thread-safe.
class OracleLedger {
 public:
  void charge(Oracle kind, std::uint64_t times = 1) {
    counts_[static_cast<std::size_t>(kind)] += times;
    weighted_ += kOracleWeights[static_cast<std::size_t>(kind)] * times;
  }

  std::uint64_t count(Oracle kind) const { return counts_[static_cast<std::size_t>(kind)]; }
  const std::array<std::uint64_t, kOracleKinds>& counts() const { return counts_; }

  /// Incrementally maintained weighted cost.
  std::uint64_t weighted_cost() const { return weighted_; }

  /// Weighted cost recomputed from the counts.
  std::uint64_t recompute_cost() const;

 private:
  std::array<std::uint64_t, kOracleKinds> counts_{};
  std::uint64_t weighted_ = 0;
};

/// Weighted oracle cost of a ledger.
double ledger_cost(const OracleLedger& ledger);

// ---------------------------------------------------------------------------
// Problem building blocks
// ---------------------------------------------------------------------------

/// Smooth convex outer function h.
class OuterLoss {
 public:
  virtual ~OuterLoss() = default;
  virtual double value(const Vector& y) const = 0;
  virtual Vector gradient(const Vector& y) const = 0;
  virtual double infimum() const = 0;
  virtual std::optional<double> lipschitz() const { return std::nullopt; }

  /// h(y1) - h(y0). Implementations may override with a cancellation-free form.
  virtual double difference(const Vector& y1, const Vector& y0) const {
    return value(y1) - value(y0);
  }

  /// For h(y) = (w/2)||y||^2 returns w; otherwise nullopt.
  virtual std::optional<double> quadratic_weight() const { return std::nullopt; }
};

/// h(y) = (w/2)||y||^2. w = 1 is the half squared norm, w = 2 is ||y||^2.
class SquaredNormLoss final : public OuterLoss {
 public:
  explicit SquaredNormLoss(double weight = 1.0);
  double value(const Vector& y) const override;
  Vector gradient(const Vector& y) const override;
  double infimum() const override { return 0.0; }
  std::optional<double> lipschitz() const override { return weight_; }
  double difference(const Vector& y1, const Vector& y0) const override;
  std::optional<double> quadratic_weight() const override { return weight_; }

 private:
  double weight_;
};

/// Closed proper convex g, accessed through its value and proximal map.
class Regularizer {
 public:
  virtual ~Regularizer() = default;

  /// g(x); +infinity outside the domain.
  virtual double value(const Vector& x) const = 0;

  /// argmin_z { g(z) + (weight/2) ||z - x||^2 }.
  virtual Vector prox(const Vector& x, double weight) const = 0;

  virtual double infimum() const = 0;

  /// True when dist(v, subdifferential of g at x) has a coordinatewise closed form.
  virtual bool separable() const = 0;

  /// dist(v, subdifferential of g at x). Throws UnsupportedRegularizer when not separable.
  virtual double subdiff_distance(const Vector& x, const Vector& v) const;

  /// True when g vanishes identically.
  virtual bool is_zero() const { return false; }

  virtual std::string name() const = 0;
};

class ZeroRegularizer final : public Regularizer {
 public:
  double value(const Vector&) const override { return 0.0; }
  Vector prox(const Vector& x, double) const override { return x; }
  double infimum() const override { return 0.0; }
  bool separable() const override { return true; }
  double subdiff_distance(const Vector& x, const Vector& v) const override;
  bool is_zero() const override { return true; }
  std::string name() const override { return "zero"; }
};

/// Indicator of the box [lower, upper] (componentwise, same bounds for all coordinates).
/// lower = 0, upper = +inf gives the nonnegative orthant.
class BoxIndicator final : public Regularizer {
 public:
  BoxIndicator(double lower, double upper);
  double value(const Vector& x) const override;
  Vector prox(const Vector& x, double weight) const override;
  double infimum() const override { return 0.0; }
  bool separable() const override { return true; }
  double subdiff_distance(const Vector& x, const Vector& v) const override;
  std::string name() const override;

  double lower() const { return lower_; }
  double upper() const { return upper_; }

 private:
  double lower_;
  double upper_;
};

std::shared_ptr<const BoxIndicator> make_nonnegative_orthant();

/// g(x) = lambda ||x||_1.
class L1Norm final : public Regularizer {
 public:
  explicit L1Norm(double lambda);
  double value(const Vector& x) const override;
  Vector prox(const Vector& x, double weight) const override;
  double infimum() const override { return 0.0; }
  bool separable() const override { return true; }
  double subdiff_distance(const Vector& x, const Vector& v) const override;
  std::string name() const override { return "l1"; }

 private:
  double lambda_;
};

/// Indicator of the Euclidean ball of the given radius centred at the origin.
/// Not coordinatewise separable; stationarity falls back to the prox residual.
class EuclideanBallIndicator final : public Regularizer {
 public:
  explicit EuclideanBallIndicator(double radius);
  double value(const Vector& x) const override;
  Vector prox(const Vector& x, double weight) const override;
  double infimum() const override { return 0.0; }
  bool separable() const override { return false; }
  std::string name() const override { return "ball"; }

 private:
  double radius_;
};

/// The pair of linear maps u -> J u and v -> J^T v at a fixed base point.
struct JacobianOperator {
  std::function<Vector(const Vector&)> apply;            // u in R^d -> J u in R^n
  std::function<Vector(const Vector&)> apply_transpose;  // v in R^n -> J^T v in R^d
};

/// One instance of min_x g(x) + h(c(x)), accessed only through oracles.
struct CompositeProblem {
  std::string name;
  Eigen::Index dim_x = 0;
  Eigen::Index dim_r = 0;
  std::function<Vector(const Vector&)> residual;
  std::function<JacobianOperator(const Vector&)> jvp_at;
  std::shared_ptr<const OuterLoss> loss;
  std::shared_ptr<const Regularizer> regularizer;
  /// Lipschitz constant of the Jacobian, when known analytically.
  std::optional<double> lipschitz_jac;
  /// Bound on the Jacobian operator norm, when known.
  std::optional<double> jacobian_norm;

  double lower_bound() const { return regularizer->infimum() + loss->infimum(); }
};

// ---------------------------------------------------------------------------
// Evaluation helpers
// ---------------------------------------------------------------------------

/// c(x) and F(x) at one point.
struct PointEval {
  Vector x;
  Vector residual;  // empty when x is outside dom g
  double g = 0.0;
  double objective = 0.0;
};

/// F(x) with the residual kept for reuse. Returns +inf (and no residual) outside dom g.
PointEval evaluate_point(const CompositeProblem& problem, const Vector& x, OracleLedger& ledger);

/// F(x) = g(x) + h(c(x)).
double eval_objective(const CompositeProblem& problem, const Vector& x, OracleLedger& ledger);

/// grad H(x) = J(x)^T grad h(c(x)).
Vector grad_smooth_part(const CompositeProblem& problem, const Vector& x, OracleLedger& ledger);

/// omega(x) = dist(-grad H(x), subdifferential of g at x). Requires a separable g.
double stationarity(const CompositeProblem& problem, const Vector& x, const Vector& grad_h);

/// weight * ||x - prox(x - grad_h / weight, weight)||, the prox-gradient residual.
double prox_residual(const CompositeProblem& problem, const Vector& x, const Vector& grad_h,
                     double weight);

enum class StationarityMeasure { Exact, ProxResidual };

const char* to_string(StationarityMeasure m);

/// omega(x) when g is separable; the prox residual with the given weight otherwise.
double stationarity_or_surrogate(const CompositeProblem& problem, const Vector& x,
                                 const Vector& grad_h, double weight,
                                 StationarityMeasure* used = nullptr);

// ---------------------------------------------------------------------------
// Linearization
// ---------------------------------------------------------------------------

/// Frozen linearization at a base point x_k together with a damping weight mu:
///
///   model(x) = h(c(x_k) + J (x - x_k)) + (mu/2) ||x - x_k||^2.
///
/// The Jacobian operator and c(x_k) are mu-independent, so the damping may be
/// changed without re-linearizing.
class LinearizedModel {
 public:
  LinearizedModel(const CompositeProblem& problem, Vector base, Vector residual_at_base,
                  JacobianOperator jac, double mu);

  const CompositeProblem& problem() const { return *problem_; }
  const Vector& base_point() const { return base_; }
  const Vector& residual_at_base() const { return residual_base_; }
  const JacobianOperator& jacobian() const { return jac_; }
  double mu() const { return mu_; }
  void set_mu(double mu);

  /// c(x_k) + J (x - x_k). 1 jvp.
  Vector linear_residual(const Vector& x, OracleLedger& ledger) const;

  /// Model value given the linearized residual at x. 1 loss_eval.
  double value_from(const Vector& x, const Vector& lin_res, OracleLedger& ledger) const;

  /// Model gradient given the linearized residual at x. 1 vjp + 1 loss_grad.
  Vector grad_from(const Vector& x, const Vector& lin_res, OracleLedger& ledger) const;

  /// model(x1) - model(x0) from linearized residuals, without cancellation for quadratic h.
  double value_difference(const Vector& x1, const Vector& r1, const Vector& x0,
                          const Vector& r0) const;

  double model_value(const Vector& x, OracleLedger& ledger) const;
  Vector model_grad(const Vector& x, OracleLedger& ledger) const;

  /// grad H(x_k) = J^T grad h(c(x_k)). 1 vjp + 1 loss_grad.
  Vector smooth_grad_at_base(OracleLedger& ledger) const;

 private:
  const CompositeProblem* problem_;
  Vector base_;
  Vector residual_base_;
  JacobianOperator jac_;
  double mu_;
};

/// Linearize at x_k, reusing c(x_k) when supplied.
LinearizedModel linearize(const CompositeProblem& problem, const Vector& x_k, double mu,
                          OracleLedger& ledger, const Vector* cached_residual = nullptr);

/// The model keeps a pointer to the problem, so temporaries are rejected.
LinearizedModel linearize(CompositeProblem&& problem, const Vector& x_k, double mu,
                          OracleLedger& ledger, const Vector* cached_residual = nullptr) = delete;

}  // namespace aglm
