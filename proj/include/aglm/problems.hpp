#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "aglm/core.hpp"

namespace aglm {

using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Bundled instances
// ---------------------------------------------------------------------------

/// sum_{i<d} (x_i - 1)^2 + 100 (x_{i+1} - x_i^2)^2 written as (1/2)||c(x)||^2 with
/// c_{2i-1} = sqrt(2)(x_i - 1), c_{2i} = 10 sqrt(2)(x_{i+1} - x_i^2). Requires d >= 2.
CompositeProblem make_rosenbrock(Eigen::Index d);

/// min (x^2 - 2)^2 subject to |x| <= 1: g = indicator of [-1, 1], h(y) = y^2, c(x) = x^2 - 2.
CompositeProblem make_toy_interval();

/// c(x) = A x - b, h = (1/2)||.||^2, g = 0 or a box indicator. The Jacobian is constant,
/// so any positive number is a valid Lipschitz bound; `lipschitz_substitute` is stored.
/// The largest singular value of A is stored as the Jacobian norm.
CompositeProblem make_linear_ls(const Matrix& A, const Vector& b,
                                std::optional<std::pair<double, double>> box = std::nullopt,
                                double lipschitz_substitute = 1.0);

/// A random m x d matrix with the given singular values (size min(m, d)), built from
/// orthonormal factors of Gaussian matrices.
Matrix random_matrix_with_singular_values(Eigen::Index m, Eigen::Index d,
                                          const Vector& singular_values, std::uint64_t seed);

/// Largest singular value by power iteration on A^T A.
double largest_singular_value(const Matrix& A, int iterations = 500);

/// Observed entries of a partially known p x q matrix.
struct RatingTriple {
  Eigen::Index row;
  Eigen::Index col;
  double value;
};

struct NmfData {
  Eigen::Index p = 0, q = 0, rank = 0;
  double lambda = 0.0;
  Matrix planted_u;  // p x rank, nonnegative
  Matrix planted_v;  // q x rank, nonnegative
  std::vector<RatingTriple> observed;
};

/// Planted nonnegative factors with entries uniform on [0, 1), N distinct observed
/// entries drawn without replacement, each value <u_i, v_j> + noise * N(0, 1).
NmfData generate_nmf_data(Eigen::Index p, Eigen::Index q, Eigen::Index rank, double lambda,
                          Eigen::Index num_observed, std::uint64_t seed, double noise = 0.0);

/// (1/N) sum (<u_i, v_j> - s)^2 + lambda (||U||_F^2 + ||V||_F^2) subject to U, V >= 0,
/// with x = (vec U, vec V) stored row by row and the ridge folded into the residual.
CompositeProblem make_nmf(const NmfData& data);

CompositeProblem make_nmf(Eigen::Index p, Eigen::Index q, Eigen::Index rank, double lambda,
                          Eigen::Index num_observed, std::uint64_t seed, double noise = 0.0);

/// Stack planted or candidate factors into the variable layout used by make_nmf.
Vector nmf_pack(const Matrix& U, const Matrix& V);

/// Starting point with entries |N(0, 1e-3)| (variance 1e-3), reflected into the orthant.
Vector nmf_initial_point(Eigen::Index p, Eigen::Index q, Eigen::Index rank, std::uint64_t seed);

/// Test fixture: the same problem with a VJP that no longer matches the JVP.
CompositeProblem corrupt_vjp(const CompositeProblem& problem, double relative_error = 1e-3);

// ---------------------------------------------------------------------------
// Oracle self-checks
// ---------------------------------------------------------------------------

/// Central-difference step used by the checks: 1e-6 * (1 + ||x||_inf).
double finite_difference_step(const Vector& x);

/// |<J u, v> - <u, J^T v>| / (1 + ||u|| ||v||).
double adjoint_error(const CompositeProblem& problem, const Vector& x, const Vector& u,
                     const Vector& v);

/// ||fd(u) - J u|| / max(1, ||J u||) with fd the central difference of c along u.
double jvp_error(const CompositeProblem& problem, const Vector& x, const Vector& u);

/// Max of jvp_error and adjoint_error over the given directions. Each direction u is
/// paired with a residual-space probe derived from it deterministically.
double finite_diff_check(const CompositeProblem& problem, const Vector& x,
                         const std::vector<Vector>& directions);

// ---------------------------------------------------------------------------
// Named problem specifications
// ---------------------------------------------------------------------------

enum class ProblemKind { Rosenbrock2, RosenbrockNd, NmfSynthetic, ToyInterval, LinearLs };

const char* to_string(ProblemKind kind);
std::optional<ProblemKind> parse_problem_kind(const std::string& name);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Rosenbrock2;
  Eigen::Index d = 2;  // rosenbrock_nd dimension; linear_ls columns
  // nmf_synthetic
  Eigen::Index p = 20, q = 30, rank = 3, num_observed = 200;
  double lambda = 0.0;
  double noise = 0.01;
  // linear_ls
  Eigen::Index m = 10;
  double sigma_max = 10.0;
  std::optional<std::pair<double, double>> box;
  std::optional<Matrix> A;
  std::optional<Vector> b;
  std::uint64_t seed = 0;
  bool corrupt_vjp = false;
  std::optional<Vector> x0;  // overrides the default starting point
};

struct BuiltProblem {
  CompositeProblem problem;
  Vector x0;
};

/// Instance plus its documented default starting point.
BuiltProblem build_problem(const ProblemSpec& spec);

}  // namespace aglm
