#include "aglm/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/QR>

#include "aglm/rng.hpp"

namespace aglm {

namespace {

const double kSqrt2 = std::sqrt(2.0);

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

Matrix orthonormal_factor(Eigen::Index n, Rng& rng) {
  const Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(n, n, rng));
  return qr.householderQ() * Matrix::Identity(n, n);
}

}  // namespace

// --- Rosenbrock ---------------------------------------------------------------

CompositeProblem make_rosenbrock(Eigen::Index d) {
  if (d < 2) throw ParameterDomain("rosenbrock needs d >= 2");
  const double a = kSqrt2;
  const double b = 10.0 * kSqrt2;

  CompositeProblem problem;
  problem.name = d == 2 ? "rosenbrock2" : "rosenbrock_nd";
  problem.dim_x = d;
  problem.dim_r = 2 * (d - 1);
  problem.residual = [d, a, b](const Vector& x) {
    Vector c(2 * (d - 1));
    for (Eigen::Index i = 0; i + 1 < d; ++i) {
      c[2 * i] = a * (x[i] - 1.0);
      c[2 * i + 1] = b * (x[i + 1] - x[i] * x[i]);
    }
    return c;
  };
  problem.jvp_at = [d, a, b](const Vector& x) {
    JacobianOperator op;
    op.apply = [d, a, b, x](const Vector& u) {
      Vector out(2 * (d - 1));
      for (Eigen::Index i = 0; i + 1 < d; ++i) {
        out[2 * i] = a * u[i];
        out[2 * i + 1] = b * (u[i + 1] - 2.0 * x[i] * u[i]);
      }
      return out;
    };
    op.apply_transpose = [d, a, b, x](const Vector& v) {
      Vector out = Vector::Zero(d);
      for (Eigen::Index i = 0; i + 1 < d; ++i) {
        out[i] += a * v[2 * i] - 2.0 * b * x[i] * v[2 * i + 1];
        out[i + 1] += b * v[2 * i + 1];
      }
      return out;
    };
    return op;
  };
  problem.loss = std::make_shared<SquaredNormLoss>(1.0);
  problem.regularizer = std::make_shared<ZeroRegularizer>();
  // grad c_{2i} = b (-2 x_i e_i + e_{i+1}); the differences live in distinct rows and columns.
  problem.lipschitz_jac = 2.0 * b;
  return problem;
}

// --- toy -------------------------------------------------------------------------

CompositeProblem make_toy_interval() {
  CompositeProblem problem;
  problem.name = "toy_interval";
  problem.dim_x = 1;
  problem.dim_r = 1;
  problem.residual = [](const Vector& x) {
    Vector c(1);
    c[0] = x[0] * x[0] - 2.0;
    return c;
  };
  problem.jvp_at = [](const Vector& x) {
    const double slope = 2.0 * x[0];
    JacobianOperator op;
    op.apply = [slope](const Vector& u) { return Vector(slope * u); };
    op.apply_transpose = [slope](const Vector& v) { return Vector(slope * v); };
    return op;
  };
  problem.loss = std::make_shared<SquaredNormLoss>(2.0);
  problem.regularizer = std::make_shared<BoxIndicator>(-1.0, 1.0);
  problem.lipschitz_jac = 2.0;
  problem.jacobian_norm = 2.0;  // |2x| on [-1, 1]
  return problem;
}

// --- linear least squares ---------------------------------------------------------

CompositeProblem make_linear_ls(const Matrix& A, const Vector& b,
                                std::optional<std::pair<double, double>> box,
                                double lipschitz_substitute) {
  if (A.rows() != b.size()) throw ParameterDomain("linear_ls: A and b disagree in size");
  if (A.rows() == 0 || A.cols() == 0) throw ParameterDomain("linear_ls: empty matrix");
  auto mat = std::make_shared<const Matrix>(A);
  auto rhs = std::make_shared<const Vector>(b);

  CompositeProblem problem;
  problem.name = "linear_ls";
  problem.dim_x = A.cols();
  problem.dim_r = A.rows();
  problem.residual = [mat, rhs](const Vector& x) { return Vector(*mat * x - *rhs); };
  problem.jvp_at = [mat](const Vector&) {
    JacobianOperator op;
    op.apply = [mat](const Vector& u) { return Vector(*mat * u); };
    op.apply_transpose = [mat](const Vector& v) { return Vector(mat->transpose() * v); };
    return op;
  };
  problem.loss = std::make_shared<SquaredNormLoss>(1.0);
  if (box) {
    problem.regularizer = std::make_shared<BoxIndicator>(box->first, box->second);
  } else {
    problem.regularizer = std::make_shared<ZeroRegularizer>();
  }
  problem.lipschitz_jac = lipschitz_substitute;
  problem.jacobian_norm = largest_singular_value(A);
  return problem;
}

Matrix random_matrix_with_singular_values(Eigen::Index m, Eigen::Index d,
                                          const Vector& singular_values, std::uint64_t seed) {
  const Eigen::Index k = std::min(m, d);
  if (singular_values.size() != k) throw ParameterDomain("need min(m, d) singular values");
  Rng rng(seed);
  const Matrix left = orthonormal_factor(m, rng);
  const Matrix right = orthonormal_factor(d, rng);
  return left.leftCols(k) * singular_values.asDiagonal() * right.leftCols(k).transpose();
}

double largest_singular_value(const Matrix& A, int iterations) {
  Vector v = Vector::Ones(A.cols()) / std::sqrt(static_cast<double>(A.cols()));
  // perturb away from any exact eigenvector orthogonal to the dominant one
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += 1e-3 * static_cast<double>(i % 7);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const Vector w = A.transpose() * (A * v);
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    v = w / n;
    estimate = std::sqrt(n);
  }
  return estimate;
}

// --- NMF ---------------------------------------------------------------------------

NmfData generate_nmf_data(Eigen::Index p, Eigen::Index q, Eigen::Index rank, double lambda,
                          Eigen::Index num_observed, std::uint64_t seed, double noise) {
  if (p < 1 || q < 1) throw ParameterDomain("nmf: p and q must be positive");
  if (rank < 1 || rank > std::min(p, q)) throw ParameterDomain("nmf: need 1 <= r <= min(p, q)");
  if (num_observed < 1 || num_observed > p * q) throw ParameterDomain("nmf: need 1 <= N <= p q");
  if (!(lambda >= 0.0)) throw ParameterDomain("nmf: lambda must be nonnegative");
  if (!(noise >= 0.0)) throw ParameterDomain("nmf: noise must be nonnegative");

  Rng rng(seed);
  NmfData data;
  data.p = p;
  data.q = q;
  data.rank = rank;
  data.lambda = lambda;
  data.planted_u.resize(p, rank);
  data.planted_v.resize(q, rank);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index l = 0; l < rank; ++l) data.planted_u(i, l) = rng.uniform();
  for (Eigen::Index j = 0; j < q; ++j)
    for (Eigen::Index l = 0; l < rank; ++l) data.planted_v(j, l) = rng.uniform();

  // partial Fisher-Yates over the p*q cells
  std::vector<Eigen::Index> cells(static_cast<std::size_t>(p * q));
  std::iota(cells.begin(), cells.end(), Eigen::Index{0});
  for (Eigen::Index t = 0; t < num_observed; ++t) {
    const auto remaining = static_cast<std::uint64_t>(p * q - t);
    const auto pick = t + static_cast<Eigen::Index>(rng.below(remaining));
    std::swap(cells[static_cast<std::size_t>(t)], cells[static_cast<std::size_t>(pick)]);
  }
  data.observed.reserve(static_cast<std::size_t>(num_observed));
  for (Eigen::Index t = 0; t < num_observed; ++t) {
    const Eigen::Index cell = cells[static_cast<std::size_t>(t)];
    const Eigen::Index i = cell / q;
    const Eigen::Index j = cell % q;
    const double clean = data.planted_u.row(i).dot(data.planted_v.row(j));
    data.observed.push_back({i, j, clean + noise * rng.normal()});
  }
  return data;
}

Vector nmf_pack(const Matrix& U, const Matrix& V) {
  const Eigen::Index r = U.cols();
  Vector x(U.rows() * r + V.rows() * r);
  for (Eigen::Index i = 0; i < U.rows(); ++i) x.segment(i * r, r) = U.row(i).transpose();
  const Eigen::Index off = U.rows() * r;
  for (Eigen::Index j = 0; j < V.rows(); ++j) x.segment(off + j * r, r) = V.row(j).transpose();
  return x;
}

CompositeProblem make_nmf(const NmfData& data) {
  auto shared = std::make_shared<const NmfData>(data);
  const Eigen::Index r = data.rank;
  const Eigen::Index n_obs = static_cast<Eigen::Index>(data.observed.size());
  const Eigen::Index dim = (data.p + data.q) * r;
  const Eigen::Index v_off = data.p * r;
  const double scale = std::sqrt(2.0 / static_cast<double>(n_obs));
  const double ridge = std::sqrt(2.0 * data.lambda);
  const bool has_ridge = data.lambda > 0.0;
  const Eigen::Index dim_r = n_obs + (has_ridge ? dim : 0);

  CompositeProblem problem;
  problem.name = "nmf_synthetic";
  problem.dim_x = dim;
  problem.dim_r = dim_r;
  problem.residual = [=](const Vector& x) {
    Vector c(dim_r);
    for (Eigen::Index t = 0; t < n_obs; ++t) {
      const RatingTriple& obs = shared->observed[static_cast<std::size_t>(t)];
      c[t] = scale * (x.segment(obs.row * r, r).dot(x.segment(v_off + obs.col * r, r)) - obs.value);
    }
    if (has_ridge) c.tail(dim) = ridge * x;
    return c;
  };
  problem.jvp_at = [=](const Vector& x) {
    JacobianOperator op;
    op.apply = [=](const Vector& u) {
      Vector out(dim_r);
      for (Eigen::Index t = 0; t < n_obs; ++t) {
        const RatingTriple& obs = shared->observed[static_cast<std::size_t>(t)];
        const Eigen::Index ui = obs.row * r;
        const Eigen::Index vj = v_off + obs.col * r;
        out[t] = scale * (u.segment(ui, r).dot(x.segment(vj, r)) +
                          x.segment(ui, r).dot(u.segment(vj, r)));
      }
      if (has_ridge) out.tail(dim) = ridge * u;
      return out;
    };
    op.apply_transpose = [=](const Vector& v) {
      Vector out = Vector::Zero(dim);
      for (Eigen::Index t = 0; t < n_obs; ++t) {
        const RatingTriple& obs = shared->observed[static_cast<std::size_t>(t)];
        const Eigen::Index ui = obs.row * r;
        const Eigen::Index vj = v_off + obs.col * r;
        out.segment(ui, r) += (scale * v[t]) * x.segment(vj, r);
        out.segment(vj, r) += (scale * v[t]) * x.segment(ui, r);
      }
      if (has_ridge) out += ridge * v.tail(dim);
      return out;
    };
    return op;
  };
  problem.loss = std::make_shared<SquaredNormLoss>(1.0);
  problem.regularizer = make_nonnegative_orthant();
  return problem;
}

CompositeProblem make_nmf(Eigen::Index p, Eigen::Index q, Eigen::Index rank, double lambda,
                          Eigen::Index num_observed, std::uint64_t seed, double noise) {
  return make_nmf(generate_nmf_data(p, q, rank, lambda, num_observed, seed, noise));
}

Vector nmf_initial_point(Eigen::Index p, Eigen::Index q, Eigen::Index rank, std::uint64_t seed) {
  Rng rng(seed);
  const double stddev = std::sqrt(1e-3);
  Vector x((p + q) * rank);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::abs(stddev * rng.normal());
  return x;
}

CompositeProblem corrupt_vjp(const CompositeProblem& problem, double relative_error) {
  CompositeProblem bad = problem;
  bad.name = problem.name + "+corrupt_vjp";
  auto inner = problem.jvp_at;
  bad.jvp_at = [inner, relative_error](const Vector& x) {
    JacobianOperator op = inner(x);
    auto transpose = op.apply_transpose;
    op.apply_transpose = [transpose, relative_error](const Vector& v) {
      Vector out = transpose(v);
      // perturb coordinates unevenly so the error cannot cancel in <u, J^T v>
      for (Eigen::Index i = 0; i < out.size(); ++i) {
        out[i] *= 1.0 + relative_error * static_cast<double>(1 + i % 3);
      }
      return out;
    };
    return op;
  };
  return bad;
}

// --- checks -----------------------------------------------------------------------------

double finite_difference_step(const Vector& x) { return 1e-6 * (1.0 + x.lpNorm<Eigen::Infinity>()); }

double adjoint_error(const CompositeProblem& problem, const Vector& x, const Vector& u,
                     const Vector& v) {
  const JacobianOperator op = problem.jvp_at(x);
  const double lhs = op.apply(u).dot(v);
  const double rhs = u.dot(op.apply_transpose(v));
  return std::abs(lhs - rhs) / (1.0 + u.norm() * v.norm());
}

double jvp_error(const CompositeProblem& problem, const Vector& x, const Vector& u) {
  const double h = finite_difference_step(x);
  const Vector fd = (problem.residual(x + h * u) - problem.residual(x - h * u)) / (2.0 * h);
  const Vector ju = problem.jvp_at(x).apply(u);
  return (fd - ju).norm() / std::max(1.0, ju.norm());
}

double finite_diff_check(const CompositeProblem& problem, const Vector& x,
                         const std::vector<Vector>& directions) {
  double worst = 0.0;
  for (const Vector& u : directions) {
    worst = std::max(worst, jvp_error(problem, x, u));
    // residual-space probe: J u itself plus a fixed alternating pattern
    Vector v = problem.jvp_at(x).apply(u);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += (i % 2 == 0) ? 1.0 : -0.5;
    worst = std::max(worst, adjoint_error(problem, x, u, v));
  }
  return worst;
}

// --- specs ---------------------------------------------------------------------------------

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Rosenbrock2: return "rosenbrock2";
    case ProblemKind::RosenbrockNd: return "rosenbrock_nd";
    case ProblemKind::NmfSynthetic: return "nmf_synthetic";
    case ProblemKind::ToyInterval: return "toy_interval";
    case ProblemKind::LinearLs: return "linear_ls";
  }
  return "unknown";
}

std::optional<ProblemKind> parse_problem_kind(const std::string& name) {
  for (ProblemKind k : {ProblemKind::Rosenbrock2, ProblemKind::RosenbrockNd,
                        ProblemKind::NmfSynthetic, ProblemKind::ToyInterval,
                        ProblemKind::LinearLs}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

BuiltProblem build_problem(const ProblemSpec& spec) {
  BuiltProblem built;
  switch (spec.kind) {
    case ProblemKind::Rosenbrock2:
      built.problem = make_rosenbrock(2);
      built.x0 = Vector::Zero(2);
      break;
    case ProblemKind::RosenbrockNd:
      built.problem = make_rosenbrock(spec.d);
      built.x0 = Vector::Constant(spec.d, 0.5);
      break;
    case ProblemKind::ToyInterval:
      built.problem = make_toy_interval();
      built.x0 = Vector::Constant(1, 0.5);
      break;
    case ProblemKind::NmfSynthetic:
      built.problem = make_nmf(spec.p, spec.q, spec.rank, spec.lambda, spec.num_observed,
                               spec.seed, spec.noise);
      built.x0 = nmf_initial_point(spec.p, spec.q, spec.rank, spec.seed + 1);
      break;
    case ProblemKind::LinearLs: {
      Matrix A;
      Vector b;
      if (spec.A) {
        A = *spec.A;
        b = spec.b ? *spec.b : Vector::Zero(A.rows());
      } else {
        if (spec.m < 1 || spec.d < 1) throw ParameterDomain("linear_ls: m and d must be positive");
        const Eigen::Index k = std::min(spec.m, spec.d);
        Vector svals(k);
        for (Eigen::Index i = 0; i < k; ++i) {
          const double frac = k == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(k - 1);
          svals[i] = spec.sigma_max * std::pow(0.1, frac);
        }
        A = random_matrix_with_singular_values(spec.m, spec.d, svals, spec.seed);
        Rng rng(spec.seed + 1);
        b.resize(spec.m);
        for (Eigen::Index i = 0; i < spec.m; ++i) b[i] = rng.normal();
      }
      built.problem = make_linear_ls(A, b, spec.box);
      built.x0 = Vector::Zero(A.cols());
      if (spec.box) built.x0 = built.x0.cwiseMax(spec.box->first).cwiseMin(spec.box->second);
      break;
    }
  }
  if (spec.x0) {
    if (spec.x0->size() != built.problem.dim_x) throw ParameterDomain("x0 has the wrong dimension");
    built.x0 = *spec.x0;
  }
  if (spec.corrupt_vjp) built.problem = corrupt_vjp(built.problem);
  return built;
}

}  // namespace aglm
