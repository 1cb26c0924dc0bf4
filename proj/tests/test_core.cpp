#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "aglm/core.hpp"
#include "aglm/problems.hpp"
#include "support.hpp"

using namespace aglm;
using aglm::testing::half_square_toy;
using aglm::testing::identity_problem;

TEST_SUITE("ledger") {
  TEST_CASE("weighted cost of the documented count vector") {
    OracleLedger ledger;
    ledger.charge(Oracle::ResidualEval, 4);
    ledger.charge(Oracle::Linearize);
    ledger.charge(Oracle::JvpApply, 3);
    ledger.charge(Oracle::VjpApply, 2);
    CHECK(ledger.weighted_cost() == 11);
    CHECK(ledger_cost(ledger) == 11.0);
    CHECK(ledger.recompute_cost() == 11);
  }

  TEST_CASE("empty ledger and free oracles cost nothing") {
    OracleLedger ledger;
    CHECK(ledger_cost(ledger) == 0.0);
    ledger.charge(Oracle::LossEval, 100);
    ledger.charge(Oracle::ProxApply, 50);
    ledger.charge(Oracle::LossGrad, 7);
    ledger.charge(Oracle::TransposeDerive, 9);
    CHECK(ledger_cost(ledger) == 0.0);
    CHECK(ledger.count(Oracle::LossEval) == 100);
  }

  TEST_CASE("incremental cost equals recomputation under random charging") {
    Rng rng(11);
    OracleLedger ledger;
    std::uint64_t reference = 0;
    const std::uint64_t weights[] = {1, 2, 0, 1, 1, 0, 0, 0};
    for (int i = 0; i < 2000; ++i) {
      const auto kind = rng.below(kOracleKinds);
      const auto times = 1 + rng.below(5);
      const auto before = ledger.count(static_cast<Oracle>(kind));
      ledger.charge(static_cast<Oracle>(kind), times);
      reference += weights[kind] * times;
      CHECK(ledger.count(static_cast<Oracle>(kind)) >= before);
    }
    CHECK(ledger.weighted_cost() == reference);
    CHECK(ledger.recompute_cost() == reference);
  }
}

TEST_SUITE("objective") {
  TEST_CASE("rosenbrock values") {
    OracleLedger ledger;
    const CompositeProblem r2 = make_rosenbrock(2);
    CHECK(eval_objective(r2, Vector::Zero(2), ledger) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(eval_objective(r2, Vector::Ones(2), ledger) == 0.0);
    CHECK(ledger.count(Oracle::ResidualEval) == 2);

    for (Eigen::Index d : {3, 10, 100}) {
      const CompositeProblem rd = make_rosenbrock(d);
      const double expected = 6.5 * static_cast<double>(d - 1);
      CHECK(eval_objective(rd, Vector::Constant(d, 0.5), ledger) ==
            doctest::Approx(expected).epsilon(1e-14));
    }
  }

  TEST_CASE("outside dom g the objective is +inf without touching c") {
    OracleLedger ledger;
    const CompositeProblem toy = make_toy_interval();
    CHECK(std::isinf(eval_objective(toy, Vector::Constant(1, 1.5), ledger)));
    CHECK(ledger.count(Oracle::ResidualEval) == 0);
  }

  TEST_CASE("non-finite residual raises NumericalFailure with the point") {
    CompositeProblem p = identity_problem(2);
    p.residual = [](const Vector& x) { return Vector(x.array().log()); };
    OracleLedger ledger;
    const Vector x(Vector::Constant(2, -1.0));
    try {
      eval_objective(p, x, ledger);
      FAIL("expected NumericalFailure");
    } catch (const NumericalFailure& e) {
      CHECK(e.point() == x);
    }
  }
}

TEST_SUITE("gradient and stationarity") {
  TEST_CASE("identity residual gives grad H = x") {
    OracleLedger ledger;
    const Vector x = (Vector(2) << 3.0, -1.0).finished();
    CHECK(grad_smooth_part(identity_problem(2), x, ledger) == x);
    CHECK(ledger.count(Oracle::ResidualEval) == 1);
    CHECK(ledger.count(Oracle::Linearize) == 1);
    CHECK(ledger.count(Oracle::TransposeDerive) == 1);
    CHECK(ledger.count(Oracle::VjpApply) == 1);
  }

  TEST_CASE("toy chain rule at x = 2") {
    // h(y) = y^2 so grad H = 2 c(x) c'(x) = 2 * 2 * 4.
    OracleLedger ledger;
    const Vector g = grad_smooth_part(make_toy_interval(), Vector::Constant(1, 2.0), ledger);
    CHECK(g[0] == doctest::Approx(16.0));
  }

  TEST_CASE("residual at a zero of grad h gives a zero gradient") {
    OracleLedger ledger;
    const Vector g = grad_smooth_part(make_rosenbrock(5), Vector::Ones(5), ledger);
    CHECK(g.norm() == 0.0);
  }

  TEST_CASE("omega for zero g and the orthant") {
    const CompositeProblem free = identity_problem(2);
    CHECK(stationarity(free, Vector::Zero(2), (Vector(2) << 3.0, 4.0).finished()) ==
          doctest::Approx(5.0));

    const CompositeProblem orthant = identity_problem(2, make_nonnegative_orthant());
    const Vector x = (Vector(2) << 0.0, 2.0).finished();
    const Vector grad = (Vector(2) << -3.0, 1.0).finished();
    CHECK(stationarity(orthant, x, grad) == doctest::Approx(std::sqrt(10.0)));

    // Active lower bound with a gradient pushing outward: stationary.
    CHECK(stationarity(orthant, Vector::Zero(2), Vector::Constant(2, 1.0)) == 0.0);
  }

  TEST_CASE("toy x = 1 is stationary") {
    OracleLedger ledger;
    const CompositeProblem toy = make_toy_interval();
    const Vector x = Vector::Constant(1, 1.0);
    const Vector g = grad_smooth_part(toy, x, ledger);
    CHECK(g[0] == doctest::Approx(-4.0));
    CHECK(stationarity(toy, x, g) == 0.0);
    CHECK(eval_objective(toy, x, ledger) == 1.0);
  }

  TEST_CASE("non-separable g needs the surrogate") {
    const CompositeProblem ball = identity_problem(2, std::make_shared<EuclideanBallIndicator>(1.0));
    const Vector x = (Vector(2) << 1.0, 0.0).finished();
    CHECK_THROWS_AS(stationarity(ball, x, x), UnsupportedRegularizer);

    // At the boundary with an outward gradient the prox residual is zero.
    StationarityMeasure used = StationarityMeasure::Exact;
    CHECK(stationarity_or_surrogate(ball, x, -x, 2.0, &used) == doctest::Approx(0.0));
    CHECK(used == StationarityMeasure::ProxResidual);
    // Inside the ball the surrogate reduces to |grad|.
    const Vector inside = Vector::Zero(2);
    CHECK(stationarity_or_surrogate(ball, inside, (Vector(2) << 0.3, 0.4).finished(), 4.0) ==
          doctest::Approx(0.5));
  }
}

TEST_SUITE("regularizers") {
  TEST_CASE("closed-form prox examples") {
    const auto orthant = make_nonnegative_orthant();
    const Vector v = (Vector(3) << -1.0, 2.0, -3.0).finished();
    CHECK(orthant->prox(v, 1.0) == (Vector(3) << 0.0, 2.0, 0.0).finished());

    const BoxIndicator interval(-1.0, 1.0);
    for (double w : {1e-3, 1.0, 1e3}) CHECK(interval.prox(Vector::Constant(1, 3.0), w)[0] == 1.0);

    const L1Norm l1(1.0);
    const Vector z = l1.prox((Vector(3) << 3.0, -0.5, -2.0).finished(), 2.0);
    CHECK(z[0] == doctest::Approx(2.5));
    CHECK(z[1] == 0.0);
    CHECK(z[2] == doctest::Approx(-1.5));

    const EuclideanBallIndicator ball(2.0);
    CHECK(ball.prox((Vector(2) << 3.0, 4.0).finished(), 1.0).norm() == doctest::Approx(2.0));
  }

  TEST_CASE("prox output satisfies its optimality condition") {
    // dist(s (x - z), subdifferential of g at z) for random x and weights s.
    Rng rng(5);
    const std::shared_ptr<const Regularizer> gs[] = {
        std::make_shared<ZeroRegularizer>(), make_nonnegative_orthant(),
        std::make_shared<BoxIndicator>(-1.0, 1.0), std::make_shared<L1Norm>(0.7)};
    for (const auto& g : gs) {
      for (int i = 0; i < 200; ++i) {
        const Vector x = aglm::testing::random_vector(6, rng, 2.0);
        const double s = std::pow(10.0, rng.uniform(-3.0, 3.0));
        const Vector z = g->prox(x, s);
        CHECK(g->subdiff_distance(z, s * (x - z)) <= 1e-10 * (1.0 + s * (x - z).norm()));
        CHECK(g->value(z) >= g->infimum());
      }
    }
  }

  TEST_CASE("prox is the brute-force minimizer in one dimension") {
    // Grid search oracle for argmin g(z) + (s/2)(z - x)^2.
    const L1Norm l1(0.4);
    const BoxIndicator box(-0.5, 2.0);
    Rng rng(9);
    for (int i = 0; i < 20; ++i) {
      const double x = rng.uniform(-3.0, 3.0);
      const double s = rng.uniform(0.2, 5.0);
      for (const Regularizer* g : {static_cast<const Regularizer*>(&l1),
                                   static_cast<const Regularizer*>(&box)}) {
        double best_z = 0.0, best = std::numeric_limits<double>::infinity();
        for (int k = -40000; k <= 40000; ++k) {
          const double z = k * 1e-4;
          const double val = g->value(Vector::Constant(1, z)) + 0.5 * s * (z - x) * (z - x);
          if (val < best) {
            best = val;
            best_z = z;
          }
        }
        CHECK(std::abs(g->prox(Vector::Constant(1, x), s)[0] - best_z) <= 2e-4);
      }
    }
  }

  TEST_CASE("box normal cone on a degenerate interval is everything") {
    const BoxIndicator point(1.0, 1.0);
    CHECK(point.subdiff_distance(Vector::Constant(1, 1.0), Vector::Constant(1, -7.0)) == 0.0);
    CHECK(std::isinf(point.subdiff_distance(Vector::Constant(1, 2.0), Vector::Zero(1))));
  }
}

TEST_SUITE("linearized model") {
  TEST_CASE("model at the base reproduces h(c(x_k))") {
    OracleLedger ledger;
    const CompositeProblem r = make_rosenbrock(4);
    Rng rng(3);
    for (int i = 0; i < 10; ++i) {
      const Vector x = aglm::testing::uniform_vector(4, rng, -2.0, 2.0);
      const LinearizedModel m = linearize(r, x, rng.uniform(0.1, 10.0), ledger);
      CHECK(m.model_value(x, ledger) == eval_objective(r, x, ledger));
      const Vector gh = grad_smooth_part(r, x, ledger);
      CHECK((m.model_grad(x, ledger) - gh).norm() <= 1e-14 * (1.0 + gh.norm()));
    }
  }

  TEST_CASE("hand-differentiated gradient on the half-square toy") {
    // model(x) = (2 + 4 (x - 2))^2 / 2 + (x - 2)^2 at x_k = 2, mu = 2.
    OracleLedger ledger;
    const CompositeProblem toy = half_square_toy();
    const LinearizedModel m = linearize(toy, Vector::Constant(1, 2.0), 2.0, ledger);
    for (double x : {-1.0, 0.0, 1.5, 14.0 / 9.0, 2.0, 3.25}) {
      const double expected = 4.0 * (2.0 + 4.0 * (x - 2.0)) + 2.0 * (x - 2.0);
      CHECK(m.model_grad(Vector::Constant(1, x), ledger)[0] == doctest::Approx(expected));
    }
    CHECK(m.model_grad(Vector::Constant(1, 14.0 / 9.0), ledger)[0] ==
          doctest::Approx(0.0).scale(1.0));
  }

  TEST_CASE("model gradient matches central differences of the model value") {
    OracleLedger ledger;
    const CompositeProblem r = make_rosenbrock(3);
    Rng rng(21);
    const Vector xk = aglm::testing::uniform_vector(3, rng, -1.0, 1.0);
    const LinearizedModel m = linearize(r, xk, 0.7, ledger);
    const Vector x = xk + aglm::testing::random_vector(3, rng, 0.3);
    const Vector grad = m.model_grad(x, ledger);
    for (Eigen::Index i = 0; i < 3; ++i) {
      const double h = 1e-6;
      const Vector e = Vector::Unit(3, i) * h;
      const double fd = (m.model_value(x + e, ledger) - m.model_value(x - e, ledger)) / (2 * h);
      CHECK(fd == doctest::Approx(grad[i]).epsilon(1e-6));
    }
  }

  TEST_CASE("charges per documented operation") {
    const CompositeProblem r = make_rosenbrock(2);
    OracleLedger ledger;
    const LinearizedModel m = linearize(r, Vector::Zero(2), 1.0, ledger);
    CHECK(ledger.count(Oracle::ResidualEval) == 1);
    CHECK(ledger.count(Oracle::Linearize) == 1);
    CHECK(ledger.count(Oracle::TransposeDerive) == 1);

    const Vector cached = r.residual(Vector::Zero(2));
    OracleLedger reuse;
    linearize(r, Vector::Zero(2), 1.0, reuse, &cached);
    CHECK(reuse.count(Oracle::ResidualEval) == 0);
    CHECK(ledger_cost(reuse) == 2.0);

    OracleLedger ops;
    m.model_value(Vector::Ones(2), ops);
    CHECK(ops.count(Oracle::JvpApply) == 1);
    CHECK(ops.count(Oracle::LossEval) == 1);
    m.model_grad(Vector::Ones(2), ops);
    CHECK(ops.count(Oracle::JvpApply) == 2);
    CHECK(ops.count(Oracle::VjpApply) == 1);
    CHECK(ops.count(Oracle::LossGrad) == 1);
  }

  TEST_CASE("damping must stay positive") {
    OracleLedger ledger;
    const CompositeProblem r = make_rosenbrock(2);
    LinearizedModel m = linearize(r, Vector::Zero(2), 1.0, ledger);
    CHECK_THROWS_AS(m.set_mu(0.0), ParameterDomain);
    CHECK_THROWS_AS(m.set_mu(-1.0), ParameterDomain);
    m.set_mu(3.0);
    CHECK(m.mu() == 3.0);
  }

  TEST_CASE("cancellation-free value difference agrees with direct subtraction") {
    OracleLedger ledger;
    const CompositeProblem r = make_rosenbrock(3);
    const Vector xk = (Vector(3) << 0.2, -0.4, 0.9).finished();
    const LinearizedModel m = linearize(r, xk, 1.3, ledger);
    const Vector x1 = xk + Vector::Constant(3, 0.1);
    const Vector x0 = xk - Vector::Constant(3, 0.05);
    const Vector r1 = m.linear_residual(x1, ledger), r0 = m.linear_residual(x0, ledger);
    const double direct = m.value_from(x1, r1, ledger) - m.value_from(x0, r0, ledger);
    CHECK(m.value_difference(x1, r1, x0, r0) == doctest::Approx(direct).epsilon(1e-12));
  }
}
