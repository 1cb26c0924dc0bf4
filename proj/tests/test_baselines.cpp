#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aglm/baselines.hpp"
#include "aglm/checks.hpp"
#include "aglm/lm.hpp"
#include "aglm/problems.hpp"
#include "support.hpp"

using namespace aglm;
using namespace aglm::testing;

TEST_SUITE("pg") {
  TEST_CASE("exact quadratic takes one step to the minimizer") {
    PgConfig cfg;
    cfg.l_min = 1.0;
    cfg.stop.record_iterates = true;
    const RunTrace t = pg_solve(identity_problem(1), Vector::Ones(1), cfg);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.iterates[1][0] == 0.0);
    CHECK(t.rows[1].backtracks == 0);
    CHECK(t.status == RunStatus::Stationary);
  }

  TEST_CASE("stationary start takes no step") {
    const RunTrace t = pg_solve(make_rosenbrock(3), Vector::Ones(3), PgConfig{});
    CHECK(t.rows.size() == 1);
    CHECK(t.status == RunStatus::Stationary);
  }

  TEST_CASE("monotone objective and bounded L increases on linear least squares") {
    Rng rng(2);
    for (int trial = 0; trial < 4; ++trial) {
      const Vector svals = (Vector(5) << 6, 3, 1, 0.5, 0.2).finished();
      const Matrix A = random_matrix_with_singular_values(10, 5, svals, 70 + trial);
      const CompositeProblem p = make_linear_ls(A, random_vector(10, rng));
      const double L_H = svals[0] * svals[0];
      PgConfig cfg;
      cfg.l_min = 1e-3;
      cfg.stop.epsilon = 1e-6;
      cfg.stop.max_outer_iters = 200000;
      const RunTrace t = pg_solve(p, Vector::Zero(5), cfg);
      CHECK(t.status == RunStatus::Stationary);
      CHECK(check_monotone(t).passed);
      long increases = 0;
      for (const TraceRow& row : t.rows) increases += row.backtracks;
      CHECK(increases <= static_cast<long>(std::ceil(std::log(L_H / cfg.l_min) / std::log(cfg.alpha))) + 1);
    }
  }

  TEST_CASE("orthant constraint is respected") {
    const CompositeProblem p = make_nmf(6, 5, 2, 1e-3, 20, 3, 0.0);
    PgConfig cfg;
    cfg.stop.max_outer_iters = 300;
    cfg.stop.record_iterates = true;
    const RunTrace t = pg_solve(p, nmf_initial_point(6, 5, 2, 4), cfg);
    for (const Vector& x : t.iterates) CHECK(x.minCoeff() >= 0.0);
    CHECK(check_monotone(t).passed);
  }

  TEST_CASE("2-D Rosenbrock costs more than lm at matched objective tolerance") {
    const CompositeProblem r = make_rosenbrock(2);
    PgConfig pg;
    pg.stop.objective_target = 1e-4;
    pg.stop.max_outer_iters = 200000;
    const RunTrace tp = pg_solve(r, Vector::Zero(2), pg);
    LmConfig lm;
    lm.stop.objective_target = 1e-4;
    const RunTrace tl = lm_solve(r, Vector::Zero(2), lm);
    REQUIRE(tp.status == RunStatus::TargetReached);
    REQUIRE(tl.status == RunStatus::TargetReached);
    CHECK(ledger_cost(tp.ledger) > ledger_cost(tl.ledger));
  }
}

TEST_SUITE("dp") {
  TEST_CASE("toy quadratic subproblem in one outer step") {
    DpConfig cfg;
    cfg.mu_fixed = 2.0;
    cfg.L = 16.0;
    cfg.theta = 1e-8;
    cfg.stop.max_outer_iters = 1;
    cfg.stop.record_iterates = true;
    const RunTrace t = dp_solve(half_square_toy(), Vector::Constant(1, 2.0), cfg);
    REQUIRE(t.iterates.size() == 2);
    CHECK(std::abs(t.iterates[1][0] - 14.0 / 9.0) <= 1e-6);
  }

  TEST_CASE("subproblem certificates hold on every step") {
    const CompositeProblem r = make_rosenbrock(4);
    DpConfig cfg;
    cfg.mu_fixed = 0.1;
    cfg.L = 100.0;
    cfg.stop.record_iterates = true;
    const RunTrace t = dp_solve(r, Vector::Constant(4, 0.5), cfg);
    CHECK(t.status == RunStatus::Stationary);
    for (std::size_t k = 1; k < t.rows.size(); ++k) CHECK(t.rows[k].mu == 0.1);
    CHECK(check_membership(r, t, cfg.theta).passed);
  }

  TEST_CASE("terminal order is linear on 2-D Rosenbrock") {
    DpConfig cfg;
    cfg.mu_fixed = 1e-2;
    cfg.L = 100.0;
    cfg.stop.epsilon = 1e-12;
    const RunTrace t = dp_solve(make_rosenbrock(2), Vector::Zero(2), cfg);
    const std::vector<double> window = terminal_window(t, 1e-12, 4);
    REQUIRE(window.size() >= 3);
    CHECK(fitted_order(window) < 1.3);
  }

  TEST_CASE("no fixed damping beats the lm grid on d = 100") {
    // Cost until omega <= 1e-8, or until the run certified F at its lower bound.
    const CompositeProblem r = make_rosenbrock(100);
    const Vector x0 = Vector::Constant(100, 0.5);
    auto cost = [](const RunTrace& t) {
      if (auto c = cost_to_stationarity(t, 1e-8)) return *c;
      if (t.status == RunStatus::DeltaFloor) return t.rows.back().oracle_cost;
      return std::numeric_limits<double>::infinity();
    };
    double best_lm = std::numeric_limits<double>::infinity();
    for (double rho : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
      LmConfig cfg;
      cfg.rho_min = rho;
      best_lm = std::min(best_lm, cost(lm_solve(r, x0, cfg)));
    }
    for (double mu : {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0}) {
      double best_dp = std::numeric_limits<double>::infinity();
      for (double L : {1e-1, 1e2, 1e5}) {
        DpConfig cfg;
        cfg.mu_fixed = mu;
        cfg.L = L;
        cfg.stop.max_outer_iters = 5000;
        best_dp = std::min(best_dp, cost(dp_solve(r, x0, cfg)));
      }
      CAPTURE(mu);
      CHECK(best_dp > best_lm);
    }
  }

  TEST_CASE("config validation") {
    DpConfig cfg;
    cfg.mu_fixed = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterDomain);
    PgConfig pg;
    pg.alpha = 0.5;
    CHECK_THROWS_AS(pg.validate(), ParameterDomain);
  }
}
