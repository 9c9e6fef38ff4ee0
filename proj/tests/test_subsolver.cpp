#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "gqmp/subsolver.hpp"

using gqmp::Complex;
using gqmp::HermitianMatrix;
using gqmp::Mat;
using gqmp::MatrixFunctionOracle;
using gqmp::QuadraticConstraint;
using gqmp::Subproblem;

namespace {

// maximize -tr(X^H X) + 2 Re tr(C^H X); unconstrained optimum X = C with
// value ||C||_F^2.
MatrixFunctionOracle shifted_quadratic(const Mat& c) {
  return {
      [c](const Mat& x) { return -x.squaredNorm() + 2.0 * (c.adjoint() * x).trace().real(); },
      [c](const Mat& x) { return Mat(c - x); },
  };
}

MatrixFunctionOracle linear_objective(const Mat& c) {
  return {
      [c](const Mat& x) { return 2.0 * (c.adjoint() * x).trace().real(); },
      [c](const Mat& x) {
        (void)x;
        return c;
      },
  };
}

// d - ||X - E||_F^2 >= 0: a ball of radius sqrt(d) around E.
MatrixFunctionOracle ball_constraint(const Mat& e, double d) {
  return {
      [e, d](const Mat& x) { return d - (x - e).squaredNorm(); },
      [e](const Mat& x) { return Mat(e - x); },
  };
}

QuadraticConstraint power_cap(int dim, double budget, double scale = 1.0) {
  return {HermitianMatrix::identity(dim), budget, scale};
}

Mat column2(Complex a, Complex b) {
  Mat m(2, 1);
  m << a, b;
  return m;
}

}  // namespace

TEST_CASE("interior optimum of a shifted quadratic is recovered exactly") {
  Mat c(2, 2);
  c << Complex(1.0, -0.5), Complex(0.25, 0.75), Complex(-0.6, 0.1), Complex(0.0, 1.1);

  Subproblem p;
  p.objective = shifted_quadratic(c);
  p.set.items.push_back(power_cap(2, 100.0));

  const Mat x0 = Mat::Zero(2, 2);
  const auto sol = gqmp::solve_subproblem(p, x0, 1e-6);

  CHECK(sol.converged);
  CHECK(sol.kkt_residual <= 1e-6);
  CHECK((sol.x_opt - c).norm() <= 1e-5);
  CHECK(sol.objective_value == doctest::Approx(c.squaredNorm()).epsilon(1e-8));
  REQUIRE(sol.quad_multipliers.size() == 1);
  CHECK(sol.quad_multipliers[0] <= 1e-5);
  CHECK(sol.iterations > 0);
}

TEST_CASE("linear objective drives the iterate to the power boundary with the exact multiplier") {
  const Mat c = column2(Complex(1.0, 2.0), Complex(-0.5, 0.25));
  const double cn = c.norm();

  Subproblem p;
  p.objective = linear_objective(c);
  p.set.items.push_back(power_cap(2, 1.0));

  const Mat x0 = 0.1 * Mat::Ones(2, 1);
  const auto sol = gqmp::solve_subproblem(p, x0, 1e-5);

  CHECK(sol.converged);
  CHECK(sol.kkt_residual <= 1e-5);
  CHECK((sol.x_opt - c / cn).norm() <= 1e-4);
  CHECK(sol.objective_value == doctest::Approx(2.0 * cn).epsilon(1e-6));
  REQUIRE(sol.quad_multipliers.size() == 1);
  CHECK(sol.quad_multipliers[0] == doctest::Approx(cn).epsilon(1e-3));
  // Complementarity: the cap is active.
  CHECK(p.set.slacks(sol.x_opt)[0] <= 1e-4);
  CHECK(p.set.slacks(sol.x_opt)[0] >= -1e-12);
}

TEST_CASE("scaled anisotropic power cap matches the closed-form optimum") {
  const Mat c = column2(Complex(0.8, -1.2), Complex(1.5, 0.4));
  gqmp::RealVec d(2);
  d << 1.0, 2.0;
  const HermitianMatrix theta = HermitianMatrix::diagonal(d);
  const double scale = 0.5;
  const double budget = 3.0;

  Subproblem p;
  p.objective = linear_objective(c);
  p.set.items.push_back({theta, budget, scale});

  const auto sol = gqmp::solve_subproblem(p, 0.05 * Mat::Ones(2, 1), 1e-5);

  // Stationarity C = nu * scale * Theta X pins both the direction and nu.
  const Mat theta_inv_c = theta.mat().inverse() * c;
  const double q = (c.adjoint() * theta_inv_c).trace().real();
  const double nu_expected = std::sqrt(q / (scale * budget));
  const double value_expected = 2.0 * std::sqrt(budget * q / scale);

  CHECK(sol.converged);
  CHECK(sol.objective_value == doctest::Approx(value_expected).epsilon(1e-6));
  REQUIRE(sol.quad_multipliers.size() == 1);
  CHECK(sol.quad_multipliers[0] == doctest::Approx(nu_expected).epsilon(1e-3));
  const Mat x_expected = theta_inv_c / (nu_expected * scale);
  CHECK((sol.x_opt - x_expected).norm() <= 1e-4 * x_expected.norm());
}

TEST_CASE("active nonlinear inequality reproduces the projection closed form") {
  const Mat c = column2(Complex(2.0, 1.0), Complex(-1.0, 0.0));
  const Mat e = column2(Complex(1.0, 0.0), Complex(0.0, 1.0));
  const double d = 1.0;

  Subproblem p;
  p.objective = shifted_quadratic(c);
  p.ineqs.push_back(ball_constraint(e, d));
  p.set.items.push_back(power_cap(2, 25.0));

  const Mat x_star = e + (c - e) / (c - e).norm() * std::sqrt(d);
  const double mu_star = (c - e).norm() / std::sqrt(d) - 1.0;
  const double value_star = c.squaredNorm() - ((c - e).norm() - std::sqrt(d)) *
                                                  ((c - e).norm() - std::sqrt(d));

  SUBCASE("from a strictly interior start") {
    const auto sol = gqmp::solve_subproblem(p, e, 1e-5);
    CHECK(sol.converged);
    CHECK(sol.kkt_residual <= 1e-5);
    CHECK((sol.x_opt - x_star).norm() <= 1e-4);
    CHECK(sol.objective_value == doctest::Approx(value_star).epsilon(1e-7));
    REQUIRE(sol.ineq_multipliers.size() == 1);
    CHECK(sol.ineq_multipliers[0] == doctest::Approx(mu_star).epsilon(1e-3));
  }

  SUBCASE("warm start exactly on the inequality boundary still ascends") {
    const auto sol = gqmp::solve_subproblem(p, x_star, 1e-5);
    const double start_obj = p.objective.value(x_star);
    CHECK(sol.objective_value >= start_obj - 1e-10);
    CHECK(sol.kkt_residual <= 1e-5);
    CHECK((sol.x_opt - x_star).norm() <= 1e-4);
  }
}

TEST_CASE("warm start on the quadratic boundary is pulled inside and ascends") {
  const Mat c = column2(Complex(1.0, 2.0), Complex(-0.5, 0.25));
  Subproblem p;
  p.objective = linear_objective(c);
  p.set.items.push_back(power_cap(2, 1.0));

  // Full-power start: slack is exactly zero.
  const Mat x0 = c / c.norm();
  REQUIRE(p.set.slacks(x0)[0] == doctest::Approx(0.0).epsilon(1e-12));
  const auto sol = gqmp::solve_subproblem(p, x0, 1e-5);
  CHECK(sol.objective_value >= p.objective.value(x0) - 1e-10);
  CHECK(sol.kkt_residual <= 1e-5);
}

TEST_CASE("identical calls are bitwise deterministic") {
  const Mat c = column2(Complex(2.0, 1.0), Complex(-1.0, 0.0));
  const Mat e = column2(Complex(1.0, 0.0), Complex(0.0, 1.0));
  Subproblem p;
  p.objective = shifted_quadratic(c);
  p.ineqs.push_back(ball_constraint(e, 1.0));
  p.set.items.push_back(power_cap(2, 25.0));

  const auto a = gqmp::solve_subproblem(p, e, 1e-5);
  const auto b = gqmp::solve_subproblem(p, e, 1e-5);
  CHECK((a.x_opt.array() == b.x_opt.array()).all());
  CHECK(a.objective_value == b.objective_value);
  CHECK(a.kkt_residual == b.kkt_residual);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("different feasible starts reach the same strictly concave optimum") {
  Mat c(2, 2);
  c << Complex(0.5, 0.5), Complex(-0.25, 0.1), Complex(0.3, -0.7), Complex(0.9, 0.0);
  Subproblem p;
  p.objective = shifted_quadratic(c);
  p.set.items.push_back(power_cap(2, 50.0));

  const auto a = gqmp::solve_subproblem(p, Mat::Zero(2, 2), 1e-6);
  Mat other(2, 2);
  other << Complex(1.0, -1.0), Complex(0.0, 2.0), Complex(-2.0, 0.0), Complex(0.5, 0.5);
  const auto b = gqmp::solve_subproblem(p, other, 1e-6);
  CHECK((a.x_opt - b.x_opt).norm() <= 1e-5);
  CHECK(a.objective_value == doctest::Approx(b.objective_value).epsilon(1e-9));
}

TEST_CASE("objective with a restricted domain is handled by step rejection") {
  const Mat c = column2(Complex(2.0, 0.0), Complex(0.0, 2.0));
  MatrixFunctionOracle guarded{
      [c](const Mat& x) {
        if (x.norm() > 1.5) throw gqmp::DomainError("outside the trust region");
        return 2.0 * (c.adjoint() * x).trace().real();
      },
      [c](const Mat& x) {
        if (x.norm() > 1.5) throw gqmp::DomainError("outside the trust region");
        return c;
      },
  };
  Subproblem p;
  p.objective = guarded;
  p.set.items.push_back(power_cap(2, 1.0));

  const auto sol = gqmp::solve_subproblem(p, 0.05 * Mat::Ones(2, 1), 1e-5);
  CHECK(sol.converged);
  CHECK((sol.x_opt - c / c.norm()).norm() <= 1e-4);
}

TEST_CASE("tighter tolerance tightens the certificate") {
  Mat c(2, 1);
  c << Complex(1.0, -0.5), Complex(0.25, 0.75);
  Subproblem p;
  p.objective = shifted_quadratic(c);
  p.set.items.push_back(power_cap(2, 10.0));

  const auto sol = gqmp::solve_subproblem(p, Mat::Zero(2, 1), 1e-7);
  CHECK(sol.converged);
  CHECK(sol.kkt_residual <= 1e-7);
}

TEST_CASE("infeasible starts are rejected") {
  const Mat c = column2(Complex(1.0, 0.0), Complex(0.0, 1.0));
  Subproblem p;
  p.objective = linear_objective(c);
  p.set.items.push_back(power_cap(2, 1.0));

  SUBCASE("quadratic set violated") {
    const Mat bad = 3.0 * Mat::Ones(2, 1);
    CHECK_THROWS_AS(gqmp::solve_subproblem(p, bad, 1e-5), std::invalid_argument);
  }
  SUBCASE("inequality violated beyond tolerance") {
    p.ineqs.push_back(ball_constraint(Mat::Zero(2, 1), 0.01));
    const Mat bad = 0.9 * c / c.norm();
    CHECK_THROWS_AS(gqmp::solve_subproblem(p, bad, 1e-5), std::invalid_argument);
  }
}

TEST_CASE("kkt residual reports the dominating error term") {
  Subproblem p;
  const Mat c1 = column2(Complex(0.0, 0.0), Complex(0.0, 0.0));
  p.objective = shifted_quadratic(c1);  // grad = -x
  p.ineqs.push_back(ball_constraint(Mat::Zero(2, 1), 1.0));
  p.set.items.push_back(power_cap(2, 4.0));

  Mat origin = Mat::Zero(2, 1);
  SUBCASE("exact stationary point scores zero") {
    CHECK(gqmp::kkt_residual(p, origin, {0.0}, {0.0}) == doctest::Approx(0.0));
  }
  SUBCASE("stationarity gap") {
    Mat x = column2(Complex(1.0, 0.0), Complex(0.0, 0.0));  // on the ball boundary
    // grad obj = -x, grad ineq = -x, so mu = 2 leaves residual norm 3.
    CHECK(gqmp::kkt_residual(p, x, {2.0}, {0.0}) == doctest::Approx(3.0));
  }
  SUBCASE("dual negativity and complementarity") {
    CHECK(gqmp::kkt_residual(p, origin, {-0.5}, {0.0}) == doctest::Approx(0.5));
    CHECK(gqmp::kkt_residual(p, origin, {0.25}, {0.0}) == doctest::Approx(0.25));  // mu * f = 0.25
  }
  SUBCASE("primal violation dominates") {
    Mat x = 3.0 * Mat::Ones(2, 1);  // ineq value 1 - 18 = -17, quad slack 4 - 18 = -14
    CHECK(gqmp::kkt_residual(p, x, {0.0}, {0.0}) == doctest::Approx(17.0));
  }
  SUBCASE("multiplier count mismatch throws") {
    CHECK_THROWS_AS(gqmp::kkt_residual(p, origin, {}, {0.0}), std::invalid_argument);
  }
}

TEST_CASE("multiplier fit recovers the exact dual at a boundary optimum") {
  const Mat c = column2(Complex(1.0, 2.0), Complex(-0.5, 0.25));
  Subproblem p;
  p.objective = linear_objective(c);
  p.set.items.push_back(power_cap(2, 1.0));

  const Mat x_star = c / c.norm();
  const auto fit = gqmp::fit_multipliers(p, x_star, 1e-6);
  REQUIRE(fit.quad_nu.size() == 1);
  CHECK(fit.quad_nu[0] == doctest::Approx(c.norm()).epsilon(1e-10));
  CHECK(fit.stationarity <= 1e-10);

  // Far from the boundary nothing is active and the fit is the bare gradient.
  const auto loose = gqmp::fit_multipliers(p, 0.1 * x_star, 1e-6);
  CHECK(loose.quad_nu[0] == 0.0);
  CHECK(loose.stationarity == doctest::Approx(c.norm()).epsilon(1e-12));
}
