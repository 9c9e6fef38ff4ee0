#pragma once

#include "gqmp/surrogate.hpp"

namespace gqmp {

/// Inner problem solved once per outer MM iteration:
///   maximize objective(X)  s.t.  ineqs_j(X) >= 0,  X in set,
/// with a concave objective and concave inequality functions.
struct Subproblem {
  MatrixFunctionOracle objective;
  std::vector<MatrixFunctionOracle> ineqs;
  QuadraticConstraintSet set;
};

struct SubproblemSolution {
  Mat x_opt;
  double objective_value = 0.0;
  std::vector<double> ineq_multipliers;  // for ineqs_j(X) >= 0
  std::vector<double> quad_multipliers;  // for the quadratic set
  double kkt_residual = 0.0;
  int iterations = 0;  // total ascent steps across barrier stages
  bool converged = false;
};

/// First-order interior-point solve: log barrier over every inequality,
/// gradient ascent with Armijo backtracking (c = 1e-4, shrink 0.5, initial
/// step 1.0) for centering, barrier weight divided by 10 per stage. Iteration
/// caps: 200 centering steps per stage, 50 stages; hitting a cap returns the
/// best point found with converged = false rather than failing silently.
///
/// Pre: x_init strictly inside the quadratic set, ineqs(x_init) > -tol.
/// Post: kkt_residual <= tol on success and objective_value >=
/// objective(x_init) - 1e-10 whenever x_init is feasible (warm-start ascent).
/// Throws std::invalid_argument on an infeasible start and std::runtime_error
/// when feasibility restoration cannot produce an interior point.
SubproblemSolution solve_subproblem(const Subproblem& p, const Mat& x_init, double tol);

/// Max of the four KKT error terms at (x, mu, nu): stationarity
/// ||grad obj + sum mu_j grad ineq_j - sum nu_k scale_k Theta_k x||_F,
/// primal violation, dual negativity, and complementarity |multiplier*slack|.
double kkt_residual(const Subproblem& p, const Mat& x, const std::vector<double>& mu,
                    const std::vector<double>& nu);

struct MultiplierFit {
  std::vector<double> ineq_mu;
  std::vector<double> quad_nu;
  double stationarity = 0.0;
  /// Lagrangian gradient at the fitted multipliers; its norm is
  /// `stationarity` and it is orthogonal to the supported constraint
  /// normals, so it doubles as a feasible ascent direction.
  Mat residual;
};

/// Nonnegative least-squares fit of multipliers supported on the near-active
/// constraints (slack <= active_tol), minimizing the stationarity norm at x.
/// Exact active-set enumeration; deterministic.
MultiplierFit fit_multipliers(const Subproblem& p, const Mat& x, double active_tol);

}  // namespace gqmp
