#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "gqmp/subsolver.hpp"

namespace gqmp {

struct SolverOptions {
  double eps = 1e-4;            // stop when the objective change falls below this
  int max_outer = 100;
  double subproblem_tol = 0.0;  // <= 0 selects eps / 10
  double beta_start = -5.0;     // min-smoothing schedule (more negative = sharper)
  double beta_growth = 2.0;
  double beta_cap = -200.0;
  bool emit_timing = false;     // keep wall_time_ms at 0 for reproducible output
};

enum class StopReason { kTolerance, kIterationCap, kSubsolverFailure };

struct IterateRecord {
  int n = 0;
  Mat x;
  double objective = 0.0;     // s_n
  double kkt_residual = 0.0;  // subproblem certificate for the step that produced x
  double wall_time_ms = 0.0;
};

struct SolveTrace {
  std::vector<IterateRecord> iterates;
  Mat x_final;
  double objective = 0.0;
  bool converged = false;
  StopReason stop_reason = StopReason::kIterationCap;
  std::vector<double> ineq_multipliers;
  std::vector<double> quad_multipliers;
  double surrogate_kkt = 0.0;  // residual of the last inner solve
  double original_kkt = 0.0;   // residual at x_final with the source gradients
  double beta_final = 0.0;     // min-smoothing sharpness at termination; 0 when unused
  std::vector<int> lambdas;    // per-user activity at termination (clipped sums only)
  bool slater_warning = false; // an inequality slack collapsed below 1e-10
};

/// Value/gradient view of a source GQMF, suitable for the inner solver and
/// for residuals computed against the original (unsurrogated) problem.
MatrixFunctionOracle gqmf_oracle(const GeneralizedQMF& f);

/// Outer ascent loop: at each anchor, replace the objective and every
/// inequality by their concave tangent minorants, solve the resulting concave
/// subproblem, and move to its optimum. The recorded objective sequence is
/// nondecreasing (within 1e-8), and termination additionally requires the
/// first-order residual of the original problem at the final iterate to fall
/// below 10 * eps.
SolveTrace solve_gqmp(const ProblemInstance& p, const Mat& x0, const SolverOptions& opts = {});

/// Worst-case (min over j) rate maximization with a fixed smoothing sharpness
/// beta < 0: maximizes (1/beta) ln sum_j exp(beta f_j(X)). The smoothed value
/// is within ln(L)/|beta| of min_j f_j everywhere. extra_ineqs enter as
/// constraints >= 0.
SolveTrace solve_minrate(const std::vector<GeneralizedQMF>& fs,
                         const std::vector<GeneralizedQMF>& extra_ineqs,
                         const QuadraticConstraintSet& set, const Mat& x0, double beta,
                         const SolverOptions& opts = {});

/// Sum of clipped per-user worst-case rates: maximize
/// sum_i max(0, min_j f_ij(X)). Each outer round freezes the user activity
/// vector (lambda_i = 1 iff min_j f_ij(anchor) >= 0, ties activate), smooths
/// the inner min with the scheduled beta, and ascends; a candidate that would
/// lower the true clipped objective is rejected and the smoothing tightened
/// instead, so the recorded trace is monotone.
SolveTrace solve_sum_secrecy(const std::vector<std::vector<GeneralizedQMF>>& f_matrix,
                             const QuadraticConstraintSet& set, const Mat& x0,
                             const SolverOptions& opts = {});

struct EnumerationResult {
  double best_value = 0.0;
  std::vector<int> best_subset;  // empty means the all-off baseline of 0
  int subproblems_solved = 0;
  std::vector<std::pair<std::vector<int>, double>> branch_values;
};

/// Exhaustive reference for the clipped-sum problem: solve one smoothed
/// ascent per non-empty user subset (2^I - 1 of them, I <= 4 enforced),
/// maximizing the unclipped sum over the subset, and keep the best against
/// the all-off baseline of 0.
EnumerationResult enumerate_oracle(const std::vector<std::vector<GeneralizedQMF>>& f_matrix,
                                   const QuadraticConstraintSet& set, const Mat& x0,
                                   const SolverOptions& opts = {});

/// min_j f_j(x) evaluated on the source functions.
double min_rate_true(const std::vector<GeneralizedQMF>& fs, const Mat& x);

/// (1/beta) ln sum_j exp(beta f_j(x)), computed stably.
double smoothed_min_true(const std::vector<GeneralizedQMF>& fs, double beta, const Mat& x);

/// sum_i max(0, min_j f_ij(x)).
double clipped_minsum_true(const std::vector<std::vector<GeneralizedQMF>>& f_matrix, const Mat& x);

/// Activity vector: 1 where min_j f_ij(x) >= 0 (a tie activates).
std::vector<int> activity_vector(const std::vector<std::vector<GeneralizedQMF>>& f_matrix,
                                 const Mat& x);

struct MultiStartOutcome {
  SolveTrace best;
  std::uint64_t best_seed = 0;
  std::vector<std::pair<std::uint64_t, double>> values;  // (seed, objective) in input order
};

/// Run one solve per seed and keep the best trace; ties broken toward the
/// smaller seed so the outcome is independent of evaluation order.
MultiStartOutcome multi_start(const std::vector<std::uint64_t>& seeds,
                              const std::function<Mat(std::uint64_t)>& make_start,
                              const std::function<SolveTrace(const Mat&)>& solve_one);

}  // namespace gqmp
