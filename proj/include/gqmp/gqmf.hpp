#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gqmp/hermitian.hpp"

namespace gqmp {

// Monotonicity of a scalar matrix function on the PSD order: MND means the
// gradient is PSD everywhere (nondecreasing along W2 >= W1), MNI means the
// gradient is NSD (nonincreasing).
enum class Monotonicity { MND, MNI };

/// Differentiable convex scalar function of a Hermitian matrix, with its
/// gradient oracle and declared monotonicity. The gradient convention is
/// g(W + D) ~ g(W) + tr(D * grad) for Hermitian D.
struct ScalarMatrixFunction {
  std::string label;
  Monotonicity monotonicity = Monotonicity::MND;
  std::function<double(const HermitianMatrix&)> value;
  std::function<HermitianMatrix(const HermitianMatrix&)> gradient;
};

/// One composite term g(X^H A X): a scalar matrix function chained onto the
/// quadratic map with kernel A.
struct CompositeQMF {
  ScalarMatrixFunction g;
  HermitianMatrix a;
};

struct GqmfTerm {
  double alpha = 0.0;
  CompositeQMF composite;
};

/// Weighted sum of composite terms, f(X) = sum_k alpha_k g_k(X^H A_k X),
/// over n x r complex matrices X.
struct GeneralizedQMF {
  int rows = 0;  // n: rows of X, dimension of every A_k
  int cols = 0;  // r: columns of X, domain dimension of every g_k
  std::vector<GqmfTerm> terms;
};

double eval_gqmf(const GeneralizedQMF& f, const Mat& x);

/// d/dX* of eval_gqmf: sum_k alpha_k A_k X G_k with G_k the gradient of g_k
/// at X^H A_k X. Central finite differences on the real/imaginary coordinates
/// recover 2*Re / 2*Im of the returned entries.
Mat grad_gqmf(const GeneralizedQMF& f, const Mat& x);

/// Throws std::invalid_argument when term dimensions are inconsistent with
/// the declared (rows, cols) shape.
void check_gqmf(const GeneralizedQMF& f);

struct ValidationReport {
  int trials = 0;
  int convexity_violations = 0;
  int monotonicity_violations = 0;
};

/// Samples random PSD matrices of the given dimension and counts violations
/// of midpoint convexity and of the declared monotonicity tag. A correctly
/// tagged convex function reports zero on both counts.
ValidationReport validate_function(const ScalarMatrixFunction& g, int dim, int trials,
                                   std::uint64_t seed);

/// One quadratic feasibility constraint scale * tr(X^H Theta X) <= budget.
struct QuadraticConstraint {
  HermitianMatrix theta;  // PSD
  double budget = 0.0;
  double scale = 1.0;
};

struct QuadraticConstraintSet {
  std::vector<QuadraticConstraint> items;

  /// slack_k(X) = budget_k - scale_k * tr(X^H Theta_k X); all >= 0 when feasible.
  RealVec slacks(const Mat& x) const;
  bool feasible(const Mat& x, double tol = 0.0) const;
};

/// Standard-form problem: maximize objective(X) subject to constraints(X) >= 0
/// elementwise and X inside the quadratic constraint set.
struct ProblemInstance {
  GeneralizedQMF objective;
  std::vector<GeneralizedQMF> constraints;
  QuadraticConstraintSet set;
  int rows = 0;
  int cols = 0;
};

void check_problem(const ProblemInstance& p);

// Built-in scalar matrix functions. All are convex with correct tags and
// exact gradients; the approximation-family built-ins live in mi.hpp.

/// g(W) = tr(W) - c. MND; gradient is the identity.
ScalarMatrixFunction trace_affine(double c);

/// g(W) = -log2 det(I + W). MNI; gradient -log2(e) * (I+W)^{-1}.
/// Domain: I + W nonsingular positive definite.
ScalarMatrixFunction neg_log2det();

/// g(W) = -log2 det(I + M W M) for a fixed PSD mask M (typically a 0/1 block
/// projector). MNI. Used for interference-only Gaussian rate terms under a
/// stacked precoder.
ScalarMatrixFunction neg_log2det_masked(const HermitianMatrix& mask);

/// g(W) = +log2 det(I + W). Deliberately NOT convex; ships only so that
/// validate_function has a known mis-taggable function to catch.
ScalarMatrixFunction pos_log2det();

}  // namespace gqmp
