#pragma once

#include "gqmp/gqmf.hpp"

namespace gqmp {

/// Differentiable real-valued function of a complex matrix, with d/dX*
/// gradient. The closures returned by the bound constructors fix everything
/// (PSD split of the kernel, anchor gradient) at construction time, so
/// evaluation inside inner solvers is cheap and deterministic.
struct MatrixFunctionOracle {
  std::function<double(const Mat&)> value;
  std::function<Mat(const Mat&)> gradient;
};

/// Concave global lower bound on g(X^H A X), tangent at the anchor:
/// the convex quadratic part of the argument is replaced by its affine
/// linearization at x0 (using the PSD or NSD half of A according to the
/// declared monotonicity) and g itself by its supporting hyperplane at
/// the anchor value of the argument.
MatrixFunctionOracle lower_bound(const CompositeQMF& c, const Mat& x0);

/// Convex global upper bound on g(X^H A X), tangent at the anchor: g kept
/// intact, its matrix argument replaced by a PSD-dominating surrogate that
/// matches at x0. Evaluations may throw DomainError when the surrogate
/// argument leaves the domain of g; line searches treat that as a rejected
/// step.
MatrixFunctionOracle upper_bound(const CompositeQMF& c, const Mat& x0);

/// Concave tangent minorant of a full GQMF: lower bounds for positive-weight
/// terms, upper bounds for negative-weight terms (the negative weight flips
/// them into concave contributions). Zero-weight terms are dropped.
class SurrogateGQMF {
 public:
  SurrogateGQMF(const GeneralizedQMF& f, const Mat& x0);

  double value(const Mat& x) const;
  Mat gradient(const Mat& x) const;
  const Mat& anchor() const { return x0_; }
  MatrixFunctionOracle as_oracle() const;

 private:
  Mat x0_;
  std::vector<std::pair<double, MatrixFunctionOracle>> terms_;
};

inline SurrogateGQMF surrogate_gqmf(const GeneralizedQMF& f, const Mat& x0) {
  return SurrogateGQMF(f, x0);
}

struct TangencyReport {
  double value_gap_at_anchor = 0.0;
  double grad_gap_at_anchor = 0.0;
  double max_sandwich_violation = 0.0;  // max over samples of surrogate - source
  int samples_checked = 0;
};

/// Diagnostic: builds the surrogate at x0 and measures (a) anchor value and
/// gradient gaps against the source GQMF, (b) the worst violation of
/// surrogate <= source over random samples around the anchor. Samples where
/// either function leaves its domain are skipped.
TangencyReport tangency_check(const GeneralizedQMF& f, const Mat& x0, int samples,
                              std::uint64_t seed);

}  // namespace gqmp
