#include "gqmp/surrogate.hpp"

#include <cmath>

#include "gqmp/rng.hpp"

namespace gqmp {

namespace {

// Shared precomputation: with Aq the kernel half kept quadratic and Al the
// half linearized around x0, both bounds use the Hermitian argument
//   S(X) = X^H Aq X + X^H (Al x0) + (Al x0)^H X - x0^H Al x0,
// which matches X^H A X at X = x0 (up to the psd_split truncation).
struct BoundParts {
  Mat aq;      // kernel of the quadratic piece
  Mat lin;     // Al * x0
  Mat c_lin;   // x0^H Al x0
};

BoundParts make_parts(const HermitianMatrix& a, const Mat& x0, bool quad_is_positive) {
  const PsdSplit s = psd_split(a);
  const Mat& aq = quad_is_positive ? s.positive.mat() : s.negative.mat();
  const Mat& al = quad_is_positive ? s.negative.mat() : s.positive.mat();
  return {aq, al * x0, x0.adjoint() * al * x0};
}

HermitianMatrix bound_argument(const BoundParts& p, const Mat& x) {
  Mat s = x.adjoint() * p.aq * x + x.adjoint() * p.lin + p.lin.adjoint() * x - p.c_lin;
  return HermitianMatrix(0.5 * (s + s.adjoint().eval()));
}

}  // namespace

MatrixFunctionOracle lower_bound(const CompositeQMF& c, const Mat& x0) {
  const bool mnd = c.g.monotonicity == Monotonicity::MND;
  // MND linearizes the PSD half (keeps the NSD half quadratic); MNI swaps.
  const BoundParts p = make_parts(c.a, x0, /*quad_is_positive=*/!mnd);

  const HermitianMatrix w0 = quad_map(x0, c.a);
  const HermitianMatrix g0 = c.g.gradient(w0);
  const double v0 = c.g.value(w0);
  const double offset = v0 - trace_product(w0, g0);

  const Mat gm = g0.mat();
  const Mat lin_g = p.lin * gm;          // gradient's affine coefficient
  const double c_lin_g = (p.c_lin * gm).trace().real();
  const Mat aq = p.aq;

  MatrixFunctionOracle o;
  o.value = [aq, gm, lin_g, c_lin_g, offset](const Mat& x) {
    const double quad = (x.adjoint() * aq * x * gm).trace().real();
    const double lin = 2.0 * (x.adjoint() * lin_g).trace().real();
    return quad + lin - c_lin_g + offset;
  };
  o.gradient = [aq, gm, lin_g](const Mat& x) -> Mat { return aq * x * gm + lin_g; };
  return o;
}

MatrixFunctionOracle upper_bound(const CompositeQMF& c, const Mat& x0) {
  const bool mnd = c.g.monotonicity == Monotonicity::MND;
  // MND keeps the PSD half quadratic (dominates from above); MNI swaps.
  const BoundParts p = make_parts(c.a, x0, /*quad_is_positive=*/mnd);

  const auto g = c.g;  // copy of the oracles
  const BoundParts parts = p;

  MatrixFunctionOracle o;
  o.value = [g, parts](const Mat& x) { return g.value(bound_argument(parts, x)); };
  o.gradient = [g, parts](const Mat& x) -> Mat {
    const HermitianMatrix u = bound_argument(parts, x);
    const Mat gu = g.gradient(u).mat();
    return parts.aq * x * gu + parts.lin * gu;
  };
  return o;
}

SurrogateGQMF::SurrogateGQMF(const GeneralizedQMF& f, const Mat& x0) : x0_(x0) {
  check_gqmf(f);
  if (x0.rows() != f.rows || x0.cols() != f.cols) {
    throw std::invalid_argument("surrogate_gqmf: anchor is " + std::to_string(x0.rows()) + "x" +
                                std::to_string(x0.cols()) + ", expected " +
                                std::to_string(f.rows) + "x" + std::to_string(f.cols));
  }
  for (const auto& t : f.terms) {
    if (t.alpha > 0.0) {
      terms_.emplace_back(t.alpha, lower_bound(t.composite, x0));
    } else if (t.alpha < 0.0) {
      terms_.emplace_back(t.alpha, upper_bound(t.composite, x0));
    }
  }
}

double SurrogateGQMF::value(const Mat& x) const {
  double acc = 0.0;
  for (const auto& [alpha, o] : terms_) acc += alpha * o.value(x);
  return acc;
}

Mat SurrogateGQMF::gradient(const Mat& x) const {
  Mat g = Mat::Zero(x0_.rows(), x0_.cols());
  for (const auto& [alpha, o] : terms_) g += alpha * o.gradient(x);
  return g;
}

MatrixFunctionOracle SurrogateGQMF::as_oracle() const {
  const SurrogateGQMF copy = *this;
  return {[copy](const Mat& x) { return copy.value(x); },
          [copy](const Mat& x) { return copy.gradient(x); }};
}

TangencyReport tangency_check(const GeneralizedQMF& f, const Mat& x0, int samples,
                              std::uint64_t seed) {
  const SurrogateGQMF s(f, x0);
  TangencyReport rep;
  rep.value_gap_at_anchor = std::abs(s.value(x0) - eval_gqmf(f, x0));
  rep.grad_gap_at_anchor = (s.gradient(x0) - grad_gqmf(f, x0)).norm();

  const double scale = x0.norm() + 1.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const double radius = scale * (0.25 + 0.75 * uniform_unit(seed, 5, k));
    const Mat x = x0 + radius * gaussian_matrix(static_cast<int>(x0.rows()),
                                                static_cast<int>(x0.cols()), seed,
                                                100 + static_cast<std::uint64_t>(k));
    try {
      const double gap = s.value(x) - eval_gqmf(f, x);
      worst = std::max(worst, gap);
      ++rep.samples_checked;
    } catch (const DomainError&) {
      // Skip samples outside either domain; the sandwich only binds on it.
    }
  }
  rep.max_sandwich_violation = rep.samples_checked > 0 ? worst : 0.0;
  return rep;
}

}  // namespace gqmp
