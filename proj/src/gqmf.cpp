#include "gqmp/gqmf.hpp"

#include <cmath>

#include "gqmp/rng.hpp"

namespace gqmp {

void check_gqmf(const GeneralizedQMF& f) {
  if (f.rows <= 0 || f.cols <= 0) {
    throw std::invalid_argument("GeneralizedQMF: shape (" + std::to_string(f.rows) + "," +
                                std::to_string(f.cols) + ") must be positive");
  }
  for (size_t k = 0; k < f.terms.size(); ++k) {
    const auto& t = f.terms[k];
    if (t.composite.a.dim() != f.rows) {
      throw std::invalid_argument("GeneralizedQMF: term " + std::to_string(k) + " kernel is " +
                                  std::to_string(t.composite.a.dim()) + "x" +
                                  std::to_string(t.composite.a.dim()) + ", expected " +
                                  std::to_string(f.rows));
    }
    if (!t.composite.g.value || !t.composite.g.gradient) {
      throw std::invalid_argument("GeneralizedQMF: term " + std::to_string(k) +
                                  " is missing a value or gradient oracle");
    }
  }
}

double eval_gqmf(const GeneralizedQMF& f, const Mat& x) {
  double acc = 0.0;
  for (const auto& t : f.terms) {
    if (t.alpha == 0.0) continue;
    acc += t.alpha * t.composite.g.value(quad_map(x, t.composite.a));
  }
  return acc;
}

Mat grad_gqmf(const GeneralizedQMF& f, const Mat& x) {
  Mat g = Mat::Zero(x.rows(), x.cols());
  for (const auto& t : f.terms) {
    if (t.alpha == 0.0) continue;
    const HermitianMatrix gk = t.composite.g.gradient(quad_map(x, t.composite.a));
    g += t.alpha * (t.composite.a.mat() * x * gk.mat());
  }
  return g;
}

ValidationReport validate_function(const ScalarMatrixFunction& g, int dim, int trials,
                                   std::uint64_t seed) {
  ValidationReport rep;
  rep.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t s = derive_seed({seed, static_cast<std::uint64_t>(t)});
    const Mat b1 = gaussian_matrix(dim, dim, s, 1);
    const Mat b2 = gaussian_matrix(dim, dim, s, 2);
    const Mat b3 = gaussian_matrix(dim, dim, s, 3);
    const HermitianMatrix w1((b1.adjoint() * b1 / double(dim)).eval());
    const HermitianMatrix w2((b2.adjoint() * b2 / double(dim)).eval());
    const HermitianMatrix inc((b3.adjoint() * b3 / double(dim)).eval());

    try {
      // Midpoint convexity.
      const HermitianMatrix mid(0.5 * (w1.mat() + w2.mat()));
      const double lhs = g.value(mid);
      const double rhs = 0.5 * g.value(w1) + 0.5 * g.value(w2);
      if (lhs > rhs + 1e-9 * (1.0 + std::abs(lhs) + std::abs(rhs))) ++rep.convexity_violations;

      // Monotonicity along a PSD increment.
      const double lo = g.value(w1);
      const double hi = g.value(HermitianMatrix(w1.mat() + inc.mat()));
      const double tol = 1e-9 * (1.0 + std::abs(lo) + std::abs(hi));
      const bool ok = g.monotonicity == Monotonicity::MND ? hi >= lo - tol : hi <= lo + tol;
      if (!ok) ++rep.monotonicity_violations;
    } catch (const DomainError&) {
      // PSD samples outside the domain don't count against the function.
    }
  }
  return rep;
}

RealVec QuadraticConstraintSet::slacks(const Mat& x) const {
  RealVec s(items.size());
  for (size_t k = 0; k < items.size(); ++k) {
    const double used = quad_map(x, items[k].theta).mat().trace().real();
    s(k) = items[k].budget - items[k].scale * used;
  }
  return s;
}

bool QuadraticConstraintSet::feasible(const Mat& x, double tol) const {
  const RealVec s = slacks(x);
  return s.size() == 0 || s.minCoeff() >= -tol;
}

void check_problem(const ProblemInstance& p) {
  if (p.rows <= 0 || p.cols <= 0) {
    throw std::invalid_argument("ProblemInstance: positive (rows, cols) required");
  }
  if (p.objective.rows != p.rows || p.objective.cols != p.cols) {
    throw std::invalid_argument("ProblemInstance: objective shape mismatch");
  }
  check_gqmf(p.objective);
  for (const auto& c : p.constraints) {
    if (c.rows != p.rows || c.cols != p.cols) {
      throw std::invalid_argument("ProblemInstance: constraint shape mismatch");
    }
    check_gqmf(c);
  }
  if (p.set.items.empty()) {
    throw std::invalid_argument("ProblemInstance: the feasible set needs at least one "
                                "quadratic constraint to be compact");
  }
  for (size_t k = 0; k < p.set.items.size(); ++k) {
    const auto& it = p.set.items[k];
    if (it.theta.dim() != p.rows) {
      throw std::invalid_argument("ProblemInstance: quadratic constraint " + std::to_string(k) +
                                  " has kernel dimension " + std::to_string(it.theta.dim()) +
                                  ", expected " + std::to_string(p.rows));
    }
    if (!(it.budget > 0.0) || !(it.scale > 0.0)) {
      throw std::invalid_argument("ProblemInstance: quadratic constraint " + std::to_string(k) +
                                  " needs positive scale and budget");
    }
  }
}

namespace {

constexpr double kLog2E = 1.4426950408889634;  // log2(e)

// Eigen-based log2 det(I + W) and (I+W)^{-1}; throws DomainError when the
// shifted matrix is not positive definite.
struct ShiftedLogDet {
  double value;
  Mat inverse;
};

ShiftedLogDet shifted_log2det(const HermitianMatrix& w, const char* who) {
  const EigResult e = hermitian_eig(w);
  double v = 0.0;
  for (int i = 0; i < e.values.size(); ++i) {
    const double d = 1.0 + e.values(i);
    if (d <= 1e-14) {
      throw DomainError(std::string(who) + ": I + W is not positive definite (eigenvalue " +
                        std::to_string(e.values(i)) + ")");
    }
    v += std::log2(d);
  }
  Mat inv = Mat::Zero(w.dim(), w.dim());
  for (int i = 0; i < e.values.size(); ++i) {
    inv += (1.0 / (1.0 + e.values(i))) * (e.vectors.col(i) * e.vectors.col(i).adjoint());
  }
  return {v, inv};
}

}  // namespace

ScalarMatrixFunction trace_affine(double c) {
  ScalarMatrixFunction g;
  g.label = "trace_affine(" + std::to_string(c) + ")";
  g.monotonicity = Monotonicity::MND;
  g.value = [c](const HermitianMatrix& w) { return w.mat().trace().real() - c; };
  g.gradient = [](const HermitianMatrix& w) { return HermitianMatrix::identity(w.dim()); };
  return g;
}

ScalarMatrixFunction neg_log2det() {
  ScalarMatrixFunction g;
  g.label = "neg_log2det";
  g.monotonicity = Monotonicity::MNI;
  g.value = [](const HermitianMatrix& w) { return -shifted_log2det(w, "neg_log2det").value; };
  g.gradient = [](const HermitianMatrix& w) {
    const Mat inv = shifted_log2det(w, "neg_log2det").inverse;
    return HermitianMatrix((-kLog2E * 0.5 * (inv + inv.adjoint())).eval());
  };
  return g;
}

ScalarMatrixFunction neg_log2det_masked(const HermitianMatrix& mask) {
  ScalarMatrixFunction g;
  const Mat m = mask.mat();
  g.label = "neg_log2det_masked";
  g.monotonicity = Monotonicity::MNI;
  g.value = [m](const HermitianMatrix& w) {
    const HermitianMatrix mwm((m * w.mat() * m).eval());
    return -shifted_log2det(mwm, "neg_log2det_masked").value;
  };
  g.gradient = [m](const HermitianMatrix& w) {
    const HermitianMatrix mwm((m * w.mat() * m).eval());
    const Mat inv = shifted_log2det(mwm, "neg_log2det_masked").inverse;
    const Mat grad = -kLog2E * (m * inv * m);
    return HermitianMatrix((0.5 * (grad + grad.adjoint())).eval());
  };
  return g;
}

ScalarMatrixFunction pos_log2det() {
  ScalarMatrixFunction g = neg_log2det();
  g.label = "pos_log2det";
  g.monotonicity = Monotonicity::MNI;  // wrong on purpose; see header
  const auto v = g.value;
  const auto gr = g.gradient;
  g.value = [v](const HermitianMatrix& w) { return -v(w); };
  g.gradient = [gr](const HermitianMatrix& w) { return -1.0 * gr(w); };
  return g;
}

}  // namespace gqmp
