#include "gqmp/hermitian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace gqmp {

namespace {

// First entry pair violating conjugate symmetry at 1e-12 relative tolerance,
// or (-1, -1) when the matrix passes.
std::pair<int, int> find_asymmetry(const Mat& a) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = i; j < a.cols(); ++j) {
      if (std::abs(a(i, j) - std::conj(a(j, i))) > 1e-12 * scale) return {i, j};
    }
  }
  return {-1, -1};
}

}  // namespace

HermitianMatrix::HermitianMatrix(const Mat& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("HermitianMatrix: matrix is " + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + ", not square");
  }
  if (a.size() > 0) {
    auto [i, j] = find_asymmetry(a);
    if (i >= 0) {
      throw std::invalid_argument(
          "HermitianMatrix: entries (" + std::to_string(i) + "," + std::to_string(j) +
          ") and (" + std::to_string(j) + "," + std::to_string(i) +
          ") are not conjugate within 1e-12 relative tolerance");
    }
  }
  m_ = 0.5 * (a + a.adjoint().eval());
}

HermitianMatrix HermitianMatrix::diagonal(const RealVec& d) {
  Mat m = Mat::Zero(d.size(), d.size());
  for (int i = 0; i < d.size(); ++i) m(i, i) = d(i);
  return HermitianMatrix(m);
}

HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
  return HermitianMatrix(a.mat() + b.mat());
}

HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b) {
  return HermitianMatrix(a.mat() - b.mat());
}

HermitianMatrix operator*(double s, const HermitianMatrix& a) {
  return HermitianMatrix(s * a.mat());
}

double trace_product(const HermitianMatrix& a, const HermitianMatrix& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("trace_product: dimension mismatch " +
                                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  return (a.mat() * b.mat()).trace().real();
}

EigResult hermitian_eig(const HermitianMatrix& a) {
  const int n = a.dim();
  Mat m = a.mat();
  Mat v = Mat::Identity(n, n);

  const double norm = std::max(m.norm(), 1e-300);
  const double stop = 1e-14 * norm;
  const int max_sweeps = 100;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += 2.0 * std::norm(m(p, q));
    if (std::sqrt(off) <= stop) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const Complex b = m(p, q);
        const double babs = std::abs(b);
        if (babs <= 1e-300) continue;
        // Unitary 2x2 rotation zeroing m(p,q): with ph = b/|b| and
        // tau = (m_qq - m_pp)/(2|b|), the inner rotation angle satisfies
        // t^2 + 2*tau*t - 1 = 0; the smaller root keeps the rotation minimal.
        const Complex ph = b / babs;
        const double tau = (m(q, q).real() - m(p, p).real()) / (2.0 * babs);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::hypot(1.0, tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        // Columns p, q of m and of the accumulated basis: right-multiply by U.
        for (int r = 0; r < n; ++r) {
          const Complex mp = m(r, p), mq = m(r, q);
          m(r, p) = c * mp - s * std::conj(ph) * mq;
          m(r, q) = s * ph * mp + c * mq;
          const Complex vp = v(r, p), vq = v(r, q);
          v(r, p) = c * vp - s * std::conj(ph) * vq;
          v(r, q) = s * ph * vp + c * vq;
        }
        // Rows p, q: left-multiply by U^H.
        for (int r = 0; r < n; ++r) {
          const Complex mp = m(p, r), mq = m(q, r);
          m(p, r) = c * mp - s * ph * mq;
          m(q, r) = s * std::conj(ph) * mp + c * mq;
        }
        m(p, q) = Complex(0, 0);
        m(q, p) = Complex(0, 0);
        m(p, p) = Complex(m(p, p).real(), 0);
        m(q, q) = Complex(m(q, q).real(), 0);
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return m(i, i).real() > m(j, j).real(); });

  EigResult out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    out.values(k) = m(order[k], order[k]).real();
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

PsdSplit psd_split(const HermitianMatrix& a) {
  const int n = a.dim();
  const EigResult eig = hermitian_eig(a);
  const double lmax = eig.values.size() > 0 ? eig.values.cwiseAbs().maxCoeff() : 0.0;
  const double tau = 1e-10 * lmax;

  Mat pos = Mat::Zero(n, n);
  Mat neg = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double l = eig.values(k);
    if (l > tau) {
      pos += l * (eig.vectors.col(k) * eig.vectors.col(k).adjoint());
    } else if (l < -tau) {
      neg += l * (eig.vectors.col(k) * eig.vectors.col(k).adjoint());
    }
  }
  return {HermitianMatrix(0.5 * (pos + pos.adjoint().eval())),
          HermitianMatrix(0.5 * (neg + neg.adjoint().eval()))};
}

HermitianMatrix quad_map(const Mat& x, const HermitianMatrix& a) {
  if (x.rows() != a.dim()) {
    throw std::invalid_argument("quad_map: X has " + std::to_string(x.rows()) +
                                " rows but A is " + std::to_string(a.dim()) + "x" +
                                std::to_string(a.dim()));
  }
  Mat w = x.adjoint() * a.mat() * x;
  return HermitianMatrix(0.5 * (w + w.adjoint().eval()));
}

}  // namespace gqmp
