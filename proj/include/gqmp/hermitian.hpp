#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gqmp {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using RealVec = Eigen::VectorXd;

/// Thrown when a scalar matrix function is evaluated outside its domain
/// (e.g. log-det of a singular shift). Line searches catch this and
/// backtrack; everywhere else it indicates a solver bug.
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Square complex matrix with A(i,j) == conj(A(j,i)).
///
/// Construction validates the symmetry to 1e-12 relative tolerance (naming
/// the first offending entry pair) and then symmetrizes exactly, so quadratic
/// forms and traces against other Hermitian matrices are real to machine
/// precision. For a matrix that is already exactly Hermitian the stored
/// entries are bit-identical to the input.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const Mat& a);

  static HermitianMatrix zero(int n) { return HermitianMatrix(Mat::Zero(n, n)); }
  static HermitianMatrix identity(int n) { return HermitianMatrix(Mat::Identity(n, n)); }
  static HermitianMatrix diagonal(const RealVec& d);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& mat() const { return m_; }
  Complex operator()(int i, int j) const { return m_(i, j); }

 private:
  Mat m_;
};

HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b);
HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b);
HermitianMatrix operator*(double s, const HermitianMatrix& a);

/// tr(A*B) for Hermitian A, B — real by symmetry; the imaginary residue is
/// dropped after computation.
double trace_product(const HermitianMatrix& a, const HermitianMatrix& b);

struct EigResult {
  RealVec values;  // descending
  Mat vectors;     // unitary, columns match values
};

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
/// Fixed sweep order and a stable final sort keep the result deterministic
/// for a given input. Intended for the small dimensions used here (<= ~16).
EigResult hermitian_eig(const HermitianMatrix& a);

struct PsdSplit {
  HermitianMatrix positive;  // PSD
  HermitianMatrix negative;  // NSD
};

/// Splits A into PSD + NSD parts by eigenvalue sign. Eigenvalues within
/// 1e-10 * max|lambda| of zero contribute to neither part.
PsdSplit psd_split(const HermitianMatrix& a);

/// X^H A X. The defining quadratic map: an n x r matrix X and an n x n
/// Hermitian A produce an r x r Hermitian result.
HermitianMatrix quad_map(const Mat& x, const HermitianMatrix& a);

}  // namespace gqmp
