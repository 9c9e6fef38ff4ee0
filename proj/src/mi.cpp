#include "gqmp/mi.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gqmp/rng.hpp"

namespace gqmp {
namespace {

constexpr double kLog2E = 1.4426950408889634;  // 1/ln(2)

double pow_int_neg(double t, int n) {
  const double inv = 1.0 / t;
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= inv;
  return r;
}

double quad_form(const Eigen::VectorXcd& d, const HermitianMatrix& w) {
  return std::real(d.dot(w.mat() * d));
}

Eigen::VectorXcd noise_draw(std::uint64_t seed, int sample, int dim) {
  Eigen::VectorXcd n(dim);
  for (int j = 0; j < dim; ++j)
    n(j) = complex_gaussian(seed, static_cast<std::uint64_t>(sample), static_cast<std::uint64_t>(j));
  return n;
}

// Shared Monte Carlo kernel over a frozen noise set. Each pair (m, k) scores
// a_mk = -(q_u + 2 Re(n^H v_u)) with u = pair_index(m, k); per transmitted
// symbol m the kernel accumulates the log-sum-exp deficit and, in stats
// mode, the posterior error statistics.
struct McStats {
  double deficit = 0.0;            // avg over (m, s) of log2 sum_k exp(a_mk)
  Mat phi;                         // avg svec svec^H
  Mat cross;                       // avg n svec^H
  std::vector<double> pair_weight; // avg posterior weight mass per unique diff
};

McStats mc_kernel(const std::vector<Eigen::VectorXcd>& v, const std::vector<double>& q,
                  const DifferenceTable& table, int noise_dim, const MCConfig& mc,
                  bool want_stats) {
  const int m_count = table.symbol_count;
  const std::size_t u_count = table.diffs.size();
  const int dims = table.dims;

  McStats out;
  if (want_stats) {
    out.phi = Mat::Zero(dims, dims);
    out.cross = Mat::Zero(noise_dim, dims);
    out.pair_weight.assign(u_count, 0.0);
  }

  std::vector<double> a(u_count);
  std::vector<double> ex(static_cast<std::size_t>(m_count));
  double deficit_sum = 0.0;

  for (int s = 0; s < mc.noise_samples; ++s) {
    const Eigen::VectorXcd n = noise_draw(mc.seed, s, noise_dim);
    for (std::size_t u = 0; u < u_count; ++u)
      a[u] = -(q[u] + 2.0 * std::real(v[u].dot(n)));

    for (int m = 0; m < m_count; ++m) {
      const int* row = table.index.data() + static_cast<std::size_t>(m) * m_count;
      double amax = 0.0;  // the k = m pair always scores exactly 0
      for (int k = 0; k < m_count; ++k) amax = std::max(amax, a[static_cast<std::size_t>(row[k])]);
      double sum = 0.0;
      for (int k = 0; k < m_count; ++k) {
        ex[static_cast<std::size_t>(k)] = std::exp(a[static_cast<std::size_t>(row[k])] - amax);
        sum += ex[static_cast<std::size_t>(k)];
      }
      deficit_sum += amax * kLog2E + std::log2(sum);

      if (want_stats) {
        Eigen::VectorXcd svec = Eigen::VectorXcd::Zero(dims);
        for (int k = 0; k < m_count; ++k) {
          const double coef = ex[static_cast<std::size_t>(k)] / sum;
          const int u = row[k];
          svec += coef * table.diffs[static_cast<std::size_t>(u)];
          out.pair_weight[static_cast<std::size_t>(u)] += coef;
        }
        out.phi += svec * svec.adjoint();
        out.cross += n * svec.adjoint();
      }
    }
  }

  const double scale = 1.0 / (static_cast<double>(m_count) * mc.noise_samples);
  out.deficit = deficit_sum * scale;
  if (want_stats) {
    out.phi *= scale;
    out.cross *= scale;
    for (double& w : out.pair_weight) w *= scale;
  }
  return out;
}

void check_fa_dims(const Mat& h, const Mat& p, const DifferenceTable& table) {
  if (h.cols() != p.rows())
    throw std::invalid_argument("channel columns must match precoder rows");
  if (p.cols() != table.dims)
    throw std::invalid_argument("precoder columns must match the joint-symbol dimension");
}

std::pair<std::vector<Eigen::VectorXcd>, std::vector<double>> effective_vectors(
    const Mat& hp, const DifferenceTable& table) {
  std::vector<Eigen::VectorXcd> v(table.diffs.size());
  std::vector<double> q(table.diffs.size());
  for (std::size_t u = 0; u < table.diffs.size(); ++u) {
    v[u] = hp * table.diffs[u];
    q[u] = v[u].squaredNorm();
  }
  return {std::move(v), std::move(q)};
}

HermitianMatrix hermitian_part(const Mat& m) { return HermitianMatrix(Mat((m + m.adjoint()) / 2.0)); }

}  // namespace

void check_mc(const MCConfig& mc) {
  if (mc.noise_samples < 1 || mc.channel_samples < 1)
    throw std::invalid_argument("Monte Carlo sample counts must be at least 1");
}

double gaussian_mi(const HermitianMatrix& w) {
  const EigResult eig = hermitian_eig(w);
  double bits = 0.0;
  const double top = w.dim() > 0 ? std::max(eig.values(0), 0.0) : 0.0;
  for (int i = 0; i < w.dim(); ++i) {
    const double lam = eig.values(i);
    if (lam < -1e-10 * (1.0 + top))
      throw DomainError("Gaussian mutual information needs a positive semidefinite argument");
    bits += std::log2(1.0 + std::max(lam, 0.0));
  }
  return bits;
}

double fa_mi_mc(const Mat& h, const Mat& p, const DifferenceTable& table, const MCConfig& mc) {
  check_mc(mc);
  check_fa_dims(h, p, table);
  const Mat hp = h * p;
  auto [v, q] = effective_vectors(hp, table);
  const McStats stats = mc_kernel(v, q, table, static_cast<int>(h.rows()), mc, false);
  return std::log2(static_cast<double>(table.symbol_count)) - stats.deficit;
}

double fa_mi_mc(const Mat& h, const Mat& p, const Constellation& c, const MCConfig& mc) {
  return fa_mi_mc(h, p, make_difference_table(c, static_cast<int>(p.cols())), mc);
}

Mat kronecker_draw(const ChannelStats& stats, const MCConfig& mc, int t) {
  return sample_kronecker(stats, derive_seed({mc.seed, 0x6368616eULL, static_cast<std::uint64_t>(t)}));
}

double avg_fa_mi_mc(const ChannelStats& stats, const Mat& p, const Constellation& c,
                    const MCConfig& mc) {
  check_mc(mc);
  if (stats.transmit_corr.dim() != p.rows())
    throw std::invalid_argument("transmit correlation must match precoder rows");
  const DifferenceTable table = make_difference_table(c, static_cast<int>(p.cols()));
  double acc = 0.0;
  for (int t = 0; t < mc.channel_samples; ++t)
    acc += fa_mi_mc(kronecker_draw(stats, mc, t), p, table, mc);
  return acc / mc.channel_samples;
}

double g_approx(const HermitianMatrix& w, int n_antennas, const DifferenceTable& table) {
  if (n_antennas < 1) throw std::invalid_argument("receiver needs at least one antenna");
  if (w.dim() != table.dims)
    throw std::invalid_argument("argument dimension must match the joint-symbol dimension");
  const int m_count = table.symbol_count;
  std::vector<double> pw(table.diffs.size());
  for (std::size_t u = 0; u < table.diffs.size(); ++u) {
    const double t = 1.0 + 0.5 * quad_form(table.diffs[u], w);
    if (t <= 0.0) throw DomainError("information bound evaluated outside its domain");
    pw[u] = pow_int_neg(t, n_antennas);
  }
  double acc = 0.0;
  for (int m = 0; m < m_count; ++m) {
    const int* row = table.index.data() + static_cast<std::size_t>(m) * m_count;
    double sum = 0.0;
    for (int k = 0; k < m_count; ++k) sum += pw[static_cast<std::size_t>(row[k])];
    acc += std::log2(sum);
  }
  return acc / m_count;
}

HermitianMatrix grad_g_approx(const HermitianMatrix& w, int n_antennas,
                              const DifferenceTable& table) {
  if (n_antennas < 1) throw std::invalid_argument("receiver needs at least one antenna");
  if (w.dim() != table.dims)
    throw std::invalid_argument("argument dimension must match the joint-symbol dimension");
  const int m_count = table.symbol_count;
  const std::size_t u_count = table.diffs.size();
  std::vector<double> pw(u_count), pw1(u_count), coeff(u_count, 0.0);
  for (std::size_t u = 0; u < u_count; ++u) {
    const double t = 1.0 + 0.5 * quad_form(table.diffs[u], w);
    if (t <= 0.0) throw DomainError("information bound evaluated outside its domain");
    pw[u] = pow_int_neg(t, n_antennas);
    pw1[u] = pw[u] / t;
  }
  for (int m = 0; m < m_count; ++m) {
    const int* row = table.index.data() + static_cast<std::size_t>(m) * m_count;
    double sum = 0.0;
    for (int k = 0; k < m_count; ++k) sum += pw[static_cast<std::size_t>(row[k])];
    for (int k = 0; k < m_count; ++k) coeff[static_cast<std::size_t>(row[k])] += pw1[static_cast<std::size_t>(row[k])] / sum;
  }
  Mat g = Mat::Zero(table.dims, table.dims);
  for (std::size_t u = 0; u < u_count; ++u)
    if (coeff[u] != 0.0) g += coeff[u] * (table.diffs[u] * table.diffs[u].adjoint());
  g *= -(n_antennas * kLog2E) / (2.0 * m_count);
  return hermitian_part(g);
}

double g_i_approx(const HermitianMatrix& w, int n_antennas, const DifferenceTable& table,
                  const std::vector<int>& zero_coords) {
  return g_approx(w, n_antennas, mask_table(table, zero_coords));
}

double gbar_approx(const HermitianMatrix& w, const RealVec& r, const DifferenceTable& table) {
  if (r.size() < 1) throw std::invalid_argument("receiver needs at least one antenna");
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (r(i) < 0.0) throw std::invalid_argument("correlation eigenvalues must be nonnegative");
  if (w.dim() != table.dims)
    throw std::invalid_argument("argument dimension must match the joint-symbol dimension");
  const int m_count = table.symbol_count;
  std::vector<double> pw(table.diffs.size());
  for (std::size_t u = 0; u < table.diffs.size(); ++u) {
    const double half = 0.5 * quad_form(table.diffs[u], w);
    double pi = 1.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double base = 1.0 + r(i) * half;
      if (base <= 0.0) throw DomainError("information bound evaluated outside its domain");
      pi *= 1.0 / base;
    }
    pw[u] = pi;
  }
  double acc = 0.0;
  for (int m = 0; m < m_count; ++m) {
    const int* row = table.index.data() + static_cast<std::size_t>(m) * m_count;
    double sum = 0.0;
    for (int k = 0; k < m_count; ++k) sum += pw[static_cast<std::size_t>(row[k])];
    acc += std::log2(sum);
  }
  return acc / m_count;
}

HermitianMatrix grad_gbar_approx(const HermitianMatrix& w, const RealVec& r,
                                 const DifferenceTable& table) {
  if (r.size() < 1) throw std::invalid_argument("receiver needs at least one antenna");
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (r(i) < 0.0) throw std::invalid_argument("correlation eigenvalues must be nonnegative");
  if (w.dim() != table.dims)
    throw std::invalid_argument("argument dimension must match the joint-symbol dimension");
  const int m_count = table.symbol_count;
  const std::size_t u_count = table.diffs.size();
  std::vector<double> pw(u_count), slope(u_count), coeff(u_count, 0.0);
  for (std::size_t u = 0; u < u_count; ++u) {
    const double half = 0.5 * quad_form(table.diffs[u], w);
    double pi = 1.0;
    double fsum = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double base = 1.0 + r(i) * half;
      if (base <= 0.0) throw DomainError("information bound evaluated outside its domain");
      pi *= 1.0 / base;
      fsum += (0.5 * r(i)) / base;
    }
    pw[u] = pi;
    slope[u] = fsum;
  }
  for (int m = 0; m < m_count; ++m) {
    const int* row = table.index.data() + static_cast<std::size_t>(m) * m_count;
    double sum = 0.0;
    for (int k = 0; k < m_count; ++k) sum += pw[static_cast<std::size_t>(row[k])];
    for (int k = 0; k < m_count; ++k) {
      const std::size_t u = static_cast<std::size_t>(row[k]);
      coeff[u] += pw[u] / sum;
    }
  }
  Mat g = Mat::Zero(table.dims, table.dims);
  for (std::size_t u = 0; u < u_count; ++u) {
    const double c = coeff[u] * slope[u];
    if (c != 0.0) g += c * (table.diffs[u] * table.diffs[u].adjoint());
  }
  g *= -kLog2E / m_count;
  return hermitian_part(g);
}

MmseGrad mmse_grad_mi(const Mat& h, const Mat& p, const Constellation& c, const MCConfig& mc) {
  check_mc(mc);
  const DifferenceTable table = make_difference_table(c, static_cast<int>(p.cols()));
  check_fa_dims(h, p, table);
  const Mat hp = h * p;
  auto [v, q] = effective_vectors(hp, table);
  const McStats stats = mc_kernel(v, q, table, static_cast<int>(h.rows()), mc, true);

  // Exact gradient of the frozen estimator: the pair-weighted outer-product
  // sum drives the quadratic part, and the noise cross term accounts for the
  // finite sample set (it vanishes in the sample limit).
  Mat psi = Mat::Zero(table.dims, table.dims);
  for (std::size_t u = 0; u < table.diffs.size(); ++u)
    if (stats.pair_weight[u] != 0.0)
      psi += stats.pair_weight[u] * (table.diffs[u] * table.diffs[u].adjoint());

  MmseGrad out;
  out.phi = hermitian_part(stats.phi);
  out.grad = kLog2E * (h.adjoint() * (hp * psi) + h.adjoint() * stats.cross);
  return out;
}

ScalarMatrixFunction g_approx_fn(int n_antennas, std::shared_ptr<const DifferenceTable> table) {
  if (!table) throw std::invalid_argument("difference table is required");
  ScalarMatrixFunction f;
  f.label = "g_approx";
  f.monotonicity = Monotonicity::MNI;
  f.value = [n_antennas, table](const HermitianMatrix& w) { return g_approx(w, n_antennas, *table); };
  f.gradient = [n_antennas, table](const HermitianMatrix& w) {
    return grad_g_approx(w, n_antennas, *table);
  };
  return f;
}

ScalarMatrixFunction gbar_approx_fn(RealVec r, std::shared_ptr<const DifferenceTable> table) {
  if (!table) throw std::invalid_argument("difference table is required");
  ScalarMatrixFunction f;
  f.label = "gbar_approx";
  f.monotonicity = Monotonicity::MNI;
  f.value = [r, table](const HermitianMatrix& w) { return gbar_approx(w, r, *table); };
  f.gradient = [r, table](const HermitianMatrix& w) { return grad_gbar_approx(w, r, *table); };
  return f;
}

namespace {

// Factor W = L L^H (tiny ridge for rank deficiency), pair the factor with
// the frozen noise set, and run the Monte Carlo kernel on v_u = L^H e_u,
// whose Gram matrix reproduces e^H W e. Value and gradient come from one
// pass, cached for repeated calls at the same argument.
struct ExactMiState {
  bool valid = false;
  Mat w;
  double value = 0.0;
  Mat grad;
};

void exact_mi_compute(const DifferenceTable& table, const MCConfig& mc, const HermitianMatrix& w,
                      ExactMiState& state) {
  if (state.valid && state.w.rows() == w.mat().rows() &&
      (state.w.array() == w.mat().array()).all())
    return;
  const int n = w.dim();
  if (n != table.dims)
    throw std::invalid_argument("argument dimension must match the joint-symbol dimension");
  double tr = 0.0;
  for (int i = 0; i < n; ++i) tr += std::real(w(i, i));
  const double ridge = 1e-12 * (1.0 + std::abs(tr));
  Eigen::LLT<Mat> llt(Mat(w.mat() + ridge * Mat::Identity(n, n)));
  if (llt.info() != Eigen::Success)
    throw DomainError("mutual information term left the positive semidefinite cone");
  const Mat lfac = llt.matrixL();

  std::vector<Eigen::VectorXcd> v(table.diffs.size());
  std::vector<double> q(table.diffs.size());
  for (std::size_t u = 0; u < table.diffs.size(); ++u) {
    v[u] = lfac.adjoint() * table.diffs[u];
    q[u] = v[u].squaredNorm();
  }
  const McStats stats = mc_kernel(v, q, table, n, mc, true);

  state.w = w.mat();
  state.value = stats.deficit - std::log2(static_cast<double>(table.symbol_count));
  const Mat sym = (stats.phi + stats.phi.adjoint()) / 2.0;
  state.grad = -kLog2E * sym;
  state.valid = true;
}

}  // namespace

ScalarMatrixFunction neg_fa_mi_fn(std::shared_ptr<const DifferenceTable> table,
                                  const MCConfig& mc) {
  if (!table) throw std::invalid_argument("difference table is required");
  check_mc(mc);
  auto state = std::make_shared<ExactMiState>();
  ScalarMatrixFunction f;
  f.label = "neg_fa_mi";
  f.monotonicity = Monotonicity::MNI;
  f.value = [table, mc, state](const HermitianMatrix& w) {
    exact_mi_compute(*table, mc, w, *state);
    return state->value;
  };
  f.gradient = [table, mc, state](const HermitianMatrix& w) {
    exact_mi_compute(*table, mc, w, *state);
    return HermitianMatrix(state->grad);
  };
  return f;
}

}  // namespace gqmp
