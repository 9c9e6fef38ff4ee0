#include "gqmp/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "gqmp/rng.hpp"

namespace gqmp {
namespace {

void check_psd(const HermitianMatrix& a, const char* what) {
  const EigResult eig = hermitian_eig(a);
  const double top = eig.values.size() > 0 ? std::max(eig.values(0), 0.0) : 0.0;
  const double bottom = eig.values.size() > 0 ? eig.values(eig.values.size() - 1) : 0.0;
  if (bottom < -1e-8 * (1.0 + top))
    throw std::invalid_argument(std::string(what) + " correlation matrix is not positive semidefinite");
}

}  // namespace

ChannelStats make_channel_stats(const HermitianMatrix& theta, int rx_antennas) {
  if (rx_antennas < 1) throw std::invalid_argument("channel needs at least one receive antenna");
  return make_channel_stats(theta, HermitianMatrix::identity(rx_antennas));
}

ChannelStats make_channel_stats(const HermitianMatrix& theta, const HermitianMatrix& phi) {
  check_psd(theta, "transmit");
  check_psd(phi, "receive");
  ChannelStats stats;
  stats.transmit_corr = theta;
  stats.receive_corr = phi;
  stats.rx_antennas = phi.dim();
  return stats;
}

HermitianMatrix exp_corr(double rho, int n) {
  if (!(rho >= 0.0 && rho < 1.0))
    throw std::invalid_argument("exponential correlation requires 0 <= rho < 1");
  if (n < 1) throw std::invalid_argument("correlation matrix needs positive dimension");
  Mat r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = Complex(std::pow(rho, std::abs(i - j)), 0.0);
  return HermitianMatrix(r);
}

HermitianMatrix psd_sqrt(const HermitianMatrix& a) {
  const EigResult eig = hermitian_eig(a);
  const int n = a.dim();
  const double top = n > 0 ? std::max(eig.values(0), 0.0) : 0.0;
  Eigen::VectorXd roots(n);
  for (int i = 0; i < n; ++i) {
    const double lam = eig.values(i);
    if (lam < -1e-8 * (1.0 + top))
      throw std::invalid_argument("matrix square root requires a positive semidefinite argument");
    roots(i) = std::sqrt(std::max(lam, 0.0));
  }
  const Mat s = eig.vectors * roots.asDiagonal() * eig.vectors.adjoint();
  return HermitianMatrix(Mat((s + s.adjoint()) / 2.0));
}

Mat sample_kronecker(const ChannelStats& stats, std::uint64_t seed) {
  const int nt = stats.transmit_corr.dim();
  const int nr = stats.rx_antennas;
  const Mat tilde = gaussian_matrix(nr, nt, seed);
  const HermitianMatrix theta_root = psd_sqrt(stats.transmit_corr);
  const HermitianMatrix phi_root = psd_sqrt(stats.receive_corr);
  return phi_root.mat() * tilde * theta_root.mat();
}

}  // namespace gqmp
