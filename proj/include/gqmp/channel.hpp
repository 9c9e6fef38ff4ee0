#pragma once

#include <cstdint>

#include "gqmp/hermitian.hpp"

namespace gqmp {

// Statistical (Kronecker) channel model H = Phi^{1/2} * Htilde * Theta^{1/2}
// with i.i.d. CN(0,1) entries in Htilde. Phi is the receive-side correlation
// (identity in the main model), Theta the transmit-side correlation.
struct ChannelStats {
  HermitianMatrix transmit_corr;  // Theta, PSD, dim = transmit antennas
  HermitianMatrix receive_corr;   // Phi, PSD, dim = rx_antennas
  int rx_antennas = 0;
};

// Phi = I of size rx_antennas.
ChannelStats make_channel_stats(const HermitianMatrix& theta, int rx_antennas);
ChannelStats make_channel_stats(const HermitianMatrix& theta, const HermitianMatrix& phi);

// Exponential correlation profile [R]_ij = rho^|i-j|, PSD Toeplitz.
// Requires 0 <= rho < 1.
HermitianMatrix exp_corr(double rho, int n);

// PSD square root via eigendecomposition; eigenvalues below -1e-8*(1+max)
// are rejected, small negatives are clamped to zero.
HermitianMatrix psd_sqrt(const HermitianMatrix& a);

// One channel draw, deterministic in (stats, seed); independent seeds give
// independent draws.
Mat sample_kronecker(const ChannelStats& stats, std::uint64_t seed);

}  // namespace gqmp
