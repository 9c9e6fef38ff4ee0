#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "gqmp/channel.hpp"
#include "gqmp/constellation.hpp"
#include "gqmp/gqmf.hpp"

namespace gqmp {

// Monte Carlo sizes and the seed that freezes the sample sets. All
// estimators below are pure functions of (inputs, config): the same config
// always reproduces the same draws, regardless of evaluation order.
struct MCConfig {
  int noise_samples = 500;
  int channel_samples = 200;
  std::uint64_t seed = 1;
};

void check_mc(const MCConfig& mc);  // throws std::invalid_argument on counts < 1

// Gaussian-input mutual information log2 det(I + W) in bits. Throws
// DomainError when W has an eigenvalue below -1e-10 * (1 + max eigenvalue);
// small negative eigenvalues are clamped to zero.
double gaussian_mi(const HermitianMatrix& w);

/// Monte Carlo mutual information of y = H P x + n in bits, where x is
/// uniform on the joint constellation X^cols(P) and n ~ CN(0, I). The noise
/// set is frozen by mc.seed, so P -> MI is deterministic within a config.
double fa_mi_mc(const Mat& h, const Mat& p, const Constellation& c, const MCConfig& mc);
double fa_mi_mc(const Mat& h, const Mat& p, const DifferenceTable& table, const MCConfig& mc);

// The t-th channel draw used by avg_fa_mi_mc (exposed so callers can analyze
// individual draws of a run).
Mat kronecker_draw(const ChannelStats& stats, const MCConfig& mc, int t);

// Average of fa_mi_mc over mc.channel_samples Kronecker draws; the noise set
// is shared across draws, so a single-draw average equals fa_mi_mc exactly.
double avg_fa_mi_mc(const ChannelStats& stats, const Mat& p, const Constellation& c,
                    const MCConfig& mc);

// Closed-form bound on the mutual-information deficit log2(M) - I for an
// n_antennas-branch receiver:
//   g(W) = (1/M) sum_m log2 sum_n (1 + e_mn^H W e_mn / 2)^(-n_antennas).
// Convex and matrix-nonincreasing in W. Throws DomainError when a base
// 1 + e^H W e / 2 is nonpositive (cannot happen for W PSD).
double g_approx(const HermitianMatrix& w, int n_antennas, const DifferenceTable& table);
HermitianMatrix grad_g_approx(const HermitianMatrix& w, int n_antennas,
                              const DifferenceTable& table);

// g_approx with the listed coordinates of every difference vector zeroed
// first (per-user term in stacked layouts).
double g_i_approx(const HermitianMatrix& w, int n_antennas, const DifferenceTable& table,
                  const std::vector<int>& zero_coords);

// Correlated-receiver variant: r holds the eigenvalues of the receive-side
// correlation, and each receive branch contributes its own factor:
//   gbar(W) = (1/M) sum_m log2 sum_n prod_q (1 + r_q e_mn^H W e_mn / 2)^(-1).
// Reduces exactly to g_approx(W, len(r)) when r is all ones.
double gbar_approx(const HermitianMatrix& w, const RealVec& r, const DifferenceTable& table);
HermitianMatrix grad_gbar_approx(const HermitianMatrix& w, const RealVec& r,
                                 const DifferenceTable& table);

// Posterior-mean (MMSE) statistics of the frozen-noise Monte Carlo model.
//   phi:  MMSE matrix estimate E[(x - xhat)(x - xhat)^H], PSD.
//   grad: exact gradient d MI / d conj(P) of the frozen estimator (bits), so
//         it matches finite differences of fa_mi_mc under the same config.
//         Its sample limit is the chain-rule form H^H H P phi * log2(e).
struct MmseGrad {
  HermitianMatrix phi;
  Mat grad;
};
MmseGrad mmse_grad_mi(const Mat& h, const Mat& p, const Constellation& c, const MCConfig& mc);

// ScalarMatrixFunction wrappers for use inside GQMF terms (all convex and
// matrix-nonincreasing).
ScalarMatrixFunction g_approx_fn(int n_antennas, std::shared_ptr<const DifferenceTable> table);
ScalarMatrixFunction gbar_approx_fn(RealVec r, std::shared_ptr<const DifferenceTable> table);

/// Exact (Monte Carlo) negative mutual information as a function of the
/// squared channel-precoder product W = (HP)^H (HP): the value is -MI
/// obtained by factoring W and pairing the factor with a frozen noise set,
/// and the gradient is -log2(e) times the MMSE matrix at W. Throws
/// DomainError when W leaves the positive semidefinite cone.
ScalarMatrixFunction neg_fa_mi_fn(std::shared_ptr<const DifferenceTable> table,
                                  const MCConfig& mc);

}  // namespace gqmp
