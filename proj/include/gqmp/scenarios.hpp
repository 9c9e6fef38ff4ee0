#pragma once

#include <cstdint>
#include <vector>

#include "gqmp/algorithms.hpp"
#include "gqmp/channel.hpp"
#include "gqmp/constellation.hpp"
#include "gqmp/gqmf.hpp"
#include "gqmp/mi.hpp"

namespace gqmp {

// ---------------------------------------------------------------------------
// Scenario configurations
// ---------------------------------------------------------------------------

// Single point-to-point link y = H P x + n with a total power budget.
// Scenario builders are pure: they translate a configuration into solvable
// problem pieces and never run the solver themselves.

// Wiretap link: receiver channel h_r, eavesdropper channel h_e, common noise
// variance (folded into the channels as H / sigma, so the built problem
// assumes unit noise).
struct WiretapConfig {
  Mat h_r;
  Mat h_e;
  double noise_var = 1.0;
  double power = 0.0;
  Constellation constellation;
  MCConfig mc;
};

enum class CRScenario { kMulticast, kBroadcast };

// Secondary transmitter serving I receivers (sr_stats) against J
// eavesdroppers (ed_stats) while keeping interference at K primary receivers
// (pr_stats) under per-node budgets. All statistics follow the Kronecker
// model of ChannelStats.
struct CRNetworkConfig {
  std::vector<ChannelStats> sr_stats;
  std::vector<ChannelStats> ed_stats;
  std::vector<ChannelStats> pr_stats;
  double power_budget = 0.0;                  // total transmit power
  std::vector<double> interference_budgets;   // one per primary receiver
  Constellation constellation;
  CRScenario scenario = CRScenario::kMulticast;
};

// ---------------------------------------------------------------------------
// Problem builders
// ---------------------------------------------------------------------------

// Rate maximization for one link: Gaussian inputs use the closed-form
// log-det rate, finite-alphabet inputs the frozen Monte Carlo estimate.
ProblemInstance build_p2p_gaussian(const Mat& h, double gamma);
ProblemInstance build_p2p_fa(const Mat& h, double gamma, const Constellation& c,
                             const MCConfig& mc);

// Secrecy-rate maximization I(x; y_r) - I(x; y_e) as a two-term objective.
// Both information terms share one frozen noise set, so identical channels
// cancel exactly.
ProblemInstance build_wiretap(const WiretapConfig& w);

// Rate-function grid plus feasible set for the statistical-CSI network
// scenarios. Multicast produces a single row of I*J worst-case functions
// (feed rows[0] to solve_minrate); broadcast produces I rows of J functions
// (feed to solve_sum_secrecy). Constraint 0 is always the total power budget.
struct SecrecyPieces {
  std::vector<std::vector<GeneralizedQMF>> rows;
  QuadraticConstraintSet set;
  int precoder_rows = 0;
  int precoder_cols = 0;
};

SecrecyPieces build_multicast(const CRNetworkConfig& cfg);
SecrecyPieces build_broadcast(const CRNetworkConfig& cfg);

// Multicast variant with receive-side correlation on every node: rate terms
// use the per-branch correlated bound, and interference constraints scale by
// tr(receive_corr) / rx_antennas (identity correlations reduce exactly to
// build_multicast).
SecrecyPieces build_multicast_doubly_correlated(const CRNetworkConfig& cfg);

// ---------------------------------------------------------------------------
// Baselines and starting points
// ---------------------------------------------------------------------------

// Water-level power allocation over the eigenmodes of H^H H: maximizes the
// Gaussian-input rate log2 det(I + P^H H^H H P) subject to tr(P^H P) <= gamma.
Mat waterfilling(const Mat& h, double gamma);

// Gaussian-input multicast baseline: maximizes the sample-average worst-case
// log-det secrecy rate over frozen channel draws (a concave-minorant ascent
// in precoder space, equivalent to covariance optimization via Q = P P^H).
// Returns the covariance and its square root for finite-alphabet evaluation.
struct GaussianPrecodingResult {
  HermitianMatrix q;
  Mat precoder;  // q^{1/2}
  SolveTrace trace;
  bool stalled = false;  // ascent stopped before the tolerance certificate
};
GaussianPrecodingResult gaussian_precoding_mc(const CRNetworkConfig& cfg, int channel_draws,
                                              std::uint64_t seed, const SolverOptions& opts = {});

// Scaled identity blocks c * [I ... I] sized rows x cols, with c chosen so
// every constraint keeps at least 10% slack.
Mat initial_precoder(const QuadraticConstraintSet& set, int rows, int cols);

// Base plus a seeded complex-Gaussian perturbation, rescaled so every
// constraint keeps at least 10% slack.
Mat perturbed_start(const Mat& base, const QuadraticConstraintSet& set, std::uint64_t seed);

}  // namespace gqmp
