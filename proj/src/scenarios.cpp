#include "gqmp/scenarios.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

#include "gqmp/rng.hpp"

namespace gqmp {
namespace {

HermitianMatrix gram_of(const Mat& h) {
  return HermitianMatrix((h.adjoint() * h).eval());
}

QuadraticConstraint power_cap(int dim, double budget) {
  QuadraticConstraint c;
  c.theta = HermitianMatrix::identity(dim);
  c.budget = budget;
  c.scale = 1.0;
  return c;
}

ProblemInstance single_link(const Mat& h, double gamma, ScalarMatrixFunction rate_term) {
  if (!(gamma > 0.0)) throw std::invalid_argument("power budget must be positive");
  if (h.cols() < 1) throw std::invalid_argument("channel needs at least one transmit antenna");
  const int n = static_cast<int>(h.cols());
  GeneralizedQMF objective;
  objective.rows = n;
  objective.cols = n;
  objective.terms.push_back({-1.0, {std::move(rate_term), gram_of(h)}});
  ProblemInstance p;
  p.objective = std::move(objective);
  p.set.items.push_back(power_cap(n, gamma));
  p.rows = n;
  p.cols = n;
  return p;
}

int common_transmit_dim(const CRNetworkConfig& cfg) {
  const int nt = cfg.sr_stats.front().transmit_corr.dim();
  auto check = [nt](const std::vector<ChannelStats>& list) {
    for (const ChannelStats& s : list)
      if (s.transmit_corr.dim() != nt)
        throw std::invalid_argument("all nodes must share the transmit antenna count");
  };
  check(cfg.sr_stats);
  check(cfg.ed_stats);
  check(cfg.pr_stats);
  return nt;
}

void validate_network(const CRNetworkConfig& cfg, CRScenario expected) {
  if (cfg.scenario != expected)
    throw std::invalid_argument("configuration is for a different scenario");
  if (cfg.sr_stats.empty() || cfg.ed_stats.empty())
    throw std::invalid_argument("need at least one receiver and one eavesdropper");
  if (!(cfg.power_budget > 0.0)) throw std::invalid_argument("power budget must be positive");
  if (cfg.interference_budgets.size() != cfg.pr_stats.size())
    throw std::invalid_argument("one interference budget per primary receiver is required");
  for (double b : cfg.interference_budgets)
    if (!(b > 0.0)) throw std::invalid_argument("interference budgets must be positive");
}

QuadraticConstraintSet network_set(const CRNetworkConfig& cfg, int nt, bool scale_by_receive_corr) {
  QuadraticConstraintSet set;
  set.items.push_back(power_cap(nt, cfg.power_budget));
  for (std::size_t k = 0; k < cfg.pr_stats.size(); ++k) {
    QuadraticConstraint c;
    c.theta = cfg.pr_stats[k].transmit_corr;
    c.budget = cfg.interference_budgets[k];
    c.scale = 1.0;
    if (scale_by_receive_corr) {
      double tr = 0.0;
      const HermitianMatrix& phi = cfg.pr_stats[k].receive_corr;
      for (int i = 0; i < phi.dim(); ++i) tr += std::real(phi(i, i));
      c.scale = tr / cfg.pr_stats[k].rx_antennas;
    }
    set.items.push_back(c);
  }
  return set;
}

RealVec receive_corr_eigenvalues(const ChannelStats& stats) {
  const EigResult eig = hermitian_eig(stats.receive_corr);
  RealVec r(eig.values.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = std::max(eig.values(i), 0.0);
  return r;
}

}  // namespace

ProblemInstance build_p2p_gaussian(const Mat& h, double gamma) {
  return single_link(h, gamma, neg_log2det());
}

ProblemInstance build_p2p_fa(const Mat& h, double gamma, const Constellation& c,
                             const MCConfig& mc) {
  auto table = std::make_shared<const DifferenceTable>(
      make_difference_table(c, static_cast<int>(h.cols())));
  return single_link(h, gamma, neg_fa_mi_fn(table, mc));
}

ProblemInstance build_wiretap(const WiretapConfig& w) {
  if (!(w.noise_var > 0.0)) throw std::invalid_argument("noise variance must be positive");
  if (!(w.power > 0.0)) throw std::invalid_argument("power budget must be positive");
  if (w.h_r.cols() != w.h_e.cols())
    throw std::invalid_argument("receiver and eavesdropper need the same transmit antenna count");
  const int n = static_cast<int>(w.h_r.cols());
  const double sigma = std::sqrt(w.noise_var);
  const Mat hr = w.h_r / sigma;
  const Mat he = w.h_e / sigma;

  auto table = std::make_shared<const DifferenceTable>(make_difference_table(w.constellation, n));
  GeneralizedQMF objective;
  objective.rows = n;
  objective.cols = n;
  // One frozen noise set for both terms: identical channels cancel exactly.
  objective.terms.push_back({-1.0, {neg_fa_mi_fn(table, w.mc), gram_of(hr)}});
  objective.terms.push_back({+1.0, {neg_fa_mi_fn(table, w.mc), gram_of(he)}});

  ProblemInstance p;
  p.objective = std::move(objective);
  p.set.items.push_back(power_cap(n, w.power));
  p.rows = n;
  p.cols = n;
  return p;
}

SecrecyPieces build_multicast(const CRNetworkConfig& cfg) {
  validate_network(cfg, CRScenario::kMulticast);
  const int nt = common_transmit_dim(cfg);
  auto table = std::make_shared<const DifferenceTable>(
      make_difference_table(cfg.constellation, nt));

  SecrecyPieces out;
  out.precoder_rows = nt;
  out.precoder_cols = nt;
  out.set = network_set(cfg, nt, false);
  std::vector<GeneralizedQMF> row;
  for (const ChannelStats& sr : cfg.sr_stats) {
    for (const ChannelStats& ed : cfg.ed_stats) {
      GeneralizedQMF f;
      f.rows = nt;
      f.cols = nt;
      f.terms.push_back({+1.0, {g_approx_fn(ed.rx_antennas, table), ed.transmit_corr}});
      f.terms.push_back({-1.0, {g_approx_fn(sr.rx_antennas, table), sr.transmit_corr}});
      row.push_back(std::move(f));
    }
  }
  out.rows.push_back(std::move(row));
  return out;
}

SecrecyPieces build_broadcast(const CRNetworkConfig& cfg) {
  validate_network(cfg, CRScenario::kBroadcast);
  const int nt = common_transmit_dim(cfg);
  const int users = static_cast<int>(cfg.sr_stats.size());
  const int dims = users * nt;
  auto full = std::make_shared<const DifferenceTable>(
      make_difference_table(cfg.constellation, dims));

  // Per-user tables with that user's coordinate block erased.
  std::vector<std::shared_ptr<const DifferenceTable>> masked(users);
  for (int i = 0; i < users; ++i) {
    std::vector<int> coords;
    for (int t = 0; t < nt; ++t) coords.push_back(i * nt + t);
    masked[i] = std::make_shared<const DifferenceTable>(mask_table(*full, coords));
  }

  SecrecyPieces out;
  out.precoder_rows = nt;
  out.precoder_cols = dims;
  out.set = network_set(cfg, nt, false);
  for (int i = 0; i < users; ++i) {
    const ChannelStats& sr = cfg.sr_stats[static_cast<std::size_t>(i)];
    std::vector<GeneralizedQMF> row;
    for (const ChannelStats& ed : cfg.ed_stats) {
      GeneralizedQMF f;
      f.rows = nt;
      f.cols = dims;
      f.terms.push_back({+1.0, {g_approx_fn(sr.rx_antennas, masked[static_cast<std::size_t>(i)]), sr.transmit_corr}});
      f.terms.push_back({-1.0, {g_approx_fn(sr.rx_antennas, full), sr.transmit_corr}});
      f.terms.push_back({-1.0, {g_approx_fn(ed.rx_antennas, masked[static_cast<std::size_t>(i)]), ed.transmit_corr}});
      f.terms.push_back({+1.0, {g_approx_fn(ed.rx_antennas, full), ed.transmit_corr}});
      row.push_back(std::move(f));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

SecrecyPieces build_multicast_doubly_correlated(const CRNetworkConfig& cfg) {
  validate_network(cfg, CRScenario::kMulticast);
  const int nt = common_transmit_dim(cfg);
  auto table = std::make_shared<const DifferenceTable>(
      make_difference_table(cfg.constellation, nt));

  SecrecyPieces out;
  out.precoder_rows = nt;
  out.precoder_cols = nt;
  out.set = network_set(cfg, nt, true);
  std::vector<GeneralizedQMF> row;
  for (const ChannelStats& sr : cfg.sr_stats) {
    for (const ChannelStats& ed : cfg.ed_stats) {
      GeneralizedQMF f;
      f.rows = nt;
      f.cols = nt;
      f.terms.push_back({+1.0, {gbar_approx_fn(receive_corr_eigenvalues(ed), table), ed.transmit_corr}});
      f.terms.push_back({-1.0, {gbar_approx_fn(receive_corr_eigenvalues(sr), table), sr.transmit_corr}});
      row.push_back(std::move(f));
    }
  }
  out.rows.push_back(std::move(row));
  return out;
}

Mat waterfilling(const Mat& h, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("power budget must be positive");
  const int n = static_cast<int>(h.cols());
  const EigResult eig = hermitian_eig(gram_of(h));
  const double top = eig.values.size() > 0 ? std::max(eig.values(0), 0.0) : 0.0;
  int usable = 0;
  while (usable < n && eig.values(usable) > 1e-12 * (1.0 + top)) ++usable;
  if (usable == 0) return Mat::Zero(n, n);

  Eigen::VectorXd powers = Eigen::VectorXd::Zero(n);
  for (int k = usable; k >= 1; --k) {
    double inv_sum = 0.0;
    for (int i = 0; i < k; ++i) inv_sum += 1.0 / eig.values(i);
    const double level = (gamma + inv_sum) / k;
    if (level - 1.0 / eig.values(k - 1) >= 0.0) {
      for (int i = 0; i < k; ++i) powers(i) = level - 1.0 / eig.values(i);
      break;
    }
  }
  Mat p = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) p.col(i) = std::sqrt(powers(i)) * eig.vectors.col(i);
  return p;
}

GaussianPrecodingResult gaussian_precoding_mc(const CRNetworkConfig& cfg, int channel_draws,
                                              std::uint64_t seed, const SolverOptions& opts) {
  validate_network(cfg, CRScenario::kMulticast);
  if (channel_draws < 1) throw std::invalid_argument("need at least one channel draw");
  const int nt = common_transmit_dim(cfg);
  const double weight = 1.0 / channel_draws;

  auto draw_grams = [&](const std::vector<ChannelStats>& list) {
    std::vector<std::vector<HermitianMatrix>> grams(list.size());
    for (std::size_t node = 0; node < list.size(); ++node) {
      grams[node].reserve(static_cast<std::size_t>(channel_draws));
      for (int t = 0; t < channel_draws; ++t) {
        const Mat h = sample_kronecker(
            list[node], derive_seed({seed, 0x67647277ULL, static_cast<std::uint64_t>(node),
                                     static_cast<std::uint64_t>(t)}));
        grams[node].push_back(gram_of(h));
      }
    }
    return grams;
  };
  const auto sr_grams = draw_grams(cfg.sr_stats);
  const auto ed_grams = draw_grams(cfg.ed_stats);

  std::vector<GeneralizedQMF> row;
  for (const auto& sr : sr_grams) {
    for (const auto& ed : ed_grams) {
      GeneralizedQMF f;
      f.rows = nt;
      f.cols = nt;
      for (int t = 0; t < channel_draws; ++t) {
        f.terms.push_back({-weight, {neg_log2det(), sr[static_cast<std::size_t>(t)]}});
        f.terms.push_back({+weight, {neg_log2det(), ed[static_cast<std::size_t>(t)]}});
      }
      row.push_back(std::move(f));
    }
  }

  const QuadraticConstraintSet set = network_set(cfg, nt, false);
  const Mat x0 = initial_precoder(set, nt, nt);
  GaussianPrecodingResult out;
  out.trace = solve_minrate(row, {}, set, x0, -30.0, opts);
  const Mat q = out.trace.x_final * out.trace.x_final.adjoint();
  out.q = HermitianMatrix(Mat((q + q.adjoint()) / 2.0));
  out.precoder = psd_sqrt(out.q).mat();
  out.stalled = !out.trace.converged;
  return out;
}

Mat initial_precoder(const QuadraticConstraintSet& set, int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("precoder shape must be positive");
  Mat base = Mat::Zero(rows, cols);
  for (int j = 0; j < cols; ++j) base(j % rows, j) = 1.0;
  double best = -1.0;
  for (const QuadraticConstraint& c : set.items) {
    const double load = c.scale * std::real((base.adjoint() * c.theta.mat() * base).trace());
    if (load <= 0.0) continue;
    const double cap = 0.9 * c.budget / load;
    if (best < 0.0 || cap < best) best = cap;
  }
  if (best < 0.0) best = 1.0;
  return std::sqrt(best) * base;
}

Mat perturbed_start(const Mat& base, const QuadraticConstraintSet& set, std::uint64_t seed) {
  const int rows = static_cast<int>(base.rows());
  const int cols = static_cast<int>(base.cols());
  double entry = base.norm() / std::sqrt(static_cast<double>(rows) * cols);
  if (entry <= 0.0) entry = 1.0;
  Mat p = base + entry * gaussian_matrix(rows, cols, seed, 0x73746172ULL);
  double best = -1.0;
  for (const QuadraticConstraint& c : set.items) {
    const double load = c.scale * std::real((p.adjoint() * c.theta.mat() * p).trace());
    if (load <= 0.0) continue;
    const double cap = 0.9 * c.budget / load;
    if (best < 0.0 || cap < best) best = cap;
  }
  if (best < 0.0) best = 1.0;
  return std::sqrt(best) * p;
}

}  // namespace gqmp
