#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gqmp/rng.hpp"
#include "gqmp/scenarios.hpp"
#include "gqmp/surrogate.hpp"

using namespace gqmp;

namespace {

Mat two_by_two() {
  Mat h(2, 2);
  h << 2.0, 1.0, 1.0, 1.0;
  return h;
}

Mat complex_channel(std::uint64_t seed) { return gaussian_matrix(2, 2, seed, 5); }

ChannelStats stats_of(double rho, int rx) { return make_channel_stats(exp_corr(rho, 2), rx); }

CRNetworkConfig small_multicast() {
  CRNetworkConfig cfg;
  cfg.sr_stats = {stats_of(0.95, 2), stats_of(0.85, 2)};
  cfg.ed_stats = {stats_of(0.40, 2)};
  cfg.pr_stats = {stats_of(0.50, 1)};
  cfg.power_budget = 10.0;
  cfg.interference_budgets = {1.0};
  cfg.constellation = make_constellation("qpsk");
  cfg.scenario = CRScenario::kMulticast;
  return cfg;
}

double water_level_rate(const Mat& h, double gamma) {
  const EigResult eig = hermitian_eig(HermitianMatrix((h.adjoint() * h).eval()));
  const Mat p = waterfilling(h, gamma);
  double rate = 0.0;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    const double power = p.col(i).squaredNorm();
    rate += std::log2(1.0 + power * eig.values(i));
  }
  return rate;
}

void check_identity_power_cap(const QuadraticConstraintSet& set, double budget) {
  REQUIRE(!set.items.empty());
  const QuadraticConstraint& c = set.items.front();
  CHECK(c.budget == budget);
  CHECK(c.scale == 1.0);
  for (int i = 0; i < c.theta.dim(); ++i)
    for (int j = 0; j < c.theta.dim(); ++j)
      CHECK(c.theta(i, j) == Complex(i == j ? 1.0 : 0.0, 0.0));
}

}  // namespace

TEST_CASE("gaussian link builder shape and values") {
  const Mat h = two_by_two();
  const ProblemInstance p = build_p2p_gaussian(h, 4.0);
  CHECK(p.rows == 2);
  CHECK(p.cols == 2);
  CHECK(p.objective.terms.size() == 1);
  check_identity_power_cap(p.set, 4.0);

  const Mat wf = waterfilling(h, 4.0);
  const double direct = water_level_rate(h, 4.0);
  CHECK(eval_gqmf(p.objective, wf) == doctest::Approx(direct).epsilon(1e-9));

  CHECK_THROWS_AS(build_p2p_gaussian(h, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_p2p_gaussian(h, -1.0), std::invalid_argument);
}

TEST_CASE("gaussian link solve reaches the water level optimum") {
  const Mat h = two_by_two();
  const ProblemInstance p = build_p2p_gaussian(h, 4.0);
  SolverOptions opts;
  opts.eps = 1e-8;
  const Mat x0 = initial_precoder(p.set, p.rows, p.cols);
  const SolveTrace trace = solve_gqmp(p, x0, opts);
  CHECK(trace.converged);
  const double best = water_level_rate(h, 4.0);
  CHECK(std::abs(trace.objective - best) <= 1e-6);
}

TEST_CASE("finite alphabet link saturates at high power") {
  MCConfig mc;
  mc.noise_samples = 200;
  mc.channel_samples = 1;
  mc.seed = 7;
  const ProblemInstance p = build_p2p_fa(two_by_two(), 1000.0, make_constellation("qpsk"), mc);
  SolverOptions opts;
  opts.eps = 1e-3;
  opts.max_outer = 30;
  const Mat x0 = initial_precoder(p.set, p.rows, p.cols);
  const SolveTrace trace = solve_gqmp(p, x0, opts);
  CHECK(trace.objective >= 3.9);
  CHECK(trace.objective <= 4.0 + 1e-6);
}

TEST_CASE("wiretap with identical channels has zero secrecy everywhere") {
  WiretapConfig w;
  w.h_r = complex_channel(21);
  w.h_e = w.h_r;
  w.noise_var = 2.0;
  w.power = 5.0;
  w.constellation = make_constellation("qpsk");
  w.mc.noise_samples = 64;
  const ProblemInstance p = build_wiretap(w);
  check_identity_power_cap(p.set, 5.0);

  CHECK(eval_gqmf(p.objective, Mat::Zero(2, 2)) == 0.0);
  for (std::uint64_t s = 1; s <= 5; ++s)
    CHECK(eval_gqmf(p.objective, complex_channel(s)) == 0.0);
}

TEST_CASE("wiretap objective is zero with no input and bounded by the alphabet") {
  WiretapConfig w;
  w.h_r = complex_channel(31);
  w.h_e = 0.25 * complex_channel(32);
  w.noise_var = 1.0;
  w.power = 4.0;
  w.constellation = make_constellation("qpsk");
  w.mc.noise_samples = 128;
  const ProblemInstance p = build_wiretap(w);

  CHECK(eval_gqmf(p.objective, Mat::Zero(2, 2)) == 0.0);
  const double f = eval_gqmf(p.objective, initial_precoder(p.set, 2, 2));
  CHECK(f <= std::log2(16.0));
  CHECK(f >= -std::log2(16.0));
}

TEST_CASE("quarter turn of a qpsk precoder leaves the information unchanged") {
  WiretapConfig w;
  w.h_r = complex_channel(41);
  w.h_e = 0.5 * complex_channel(42);
  w.power = 4.0;
  w.constellation = make_constellation("qpsk");
  w.mc.noise_samples = 128;
  const ProblemInstance problem = build_wiretap(w);

  const Mat p = perturbed_start(initial_precoder(problem.set, 2, 2), problem.set, 9);
  const Mat rotated = Complex(0.0, 1.0) * p;
  CHECK(eval_gqmf(problem.objective, rotated) == eval_gqmf(problem.objective, p));

  MCConfig mc;
  mc.noise_samples = 300;
  mc.seed = 17;
  const Constellation qpsk = make_constellation("qpsk");
  const double direct = fa_mi_mc(w.h_r, p, qpsk, mc);
  const double turned = fa_mi_mc(w.h_r, rotated, qpsk, mc);
  CHECK(std::abs(direct - turned) <= 1e-3);
}

TEST_CASE("wiretap builder validation") {
  WiretapConfig w;
  w.h_r = complex_channel(51);
  w.h_e = gaussian_matrix(2, 3, 52, 5);
  w.power = 1.0;
  w.constellation = make_constellation("qpsk");
  CHECK_THROWS_AS(build_wiretap(w), std::invalid_argument);
  w.h_e = complex_channel(52);
  w.noise_var = 0.0;
  CHECK_THROWS_AS(build_wiretap(w), std::invalid_argument);
  w.noise_var = 1.0;
  w.power = 0.0;
  CHECK_THROWS_AS(build_wiretap(w), std::invalid_argument);
}

TEST_CASE("multicast builder layout and exact zeros") {
  const CRNetworkConfig cfg = small_multicast();
  const SecrecyPieces pieces = build_multicast(cfg);
  REQUIRE(pieces.rows.size() == 1);
  REQUIRE(pieces.rows[0].size() == 2);
  CHECK(pieces.precoder_rows == 2);
  CHECK(pieces.precoder_cols == 2);
  CHECK(pieces.set.items.size() == 2);
  check_identity_power_cap(pieces.set, 10.0);
  CHECK(pieces.set.items[1].budget == 1.0);
  CHECK(pieces.set.items[1].scale == 1.0);

  for (const GeneralizedQMF& f : pieces.rows[0]) {
    CHECK(f.terms.size() == 2);
    CHECK(eval_gqmf(f, Mat::Zero(2, 2)) == 0.0);
  }
}

TEST_CASE("matched receiver and eavesdropper statistics cancel exactly") {
  CRNetworkConfig cfg = small_multicast();
  cfg.sr_stats = {stats_of(0.6, 2)};
  cfg.ed_stats = {stats_of(0.6, 2)};
  const SecrecyPieces pieces = build_multicast(cfg);
  for (std::uint64_t s = 1; s <= 5; ++s)
    CHECK(eval_gqmf(pieces.rows[0][0], complex_channel(s)) == 0.0);
}

TEST_CASE("multicast surrogates are tangent minorants at feasible anchors") {
  const CRNetworkConfig cfg = small_multicast();
  const SecrecyPieces pieces = build_multicast(cfg);
  const Mat base = initial_precoder(pieces.set, pieces.precoder_rows, pieces.precoder_cols);
  for (const GeneralizedQMF& f : pieces.rows[0]) {
    for (std::uint64_t s = 1; s <= 5; ++s) {
      const Mat anchor = perturbed_start(base, pieces.set, s);
      const TangencyReport rep = tangency_check(f, anchor, 20, 100 + s);
      CHECK(rep.value_gap_at_anchor <= 1e-9);
      CHECK(rep.grad_gap_at_anchor <= 1e-8);
      CHECK(rep.max_sandwich_violation <= 1e-9);
      CHECK(rep.samples_checked >= 1);
    }
  }
}

TEST_CASE("multicast builder validation") {
  CRNetworkConfig cfg = small_multicast();
  cfg.scenario = CRScenario::kBroadcast;
  CHECK_THROWS_AS(build_multicast(cfg), std::invalid_argument);

  cfg = small_multicast();
  cfg.sr_stats.clear();
  CHECK_THROWS_AS(build_multicast(cfg), std::invalid_argument);

  cfg = small_multicast();
  cfg.interference_budgets = {1.0, 2.0};
  CHECK_THROWS_AS(build_multicast(cfg), std::invalid_argument);

  cfg = small_multicast();
  cfg.interference_budgets = {0.0};
  CHECK_THROWS_AS(build_multicast(cfg), std::invalid_argument);

  cfg = small_multicast();
  cfg.power_budget = -1.0;
  CHECK_THROWS_AS(build_multicast(cfg), std::invalid_argument);

  cfg = small_multicast();
  cfg.pr_stats = {make_channel_stats(exp_corr(0.5, 3), 1)};
  CHECK_THROWS_AS(build_multicast(cfg), std::invalid_argument);
}

TEST_CASE("identity receive correlation reduces the correlated build exactly") {
  const CRNetworkConfig cfg = small_multicast();
  const SecrecyPieces plain = build_multicast(cfg);
  const SecrecyPieces doubly = build_multicast_doubly_correlated(cfg);
  REQUIRE(doubly.rows[0].size() == plain.rows[0].size());
  CHECK(doubly.set.items[1].scale == 1.0);
  for (std::size_t k = 0; k < plain.rows[0].size(); ++k)
    for (std::uint64_t s = 1; s <= 5; ++s) {
      const Mat p = complex_channel(s);
      CHECK(eval_gqmf(doubly.rows[0][k], p) == eval_gqmf(plain.rows[0][k], p));
    }
}

TEST_CASE("receive correlation scales the interference load") {
  CRNetworkConfig cfg = small_multicast();
  ChannelStats pr = make_channel_stats(exp_corr(0.5, 2),
                                       HermitianMatrix(Mat(2.0 * Mat::Identity(2, 2))));
  cfg.pr_stats = {pr};
  const SecrecyPieces doubly = build_multicast_doubly_correlated(cfg);
  CHECK(doubly.set.items[1].scale == 2.0);
  CHECK(doubly.set.items[1].budget == 1.0);

  const SecrecyPieces plain = build_multicast(cfg);
  CHECK(plain.set.items[1].scale == 1.0);
}

TEST_CASE("correlated multicast surrogates stay tangent") {
  CRNetworkConfig cfg = small_multicast();
  for (ChannelStats& s : cfg.sr_stats) s = make_channel_stats(s.transmit_corr, exp_corr(0.7, 2));
  for (ChannelStats& s : cfg.ed_stats) s = make_channel_stats(s.transmit_corr, exp_corr(0.3, 2));
  const SecrecyPieces pieces = build_multicast_doubly_correlated(cfg);
  const Mat base = initial_precoder(pieces.set, 2, 2);
  for (const GeneralizedQMF& f : pieces.rows[0]) {
    const TangencyReport rep = tangency_check(f, perturbed_start(base, pieces.set, 3), 20, 77);
    CHECK(rep.value_gap_at_anchor <= 1e-9);
    CHECK(rep.grad_gap_at_anchor <= 1e-8);
    CHECK(rep.max_sandwich_violation <= 1e-9);
  }
}

TEST_CASE("broadcast builder layout and zero point") {
  CRNetworkConfig cfg = small_multicast();
  cfg.scenario = CRScenario::kBroadcast;
  const SecrecyPieces pieces = build_broadcast(cfg);
  REQUIRE(pieces.rows.size() == 2);
  REQUIRE(pieces.rows[0].size() == 1);
  CHECK(pieces.precoder_rows == 2);
  CHECK(pieces.precoder_cols == 4);
  for (const auto& row : pieces.rows)
    for (const GeneralizedQMF& f : row) {
      CHECK(f.terms.size() == 4);
      CHECK(f.rows == 2);
      CHECK(f.cols == 4);
      CHECK(eval_gqmf(f, Mat::Zero(2, 4)) == 0.0);
    }
}

TEST_CASE("single user broadcast reduces to the multicast rate difference") {
  CRNetworkConfig cfg = small_multicast();
  cfg.sr_stats = {stats_of(0.9, 2)};
  CRNetworkConfig bc = cfg;
  bc.scenario = CRScenario::kBroadcast;
  const SecrecyPieces one_user = build_broadcast(bc);
  const SecrecyPieces reference = build_multicast(cfg);
  REQUIRE(one_user.rows.size() == 1);
  REQUIRE(one_user.rows[0].size() == 1);
  CHECK(one_user.precoder_cols == 2);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const Mat p = complex_channel(s);
    const double a = eval_gqmf(one_user.rows[0][0], p);
    const double b = eval_gqmf(reference.rows[0][0], p);
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
  }
}

TEST_CASE("broadcast surrogates stay tangent") {
  CRNetworkConfig cfg = small_multicast();
  cfg.scenario = CRScenario::kBroadcast;
  const SecrecyPieces pieces = build_broadcast(cfg);
  const Mat base = initial_precoder(pieces.set, pieces.precoder_rows, pieces.precoder_cols);
  for (const auto& row : pieces.rows)
    for (const GeneralizedQMF& f : row) {
      const TangencyReport rep = tangency_check(f, perturbed_start(base, pieces.set, 5), 10, 55);
      CHECK(rep.value_gap_at_anchor <= 1e-9);
      CHECK(rep.grad_gap_at_anchor <= 1e-8);
      CHECK(rep.max_sandwich_violation <= 1e-9);
    }
}

TEST_CASE("water level allocation closed forms") {
  const Mat eye = Mat::Identity(2, 2);
  const Mat equal_split = waterfilling(eye, 2.0);
  CHECK((equal_split - eye).norm() <= 1e-12);

  const Mat h = two_by_two();
  const EigResult eig = hermitian_eig(HermitianMatrix((h.adjoint() * h).eval()));
  CHECK(eig.values(0) == doctest::Approx(6.8541).epsilon(1e-4));
  CHECK(eig.values(1) == doctest::Approx(0.1459).epsilon(1e-4));

  const Mat single = waterfilling(h, 4.0);
  CHECK(single.col(1).norm() == 0.0);
  CHECK(std::abs((single.adjoint() * single).trace().real() - 4.0) <= 1e-10);
  CHECK(water_level_rate(h, 4.0) ==
        doctest::Approx(std::log2(1.0 + 4.0 * eig.values(0))).epsilon(1e-9));

  const Mat both = waterfilling(h, 12.0);
  CHECK(both.col(1).norm() > 0.0);
  CHECK(std::abs((both.adjoint() * both).trace().real() - 12.0) <= 1e-10);
  const double level = (12.0 + 1.0 / eig.values(0) + 1.0 / eig.values(1)) / 2.0;
  CHECK(both.col(0).squaredNorm() == doctest::Approx(level - 1.0 / eig.values(0)).epsilon(1e-9));

  CHECK(waterfilling(Mat::Zero(2, 2), 3.0).norm() == 0.0);
  CHECK_THROWS_AS(waterfilling(h, 0.0), std::invalid_argument);
}

TEST_CASE("gaussian precoding baseline cancels for identical statistics") {
  CRNetworkConfig cfg = small_multicast();
  cfg.sr_stats = {stats_of(0.7, 2)};
  cfg.ed_stats = {stats_of(0.7, 2)};
  SolverOptions opts;
  opts.eps = 1e-5;
  const GaussianPrecodingResult out = gaussian_precoding_mc(cfg, 3, 11, opts);
  CHECK(out.trace.converged);
  CHECK(!out.stalled);
  CHECK(std::abs(out.trace.objective) <= 1e-9);
}

TEST_CASE("single draw gaussian precoding matches a direct ascent") {
  CRNetworkConfig cfg;
  cfg.sr_stats = {stats_of(0.9, 2)};
  cfg.ed_stats = {stats_of(0.3, 2)};
  cfg.power_budget = 10.0;
  cfg.constellation = make_constellation("qpsk");
  cfg.scenario = CRScenario::kMulticast;
  SolverOptions opts;
  opts.eps = 1e-6;
  const std::uint64_t seed = 3;
  const GaussianPrecodingResult out = gaussian_precoding_mc(cfg, 1, seed, opts);

  const Mat h_r = sample_kronecker(cfg.sr_stats[0], derive_seed({seed, 0x67647277ULL, 0, 0}));
  const Mat h_e = sample_kronecker(cfg.ed_stats[0], derive_seed({seed, 0x67647277ULL, 0, 0}));
  ProblemInstance direct;
  direct.rows = 2;
  direct.cols = 2;
  direct.objective.rows = 2;
  direct.objective.cols = 2;
  direct.objective.terms.push_back(
      {-1.0, {neg_log2det(), HermitianMatrix((h_r.adjoint() * h_r).eval())}});
  direct.objective.terms.push_back(
      {+1.0, {neg_log2det(), HermitianMatrix((h_e.adjoint() * h_e).eval())}});
  QuadraticConstraint cap;
  cap.theta = HermitianMatrix::identity(2);
  cap.budget = 10.0;
  direct.set.items.push_back(cap);
  const SolveTrace ref = solve_gqmp(direct, initial_precoder(direct.set, 2, 2), opts);

  CHECK(std::abs(out.trace.objective - ref.objective) <= 1e-4);

  const Mat qq = out.precoder * out.precoder.adjoint();
  CHECK((qq - out.q.mat()).norm() <= 1e-8);
  const Mat xx = out.trace.x_final * out.trace.x_final.adjoint();
  CHECK((xx - out.q.mat()).norm() <= 1e-10);

  CHECK_THROWS_AS(gaussian_precoding_mc(cfg, 0, seed, opts), std::invalid_argument);
}

TEST_CASE("initial precoder keeps slack on every constraint") {
  const CRNetworkConfig cfg = small_multicast();
  const SecrecyPieces pieces = build_multicast(cfg);
  const Mat p0 = initial_precoder(pieces.set, 2, 2);
  CHECK(p0.rows() == 2);
  CHECK(p0.cols() == 2);
  double tightest = 0.0;
  for (const QuadraticConstraint& c : pieces.set.items) {
    const double load = c.scale * (p0.adjoint() * c.theta.mat() * p0).trace().real();
    CHECK(load <= 0.9 * c.budget * (1.0 + 1e-12));
    tightest = std::max(tightest, load / c.budget);
  }
  CHECK(tightest == doctest::Approx(0.9).epsilon(1e-9));

  const Mat wide = initial_precoder(pieces.set, 2, 4);
  CHECK(wide.cols() == 4);
  CHECK_THROWS_AS(initial_precoder(pieces.set, 0, 2), std::invalid_argument);
}

TEST_CASE("perturbed starts are deterministic, distinct, and feasible") {
  const CRNetworkConfig cfg = small_multicast();
  const SecrecyPieces pieces = build_multicast(cfg);
  const Mat base = initial_precoder(pieces.set, 2, 2);
  const Mat a = perturbed_start(base, pieces.set, 1);
  const Mat again = perturbed_start(base, pieces.set, 1);
  const Mat b = perturbed_start(base, pieces.set, 2);
  CHECK((a - again).norm() == 0.0);
  CHECK((a - b).norm() > 1e-6);
  for (const Mat& p : {a, b})
    for (const QuadraticConstraint& c : pieces.set.items) {
      const double load = c.scale * (p.adjoint() * c.theta.mat() * p).trace().real();
      CHECK(load <= 0.9 * c.budget * (1.0 + 1e-12));
    }
}
