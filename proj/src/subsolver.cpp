#include "gqmp/subsolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace gqmp {
namespace {

constexpr double kArmijoC = 1e-4;
constexpr double kShrink = 0.5;
constexpr int kMaxCenterSteps = 200;
constexpr int kMaxStages = 50;
constexpr int kMaxBacktracks = 60;
constexpr int kMaxPolishSteps = 300;
constexpr double kFeasSlackTol = 1e-8;

double real_inner(const Mat& a, const Mat& b) { return (a.adjoint() * b).trace().real(); }

std::optional<double> try_value(const MatrixFunctionOracle& f, const Mat& x) {
  try {
    const double v = f.value(x);
    if (std::isfinite(v)) return v;
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

std::optional<Mat> try_gradient(const MatrixFunctionOracle& f, const Mat& x) {
  try {
    Mat g = f.gradient(x);
    if (g.allFinite()) return g;
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

struct BarrierPoint {
  bool ok = false;
  double value = -std::numeric_limits<double>::infinity();
  double obj = 0.0;
  std::vector<double> fvals;  // inequality values (unshifted)
  RealVec slacks;             // quadratic-set slacks
};

BarrierPoint eval_barrier(const Subproblem& p, const Mat& x, double mu_b, double sigma) {
  BarrierPoint out;
  const auto obj = try_value(p.objective, x);
  if (!obj) return out;
  double b = *obj;
  out.obj = *obj;
  out.fvals.reserve(p.ineqs.size());
  for (const auto& f : p.ineqs) {
    const auto v = try_value(f, x);
    if (!v) return out;
    out.fvals.push_back(*v);
    const double shifted = *v + sigma;
    if (shifted <= 0.0) return out;
    b += mu_b * std::log(shifted);
  }
  out.slacks = p.set.slacks(x);
  for (Eigen::Index k = 0; k < out.slacks.size(); ++k) {
    if (out.slacks[k] <= 0.0) return out;
    b += mu_b * std::log(out.slacks[k]);
  }
  out.value = b;
  out.ok = true;
  return out;
}

std::optional<Mat> barrier_gradient(const Subproblem& p, const Mat& x, double mu_b, double sigma,
                                    const BarrierPoint& at) {
  auto g = try_gradient(p.objective, x);
  if (!g) return std::nullopt;
  for (std::size_t j = 0; j < p.ineqs.size(); ++j) {
    auto gj = try_gradient(p.ineqs[j], x);
    if (!gj) return std::nullopt;
    *g += (mu_b / (at.fvals[j] + sigma)) * (*gj);
  }
  for (std::size_t k = 0; k < p.set.items.size(); ++k) {
    const auto& c = p.set.items[k];
    *g -= (mu_b * c.scale / at.slacks[static_cast<Eigen::Index>(k)]) * (c.theta.mat() * x);
  }
  return g;
}

// Feasibility up to a margin well inside the 1e-8 slack the solution contract
// allows; the margin absorbs last-bit rounding at exactly-active constraints.
bool feasible_within(const Subproblem& p, const Mat& x, double margin) {
  for (const auto& f : p.ineqs) {
    const auto v = try_value(f, x);
    if (!v || *v < -margin) return false;
  }
  const RealVec s = p.set.slacks(x);
  for (std::size_t k = 0; k < p.set.items.size(); ++k) {
    if (s[static_cast<Eigen::Index>(k)] < -margin * (1.0 + std::abs(p.set.items[k].budget))) {
      return false;
    }
  }
  return true;
}

// Scale the candidate back inside the quadratic set; scaling toward the
// origin shrinks every PSD quadratic form, and the most violated constraint
// lands exactly on its boundary.
Mat retract_into_set(const Subproblem& p, Mat cand) {
  double rho = 1.0;
  for (const auto& c : p.set.items) {
    const double q = c.scale * (cand.adjoint() * c.theta.mat() * cand).trace().real();
    if (c.budget > 0.0 && q > c.budget) rho = std::min(rho, std::sqrt(c.budget / q));
  }
  if (rho < 1.0) cand *= rho;
  return cand;
}

/// Armijo ascent on the barrier objective until the gradient norm falls
/// below ctol or the step budget runs out. Returns true when the tolerance
/// was reached.
bool center(const Subproblem& p, Mat& x, BarrierPoint& cur, double mu_b, double sigma,
            double ctol, int* steps_taken) {
  for (int it = 0; it < kMaxCenterSteps; ++it) {
    const auto g = barrier_gradient(p, x, mu_b, sigma, cur);
    if (!g) return false;
    const double gn = g->norm();
    if (gn <= ctol) return true;
    const double slope = 2.0 * gn * gn;
    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      Mat cand = x + t * (*g);
      BarrierPoint bp = eval_barrier(p, cand, mu_b, sigma);
      if (bp.ok && bp.value >= cur.value + kArmijoC * t * slope) {
        x = std::move(cand);
        cur = std::move(bp);
        accepted = true;
        ++(*steps_taken);
        break;
      }
      t *= kShrink;
    }
    if (!accepted) return false;  // line search exhausted; treat as centered
  }
  const auto g = barrier_gradient(p, x, mu_b, sigma, cur);
  return g && g->norm() <= ctol;
}

}  // namespace

double kkt_residual(const Subproblem& p, const Mat& x, const std::vector<double>& mu,
                    const std::vector<double>& nu) {
  if (mu.size() != p.ineqs.size() || nu.size() != p.set.items.size()) {
    throw std::invalid_argument("multiplier counts do not match the constraint counts");
  }
  Mat r = p.objective.gradient(x);
  double primal = 0.0;
  double dual = 0.0;
  double comp = 0.0;
  for (std::size_t j = 0; j < p.ineqs.size(); ++j) {
    const double fj = p.ineqs[j].value(x);
    r += mu[j] * p.ineqs[j].gradient(x);
    primal = std::max(primal, -fj);
    dual = std::max(dual, -mu[j]);
    comp = std::max(comp, std::abs(mu[j] * fj));
  }
  const RealVec s = p.set.slacks(x);
  for (std::size_t k = 0; k < p.set.items.size(); ++k) {
    const auto& c = p.set.items[k];
    r -= (nu[k] * c.scale) * (c.theta.mat() * x);
    const double sk = s[static_cast<Eigen::Index>(k)];
    primal = std::max(primal, -sk);
    dual = std::max(dual, -nu[k]);
    comp = std::max(comp, std::abs(nu[k] * sk));
  }
  return std::max({r.norm(), primal, dual, comp});
}

MultiplierFit fit_multipliers(const Subproblem& p, const Mat& x, double active_tol) {
  MultiplierFit out;
  out.ineq_mu.assign(p.ineqs.size(), 0.0);
  out.quad_nu.assign(p.set.items.size(), 0.0);

  const Mat r0 = p.objective.gradient(x);
  struct Candidate {
    bool quad;
    std::size_t index;
    Mat grad;
  };
  std::vector<Candidate> cands;
  for (std::size_t j = 0; j < p.ineqs.size(); ++j) {
    if (p.ineqs[j].value(x) <= active_tol) {
      cands.push_back({false, j, p.ineqs[j].gradient(x)});
    }
  }
  const RealVec s = p.set.slacks(x);
  for (std::size_t k = 0; k < p.set.items.size(); ++k) {
    const auto& c = p.set.items[k];
    if (s[static_cast<Eigen::Index>(k)] <= active_tol * (1.0 + std::abs(c.budget))) {
      cands.push_back({true, k, Mat(-c.scale * (c.theta.mat() * x))});
    }
  }

  out.stationarity = r0.norm();
  out.residual = r0;
  const std::size_t a = cands.size();
  if (a == 0) return out;

  Eigen::MatrixXd gram(a, a);
  Eigen::VectorXd rhs(a);
  for (std::size_t i = 0; i < a; ++i) {
    rhs(static_cast<Eigen::Index>(i)) = -real_inner(cands[i].grad, r0);
    for (std::size_t j = 0; j <= i; ++j) {
      const double gij = real_inner(cands[i].grad, cands[j].grad);
      gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = gij;
      gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = gij;
    }
  }

  Eigen::VectorXd best = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a));
  double best_rn = out.stationarity;

  auto residual_norm = [&](const Eigen::VectorXd& lambda) {
    Mat r = r0;
    for (std::size_t i = 0; i < a; ++i) r += lambda(static_cast<Eigen::Index>(i)) * cands[i].grad;
    return r.norm();
  };

  if (a <= 12) {
    // Exact nonnegative least squares by active-set enumeration.
    for (unsigned mask = 1; mask < (1u << a); ++mask) {
      std::vector<Eigen::Index> idx;
      for (std::size_t i = 0; i < a; ++i) {
        if ((mask >> i) & 1u) idx.push_back(static_cast<Eigen::Index>(i));
      }
      const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
      Eigen::MatrixXd gs(n, n);
      Eigen::VectorXd bs(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        bs(i) = rhs(idx[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < n; ++j) {
          gs(i, j) = gram(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
      }
      const Eigen::VectorXd sol = gs.fullPivLu().solve(bs);
      if ((gs * sol - bs).norm() > 1e-8 * (1.0 + bs.norm())) continue;
      if ((sol.array() < -1e-12).any()) continue;
      Eigen::VectorXd lambda = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a));
      for (Eigen::Index i = 0; i < n; ++i) lambda(idx[static_cast<std::size_t>(i)]) = std::max(sol(i), 0.0);
      const double rn = residual_norm(lambda);
      if (rn < best_rn - 1e-15) {
        best_rn = rn;
        best = lambda;
      }
    }
  } else {
    // Projected-gradient fallback for unusually large active sets.
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a));
    const double lip = gram.trace() + 1e-12;
    for (int it = 0; it < 500; ++it) {
      lambda = (lambda - (gram * lambda - rhs) / lip).cwiseMax(0.0);
    }
    const double rn = residual_norm(lambda);
    if (rn < best_rn) {
      best_rn = rn;
      best = lambda;
    }
  }

  Mat r = r0;
  for (std::size_t i = 0; i < a; ++i) {
    const double v = best(static_cast<Eigen::Index>(i));
    if (v != 0.0) r += v * cands[i].grad;
    if (cands[i].quad) {
      out.quad_nu[cands[i].index] = v;
    } else {
      out.ineq_mu[cands[i].index] = v;
    }
  }
  out.stationarity = best_rn;
  out.residual = std::move(r);
  return out;
}

SubproblemSolution solve_subproblem(const Subproblem& p, const Mat& x_init, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("subproblem tolerance must be positive");
  if (!p.objective.value || !p.objective.gradient) {
    throw std::invalid_argument("subproblem objective oracle is empty");
  }

  // --- start-point validation -------------------------------------------
  const RealVec slacks0 = p.set.slacks(x_init);
  for (std::size_t k = 0; k < p.set.items.size(); ++k) {
    const double lim = -1e-9 * (1.0 + std::abs(p.set.items[k].budget));
    if (slacks0[static_cast<Eigen::Index>(k)] < lim) {
      throw std::invalid_argument("start point violates the quadratic constraint set");
    }
  }
  std::vector<double> f_start;
  f_start.reserve(p.ineqs.size());
  for (const auto& f : p.ineqs) {
    const auto v = try_value(f, x_init);
    if (!v) throw std::invalid_argument("an inequality is undefined at the start point");
    if (*v < -tol) throw std::invalid_argument("start point violates an inequality beyond tolerance");
    f_start.push_back(*v);
  }
  if (!try_value(p.objective, x_init)) {
    throw std::invalid_argument("objective is undefined at the start point");
  }

  // Pull a boundary start strictly inside the quadratic set; scaling toward
  // the origin shrinks every PSD quadratic form.
  Mat x = x_init;
  {
    const double deltas[] = {0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2};
    bool interior = false;
    for (const double d : deltas) {
      Mat cand = (1.0 - d) * x_init;
      const RealVec s = p.set.slacks(cand);
      bool ok = true;
      for (std::size_t k = 0; k < p.set.items.size(); ++k) {
        if (s[static_cast<Eigen::Index>(k)] <= 1e-12 * (1.0 + std::abs(p.set.items[k].budget))) {
          ok = false;
          break;
        }
      }
      if (ok) {
        x = std::move(cand);
        interior = true;
        break;
      }
    }
    if (!interior && !p.set.items.empty()) {
      throw std::runtime_error("could not move the start point into the interior of the quadratic set");
    }
  }

  // Vanishing shift so a start sitting on an inequality boundary still has a
  // finite barrier.
  double sigma = 0.0;
  {
    double min_f = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& f : p.ineqs) {
      const auto v = try_value(f, x);
      if (!v) throw std::runtime_error("an inequality became undefined while restoring interior feasibility");
      min_f = std::min(min_f, *v);
      any = true;
    }
    if (any && min_f < 1e-8) {
      if (min_f < -0.1) throw std::runtime_error("interior restoration broke an inequality constraint");
      sigma = 1e-6 + std::max(0.0, -min_f);
    }
  }

  // --- barrier stages -----------------------------------------------------
  const std::size_t m = p.ineqs.size() + p.set.items.size();
  const double mu_floor = std::min(1e-8, 0.05 * tol / std::max<std::size_t>(m, 1));
  double mu_b = 1.0;
  int total_steps = 0;
  bool finished = false;
  BarrierPoint cur = eval_barrier(p, x, mu_b, sigma);
  if (!cur.ok) throw std::runtime_error("barrier is undefined at the restored start point");

  for (int stage = 0; stage < kMaxStages; ++stage) {
    const bool finale =
        sigma == 0.0 && mu_b <= 1.0000001e-6 && (m == 0 || m * mu_b < tol / 10.0);
    const double ctol = finale ? 0.5 * tol : std::max(0.5 * tol, 0.1 * mu_b);
    cur = eval_barrier(p, x, mu_b, sigma);
    if (!cur.ok) throw std::runtime_error("interior-point iterate left the barrier domain");
    center(p, x, cur, mu_b, sigma, ctol, &total_steps);

    if (sigma > 0.0) {
      const double min_f =
          cur.fvals.empty() ? 1.0 : *std::min_element(cur.fvals.begin(), cur.fvals.end());
      if (min_f > 1e-9) {
        sigma = 0.0;
      } else {
        double next = sigma / 10.0;
        if (min_f + next <= 1e-12) next = 1e-12 - min_f;
        sigma = next;
      }
    }
    if (finale) {
      finished = true;
      break;
    }
    mu_b = std::max(mu_b / 10.0, mu_floor);
    if (mu_b == mu_floor && sigma == 0.0 && m != 0 && !(m * mu_b < tol / 10.0)) {
      // Tolerance finer than the barrier floor supports; run one last stage.
      mu_b = 0.05 * tol / static_cast<double>(m);
    }
  }
  cur = eval_barrier(p, x, mu_b, sigma);
  if (!cur.ok) throw std::runtime_error("interior-point iterate left the barrier domain");

  {
    const double min_f =
        cur.fvals.empty() ? 0.0 : *std::min_element(cur.fvals.begin(), cur.fvals.end());
    if (min_f < -kFeasSlackTol) {
      throw std::runtime_error("feasibility restoration failed to satisfy the inequalities");
    }
  }

  // Multipliers induced by the barrier at its final center.
  std::vector<double> mu_bar(p.ineqs.size(), 0.0);
  std::vector<double> nu_bar(p.set.items.size(), 0.0);
  for (std::size_t j = 0; j < p.ineqs.size(); ++j) mu_bar[j] = mu_b / (cur.fvals[j] + sigma);
  for (std::size_t k = 0; k < p.set.items.size(); ++k) {
    nu_bar[k] = mu_b / cur.slacks[static_cast<Eigen::Index>(k)];
  }

  // --- candidate selection and projected polish ----------------------------
  const double active_tol = std::max(1e-6, 10.0 * tol);
  Mat best = x;
  double best_obj = cur.obj;
  bool moved = false;
  if (feasible_within(p, x_init, 1e-12)) {
    const auto oi = try_value(p.objective, x_init);
    if (oi && *oi > best_obj) {
      best = x_init;
      best_obj = *oi;
      moved = true;
    }
  }
  // Ascend along the Lagrangian gradient with near-active multipliers fitted
  // at each step: that direction is tangent to the supported constraints, so
  // its conditioning does not collapse the way the raw barrier gradient does
  // near the boundary. Quadratic drift is absorbed by the retraction.
  for (int it = 0; it < kMaxPolishSteps; ++it) {
    MultiplierFit fit;
    try {
      fit = fit_multipliers(p, best, active_tol);
    } catch (const DomainError&) {
      break;
    }
    const double rn = fit.stationarity;
    if (rn <= 0.3 * tol || !fit.residual.allFinite()) break;
    const double slope = 2.0 * rn * rn;
    double t = std::min(1.0, 1.0 / rn);
    bool accepted = false;
    while (t >= 1e-14) {
      Mat cand = retract_into_set(p, best + t * fit.residual);
      if (feasible_within(p, cand, 1e-9)) {
        const auto ov = try_value(p.objective, cand);
        if (ov && *ov >= best_obj + kArmijoC * t * slope) {
          best = std::move(cand);
          best_obj = *ov;
          accepted = true;
          moved = true;
          ++total_steps;
          break;
        }
      }
      t *= kShrink;
    }
    if (!accepted) break;
  }

  // --- multipliers and the reported residual ------------------------------
  SubproblemSolution out;
  out.x_opt = best;
  out.objective_value = best_obj;
  out.iterations = total_steps;
  if (!moved) {
    out.ineq_multipliers = mu_bar;
    out.quad_multipliers = nu_bar;
    out.kkt_residual = kkt_residual(p, best, mu_bar, nu_bar);
    const MultiplierFit fit = fit_multipliers(p, best, active_tol);
    const double alt = kkt_residual(p, best, fit.ineq_mu, fit.quad_nu);
    if (alt < out.kkt_residual) {
      out.ineq_multipliers = fit.ineq_mu;
      out.quad_multipliers = fit.quad_nu;
      out.kkt_residual = alt;
    }
  } else {
    const MultiplierFit fit = fit_multipliers(p, best, active_tol);
    out.ineq_multipliers = fit.ineq_mu;
    out.quad_multipliers = fit.quad_nu;
    out.kkt_residual = kkt_residual(p, best, fit.ineq_mu, fit.quad_nu);
    if (out.kkt_residual > tol && cur.obj >= best_obj - 1e-10) {
      // The polish step gained nothing measurable but spoiled the multiplier
      // fit; the barrier center is the better certificate.
      const double bar_kkt = kkt_residual(p, x, mu_bar, nu_bar);
      if (bar_kkt < out.kkt_residual) {
        out.x_opt = x;
        out.objective_value = cur.obj;
        out.ineq_multipliers = mu_bar;
        out.quad_multipliers = nu_bar;
        out.kkt_residual = bar_kkt;
      }
    }
  }
  out.converged = finished && out.kkt_residual <= tol;
  return out;
}

}  // namespace gqmp
