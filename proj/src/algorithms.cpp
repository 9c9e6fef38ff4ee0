#include "gqmp/algorithms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>

namespace gqmp {
namespace {

constexpr double kAscentSlop = 1e-10;     // tolerated per-step numerical backslide
constexpr double kStartMargin = 1e-12;    // feasibility margin for start points
constexpr double kSlaterFloor = 1e-10;

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double resolved_subtol(const SolverOptions& opts) {
  return opts.subproblem_tol > 0.0 ? opts.subproblem_tol : opts.eps / 10.0;
}

MatrixFunctionOracle surrogate_oracle(const GeneralizedQMF& f, const Mat& anchor) {
  auto s = std::make_shared<SurrogateGQMF>(f, anchor);
  return {[s](const Mat& x) { return s->value(x); },
          [s](const Mat& x) { return s->gradient(x); }};
}

// (1/beta)(m + ln sum exp(beta v_j - m)) with m = max_j beta v_j.
double lse_scaled(const std::vector<double>& vals, double beta) {
  double m = -std::numeric_limits<double>::infinity();
  for (const double v : vals) m = std::max(m, beta * v);
  double acc = 0.0;
  for (const double v : vals) acc += std::exp(beta * v - m);
  return (m + std::log(acc)) / beta;
}

std::vector<double> softmin_weights(const std::vector<double>& vals, double beta) {
  double m = -std::numeric_limits<double>::infinity();
  for (const double v : vals) m = std::max(m, beta * v);
  std::vector<double> w(vals.size(), 0.0);
  double acc = 0.0;
  for (std::size_t j = 0; j < vals.size(); ++j) {
    w[j] = std::exp(beta * vals[j] - m);
    acc += w[j];
  }
  for (double& wj : w) wj /= acc;
  return w;
}

using SurrogateRows = std::vector<std::vector<SurrogateGQMF>>;

MatrixFunctionOracle smoothed_rows_oracle(std::shared_ptr<const SurrogateRows> rows, double beta) {
  auto value = [rows, beta](const Mat& x) {
    double total = 0.0;
    std::vector<double> vals;
    for (const auto& row : *rows) {
      vals.clear();
      for (const auto& f : row) vals.push_back(f.value(x));
      total += lse_scaled(vals, beta);
    }
    return total;
  };
  auto gradient = [rows, beta](const Mat& x) {
    Mat g;
    std::vector<double> vals;
    for (const auto& row : *rows) {
      vals.clear();
      for (const auto& f : row) vals.push_back(f.value(x));
      const auto w = softmin_weights(vals, beta);
      for (std::size_t j = 0; j < row.size(); ++j) {
        Mat gj = row[j].gradient(x);
        if (g.size() == 0) {
          g = Mat::Zero(gj.rows(), gj.cols());
        }
        g += w[j] * gj;
      }
    }
    return g;
  };
  return {std::move(value), std::move(gradient)};
}

// Same objective shape, evaluated on the source functions; used for terminal
// residuals, where tangency makes source and re-anchored gradients agree.
MatrixFunctionOracle smoothed_source_oracle(
    std::shared_ptr<const std::vector<const GeneralizedQMF*>> flat_rows,
    std::shared_ptr<const std::vector<std::size_t>> row_offsets, double beta) {
  auto value = [flat_rows, row_offsets, beta](const Mat& x) {
    double total = 0.0;
    std::vector<double> vals;
    for (std::size_t i = 0; i + 1 < row_offsets->size(); ++i) {
      vals.clear();
      for (std::size_t j = (*row_offsets)[i]; j < (*row_offsets)[i + 1]; ++j) {
        vals.push_back(eval_gqmf(*(*flat_rows)[j], x));
      }
      total += lse_scaled(vals, beta);
    }
    return total;
  };
  auto gradient = [flat_rows, row_offsets, beta](const Mat& x) {
    Mat g;
    std::vector<double> vals;
    for (std::size_t i = 0; i + 1 < row_offsets->size(); ++i) {
      vals.clear();
      for (std::size_t j = (*row_offsets)[i]; j < (*row_offsets)[i + 1]; ++j) {
        vals.push_back(eval_gqmf(*(*flat_rows)[j], x));
      }
      const auto w = softmin_weights(vals, beta);
      for (std::size_t j = (*row_offsets)[i]; j < (*row_offsets)[i + 1]; ++j) {
        Mat gj = grad_gqmf(*(*flat_rows)[j], x);
        if (g.size() == 0) g = Mat::Zero(gj.rows(), gj.cols());
        g += w[j - (*row_offsets)[i]] * gj;
      }
    }
    return g;
  };
  return {std::move(value), std::move(gradient)};
}

void require_start_in_set(const QuadraticConstraintSet& set, const Mat& x0) {
  const RealVec s = set.slacks(x0);
  for (std::size_t k = 0; k < set.items.size(); ++k) {
    if (s[static_cast<Eigen::Index>(k)] < -kStartMargin * (1.0 + std::abs(set.items[k].budget))) {
      throw std::invalid_argument("start point violates the quadratic constraint set");
    }
  }
}

struct Certificate {
  MultiplierFit fit;
  double residual = std::numeric_limits<double>::infinity();
  bool ok = false;
};

Certificate certify(const Subproblem& original, const Mat& x, double active_tol) {
  Certificate c;
  try {
    c.fit = fit_multipliers(original, x, active_tol);
    c.residual = kkt_residual(original, x, c.fit.ineq_mu, c.fit.quad_nu);
    c.ok = true;
  } catch (const DomainError&) {
  }
  return c;
}

bool any_slack_collapsed(const std::vector<GeneralizedQMF>& ineqs, const Mat& x) {
  for (const auto& f : ineqs) {
    try {
      if (eval_gqmf(f, x) < kSlaterFloor) return true;
    } catch (const DomainError&) {
      return true;
    }
  }
  return false;
}

}  // namespace

MatrixFunctionOracle gqmf_oracle(const GeneralizedQMF& f) {
  return {[&f](const Mat& x) { return eval_gqmf(f, x); },
          [&f](const Mat& x) { return grad_gqmf(f, x); }};
}

double min_rate_true(const std::vector<GeneralizedQMF>& fs, const Mat& x) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& f : fs) m = std::min(m, eval_gqmf(f, x));
  return m;
}

double smoothed_min_true(const std::vector<GeneralizedQMF>& fs, double beta, const Mat& x) {
  std::vector<double> vals;
  vals.reserve(fs.size());
  for (const auto& f : fs) vals.push_back(eval_gqmf(f, x));
  return lse_scaled(vals, beta);
}

double clipped_minsum_true(const std::vector<std::vector<GeneralizedQMF>>& f_matrix,
                           const Mat& x) {
  double total = 0.0;
  for (const auto& row : f_matrix) total += std::max(0.0, min_rate_true(row, x));
  return total;
}

std::vector<int> activity_vector(const std::vector<std::vector<GeneralizedQMF>>& f_matrix,
                                 const Mat& x) {
  std::vector<int> lam(f_matrix.size(), 0);
  for (std::size_t i = 0; i < f_matrix.size(); ++i) {
    lam[i] = min_rate_true(f_matrix[i], x) >= 0.0 ? 1 : 0;
  }
  return lam;
}

SolveTrace solve_gqmp(const ProblemInstance& p, const Mat& x0, const SolverOptions& opts) {
  check_problem(p);
  if (opts.eps <= 0.0) throw std::invalid_argument("outer tolerance must be positive");
  if (x0.rows() != p.rows || x0.cols() != p.cols) {
    throw std::invalid_argument("start point dimensions do not match the problem");
  }
  require_start_in_set(p.set, x0);
  for (const auto& f : p.constraints) {
    double v = 0.0;
    try {
      v = eval_gqmf(f, x0);
    } catch (const DomainError&) {
      throw std::invalid_argument("a constraint is undefined at the start point");
    }
    if (v < -kStartMargin) throw std::invalid_argument("start point violates a constraint");
  }
  double s = 0.0;
  try {
    s = eval_gqmf(p.objective, x0);
  } catch (const DomainError&) {
    throw std::invalid_argument("objective is undefined at the start point");
  }

  const double subtol = resolved_subtol(opts);
  SolveTrace out;
  out.x_final = x0;
  out.objective = s;
  out.iterates.push_back({0, x0, s, 0.0, 0.0});

  Subproblem original;
  original.objective = gqmf_oracle(p.objective);
  for (const auto& f : p.constraints) original.ineqs.push_back(gqmf_oracle(f));
  original.set = p.set;
  const double active_tol = std::max(1e-6, 10.0 * subtol);

  Mat x = x0;
  std::optional<SubproblemSolution> last;
  out.stop_reason = StopReason::kIterationCap;
  for (int n = 1; n <= opts.max_outer; ++n) {
    const double t0 = opts.emit_timing ? now_ms() : 0.0;
    Subproblem sp;
    sp.objective = surrogate_oracle(p.objective, x);
    for (const auto& f : p.constraints) sp.ineqs.push_back(surrogate_oracle(f, x));
    sp.set = p.set;

    SubproblemSolution sol;
    double s_new = 0.0;
    try {
      sol = solve_subproblem(sp, x, subtol);
      s_new = eval_gqmf(p.objective, sol.x_opt);
    } catch (const std::exception&) {
      out.stop_reason = StopReason::kSubsolverFailure;
      break;
    }
    if (s_new < s - kAscentSlop) {
      // Tangency makes a true backslide impossible beyond rounding; treat it
      // as a converged stall rather than recording a decrease.
      out.stop_reason = StopReason::kTolerance;
      out.converged = true;
      break;
    }
    const double change = s_new - s;
    x = sol.x_opt;
    s = s_new;
    last = sol;
    if (any_slack_collapsed(p.constraints, x)) out.slater_warning = true;
    out.iterates.push_back({n, x, s, sol.kkt_residual, opts.emit_timing ? now_ms() - t0 : 0.0});
    if (change <= opts.eps) {
      const Certificate c = certify(original, x, active_tol);
      if (c.ok && c.residual <= 10.0 * opts.eps) {
        out.stop_reason = StopReason::kTolerance;
        out.converged = true;
        break;
      }
    }
  }

  out.x_final = x;
  out.objective = s;
  if (last) out.surrogate_kkt = last->kkt_residual;
  const Certificate c = certify(original, x, active_tol);
  if (c.ok) {
    out.original_kkt = c.residual;
    out.ineq_multipliers = c.fit.ineq_mu;
    out.quad_multipliers = c.fit.quad_nu;
  }
  if (any_slack_collapsed(p.constraints, x)) out.slater_warning = true;
  return out;
}

namespace {

enum class TraceMetric { kSmoothed, kRawSum, kClippedSum };

struct MinSumSpec {
  const std::vector<std::vector<GeneralizedQMF>>* rows = nullptr;
  std::vector<int> active;  // initial activity; refreshed per anchor when refresh
  bool refresh = false;
  TraceMetric metric = TraceMetric::kSmoothed;
  const std::vector<GeneralizedQMF>* extra_ineqs = nullptr;
  double beta0 = -5.0;
  bool schedule = false;
};

double trace_value(const MinSumSpec& spec, const Mat& x, double beta,
                   const std::vector<int>& active) {
  switch (spec.metric) {
    case TraceMetric::kClippedSum:
      return clipped_minsum_true(*spec.rows, x);
    case TraceMetric::kRawSum: {
      double total = 0.0;
      for (std::size_t i = 0; i < spec.rows->size(); ++i) {
        if (active[i]) total += min_rate_true((*spec.rows)[i], x);
      }
      return total;
    }
    case TraceMetric::kSmoothed:
    default: {
      double total = 0.0;
      for (std::size_t i = 0; i < spec.rows->size(); ++i) {
        if (active[i]) total += smoothed_min_true((*spec.rows)[i], beta, x);
      }
      return total;
    }
  }
}

SolveTrace run_minsum(const MinSumSpec& spec, const QuadraticConstraintSet& set, const Mat& x0,
                      const SolverOptions& opts) {
  if (opts.eps <= 0.0) throw std::invalid_argument("outer tolerance must be positive");
  if (spec.beta0 >= 0.0) throw std::invalid_argument("smoothing sharpness beta must be negative");
  const auto& rows = *spec.rows;
  if (rows.empty()) throw std::invalid_argument("at least one rate row is required");
  for (const auto& row : rows) {
    if (row.empty()) throw std::invalid_argument("every rate row needs at least one function");
    for (const auto& f : row) {
      check_gqmf(f);
      if (f.rows != rows[0][0].rows || f.cols != rows[0][0].cols) {
        throw std::invalid_argument("rate functions must share one precoder shape");
      }
    }
  }
  if (x0.rows() != rows[0][0].rows || x0.cols() != rows[0][0].cols) {
    throw std::invalid_argument("start point dimensions do not match the rate functions");
  }
  require_start_in_set(set, x0);
  if (spec.extra_ineqs != nullptr) {
    for (const auto& f : *spec.extra_ineqs) {
      double v = 0.0;
      try {
        v = eval_gqmf(f, x0);
      } catch (const DomainError&) {
        throw std::invalid_argument("a constraint is undefined at the start point");
      }
      if (v < -kStartMargin) throw std::invalid_argument("start point violates a constraint");
    }
  }

  const double subtol = resolved_subtol(opts);
  const double active_tol = std::max(1e-6, 10.0 * subtol);
  double beta = spec.beta0;
  Mat x = x0;
  SolveTrace out;
  std::vector<int> lam;
  double cur = 0.0;
  try {
    lam = spec.refresh ? activity_vector(rows, x) : spec.active;
    cur = trace_value(spec, x, beta, lam);
  } catch (const DomainError&) {
    throw std::invalid_argument("a rate function is undefined at the start point");
  }
  out.iterates.push_back({0, x, cur, 0.0, 0.0});
  out.stop_reason = StopReason::kIterationCap;

  auto original_view = [&](const std::vector<int>& active, double b) {
    auto flat = std::make_shared<std::vector<const GeneralizedQMF*>>();
    auto offsets = std::make_shared<std::vector<std::size_t>>();
    offsets->push_back(0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!active[i]) continue;
      for (const auto& f : rows[i]) flat->push_back(&f);
      offsets->push_back(flat->size());
    }
    Subproblem orig;
    orig.objective = smoothed_source_oracle(flat, offsets, b);
    if (spec.extra_ineqs != nullptr) {
      for (const auto& f : *spec.extra_ineqs) orig.ineqs.push_back(gqmf_oracle(f));
    }
    orig.set = set;
    return orig;
  };

  std::optional<SubproblemSolution> last;
  std::vector<int> lam_used = lam;
  for (int n = 1; n <= opts.max_outer; ++n) {
    const double t0 = opts.emit_timing ? now_ms() : 0.0;
    if (spec.refresh) lam = activity_vector(rows, x);
    const bool any_active =
        std::any_of(lam.begin(), lam.end(), [](int v) { return v != 0; });
    if (!any_active) {
      // Frozen objective is identically zero; the anchor is already optimal
      // for it.
      lam_used = lam;
      out.stop_reason = StopReason::kTolerance;
      out.converged = true;
      break;
    }

    auto surr = std::make_shared<SurrogateRows>();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!lam[i]) continue;
      auto& dest = surr->emplace_back();
      dest.reserve(rows[i].size());
      for (const auto& f : rows[i]) dest.emplace_back(f, x);
    }

    Subproblem sp;
    sp.objective = smoothed_rows_oracle(surr, beta);
    if (spec.extra_ineqs != nullptr) {
      for (const auto& f : *spec.extra_ineqs) sp.ineqs.push_back(surrogate_oracle(f, x));
    }
    sp.set = set;

    SubproblemSolution sol;
    double cand = 0.0;
    try {
      sol = solve_subproblem(sp, x, subtol);
      cand = trace_value(spec, sol.x_opt, beta, lam);
    } catch (const std::exception&) {
      out.stop_reason = StopReason::kSubsolverFailure;
      break;
    }

    if (cand < cur - kAscentSlop) {
      // The smoothing gap let the surrogate ascend while the true metric
      // slipped; sharpen and retry from the same anchor instead of recording
      // a decrease.
      if (spec.schedule && beta > opts.beta_cap) {
        beta = std::max(opts.beta_cap, beta * opts.beta_growth);
        continue;
      }
      lam_used = lam;
      out.stop_reason = StopReason::kTolerance;
      out.converged = true;
      break;
    }

    const double change = cand - cur;
    x = sol.x_opt;
    cur = cand;
    last = sol;
    lam_used = lam;
    if (spec.extra_ineqs != nullptr && any_slack_collapsed(*spec.extra_ineqs, x)) {
      out.slater_warning = true;
    }
    out.iterates.push_back({n, x, cur, sol.kkt_residual, opts.emit_timing ? now_ms() - t0 : 0.0});

    if (spec.schedule && beta > opts.beta_cap && change < 10.0 * opts.eps) {
      beta = std::max(opts.beta_cap, beta * opts.beta_growth);
      continue;  // judge convergence only at the sharpest smoothing
    }
    if (change <= opts.eps) {
      if (spec.refresh && activity_vector(rows, x) != lam_used) continue;
      const Certificate c = certify(original_view(lam_used, beta), x, active_tol);
      if (c.ok && c.residual <= 10.0 * opts.eps) {
        out.stop_reason = StopReason::kTolerance;
        out.converged = true;
        break;
      }
    }
  }

  out.x_final = x;
  out.objective = cur;
  out.beta_final = beta;
  out.lambdas = lam_used;
  if (last) out.surrogate_kkt = last->kkt_residual;
  const bool any_active =
      std::any_of(lam_used.begin(), lam_used.end(), [](int v) { return v != 0; });
  if (any_active) {
    const Certificate c = certify(original_view(lam_used, beta), x, active_tol);
    if (c.ok) {
      out.original_kkt = c.residual;
      out.ineq_multipliers = c.fit.ineq_mu;
      out.quad_multipliers = c.fit.quad_nu;
    }
  }
  if (spec.extra_ineqs != nullptr && any_slack_collapsed(*spec.extra_ineqs, x)) {
    out.slater_warning = true;
  }
  return out;
}

}  // namespace

SolveTrace solve_minrate(const std::vector<GeneralizedQMF>& fs,
                         const std::vector<GeneralizedQMF>& extra_ineqs,
                         const QuadraticConstraintSet& set, const Mat& x0, double beta,
                         const SolverOptions& opts) {
  if (beta >= 0.0) throw std::invalid_argument("smoothing sharpness beta must be negative");
  std::vector<std::vector<GeneralizedQMF>> rows(1);
  rows[0] = fs;
  MinSumSpec spec;
  spec.rows = &rows;
  spec.active = {1};
  spec.refresh = false;
  spec.metric = TraceMetric::kSmoothed;
  spec.extra_ineqs = &extra_ineqs;
  spec.beta0 = beta;
  spec.schedule = false;
  return run_minsum(spec, set, x0, opts);
}

SolveTrace solve_sum_secrecy(const std::vector<std::vector<GeneralizedQMF>>& f_matrix,
                             const QuadraticConstraintSet& set, const Mat& x0,
                             const SolverOptions& opts) {
  MinSumSpec spec;
  spec.rows = &f_matrix;
  spec.active.assign(f_matrix.size(), 1);
  spec.refresh = true;
  spec.metric = TraceMetric::kClippedSum;
  spec.beta0 = opts.beta_start;
  spec.schedule = true;
  return run_minsum(spec, set, x0, opts);
}

EnumerationResult enumerate_oracle(const std::vector<std::vector<GeneralizedQMF>>& f_matrix,
                                   const QuadraticConstraintSet& set, const Mat& x0,
                                   const SolverOptions& opts) {
  const std::size_t users = f_matrix.size();
  if (users == 0) throw std::invalid_argument("at least one user row is required");
  if (users > 4) {
    throw std::invalid_argument(
        "subset enumeration is limited to 4 users (2^I - 1 solves)");
  }
  EnumerationResult out;
  out.best_value = 0.0;  // switching every user off always achieves zero
  out.best_subset = {};
  for (unsigned mask = 1; mask < (1u << users); ++mask) {
    MinSumSpec spec;
    spec.rows = &f_matrix;
    spec.active.assign(users, 0);
    std::vector<int> subset;
    for (std::size_t i = 0; i < users; ++i) {
      if ((mask >> i) & 1u) {
        spec.active[i] = 1;
        subset.push_back(static_cast<int>(i));
      }
    }
    spec.refresh = false;
    spec.metric = TraceMetric::kRawSum;
    spec.beta0 = opts.beta_start;
    spec.schedule = true;
    const SolveTrace t = run_minsum(spec, set, x0, opts);
    ++out.subproblems_solved;
    out.branch_values.emplace_back(subset, t.objective);
    if (t.objective > out.best_value) {
      out.best_value = t.objective;
      out.best_subset = subset;
    }
  }
  return out;
}

MultiStartOutcome multi_start(const std::vector<std::uint64_t>& seeds,
                              const std::function<Mat(std::uint64_t)>& make_start,
                              const std::function<SolveTrace(const Mat&)>& solve_one) {
  if (seeds.empty()) throw std::invalid_argument("multi-start needs at least one seed");
  MultiStartOutcome out;
  bool have = false;
  for (const std::uint64_t seed : seeds) {
    SolveTrace t = solve_one(make_start(seed));
    out.values.emplace_back(seed, t.objective);
    const bool better =
        !have || t.objective > out.best.objective ||
        (t.objective == out.best.objective && seed < out.best_seed);
    if (better) {
      out.best = std::move(t);
      out.best_seed = seed;
      have = true;
    }
  }
  return out;
}

}  // namespace gqmp
