#include "gqmp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "gqmp/matrix_io.hpp"

namespace gqmp {
namespace {

using nlohmann::json;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

std::string sanitize_number(double v) {
  std::string s = format_double(v);
  for (char& c : s) {
    if (c == '-') c = 'm';
    if (c == '.') c = 'p';
  }
  return s;
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

class FieldReader {
 public:
  FieldReader(const json& j, std::string prefix, std::vector<std::string>& violations)
      : j_(j), prefix_(std::move(prefix)), violations_(violations) {}

  void fail(const std::string& field, const std::string& msg) {
    violations_.push_back(prefix_ + field + ": " + msg);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  void check_known(const std::set<std::string>& known) {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!known.count(it.key())) fail(it.key(), "unknown field");
  }

  template <typename T>
  bool read(const std::string& key, T& out, bool required) {
    if (!j_.contains(key)) {
      if (required) fail(key, "missing");
      return false;
    }
    try {
      out = j_.at(key).get<T>();
      return true;
    } catch (const json::exception&) {
      fail(key, "wrong type");
      return false;
    }
  }

  bool read_matrix(const std::string& key, Mat& out, bool required) {
    if (!j_.contains(key)) {
      if (required) fail(key, "missing");
      return false;
    }
    try {
      out = matrix_from_json(j_.at(key));
      return true;
    } catch (const std::exception& e) {
      fail(key, e.what());
      return false;
    }
  }

  const json& sub(const std::string& key) const { return j_.at(key); }

 private:
  const json& j_;
  std::string prefix_;
  std::vector<std::string>& violations_;
};

bool parse_scenario(const std::string& name, ScenarioKind& out) {
  if (name == "p2p") out = ScenarioKind::kP2P;
  else if (name == "wiretap") out = ScenarioKind::kWiretap;
  else if (name == "multicast") out = ScenarioKind::kMulticast;
  else if (name == "broadcast") out = ScenarioKind::kBroadcast;
  else return false;
  return true;
}

void validate_semantics(const ExperimentConfig& cfg, std::vector<std::string>& violations) {
  auto fail = [&](const std::string& field, const std::string& msg) {
    violations.push_back(field + ": " + msg);
  };

  if (cfg.schema_version != 1) fail("schema_version", "unsupported (expected 1)");
  if (cfg.id.empty()) fail("id", "must be non-empty");
  for (char c : cfg.id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
      fail("id", "only letters, digits, '-' and '_' are allowed");
      break;
    }
  if (cfg.out_dir.empty()) fail("out_dir", "must be non-empty");

  if (cfg.snr_grid_db.empty()) fail("snr_grid_db", "must be non-empty");
  for (std::size_t i = 1; i < cfg.snr_grid_db.size(); ++i)
    if (!(cfg.snr_grid_db[i] > cfg.snr_grid_db[i - 1])) {
      fail("snr_grid_db", "must be strictly increasing");
      break;
    }

  if (cfg.seeds.empty()) fail("seeds", "must be non-empty");
  if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
    fail("seeds", "duplicate values");

  try {
    make_constellation(cfg.constellation);
  } catch (const std::exception& e) {
    fail("constellation", e.what());
  }

  if (cfg.mc.noise_samples < 1) fail("mc.noise_samples", "must be >= 1");
  if (cfg.mc.channel_samples < 1) fail("mc.channel_samples", "must be >= 1");

  if (!(cfg.solver.eps > 0.0)) fail("solver.eps", "must be positive");
  if (cfg.solver.max_outer < 1) fail("solver.max_outer", "must be >= 1");
  if (!(cfg.solver.beta_start < 0.0)) fail("solver.beta_start", "must be negative");
  if (!(cfg.solver.beta_growth > 1.0)) fail("solver.beta_growth", "must exceed 1");
  if (!(cfg.solver.beta_cap < 0.0)) fail("solver.beta_cap", "must be negative");
  if (!(cfg.minrate_beta < 0.0)) fail("minrate_beta", "must be negative");

  switch (cfg.scenario) {
    case ScenarioKind::kP2P:
      if (cfg.p2p.h.size() == 0) fail("channel.h", "missing or empty");
      break;
    case ScenarioKind::kWiretap: {
      if (cfg.wiretap.h_r.size() == 0) fail("channel.h_r", "missing or empty");
      if (cfg.wiretap.h_e.size() == 0) fail("channel.h_e", "missing or empty");
      if (cfg.wiretap.h_r.size() != 0 && cfg.wiretap.h_e.size() != 0 &&
          cfg.wiretap.h_r.cols() != cfg.wiretap.h_e.cols())
        fail("channel.h_e", "column count must match h_r");
      if (!(cfg.wiretap.noise_var > 0.0)) fail("channel.noise_var", "must be positive");
      if (cfg.wiretap.has_p0 && cfg.wiretap.h_r.size() != 0 &&
          (cfg.wiretap.p0.rows() != cfg.wiretap.h_r.cols() ||
           cfg.wiretap.p0.cols() != cfg.wiretap.h_r.cols()))
        fail("channel.p0", "must be square with the transmit antenna count");
      break;
    }
    case ScenarioKind::kMulticast:
    case ScenarioKind::kBroadcast: {
      const NetworkChannelConfig& n = cfg.network;
      if (n.sr_rho.empty()) fail("channel.sr_rho", "must be non-empty");
      if (n.ed_rho.empty()) fail("channel.ed_rho", "must be non-empty");
      auto check_rho = [&](const std::string& field, const std::vector<double>& v) {
        for (double r : v)
          if (!(r >= 0.0 && r < 1.0)) {
            fail(field, "correlations must lie in [0, 1)");
            break;
          }
      };
      check_rho("channel.sr_rho", n.sr_rho);
      check_rho("channel.ed_rho", n.ed_rho);
      check_rho("channel.pr_rho", n.pr_rho);
      check_rho("channel.ed_rho_grid", n.ed_rho_grid);
      if (n.interference_fractions.size() != n.pr_rho.size())
        fail("channel.interference_fractions", "need one fraction per primary receiver");
      for (double f : n.interference_fractions)
        if (!(f > 0.0)) {
          fail("channel.interference_fractions", "must be positive");
          break;
        }
      if (n.transmit_antennas < 1) fail("channel.transmit_antennas", "must be >= 1");
      if (n.rx_antennas < 1) fail("channel.rx_antennas", "must be >= 1");
      if (!n.ed_rho_grid.empty() && cfg.scenario != ScenarioKind::kMulticast)
        fail("channel.ed_rho_grid", "sweeps are only supported for multicast");
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// Cell execution
// ---------------------------------------------------------------------------

struct Cell {
  int sweep_index = -1;  // -1: no sweep
  double rho = 0.0;      // swept or representative ED correlation
  std::size_t snr_index = 0;
  std::size_t seed_index = 0;
};

struct CellResult {
  ResultRow row;
  SolveTrace trace;
  bool has_trace = false;
};

CRNetworkConfig to_network(const ExperimentConfig& cfg, double gamma0, double ed_rho_override,
                           bool use_override) {
  const NetworkChannelConfig& n = cfg.network;
  CRNetworkConfig net;
  for (double r : n.sr_rho)
    net.sr_stats.push_back(make_channel_stats(exp_corr(r, n.transmit_antennas), n.rx_antennas));
  for (std::size_t j = 0; j < n.ed_rho.size(); ++j) {
    const double r = (use_override && j == 0) ? ed_rho_override : n.ed_rho[j];
    net.ed_stats.push_back(make_channel_stats(exp_corr(r, n.transmit_antennas), n.rx_antennas));
  }
  for (std::size_t k = 0; k < n.pr_rho.size(); ++k) {
    net.pr_stats.push_back(
        make_channel_stats(exp_corr(n.pr_rho[k], n.transmit_antennas), n.rx_antennas));
    net.interference_budgets.push_back(n.interference_fractions[k] * gamma0);
  }
  net.power_budget = gamma0;
  net.constellation = make_constellation(cfg.constellation);
  net.scenario = cfg.scenario == ScenarioKind::kBroadcast ? CRScenario::kBroadcast
                                                          : CRScenario::kMulticast;
  return net;
}

std::string cell_experiment_id(const ExperimentConfig& cfg, const Cell& cell) {
  if (cell.sweep_index < 0) return cfg.id;
  return cfg.id + "-rho" + sanitize_number(cell.rho);
}

CellResult run_cell(const ExperimentConfig& cfg, const Cell& cell) {
  CellResult out;
  out.row.experiment_id = cell_experiment_id(cfg, cell);
  out.row.snr_db = cfg.snr_grid_db[cell.snr_index];
  out.row.seed = cfg.seeds[cell.seed_index];

  const double snr = db_to_linear(out.row.snr_db);
  const std::uint64_t seed = out.row.seed;
  SolveTrace trace;
  double objective = 0.0;

  switch (cfg.scenario) {
    case ScenarioKind::kP2P: {
      const ProblemInstance p =
          build_p2p_fa(cfg.p2p.h, snr, make_constellation(cfg.constellation), cfg.mc);
      const Mat base = initial_precoder(p.set, p.rows, p.cols);
      const Mat x0 = seed == 0 ? base : perturbed_start(base, p.set, seed);
      trace = solve_gqmp(p, x0, cfg.solver);
      objective = trace.objective;
      break;
    }
    case ScenarioKind::kWiretap: {
      WiretapConfig w;
      w.h_r = cfg.wiretap.h_r;
      w.h_e = cfg.wiretap.h_e;
      w.noise_var = cfg.wiretap.noise_var;
      w.power = snr * cfg.wiretap.noise_var;
      w.constellation = make_constellation(cfg.constellation);
      w.mc = cfg.mc;
      const ProblemInstance p = build_wiretap(w);
      Mat x0;
      if (seed == 0 && cfg.wiretap.has_p0) {
        x0 = cfg.wiretap.p0;
        const double load = (x0.adjoint() * x0).trace().real();
        if (load > w.power) x0 *= std::sqrt(0.9 * w.power / load);
      } else if (seed == 0) {
        x0 = initial_precoder(p.set, p.rows, p.cols);
      } else {
        x0 = perturbed_start(Mat::Zero(p.rows, p.cols), p.set, seed);
      }
      trace = solve_gqmp(p, x0, cfg.solver);
      objective = std::max(0.0, trace.objective);
      break;
    }
    case ScenarioKind::kMulticast: {
      const CRNetworkConfig net = to_network(cfg, snr, cell.rho, cell.sweep_index >= 0);
      const SecrecyPieces pieces = build_multicast(net);
      const Mat base = initial_precoder(pieces.set, pieces.precoder_rows, pieces.precoder_cols);
      const Mat x0 = seed == 0 ? base : perturbed_start(base, pieces.set, seed);
      trace = solve_minrate(pieces.rows[0], {}, pieces.set, x0, cfg.minrate_beta, cfg.solver);
      objective = std::max(0.0, min_rate_true(pieces.rows[0], trace.x_final));
      break;
    }
    case ScenarioKind::kBroadcast: {
      const CRNetworkConfig net = to_network(cfg, snr, 0.0, false);
      const SecrecyPieces pieces = build_broadcast(net);
      const Mat base = initial_precoder(pieces.set, pieces.precoder_rows, pieces.precoder_cols);
      const Mat x0 = seed == 0 ? base : perturbed_start(base, pieces.set, seed);
      trace = solve_sum_secrecy(pieces.rows, pieces.set, x0, cfg.solver);
      objective = std::max(0.0, clipped_minsum_true(pieces.rows, trace.x_final));
      break;
    }
  }

  out.row.objective_bits = objective;
  out.row.iterations = static_cast<int>(trace.iterates.size());
  out.row.kkt_residual = trace.original_kkt;
  switch (trace.stop_reason) {
    case StopReason::kTolerance: out.row.status = "ok"; break;
    case StopReason::kIterationCap: out.row.status = "capped"; break;
    case StopReason::kSubsolverFailure: out.row.status = "failed"; break;
  }
  out.trace = std::move(trace);
  out.has_trace = true;
  return out;
}

// ---------------------------------------------------------------------------
// File emission
// ---------------------------------------------------------------------------

std::string row_tag(const ResultRow& row) {
  return row.experiment_id + "_snr" + sanitize_number(row.snr_db) + "_seed" +
         std::to_string(row.seed);
}

void write_rows_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  std::ofstream f(path);
  f << "schema_version," << kResultSchemaVersion << "\n";
  f << "experiment_id,snr_db,seed,objective_bits,iterations,kkt_residual,wall_time_ms,status\n";
  for (const ResultRow& r : rows)
    f << r.experiment_id << ',' << format_double(r.snr_db) << ',' << r.seed << ','
      << format_double(r.objective_bits) << ',' << r.iterations << ','
      << format_double(r.kkt_residual) << ',' << format_double(r.wall_time_ms) << ',' << r.status
      << "\n";
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  std::ofstream f(path);
  f << "schema_version," << kResultSchemaVersion << "\n";
  f << "experiment_id,snr_db,param_rho,best_seed,best_objective_bits,baseline_bits\n";
  for (const SummaryRow& r : rows)
    f << r.experiment_id << ',' << format_double(r.snr_db) << ',' << format_double(r.param_rho)
      << ',' << r.best_seed << ',' << format_double(r.best_objective_bits) << ','
      << format_double(r.baseline_bits) << "\n";
}

void write_trace_csv(const std::filesystem::path& path, const SolveTrace& trace) {
  std::ofstream f(path);
  f << "schema_version," << kResultSchemaVersion << "\n";
  f << "n,s_n,kkt_residual,wall_time_ms\n";
  for (const IterateRecord& it : trace.iterates)
    f << it.n << ',' << format_double(it.objective) << ',' << format_double(it.kkt_residual)
      << ',' << format_double(it.wall_time_ms) << "\n";
}

void write_precoder_json(const std::filesystem::path& path, const ResultRow& row, const Mat& x) {
  json doc;
  doc["experiment_id"] = row.experiment_id;
  doc["snr_db"] = row.snr_db;
  doc["seed"] = row.seed;
  doc["precoder"] = matrix_to_json(x);
  std::ofstream f(path);
  f << doc.dump(2) << "\n";
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    out.push_back(std::move(cells));
  }
  return out;
}

}  // namespace

std::string scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kP2P: return "p2p";
    case ScenarioKind::kWiretap: return "wiretap";
    case ScenarioKind::kMulticast: return "multicast";
    case ScenarioKind::kBroadcast: return "broadcast";
  }
  return "p2p";
}

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error("invalid config: " +
                         [&violations] {
                           std::string all;
                           for (std::size_t i = 0; i < violations.size(); ++i) {
                             if (i) all += "; ";
                             all += violations[i];
                           }
                           return all;
                         }()),
      violations_(std::move(violations)) {}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::string best;
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v && (best.empty() || std::string(buf).size() < best.size()))
      best = buf;
  }
  return best;
}

ExperimentConfig parse_config(const json& j) {
  std::vector<std::string> violations;
  ExperimentConfig cfg;

  if (!j.is_object()) throw ConfigError({"document: must be a JSON object"});
  FieldReader top(j, "", violations);
  top.check_known({"schema_version", "id", "scenario", "constellation", "snr_grid_db", "seeds",
                   "mc", "solver", "minrate_beta", "out_dir", "channel"});

  top.read("schema_version", cfg.schema_version, true);
  top.read("id", cfg.id, true);
  top.read("constellation", cfg.constellation, false);
  top.read("snr_grid_db", cfg.snr_grid_db, true);
  top.read("seeds", cfg.seeds, true);
  top.read("minrate_beta", cfg.minrate_beta, false);
  top.read("out_dir", cfg.out_dir, false);

  std::string scenario;
  if (top.read("scenario", scenario, true) && !parse_scenario(scenario, cfg.scenario))
    top.fail("scenario", "must be one of p2p, wiretap, multicast, broadcast");

  if (top.has("mc")) {
    FieldReader mc(top.sub("mc"), "mc.", violations);
    mc.check_known({"noise_samples", "channel_samples", "seed"});
    mc.read("noise_samples", cfg.mc.noise_samples, false);
    mc.read("channel_samples", cfg.mc.channel_samples, false);
    mc.read("seed", cfg.mc.seed, false);
  }
  if (top.has("solver")) {
    FieldReader sv(top.sub("solver"), "solver.", violations);
    sv.check_known({"eps", "max_outer", "subproblem_tol", "beta_start", "beta_growth", "beta_cap",
                    "emit_timing"});
    sv.read("eps", cfg.solver.eps, false);
    sv.read("max_outer", cfg.solver.max_outer, false);
    sv.read("subproblem_tol", cfg.solver.subproblem_tol, false);
    sv.read("beta_start", cfg.solver.beta_start, false);
    sv.read("beta_growth", cfg.solver.beta_growth, false);
    sv.read("beta_cap", cfg.solver.beta_cap, false);
    sv.read("emit_timing", cfg.solver.emit_timing, false);
  }

  if (!top.has("channel")) {
    top.fail("channel", "missing");
  } else if (!top.sub("channel").is_object()) {
    top.fail("channel", "must be an object");
  } else {
    FieldReader ch(top.sub("channel"), "channel.", violations);
    switch (cfg.scenario) {
      case ScenarioKind::kP2P:
        ch.check_known({"h"});
        ch.read_matrix("h", cfg.p2p.h, true);
        break;
      case ScenarioKind::kWiretap:
        ch.check_known({"h_r", "h_e", "noise_var", "p0"});
        ch.read_matrix("h_r", cfg.wiretap.h_r, true);
        ch.read_matrix("h_e", cfg.wiretap.h_e, true);
        ch.read("noise_var", cfg.wiretap.noise_var, false);
        cfg.wiretap.has_p0 = ch.has("p0") && ch.read_matrix("p0", cfg.wiretap.p0, false);
        break;
      case ScenarioKind::kMulticast:
      case ScenarioKind::kBroadcast:
        ch.check_known({"sr_rho", "ed_rho", "pr_rho", "interference_fractions",
                        "transmit_antennas", "rx_antennas", "ed_rho_grid"});
        ch.read("sr_rho", cfg.network.sr_rho, true);
        ch.read("ed_rho", cfg.network.ed_rho, true);
        ch.read("pr_rho", cfg.network.pr_rho, false);
        ch.read("interference_fractions", cfg.network.interference_fractions, false);
        ch.read("transmit_antennas", cfg.network.transmit_antennas, false);
        ch.read("rx_antennas", cfg.network.rx_antennas, false);
        ch.read("ed_rho_grid", cfg.network.ed_rho_grid, false);
        break;
    }
  }

  validate_semantics(cfg, violations);
  if (!violations.empty()) throw ConfigError(std::move(violations));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError({"file: cannot open " + path.string()});
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError({"file: invalid JSON (" + std::string(e.what()) + ")"});
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["id"] = cfg.id;
  j["scenario"] = scenario_name(cfg.scenario);
  j["constellation"] = cfg.constellation;
  j["snr_grid_db"] = cfg.snr_grid_db;
  j["seeds"] = cfg.seeds;
  j["mc"] = {{"noise_samples", cfg.mc.noise_samples},
             {"channel_samples", cfg.mc.channel_samples},
             {"seed", cfg.mc.seed}};
  j["solver"] = {{"eps", cfg.solver.eps},
                 {"max_outer", cfg.solver.max_outer},
                 {"subproblem_tol", cfg.solver.subproblem_tol},
                 {"beta_start", cfg.solver.beta_start},
                 {"beta_growth", cfg.solver.beta_growth},
                 {"beta_cap", cfg.solver.beta_cap},
                 {"emit_timing", cfg.solver.emit_timing}};
  j["minrate_beta"] = cfg.minrate_beta;
  j["out_dir"] = cfg.out_dir;

  json ch;
  switch (cfg.scenario) {
    case ScenarioKind::kP2P:
      ch["h"] = matrix_to_json(cfg.p2p.h);
      break;
    case ScenarioKind::kWiretap:
      ch["h_r"] = matrix_to_json(cfg.wiretap.h_r);
      ch["h_e"] = matrix_to_json(cfg.wiretap.h_e);
      ch["noise_var"] = cfg.wiretap.noise_var;
      if (cfg.wiretap.has_p0) ch["p0"] = matrix_to_json(cfg.wiretap.p0);
      break;
    case ScenarioKind::kMulticast:
    case ScenarioKind::kBroadcast:
      ch["sr_rho"] = cfg.network.sr_rho;
      ch["ed_rho"] = cfg.network.ed_rho;
      ch["pr_rho"] = cfg.network.pr_rho;
      ch["interference_fractions"] = cfg.network.interference_fractions;
      ch["transmit_antennas"] = cfg.network.transmit_antennas;
      ch["rx_antennas"] = cfg.network.rx_antennas;
      if (!cfg.network.ed_rho_grid.empty()) ch["ed_rho_grid"] = cfg.network.ed_rho_grid;
      break;
  }
  j["channel"] = ch;
  return j;
}

RunOutput run_experiment(const ExperimentConfig& cfg, int workers) {
  {
    std::vector<std::string> violations;
    validate_semantics(cfg, violations);
    if (!violations.empty()) throw ConfigError(std::move(violations));
  }

  std::vector<Cell> cells;
  const bool swept = cfg.scenario == ScenarioKind::kMulticast && !cfg.network.ed_rho_grid.empty();
  const std::size_t sweep_count = swept ? cfg.network.ed_rho_grid.size() : 1;
  for (std::size_t sw = 0; sw < sweep_count; ++sw)
    for (std::size_t si = 0; si < cfg.snr_grid_db.size(); ++si)
      for (std::size_t ki = 0; ki < cfg.seeds.size(); ++ki) {
        Cell c;
        c.sweep_index = swept ? static_cast<int>(sw) : -1;
        c.rho = swept ? cfg.network.ed_rho_grid[sw]
                      : (cfg.network.ed_rho.empty() ? 0.0 : cfg.network.ed_rho[0]);
        c.snr_index = si;
        c.seed_index = ki;
        cells.push_back(c);
      }

  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
      const auto started = std::chrono::steady_clock::now();
      try {
        results[i] = run_cell(cfg, cells[i]);
      } catch (const std::exception& e) {
        CellResult failed;
        failed.row.experiment_id = cell_experiment_id(cfg, cells[i]);
        failed.row.snr_db = cfg.snr_grid_db[cells[i].snr_index];
        failed.row.seed = cfg.seeds[cells[i].seed_index];
        failed.row.status = "failed";
        results[i] = std::move(failed);
        std::lock_guard<std::mutex> lock(log_mutex);
        std::fprintf(stderr, "cell %s failed: %s\n", row_tag(results[i].row).c_str(), e.what());
      }
      if (cfg.solver.emit_timing) {
        const auto elapsed = std::chrono::steady_clock::now() - started;
        results[i].row.wall_time_ms =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed).count();
      }
    }
  };
  const int thread_count = std::max(1, std::min<int>(workers, static_cast<int>(cells.size())));
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  RunOutput out;
  out.dir = std::filesystem::path(cfg.out_dir) / cfg.id;
  for (const CellResult& r : results) {
    out.rows.push_back(r.row);
    if (r.row.status == "failed") out.any_failure = true;
  }

  // Best seed per (sweep point, snr), failed cells excluded unless all failed.
  const std::size_t per_group = cfg.seeds.size();
  for (std::size_t g = 0; g * per_group < results.size(); ++g) {
    const std::size_t lo = g * per_group;
    SummaryRow s;
    s.experiment_id = results[lo].row.experiment_id;
    s.snr_db = results[lo].row.snr_db;
    s.param_rho = cells[lo].rho;
    bool found = false;
    for (std::size_t i = lo; i < lo + per_group; ++i) {
      const ResultRow& r = results[i].row;
      if (r.status == "failed") continue;
      if (!found || r.objective_bits > s.best_objective_bits) {
        s.best_seed = r.seed;
        s.best_objective_bits = r.objective_bits;
        found = true;
      }
    }
    if (!found) s.best_seed = results[lo].row.seed;
    if (cfg.scenario == ScenarioKind::kP2P) {
      const double gamma = db_to_linear(s.snr_db);
      const Mat wf = waterfilling(cfg.p2p.h, gamma);
      s.baseline_bits = fa_mi_mc(cfg.p2p.h, wf, make_constellation(cfg.constellation), cfg.mc);
    }
    out.summary.push_back(s);
  }

  std::filesystem::create_directories(out.dir / "traces");
  std::filesystem::create_directories(out.dir / "precoders");
  {
    std::ofstream f(out.dir / "config.json");
    f << config_to_json(cfg).dump(2) << "\n";
  }
  write_rows_csv(out.dir / "rows.csv", out.rows);
  write_summary_csv(out.dir / "summary.csv", out.summary);
  for (const CellResult& r : results) {
    if (!r.has_trace) continue;
    const std::string tag = row_tag(r.row);
    write_trace_csv(out.dir / "traces" / (tag + ".csv"), r.trace);
    write_precoder_json(out.dir / "precoders" / (tag + ".json"), r.row, r.trace.x_final);
  }
  return out;
}

std::filesystem::path emit_plotdata(const std::filesystem::path& run_dir,
                                    const std::string& kind) {
  if (kind != "fig2" && kind != "fig4")
    throw std::invalid_argument("unknown plot kind '" + kind + "' (expected fig2 or fig4)");

  json cfg_doc;
  {
    std::ifstream f(run_dir / "config.json");
    if (!f) throw std::runtime_error("cannot open " + (run_dir / "config.json").string());
    f >> cfg_doc;
  }
  const std::string scenario = cfg_doc.value("scenario", "");
  const auto table = read_csv(run_dir / "summary.csv");
  // Row 0 is the schema line, row 1 the header.
  std::vector<std::vector<std::string>> data(table.begin() + std::min<std::size_t>(2, table.size()),
                                             table.end());

  const std::filesystem::path out_path = run_dir / ("plot_" + kind + ".csv");
  std::ofstream f(out_path);
  f << "schema_version," << kResultSchemaVersion << "\n";
  if (kind == "fig2") {
    f << "snr_db,proposed_bits,waterfilling_bits\n";
    if (scenario == "p2p")
      for (const auto& row : data) f << row[1] << ',' << row[4] << ',' << row[5] << "\n";
  } else {
    f << "rho,snr_db,best_rate_bits\n";
    if (scenario == "multicast") {
      std::vector<std::tuple<double, double, std::string>> rows;
      for (const auto& row : data)
        rows.emplace_back(std::strtod(row[2].c_str(), nullptr),
                          std::strtod(row[1].c_str(), nullptr),
                          row[2] + "," + row[1] + "," + row[4]);
      std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
        return std::get<1>(a) < std::get<1>(b);
      });
      for (const auto& entry : rows) f << std::get<2>(entry) << "\n";
    }
  }
  return out_path;
}

}  // namespace gqmp
