#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gqmp/algorithms.hpp"
#include "gqmp/mi.hpp"
#include "gqmp/scenarios.hpp"

namespace gqmp {

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class ScenarioKind { kP2P, kWiretap, kMulticast, kBroadcast };

std::string scenario_name(ScenarioKind kind);

// Fixed channel matrix experiments (single link / wiretap).
struct P2PChannelConfig {
  Mat h;
};

struct WiretapChannelConfig {
  Mat h_r;
  Mat h_e;
  double noise_var = 1.0;
  Mat p0;              // optional fixed starting precoder
  bool has_p0 = false;
};

// Statistical-CSI network experiments. Correlations are exponential profiles
// R(rho); interference budgets are fractions of the transmit power budget.
struct NetworkChannelConfig {
  std::vector<double> sr_rho;
  std::vector<double> ed_rho;
  std::vector<double> pr_rho;
  std::vector<double> interference_fractions;
  int transmit_antennas = 2;
  int rx_antennas = 2;
  std::vector<double> ed_rho_grid;  // optional sweep over the first ED's rho
};

struct ExperimentConfig {
  int schema_version = 1;
  std::string id;
  ScenarioKind scenario = ScenarioKind::kP2P;
  std::string constellation = "qpsk";
  std::vector<double> snr_grid_db;
  std::vector<std::uint64_t> seeds;
  MCConfig mc;
  SolverOptions solver;
  double minrate_beta = -100.0;  // fixed smoothing sharpness for multicast runs
  std::string out_dir = "results";

  P2PChannelConfig p2p;
  WiretapChannelConfig wiretap;
  NetworkChannelConfig network;
};

// Carries every violated field at once so one round trip fixes a config.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

inline constexpr int kResultSchemaVersion = 1;

struct ResultRow {
  std::string experiment_id;  // config id, plus a -rhoXX suffix on swept cells
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  double objective_bits = 0.0;  // secrecy objectives are clipped at zero
  int iterations = 0;
  double kkt_residual = 0.0;
  double wall_time_ms = 0.0;  // stays 0 unless solver.emit_timing is set
  std::string status = "ok";  // ok | capped | failed
};

struct SummaryRow {
  std::string experiment_id;
  double snr_db = 0.0;
  double param_rho = 0.0;      // swept or first ED correlation; 0 for fixed links
  std::uint64_t best_seed = 0;
  double best_objective_bits = 0.0;
  double baseline_bits = 0.0;  // single link: alphabet rate of the water level precoder
};

struct RunOutput {
  std::filesystem::path dir;  // <out_dir>/<id>
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  bool any_failure = false;
};

// Executes every (sweep point, snr, seed) cell, writes rows.csv, summary.csv,
// config.json, per-cell trace sidecars and solved precoders under
// cfg.out_dir/cfg.id, and returns the assembled tables. Cells are independent
// and may run on up to `workers` threads; output is identical for any worker
// count, and byte-identical across reruns of the same config.
RunOutput run_experiment(const ExperimentConfig& cfg, int workers = 1);

// Reads a run directory produced by run_experiment and writes plot_<kind>.csv
// next to its inputs. Kinds: "fig2" (snr_db, proposed_bits, waterfilling_bits
// from single-link runs) and "fig4" (rho, snr_db, best_rate_bits from
// correlation sweeps). Rows that do not fit the kind are skipped; an empty
// selection still writes the header. Unknown kinds throw.
std::filesystem::path emit_plotdata(const std::filesystem::path& run_dir, const std::string& kind);

// Shortest decimal text that parses back to exactly this double; used for all
// emitted numbers so files are value-exact and reruns are byte-identical.
std::string format_double(double v);

}  // namespace gqmp
