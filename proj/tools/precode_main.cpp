#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gqmp/experiment.hpp"

namespace fs = std::filesystem;

namespace {

void report_violations(const gqmp::ConfigError& e) {
  std::fprintf(stderr, "configuration rejected:\n");
  for (const std::string& v : e.violations()) std::fprintf(stderr, "  - %s\n", v.c_str());
}

int run_config(gqmp::ExperimentConfig cfg, const std::vector<std::uint64_t>& seed_override,
               const std::string& out_dir, int workers) {
  if (!seed_override.empty()) cfg.seeds = seed_override;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  const gqmp::RunOutput out = gqmp::run_experiment(cfg, workers);
  std::printf("%s: %zu rows -> %s\n", cfg.id.c_str(), out.rows.size(), out.dir.string().c_str());
  for (const gqmp::SummaryRow& s : out.summary)
    std::printf("  %s @ %s dB: best %s bits (seed %llu)\n", s.experiment_id.c_str(),
                gqmp::format_double(s.snr_db).c_str(),
                gqmp::format_double(s.best_objective_bits).c_str(),
                static_cast<unsigned long long>(s.best_seed));
  if (out.any_failure) {
    std::fprintf(stderr, "one or more cells failed; see rows.csv status column\n");
    return 3;
  }
  return 0;
}

fs::path resolve_preset(const std::string& presets_dir, const std::string& name) {
  fs::path direct = fs::path(presets_dir) / (name + ".json");
  if (fs::exists(direct)) return direct;
  direct = fs::path(presets_dir) / name;
  if (fs::exists(direct)) return direct;
  std::string available;
  if (fs::is_directory(presets_dir))
    for (const auto& entry : fs::directory_iterator(presets_dir))
      if (entry.path().extension() == ".json") {
        if (!available.empty()) available += ", ";
        available += entry.path().stem().string();
      }
  throw gqmp::ConfigError({"preset: '" + name + "' not found in " + presets_dir +
                           (available.empty() ? "" : " (available: " + available + ")")});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear precoder design experiment driver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset_name;
  std::string presets_dir = "presets";
  std::string results_dir;
  std::string kind;
  std::string out_dir;
  std::vector<std::uint64_t> seed_override;
  int workers = 1;

  CLI::App* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Path to a config JSON document")->required();
  run->add_option("--seed-override", seed_override, "Replace the config's seed list");
  run->add_option("--out-dir", out_dir, "Replace the config's output directory");
  run->add_option("--workers", workers, "Concurrent cells")->check(CLI::Range(1, 64));

  CLI::App* preset = app.add_subcommand("preset", "Run a bundled preset by name");
  preset->add_option("name", preset_name, "Preset name (e.g. example1)")->required();
  preset->add_option("--presets", presets_dir, "Directory holding preset configs");
  preset->add_option("--seed-override", seed_override, "Replace the preset's seed list");
  preset->add_option("--out-dir", out_dir, "Replace the preset's output directory");
  preset->add_option("--workers", workers, "Concurrent cells")->check(CLI::Range(1, 64));

  CLI::App* validate = app.add_subcommand("validate", "Check a config and list every violation");
  validate->add_option("config", config_path, "Path to a config JSON document")->required();

  CLI::App* plotdata = app.add_subcommand("plotdata", "Emit plot series from a run directory");
  plotdata->add_option("results", results_dir, "Run directory written by run/preset")->required();
  plotdata->add_option("--kind", kind, "fig2 (rate vs SNR) or fig4 (rate vs correlation)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      return run_config(gqmp::load_config(config_path), seed_override, out_dir, workers);
    }
    if (preset->parsed()) {
      const fs::path path = resolve_preset(presets_dir, preset_name);
      return run_config(gqmp::load_config(path), seed_override, out_dir, workers);
    }
    if (validate->parsed()) {
      const gqmp::ExperimentConfig cfg = gqmp::load_config(config_path);
      std::printf("ok: %s (%s)\n", cfg.id.c_str(), gqmp::scenario_name(cfg.scenario).c_str());
      return 0;
    }
    if (plotdata->parsed()) {
      const fs::path out = gqmp::emit_plotdata(results_dir, kind);
      std::printf("wrote %s\n", out.string().c_str());
      return 0;
    }
  } catch (const gqmp::ConfigError& e) {
    report_violations(e);
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
