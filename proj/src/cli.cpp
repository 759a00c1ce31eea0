#include "mspr/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mspr/diagnostics.hpp"
#include "mspr/estimator.hpp"
#include "mspr/format.hpp"
#include "mspr/io.hpp"
#include "mspr/parallel.hpp"
#include "mspr/rng.hpp"
#include "mspr/simulator.hpp"

namespace mspr {

namespace {

namespace fs = std::filesystem;

std::string in_dir(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void make_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(format("cannot create directory ", dir, ": ", ec.message()));
}

void apply_threads(const RunConfig& config) {
  if (config.threads > 0) set_threads(config.threads);
}

void run_simulate(const std::string& config_path, const std::string& out_dir,
                  std::optional<std::uint64_t> seed) {
  RunConfig config = read_config(config_path);
  if (seed) config.seed = *seed;
  if (!config.params) throw ValidationError(format(config_path, ": simulate needs params"));
  if (!config.duration) throw ValidationError(format(config_path, ": simulate needs T"));
  if (config.n_trials == 0) throw ValidationError(format(config_path, ": simulate needs trials > 0"));
  apply_threads(config);

  const SpikeDataset data =
      simulate_dataset(*config.params, *config.duration, config.n_trials, config.seed);
  make_out_dir(out_dir);
  write_spikes(data, in_dir(out_dir, "spikes.csv"));
  write_params_echo(config, in_dir(out_dir, "params.json"));
}

void run_fit(const std::string& data_path, const std::string& config_path,
             const std::string& out_dir, std::optional<std::uint64_t> seed) {
  RunConfig config = read_config(config_path);
  if (seed) config.seed = *seed;
  apply_threads(config);

  const SpikeDataset data = read_spikes(data_path, config.duration);
  config.duration = data.duration;  // resolved value goes into the report echo
  if (data.n_trials() < 2) throw ValidationError(format(data_path, ": need >= 2 trials to fit"));

  FitOptions options;
  if (config.threshold_gamma) {
    // Keep only pairs whose count correlation clears the permutation test.
    const CorrelationTest test =
        count_correlations(data, config.n_perm, substream_seed(config.seed, 3));
    Matrix keep(data.p, data.p);
    for (std::size_t i = 0; i < data.p; ++i)
      for (std::size_t j = 0; j < data.p; ++j) {
        const double pv = test.p_value(i, j);
        keep(i, j) = (i == j || (pv == pv && pv <= config.alpha)) ? 1.0 : 0.0;
      }
    options.gamma_keep = std::move(keep);
  }

  const FitResult result = fit(data, options);
  const BootstrapResult boot = bootstrap(data, config.bootstrap, config.seed, options);
  make_out_dir(out_dir);
  write_fit_report(result, boot, config, in_dir(out_dir, "fit.json"));
}

void run_diagnose(const std::string& data_path, const std::string& fit_path,
                  const std::string& out_dir, std::optional<std::uint64_t> seed) {
  const FitReport report = read_fit_report(fit_path);
  RunConfig config = report.config;
  if (seed) config.seed = *seed;
  apply_threads(config);

  const SpikeDataset data = read_spikes(data_path, report.fit.duration);
  if (data.p != report.fit.p)
    throw ValidationError(format(data_path, ": dataset has ", data.p, " neurons but the fit has ",
                                 report.fit.p));

  DiagnosticsOptions options;
  options.n_perm = config.n_perm;
  options.seed = config.seed;
  options.alpha = config.alpha;
  options.moment_bootstrap = config.bootstrap;
  const DiagnosticsReport diag = diagnose(data, report.fit, &report.boot, options);
  write_diagnostics_report(diag, config, config.seed, out_dir);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"multivariate Skellam process with resetting: simulate, fit, diagnose"};
  app.set_version_flag("--version", format("mspr ", kVersion));
  app.require_subcommand(1);

  std::string config_path, data_path, fit_path, out_dir;
  std::optional<std::uint64_t> seed;

  CLI::App* sim = app.add_subcommand("simulate", "draw a spike dataset from model parameters");
  sim->add_option("--config", config_path, "JSON config with params, T, trials")->required();
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--seed", seed, "override the config seed");

  CLI::App* fit_cmd = app.add_subcommand("fit", "estimate parameters from a spike CSV");
  fit_cmd->add_option("--data", data_path, "spike CSV")->required();
  fit_cmd->add_option("--config", config_path, "JSON config")->required();
  fit_cmd->add_option("--out", out_dir, "output directory")->required();
  fit_cmd->add_option("--seed", seed, "override the config seed");

  CLI::App* diag = app.add_subcommand("diagnose", "goodness-of-fit reports for a fitted model");
  diag->add_option("--data", data_path, "spike CSV")->required();
  diag->add_option("--fit", fit_path, "fit report JSON")->required();
  diag->add_option("--out", out_dir, "output directory")->required();
  diag->add_option("--seed", seed, "override the seed echoed in the fit report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) run_simulate(config_path, out_dir, seed);
    else if (fit_cmd->parsed()) run_fit(data_path, config_path, out_dir, seed);
    else run_diagnose(data_path, fit_path, out_dir, seed);
    return 0;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mspr
