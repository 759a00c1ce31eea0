#ifndef MSPR_IO_HPP
#define MSPR_IO_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "mspr/diagnostics.hpp"
#include "mspr/estimator.hpp"
#include "mspr/model.hpp"
#include "mspr/simulator.hpp"

namespace mspr {

/// Bad content in otherwise readable input (malformed rows, out-of-range
/// values, inconsistent config). CLI exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem-level failures (missing file, unwritable path). CLI exit code 2.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Spike CSV: `# T=`, `# trials=`, `# neurons=` metadata lines, a
/// `trial,neuron,time` header, then one row per spike with 0-based ids and
/// seconds. Rows may arrive unsorted. `duration` overrides the metadata T.
/// Errors carry the path and 1-based line number.
SpikeDataset read_spikes(const std::string& path,
                         std::optional<double> duration = std::nullopt);

/// Canonical CSV emission: rows sorted by (trial, neuron, time), times with 9
/// fractional digits. Grid-aligned data round-trips bit-exactly.
void write_spikes(const SpikeDataset& data, const std::string& path);

inline constexpr char kVersion[] = "0.1.0";

struct RunConfig {
  std::optional<double> duration;  // T, seconds; fit/diagnose may take it from the CSV
  std::size_t n_trials = 0;        // simulate only
  std::uint64_t seed = 0;
  std::optional<Params> params;    // simulate only
  std::size_t bootstrap = 200;
  std::size_t n_perm = 10000;
  double alpha = 0.05;
  bool threshold_gamma = false;
  int threads = 0;                 // 0 keeps the runtime default
};

/// Parses and validates a JSON config file. Fields beyond the ones in
/// RunConfig are rejected to catch typos.
RunConfig read_config(const std::string& path);

/// Echo of a simulation run: version, seed, and the resolved config, so an
/// output directory is self-describing.
void write_params_echo(const RunConfig& config, const std::string& path);

/// Fit + bootstrap report. Embeds the artifact version, the seed, a config
/// echo, and the covariance-denominator convention; bootstrap replicate
/// draws are included so diagnostics can propagate SEs.
void write_fit_report(const FitResult& fit, const BootstrapResult& boot,
                      const RunConfig& config, const std::string& path);

struct FitReport {
  FitResult fit;
  BootstrapResult boot;
  RunConfig config;  // echo recovered from the report
};
FitReport read_fit_report(const std::string& path);

/// Diagnostics JSON plus plot-ready CSVs (correlation matrix, p-values, ISI
/// table, per-neuron PP points) in `out_dir`.
void write_diagnostics_report(const DiagnosticsReport& report, const RunConfig& config,
                              std::uint64_t seed, const std::string& out_dir);

}  // namespace mspr

#endif  // MSPR_IO_HPP
