#ifndef MSPR_SIMULATOR_HPP
#define MSPR_SIMULATOR_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "mspr/model.hpp"
#include "mspr/parallel.hpp"
#include "mspr/rng.hpp"

namespace mspr {

/// Multi-trial spike data: spikes[trial][neuron] holds strictly increasing
/// spike times in (0, duration]. All trials share the same duration. Times
/// sit on a 1 ns grid so the CSV round-trip is exact.
struct SpikeDataset {
  std::size_t p = 0;
  double duration = 0.0;
  std::vector<std::vector<std::vector<double>>> spikes;

  std::size_t n_trials() const { return spikes.size(); }

  friend bool operator==(const SpikeDataset&, const SpikeDataset&) = default;
};

/// One Poisson stream of the event-driven construction: the base streams
/// move a single neuron by +1 or -1; each coupled pair contributes two
/// streams of rate gamma_ij that move both neurons at once.
struct EventStream {
  double rate = 0.0;
  int neuron_a = -1;
  int inc_a = 0;
  int neuron_b = -1;  // -1 for base streams
  int inc_b = 0;
};

/// Deterministic stream table for a parameter set; the index of a stream in
/// this vector is the id recorded in latent traces.
std::vector<EventStream> build_streams(const Params& params);

struct LatentEvent {
  double time = 0.0;
  int increment = 0;  // -1 or +1 applied to this neuron
  int stream = -1;    // index into build_streams(params)
};

/// Recorded path of every latent process in one trial.
struct LatentTrace {
  std::vector<std::vector<LatentEvent>> events;  // per neuron
  std::vector<std::size_t> reset_count;          // per neuron

  /// Final value of the unreset latent path (sum of increments).
  long latent_value(std::size_t neuron) const;

  /// max(0, running max of the unreset path); equals the record count.
  long running_max(std::size_t neuron) const;
};

struct TrialResult {
  std::vector<std::vector<double>> spikes;  // per neuron
  std::optional<LatentTrace> trace;
};

/// Exact event-driven simulation of one trial. Requires validate(params)
/// empty and T positive and finite.
TrialResult simulate_trial(const Params& params, double T, Rng& rng,
                           bool record_trace = false);

/// n_trials independent trials; trial r draws from a substream derived from
/// (seed, r), so the result does not depend on the execution policy and
/// identical inputs reproduce identical datasets.
SpikeDataset simulate_dataset(const Params& params, double T, std::size_t n_trials,
                              std::uint64_t seed, Exec exec = Exec::Parallel);

/// Same trial-by-trial construction but keeping the per-trial results
/// (optionally with latent traces); used by verification code.
std::vector<TrialResult> simulate_trials(const Params& params, double T,
                                         std::size_t n_trials, std::uint64_t seed,
                                         bool record_trace, Exec exec = Exec::Parallel);

}  // namespace mspr

#endif  // MSPR_SIMULATOR_HPP
