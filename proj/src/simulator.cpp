#include "mspr/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mspr/format.hpp"

namespace mspr {

namespace {

// Times live on a 1 ns grid, handled in integer nanoseconds so the double
// value is always the correctly rounded k/1e9 (1e9 is exact in binary64);
// that is what a decimal parser produces, which keeps CSV round-trips exact.
double from_nanos(std::int64_t k) { return static_cast<double>(k) / 1e9; }

std::int64_t to_nanos_round(double t) { return static_cast<std::int64_t>(std::round(t * 1e9)); }

std::int64_t to_nanos_floor(double t) {
  std::int64_t k = static_cast<std::int64_t>(std::floor(t * 1e9));
  while (k > 0 && from_nanos(k) > t) --k;  // rounding in t * 1e9 can overshoot by one
  return k;
}

// Grid-aligned spike recording; simultaneous within-train collisions are
// bumped by one grid step so trains stay strictly increasing, and everything
// is clamped into (0, T] on the grid.
void record_spike(std::vector<double>& train, double t, double T) {
  std::int64_t k = to_nanos_round(t);
  if (k < 1) k = 1;
  const std::int64_t last = train.empty() ? 0 : to_nanos_round(train.back());
  if (k <= last) k = last + 1;
  const std::int64_t limit = to_nanos_floor(T);
  if (k > limit) {
    if (last >= limit) return;  // grid exhausted at the boundary
    k = limit;
  }
  train.push_back(from_nanos(k));
}

}  // namespace

std::vector<EventStream> build_streams(const Params& params) {
  const std::size_t p = params.neuron_count();
  std::vector<EventStream> streams;
  for (std::size_t i = 0; i < p; ++i) {
    if (params.base_up[i] > 0.0) {
      streams.push_back({params.base_up[i], static_cast<int>(i), +1, -1, 0});
    }
    if (params.base_down[i] > 0.0) {
      streams.push_back({params.base_down[i], static_cast<int>(i), -1, -1, 0});
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      const int aij = params.signs(i, j);
      const int aji = params.signs(j, i);
      if (aij == 0 || !(params.gamma(i, j) > 0.0)) continue;
      const double rate = params.gamma(i, j);
      streams.push_back({rate, static_cast<int>(i), +aij, static_cast<int>(j), +aji});
      streams.push_back({rate, static_cast<int>(i), -aij, static_cast<int>(j), -aji});
    }
  }
  return streams;
}

long LatentTrace::latent_value(std::size_t neuron) const {
  long s = 0;
  for (const LatentEvent& e : events[neuron]) s += e.increment;
  return s;
}

long LatentTrace::running_max(std::size_t neuron) const {
  long s = 0;
  long best = 0;
  for (const LatentEvent& e : events[neuron]) {
    s += e.increment;
    best = std::max(best, s);
  }
  return best;
}

TrialResult simulate_trial(const Params& params, double T, Rng& rng, bool record_trace) {
  {
    const auto violations = validate(params);
    if (!violations.empty()) {
      throw std::invalid_argument(format("simulate_trial: invalid parameters: ",
                                         violations.front()));
    }
  }
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw std::invalid_argument("simulate_trial: T must be positive and finite");
  }
  const std::size_t p = params.neuron_count();
  const std::vector<EventStream> streams = build_streams(params);
  std::vector<double> cumulative(streams.size());
  double total = 0.0;
  for (std::size_t k = 0; k < streams.size(); ++k) {
    total += streams[k].rate;
    cumulative[k] = total;
  }

  TrialResult out;
  out.spikes.assign(p, {});
  if (record_trace) {
    out.trace.emplace();
    out.trace->events.assign(p, {});
    out.trace->reset_count.assign(p, 0);
  }
  if (streams.empty()) return out;

  std::vector<int> state(p, 0);
  double t = 0.0;
  for (;;) {
    t += rng.exponential(total);
    if (t > T) break;
    const double u = rng.uniform() * total;
    const std::size_t k =
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
    const EventStream& s = streams[std::min(k, streams.size() - 1)];

    const int neurons[2] = {s.neuron_a, s.neuron_b};
    const int incs[2] = {s.inc_a, s.inc_b};
    for (int side = 0; side < 2; ++side) {
      const int n = neurons[side];
      if (n < 0) continue;
      state[n] += incs[side];
      if (out.trace) {
        out.trace->events[n].push_back({t, incs[side], static_cast<int>(k)});
      }
    }
    // resets after both coordinates moved: a shared event can make both
    // neurons spike at the same timestamp
    for (int side = 0; side < 2; ++side) {
      const int n = neurons[side];
      if (n < 0) continue;
      if (state[n] >= 1) {
        record_spike(out.spikes[n], t, T);
        state[n] = 0;
        if (out.trace) ++out.trace->reset_count[n];
      }
    }
  }
  return out;
}

std::vector<TrialResult> simulate_trials(const Params& params, double T,
                                         std::size_t n_trials, std::uint64_t seed,
                                         bool record_trace, Exec exec) {
  if (n_trials < 1) throw std::invalid_argument("simulate_trials: need at least one trial");
  std::vector<TrialResult> trials(n_trials);
  parallel_for(n_trials, exec, [&](std::size_t r) {
    Rng rng(substream_seed(seed, r));
    trials[r] = simulate_trial(params, T, rng, record_trace);
  });
  return trials;
}

SpikeDataset simulate_dataset(const Params& params, double T, std::size_t n_trials,
                              std::uint64_t seed, Exec exec) {
  std::vector<TrialResult> trials = simulate_trials(params, T, n_trials, seed, false, exec);
  SpikeDataset data;
  data.p = params.neuron_count();
  data.duration = T;
  data.spikes.reserve(n_trials);
  for (TrialResult& trial : trials) data.spikes.push_back(std::move(trial.spikes));
  return data;
}

}  // namespace mspr
