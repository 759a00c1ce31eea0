// Timing harness for the serial reference path vs the OpenMP path. The two
// must agree exactly; the point of the run is the speedup column.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "mspr/estimator.hpp"
#include "mspr/matrix.hpp"
#include "mspr/model.hpp"
#include "mspr/parallel.hpp"
#include "mspr/simulator.hpp"

namespace {

mspr::Params bench_params() {
  mspr::Params params;
  params.base_up = {15.0, 20.0, 10.0};
  params.base_down = {10.0, 15.0, 7.0};
  params.gamma = mspr::Matrix(3, 3);
  params.gamma(0, 1) = params.gamma(1, 0) = 5.0;
  params.gamma(0, 2) = params.gamma(2, 0) = 15.0;
  params.gamma(1, 2) = params.gamma(2, 1) = 10.0;
  params.signs = mspr::SignMatrix(3);
  params.signs.set_pair(0, 1, +1, +1);
  params.signs.set_pair(0, 2, +1, +1);
  params.signs.set_pair(1, 2, +1, +1);
  return params;
}

template <typename F>
double seconds(F&& body) {
  const auto start = std::chrono::steady_clock::now();
  body();
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return elapsed.count();
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t trials = 2000;
  double T = 10.0;
  std::size_t replicates = 50;
  std::uint64_t seed = 20240811;
  int threads = 0;

  CLI::App app{"mspr benchmark: serial reference vs OpenMP"};
  app.add_option("--trials", trials, "trials to simulate");
  app.add_option("--T", T, "trial duration in seconds");
  app.add_option("--bootstrap", replicates, "bootstrap replicates to fit");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "thread count (0 = runtime default)");
  CLI11_PARSE(app, argc, argv);

  if (threads > 0) mspr::set_threads(threads);
  const mspr::Params params = bench_params();

  std::printf("threads available: %d\n", mspr::max_threads());

  mspr::SpikeDataset serial_data, parallel_data;
  const double t_sim_serial = seconds([&] {
    serial_data = mspr::simulate_dataset(params, T, trials, seed, mspr::Exec::Serial);
  });
  const double t_sim_parallel = seconds([&] {
    parallel_data = mspr::simulate_dataset(params, T, trials, seed, mspr::Exec::Parallel);
  });
  std::printf("simulate %zu trials: serial %.3fs, parallel %.3fs, speedup %.2fx, identical %s\n",
              trials, t_sim_serial, t_sim_parallel, t_sim_serial / t_sim_parallel,
              serial_data == parallel_data ? "yes" : "NO");

  // The bootstrap fits a 50-trial slice so the per-replicate work matches the
  // acceptance-scale workload rather than the full dataset.
  mspr::SpikeDataset slice = serial_data;
  if (slice.n_trials() > 50) slice.spikes.resize(50);

  mspr::BootstrapResult serial_boot, parallel_boot;
  mspr::FitOptions options;
  options.exec = mspr::Exec::Serial;
  const double t_boot_serial =
      seconds([&] { serial_boot = mspr::bootstrap(slice, replicates, seed, options); });
  options.exec = mspr::Exec::Parallel;
  const double t_boot_parallel =
      seconds([&] { parallel_boot = mspr::bootstrap(slice, replicates, seed, options); });
  const bool same = serial_boot.se_gamma == parallel_boot.se_gamma &&
                    serial_boot.se_marginal_up == parallel_boot.se_marginal_up &&
                    serial_boot.failed == parallel_boot.failed;
  std::printf("bootstrap %zu replicates: serial %.3fs, parallel %.3fs, speedup %.2fx, identical %s\n",
              replicates, t_boot_serial, t_boot_parallel, t_boot_serial / t_boot_parallel,
              same ? "yes" : "NO");
  return same && serial_data == parallel_data ? 0 : 1;
}
