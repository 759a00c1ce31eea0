#ifndef MSPR_DIAGNOSTICS_HPP
#define MSPR_DIAGNOSTICS_HPP

#include <cstdint>
#include <vector>

#include "mspr/estimator.hpp"
#include "mspr/matrix.hpp"
#include "mspr/parallel.hpp"
#include "mspr/simulator.hpp"

namespace mspr {

/// Pooled within-trial inter-spike intervals of one neuron (consecutive
/// spikes only; intervals never span trials or include the trial start).
std::vector<double> pooled_isis(const SpikeDataset& data, std::size_t neuron);

/// ISI mean/variance with standard errors. `defined` is false when the
/// quantity is missing (fewer than 2 pooled ISIs, or undefined model
/// moments); missing entries carry NaN.
struct IsiMoments {
  bool defined = false;
  double mean = 0.0;
  double variance = 0.0;
  double se_mean = 0.0;
  double se_variance = 0.0;
};

/// Observed ISI moments per neuron, SEs by bootstrapping trials.
std::vector<IsiMoments> isi_moments_observed(const SpikeDataset& data,
                                             std::size_t replicates = 200,
                                             std::uint64_t seed = 0);

/// Model ISI moments per neuron from the fitted marginal rates; undefined
/// when up <= down. SEs apply fp_moments across bootstrap replicates when
/// one is supplied (NaN otherwise).
std::vector<IsiMoments> isi_moments_model(const FitResult& fit,
                                          const BootstrapResult* boot = nullptr);

/// Pearson correlations of per-trial counts plus two-sided permutation
/// p-values (one neuron's trial labels shuffled). Degenerate zero-variance
/// neurons give NaN in every cell of their row/column; diagonals are 1 for
/// the correlation and NaN for the p-value.
struct CorrelationTest {
  Matrix correlation;
  Matrix p_value;
};
CorrelationTest count_correlations(const SpikeDataset& data, std::size_t n_perm,
                                   std::uint64_t seed, Exec exec = Exec::Parallel);

/// One PP point: fitted-model CDF quantile vs empirical plotting position.
struct PpPoint {
  double u_model = 0.0;
  double u_empirical = 0.0;
};

/// PP transform of neuron i's pooled ISIs: u_model = F(delta)/F(inf) under
/// the fitted marginal rates (normalized by the hitting mass when the law is
/// defective), paired with plotting positions (k - 0.5)/m in sorted order.
std::vector<PpPoint> pp_points(const SpikeDataset& data, const FitResult& fit,
                               std::size_t neuron);

struct DiagnosticsOptions {
  std::size_t n_perm = 10000;
  std::uint64_t seed = 0;
  double alpha = 0.05;           // significance level attached to the report
  std::size_t moment_bootstrap = 200;
  Exec exec = Exec::Parallel;
};

struct DiagnosticsReport {
  std::size_t p = 0;
  double alpha = 0.05;
  std::vector<IsiMoments> observed;
  std::vector<IsiMoments> model;
  Matrix correlation;
  Matrix p_value;
  std::vector<std::vector<PpPoint>> pp;  // one list per neuron
};

DiagnosticsReport diagnose(const SpikeDataset& data, const FitResult& fit,
                           const BootstrapResult* boot = nullptr,
                           const DiagnosticsOptions& options = {});

}  // namespace mspr

#endif  // MSPR_DIAGNOSTICS_HPP
