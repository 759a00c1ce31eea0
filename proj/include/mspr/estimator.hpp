#ifndef MSPR_ESTIMATOR_HPP
#define MSPR_ESTIMATOR_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mspr/matrix.hpp"
#include "mspr/model.hpp"
#include "mspr/parallel.hpp"
#include "mspr/simulator.hpp"

namespace mspr {

/// Per-trial spike counts: entry (r, i) counts the spikes of neuron i in
/// trial r.
Matrix trial_counts(const SpikeDataset& data);

/// Method-of-moments stage: unbiased sample covariance of per-trial counts,
/// gamma_hat = |cov| / (2 T) off the diagonal, and the sign products
/// s_hat = sign(cov). Requires at least two trials.
struct MomGamma {
  Matrix gamma;         // gamma_hat, symmetric, zero diagonal
  Matrix sign_product;  // entries in {-1, 0, +1}, zero diagonal
  Matrix covariance;    // full sample covariance (diagonal holds variances)
};
MomGamma mom_gamma(const SpikeDataset& data);

/// Spike trains of one neuron, one vector per trial.
std::vector<std::vector<double>> neuron_trains(const SpikeDataset& data, std::size_t neuron);

/// Log-likelihood of one neuron's trains under the marginal first-passage
/// model: each within-trial interval (the first one anchored at the trial
/// start) contributes log fp_density, and the gap after the last spike
/// contributes the log survival. Returns -inf where the density vanishes.
double marginal_loglik(const std::vector<std::vector<double>>& trains, double T,
                       const RatePair& rates);

struct OptimizerDiag {
  int iterations = 0;
  bool converged = false;
  double loglik = 0.0;
  double grad_norm = 0.0;
  bool at_lower_bound = false;
  bool degenerate = false;  // no spikes at all: rates pinned, not optimized
};

struct MarginalFit {
  RatePair rates;
  OptimizerDiag diag;
};

/// Maximizes marginal_loglik for one neuron over the box up >= g + margin,
/// down >= g via the log reparameterization up = g + margin + e^u,
/// down = g + e^v (Nelder-Mead on (u, v), moment-matched start).
MarginalFit profile_fit_neuron(const std::vector<std::vector<double>>& trains, double T,
                               double gamma_row_sum);

/// Profile stage for every neuron given the per-neuron coupling row sums.
std::vector<MarginalFit> profile_fit(const SpikeDataset& data,
                                     std::span<const double> gamma_row_sums,
                                     Exec exec = Exec::Parallel);

struct FitOptions {
  /// Optional 0/1 mask; pairs with a zero entry have gamma_hat forced to 0
  /// before the profile stage (used by significance thresholding).
  std::optional<Matrix> gamma_keep;
  Exec exec = Exec::Parallel;
};

struct FitResult {
  std::size_t p = 0;
  double duration = 0.0;
  std::size_t n_trials = 0;
  std::vector<RatePair> marginal;  // fitted marginal rates per neuron
  std::vector<double> base_up;     // implied base rates
  std::vector<double> base_down;
  Matrix gamma;         // gamma_hat
  Matrix sign_product;  // s_hat
  Matrix count_cov;     // sample covariance of per-trial counts
  SignMatrix signs;     // canonical signs: +1 on the (i<j) side, s_hat opposite
  std::vector<OptimizerDiag> optimizer;
};

/// Full pipeline: mom_gamma, profile fit per neuron, base-rate recovery.
/// Deterministic given the data. Requires at least two trials.
FitResult fit(const SpikeDataset& data, const FitOptions& options = {});

/// Model parameters implied by a fit (base rates, gamma_hat, canonical
/// signs); valid input for the simulator.
Params fitted_params(const FitResult& fit);

struct BootstrapResult {
  std::size_t requested = 0;
  std::size_t failed = 0;  // replicates with a non-converged optimizer, excluded
  bool high_failure_rate = false;  // more than 20% of replicates failed
  std::vector<double> se_marginal_up;
  std::vector<double> se_marginal_down;
  std::vector<double> se_base_up;
  std::vector<double> se_base_down;
  Matrix se_gamma;
  /// Parameter draws of the successful replicates, in replicate order.
  std::vector<std::vector<RatePair>> rep_marginal;  // [replicate][neuron]
  std::vector<Matrix> rep_gamma;                    // [replicate]
};

/// Nonparametric bootstrap over trials: B resamples with replacement, a full
/// fit on each, standard errors as the sample standard deviation across
/// replicates. Deterministic given the seed.
BootstrapResult bootstrap(const SpikeDataset& data, std::size_t replicates,
                          std::uint64_t seed, const FitOptions& options = {});

}  // namespace mspr

#endif  // MSPR_ESTIMATOR_HPP
