#include "mspr/estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mspr/format.hpp"
#include "mspr/rng.hpp"
#include "mspr/skellam.hpp"

namespace mspr {

namespace {

constexpr double kLowerMargin = 1e-8;   // offset keeping up strictly above the row sum
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Matrix trial_counts(const SpikeDataset& data) {
  const std::size_t n = data.n_trials();
  Matrix counts(n, data.p);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < data.p; ++i)
      counts(r, i) = static_cast<double>(data.spikes[r][i].size());
  return counts;
}

MomGamma mom_gamma(const SpikeDataset& data) {
  const std::size_t n = data.n_trials();
  const std::size_t p = data.p;
  if (n < 2) throw std::invalid_argument("mom_gamma: needs at least two trials");
  if (!(data.duration > 0.0)) throw std::invalid_argument("mom_gamma: duration must be positive");

  const Matrix counts = trial_counts(data);
  std::vector<double> mean(p, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < p; ++i) mean[i] += counts(r, i);
  for (auto& m : mean) m /= static_cast<double>(n);

  MomGamma out{Matrix(p, p), Matrix(p, p), Matrix(p, p)};
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r)
        acc += (counts(r, i) - mean[i]) * (counts(r, j) - mean[j]);
      const double cov = acc / static_cast<double>(n - 1);
      out.covariance(i, j) = out.covariance(j, i) = cov;
      if (i != j) {
        out.gamma(i, j) = out.gamma(j, i) = std::abs(cov) / (2.0 * data.duration);
        const double s = cov > 0.0 ? 1.0 : (cov < 0.0 ? -1.0 : 0.0);
        out.sign_product(i, j) = out.sign_product(j, i) = s;
      }
    }
  }
  return out;
}

std::vector<std::vector<double>> neuron_trains(const SpikeDataset& data, std::size_t neuron) {
  if (neuron >= data.p) throw std::out_of_range("neuron_trains: neuron index out of range");
  std::vector<std::vector<double>> trains;
  trains.reserve(data.n_trials());
  for (const auto& trial : data.spikes) trains.push_back(trial[neuron]);
  return trains;
}

double marginal_loglik(const std::vector<std::vector<double>>& trains, double T,
                       const RatePair& rates) {
  if (!(T > 0.0)) throw std::invalid_argument("marginal_loglik: T must be positive");
  check_rates(rates);

  if (rates.down == 0.0) {
    // Pure birth process: intervals are Exponential(up), censoring is exact,
    // and the product collapses to the Poisson-process likelihood.
    std::size_t m = 0;
    for (const auto& train : trains) m += train.size();
    return static_cast<double>(m) * std::log(rates.up) -
           rates.up * T * static_cast<double>(trains.size());
  }

  const double su = std::sqrt(rates.up);
  const double sd = std::sqrt(rates.down);
  const double alpha = (su - sd) * (su - sd);  // up + down - 2 sqrt(up down), no cancellation
  const double two_s = 2.0 * su * sd;
  const double half_log_ratio = 0.5 * (std::log(rates.up) - std::log(rates.down));

  double total = 0.0;
  for (const auto& train : trains) {
    double prev = 0.0;
    for (const double t : train) {
      const double dt = t - prev;
      if (!(dt > 0.0)) throw std::invalid_argument("marginal_loglik: spike times must be strictly increasing");
      const double bessel = bessel_i_scaled(1, two_s * dt);
      if (bessel == 0.0) return -kInf;
      total += -std::log(dt) + half_log_ratio - alpha * dt + std::log(bessel);
      prev = t;
    }
    const double censor = T - prev;
    if (censor > 0.0) total += fp_log_survival(censor, rates);
    if (!std::isfinite(total)) return -kInf;
  }
  return total;
}

namespace {

// Nelder-Mead in two dimensions, minimizing. Convergence is on the simplex
// diameter relative to the best vertex; -inf objective values are legal and
// simply rank worst.
struct NmOutcome {
  std::array<double, 2> best{};
  double fbest = kInf;
  int iterations = 0;
  bool converged = false;
};

template <typename F>
NmOutcome nelder_mead_min2(F&& f, std::array<double, 2> x0, double step, double xtol,
                           int max_iter) {
  std::array<std::array<double, 2>, 3> x{x0, x0, x0};
  x[1][0] += step;
  x[2][1] += step;
  std::array<double, 3> fx{f(x[0]), f(x[1]), f(x[2])};

  auto order = [&] {
    for (int a = 0; a < 2; ++a)
      for (int b = a + 1; b < 3; ++b)
        if (fx[b] < fx[a]) {
          std::swap(fx[a], fx[b]);
          std::swap(x[a], x[b]);
        }
  };

  NmOutcome out;
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    order();
    const double scale = 1.0 + std::max(std::abs(x[0][0]), std::abs(x[0][1]));
    double diameter = 0.0;
    for (int v = 1; v < 3; ++v)
      for (int d = 0; d < 2; ++d) diameter = std::max(diameter, std::abs(x[v][d] - x[0][d]));
    if (diameter <= xtol * scale) {
      out.converged = true;
      break;
    }

    const std::array<double, 2> centroid{(x[0][0] + x[1][0]) / 2.0, (x[0][1] + x[1][1]) / 2.0};
    auto at = [&](double coef) {
      return std::array<double, 2>{centroid[0] + coef * (x[2][0] - centroid[0]),
                                   centroid[1] + coef * (x[2][1] - centroid[1])};
    };

    const auto xr = at(-1.0);
    const double fr = f(xr);
    if (fr < fx[0]) {
      const auto xe = at(-2.0);
      const double fe = f(xe);
      if (fe < fr) {
        x[2] = xe;
        fx[2] = fe;
      } else {
        x[2] = xr;
        fx[2] = fr;
      }
    } else if (fr < fx[1]) {
      x[2] = xr;
      fx[2] = fr;
    } else {
      const auto xc = at(fr < fx[2] ? -0.5 : 0.5);
      const double fc = f(xc);
      if (fc < std::min(fr, fx[2])) {
        x[2] = xc;
        fx[2] = fc;
      } else {
        for (int v = 1; v < 3; ++v) {
          for (int d = 0; d < 2; ++d) x[v][d] = x[0][d] + 0.5 * (x[v][d] - x[0][d]);
          fx[v] = f(x[v]);
        }
      }
    }
  }
  order();
  out.best = x[0];
  out.fbest = fx[0];
  return out;
}

}  // namespace

MarginalFit profile_fit_neuron(const std::vector<std::vector<double>>& trains, double T,
                               double gamma_row_sum) {
  if (!(T > 0.0)) throw std::invalid_argument("profile_fit_neuron: T must be positive");
  if (!(gamma_row_sum >= 0.0) || !std::isfinite(gamma_row_sum))
    throw std::invalid_argument("profile_fit_neuron: row sum must be finite and nonnegative");
  const double g = gamma_row_sum;

  MarginalFit out;
  std::vector<double> intervals;
  for (const auto& train : trains) {
    double prev = 0.0;
    for (const double t : train) {
      intervals.push_back(t - prev);
      prev = t;
    }
  }

  if (intervals.empty()) {
    // Nothing to fit against: pin to the lower face and flag it.
    out.rates = {g + kLowerMargin, g};
    out.diag.degenerate = true;
    out.diag.at_lower_bound = true;
    out.diag.converged = true;
    out.diag.loglik = marginal_loglik(trains, T, out.rates);
    out.diag.grad_norm = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  // Moment-matched start: drift = 1 / mean, sum = var / mean^3, clamped to
  // the in-model region sum >= drift and to the box.
  const double n = static_cast<double>(intervals.size());
  double mean = 0.0;
  for (const double dt : intervals) mean += dt;
  mean /= n;
  double var = 0.0;
  for (const double dt : intervals) var += (dt - mean) * (dt - mean);
  var = intervals.size() > 1 ? var / (n - 1.0) : 0.0;

  const double drift = 1.0 / mean;
  const double sum0 = std::max(var / (mean * mean * mean), drift);
  const double up0 = std::max((sum0 + drift) / 2.0, g + kLowerMargin + 0.05 * drift);
  const double down0 = std::max((sum0 - drift) / 2.0, g + 0.05 * drift);

  auto objective = [&](const std::array<double, 2>& uv) {
    if (uv[0] > 30.0 || uv[1] > 30.0) return kInf;  // e^30 events/s is already absurd
    const RatePair rates{g + kLowerMargin + std::exp(uv[0]), g + std::exp(uv[1])};
    return -marginal_loglik(trains, T, rates);
  };

  const std::array<double, 2> start{std::log(up0 - g - kLowerMargin), std::log(down0 - g)};
  NmOutcome nm = nelder_mead_min2(objective, start, 0.5, 1e-8, 500);
  if (!nm.converged) {
    NmOutcome retry = nelder_mead_min2(objective, nm.best, 0.05, 1e-8, 500);
    retry.iterations += nm.iterations;
    nm = retry;
  }

  const double eu = std::exp(nm.best[0]);
  const double ev = std::exp(nm.best[1]);
  out.rates = {g + kLowerMargin + eu, g + ev};
  out.diag.iterations = nm.iterations;
  out.diag.converged = nm.converged;
  out.diag.loglik = -nm.fbest;
  out.diag.at_lower_bound = eu <= 1e-6 * (1.0 + g) || ev <= 1e-6 * (1.0 + g);

  const double h = 1e-5;
  double gsq = 0.0;
  for (int d = 0; d < 2; ++d) {
    auto lo = nm.best;
    auto hi = nm.best;
    lo[d] -= h;
    hi[d] += h;
    const double deriv = (objective(hi) - objective(lo)) / (2.0 * h);
    gsq += deriv * deriv;
  }
  out.diag.grad_norm = std::sqrt(gsq);
  if (!out.diag.converged && out.diag.grad_norm < 1e-6) out.diag.converged = true;
  return out;
}

std::vector<MarginalFit> profile_fit(const SpikeDataset& data,
                                     std::span<const double> gamma_row_sums, Exec exec) {
  if (gamma_row_sums.size() != data.p)
    throw std::invalid_argument("profile_fit: row sums size must match neuron count");
  std::vector<MarginalFit> fits(data.p);
  parallel_for(data.p, exec, [&](std::size_t i) {
    fits[i] = profile_fit_neuron(neuron_trains(data, i), data.duration, gamma_row_sums[i]);
  });
  return fits;
}

FitResult fit(const SpikeDataset& data, const FitOptions& options) {
  const std::size_t p = data.p;
  FitResult out;
  out.p = p;
  out.duration = data.duration;
  out.n_trials = data.n_trials();

  MomGamma mom = mom_gamma(data);
  if (options.gamma_keep) {
    const Matrix& keep = *options.gamma_keep;
    if (keep.rows() != p || keep.cols() != p)
      throw std::invalid_argument("fit: gamma_keep must be p x p");
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j)
        if (keep(i, j) == 0.0 && i != j) {
          mom.gamma(i, j) = 0.0;
          mom.sign_product(i, j) = 0.0;
        }
  }
  out.gamma = mom.gamma;
  out.sign_product = mom.sign_product;
  out.count_cov = mom.covariance;

  std::vector<double> row_sums(p, 0.0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      if (j != i) row_sums[i] += out.gamma(i, j);

  const std::vector<MarginalFit> fits = profile_fit(data, row_sums, options.exec);
  out.marginal.resize(p);
  out.base_up.resize(p);
  out.base_down.resize(p);
  out.optimizer.resize(p);
  for (std::size_t i = 0; i < p; ++i) {
    out.marginal[i] = fits[i].rates;
    out.base_up[i] = fits[i].rates.up - row_sums[i];
    out.base_down[i] = std::max(fits[i].rates.down - row_sums[i], 0.0);
    out.optimizer[i] = fits[i].diag;
  }

  out.signs = SignMatrix(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) {
      const double s = out.sign_product(i, j);
      if (s != 0.0) out.signs.set_pair(i, j, +1, s > 0.0 ? +1 : -1);
    }
  return out;
}

Params fitted_params(const FitResult& fit) {
  Params params;
  params.base_up = fit.base_up;
  params.base_down = fit.base_down;
  params.gamma = fit.gamma;
  params.signs = fit.signs;
  return params;
}

BootstrapResult bootstrap(const SpikeDataset& data, std::size_t replicates, std::uint64_t seed,
                          const FitOptions& options) {
  const std::size_t n = data.n_trials();
  const std::size_t p = data.p;
  if (replicates < 2) throw std::invalid_argument("bootstrap: needs at least two replicates");
  if (n < 2) throw std::invalid_argument("bootstrap: needs at least two trials");

  struct Slot {
    FitResult fit;
    bool ok = false;
  };
  std::vector<Slot> slots(replicates);

  FitOptions inner = options;
  inner.exec = Exec::Serial;  // replicates are the parallel unit
  parallel_for(replicates, options.exec, [&](std::size_t b) {
    Rng rng(substream_seed(seed, b));
    SpikeDataset resampled;
    resampled.p = p;
    resampled.duration = data.duration;
    resampled.spikes.reserve(n);
    for (std::size_t r = 0; r < n; ++r)
      resampled.spikes.push_back(data.spikes[rng.uniform_index(n)]);
    slots[b].fit = fit(resampled, inner);
    slots[b].ok = true;
    for (const auto& diag : slots[b].fit.optimizer)
      if (!diag.converged) slots[b].ok = false;
  });

  BootstrapResult out;
  out.requested = replicates;
  for (const auto& slot : slots) {
    if (!slot.ok) {
      ++out.failed;
      continue;
    }
    out.rep_marginal.push_back(slot.fit.marginal);
    out.rep_gamma.push_back(slot.fit.gamma);
  }
  out.high_failure_rate =
      static_cast<double>(out.failed) > 0.2 * static_cast<double>(replicates);

  const std::size_t ok = out.rep_marginal.size();
  auto sd = [ok](auto&& value) {
    if (ok < 2) return std::numeric_limits<double>::quiet_NaN();
    double mean = 0.0;
    for (std::size_t b = 0; b < ok; ++b) mean += value(b);
    mean /= static_cast<double>(ok);
    double ss = 0.0;
    for (std::size_t b = 0; b < ok; ++b) {
      const double d = value(b) - mean;
      ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(ok - 1));
  };

  out.se_marginal_up.resize(p);
  out.se_marginal_down.resize(p);
  out.se_base_up.resize(p);
  out.se_base_down.resize(p);
  out.se_gamma = Matrix(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    auto row_sum = [&](std::size_t b) {
      double g = 0.0;
      for (std::size_t j = 0; j < p; ++j)
        if (j != i) g += out.rep_gamma[b](i, j);
      return g;
    };
    out.se_marginal_up[i] = sd([&](std::size_t b) { return out.rep_marginal[b][i].up; });
    out.se_marginal_down[i] = sd([&](std::size_t b) { return out.rep_marginal[b][i].down; });
    out.se_base_up[i] = sd([&](std::size_t b) { return out.rep_marginal[b][i].up - row_sum(b); });
    out.se_base_down[i] =
        sd([&](std::size_t b) { return std::max(out.rep_marginal[b][i].down - row_sum(b), 0.0); });
    for (std::size_t j = i + 1; j < p; ++j) {
      const double se = sd([&](std::size_t b) { return out.rep_gamma[b](i, j); });
      out.se_gamma(i, j) = out.se_gamma(j, i) = se;
    }
  }
  return out;
}

}  // namespace mspr
