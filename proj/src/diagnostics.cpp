#include "mspr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mspr/rng.hpp"
#include "mspr/skellam.hpp"

namespace mspr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;
};

// Unbiased sample moments; requires at least two values.
MeanVar sample_moments(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  MeanVar mv;
  for (const double v : values) mv.mean += v;
  mv.mean /= n;
  for (const double v : values) mv.variance += (v - mv.mean) * (v - mv.mean);
  mv.variance /= n - 1.0;
  return mv;
}

double sd(const std::vector<double>& values) {
  if (values.size() < 2) return kNaN;
  const MeanVar mv = sample_moments(values);
  return std::sqrt(mv.variance);
}

void isis_of_train(const std::vector<double>& train, std::vector<double>& out) {
  for (std::size_t k = 1; k < train.size(); ++k) out.push_back(train[k] - train[k - 1]);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    ma += a[r];
    mb += b[r];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    sab += (a[r] - ma) * (b[r] - mb);
    saa += (a[r] - ma) * (a[r] - ma);
    sbb += (b[r] - mb) * (b[r] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return kNaN;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

std::vector<double> pooled_isis(const SpikeDataset& data, std::size_t neuron) {
  if (neuron >= data.p) throw std::out_of_range("pooled_isis: neuron index out of range");
  std::vector<double> isis;
  for (const auto& trial : data.spikes) isis_of_train(trial[neuron], isis);
  return isis;
}

std::vector<IsiMoments> isi_moments_observed(const SpikeDataset& data, std::size_t replicates,
                                             std::uint64_t seed) {
  const std::size_t n = data.n_trials();
  std::vector<IsiMoments> out(data.p);
  for (std::size_t i = 0; i < data.p; ++i) {
    const std::vector<double> isis = pooled_isis(data, i);
    if (isis.size() < 2) {
      out[i] = {false, kNaN, kNaN, kNaN, kNaN};
      continue;
    }
    const MeanVar mv = sample_moments(isis);
    out[i].defined = true;
    out[i].mean = mv.mean;
    out[i].variance = mv.variance;

    Rng rng(substream_seed(seed, 1, i));
    std::vector<double> rep_mean, rep_var, pool;
    rep_mean.reserve(replicates);
    rep_var.reserve(replicates);
    for (std::size_t b = 0; b < replicates; ++b) {
      pool.clear();
      for (std::size_t r = 0; r < n; ++r)
        isis_of_train(data.spikes[rng.uniform_index(n)][i], pool);
      if (pool.size() < 2) continue;
      const MeanVar bmv = sample_moments(pool);
      rep_mean.push_back(bmv.mean);
      rep_var.push_back(bmv.variance);
    }
    out[i].se_mean = sd(rep_mean);
    out[i].se_variance = sd(rep_var);
  }
  return out;
}

std::vector<IsiMoments> isi_moments_model(const FitResult& fit, const BootstrapResult* boot) {
  std::vector<IsiMoments> out(fit.p);
  for (std::size_t i = 0; i < fit.p; ++i) {
    const RatePair rates = fit.marginal[i];
    if (!(rates.up > rates.down)) {
      out[i] = {false, kNaN, kNaN, kNaN, kNaN};
      continue;
    }
    const FpMoments fm = fp_moments(rates);
    out[i].defined = true;
    out[i].mean = fm.mean;
    out[i].variance = fm.variance;
    out[i].se_mean = kNaN;
    out[i].se_variance = kNaN;
    if (boot) {
      std::vector<double> rep_mean, rep_var;
      for (const auto& marginal : boot->rep_marginal) {
        const RatePair r = marginal[i];
        if (!(r.up > r.down)) continue;  // undefined moments, skip the draw
        const FpMoments rm = fp_moments(r);
        rep_mean.push_back(rm.mean);
        rep_var.push_back(rm.variance);
      }
      out[i].se_mean = sd(rep_mean);
      out[i].se_variance = sd(rep_var);
    }
  }
  return out;
}

CorrelationTest count_correlations(const SpikeDataset& data, std::size_t n_perm,
                                   std::uint64_t seed, Exec exec) {
  const std::size_t n = data.n_trials();
  const std::size_t p = data.p;
  if (n < 3) throw std::invalid_argument("count_correlations: needs at least three trials");
  if (n_perm == 0) throw std::invalid_argument("count_correlations: n_perm must be positive");

  const Matrix counts = trial_counts(data);
  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t r = 0; r < n; ++r) cols[i][r] = counts(r, i);

  CorrelationTest out{Matrix(p, p), Matrix(p, p)};
  for (std::size_t i = 0; i < p; ++i) {
    out.correlation(i, i) = 1.0;
    out.p_value(i, i) = kNaN;
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) pairs.emplace_back(i, j);

  parallel_for(pairs.size(), exec, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const double robs = pearson(cols[i], cols[j]);
    double pval = kNaN;
    if (std::isfinite(robs)) {
      Rng rng(substream_seed(seed, 2, k));
      std::vector<double> shuffled = cols[j];
      std::size_t hits = 0;
      for (std::size_t b = 0; b < n_perm; ++b) {
        for (std::size_t r = n - 1; r > 0; --r)
          std::swap(shuffled[r], shuffled[rng.uniform_index(r + 1)]);
        const double rp = pearson(cols[i], shuffled);
        if (std::abs(rp) >= std::abs(robs)) ++hits;
      }
      pval = static_cast<double>(1 + hits) / static_cast<double>(n_perm + 1);
    }
    out.correlation(i, j) = out.correlation(j, i) = robs;
    out.p_value(i, j) = out.p_value(j, i) = pval;
  });
  return out;
}

std::vector<PpPoint> pp_points(const SpikeDataset& data, const FitResult& fit,
                               std::size_t neuron) {
  if (neuron >= fit.p || fit.p != data.p)
    throw std::out_of_range("pp_points: neuron index out of range");
  std::vector<double> isis = pooled_isis(data, neuron);
  if (isis.empty()) throw std::invalid_argument("pp_points: neuron has no pooled ISIs");
  std::sort(isis.begin(), isis.end());

  const RatePair rates = fit.marginal[neuron];
  const double mass = fp_hit_probability(rates);
  std::vector<double> cdf(isis.size());
  fp_cdf_grid(isis, rates, cdf);

  const std::size_t m = isis.size();
  std::vector<PpPoint> points(m);
  for (std::size_t k = 0; k < m; ++k) {
    points[k].u_model = std::min(cdf[k] / mass, 1.0);
    points[k].u_empirical = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
  }
  return points;
}

DiagnosticsReport diagnose(const SpikeDataset& data, const FitResult& fit,
                           const BootstrapResult* boot, const DiagnosticsOptions& options) {
  if (data.p != fit.p) throw std::invalid_argument("diagnose: data and fit disagree on neuron count");
  if (!(options.alpha > 0.0 && options.alpha < 1.0))
    throw std::invalid_argument("diagnose: alpha must lie in (0,1)");

  DiagnosticsReport report;
  report.p = data.p;
  report.alpha = options.alpha;
  report.observed = isi_moments_observed(data, options.moment_bootstrap, options.seed);
  report.model = isi_moments_model(fit, boot);
  CorrelationTest corr = count_correlations(data, options.n_perm, options.seed, options.exec);
  report.correlation = std::move(corr.correlation);
  report.p_value = std::move(corr.p_value);
  report.pp.resize(data.p);
  for (std::size_t i = 0; i < data.p; ++i)
    if (!pooled_isis(data, i).empty()) report.pp[i] = pp_points(data, fit, i);
  return report;
}

}  // namespace mspr
