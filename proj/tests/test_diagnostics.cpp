#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "builders.hpp"
#include "mspr/diagnostics.hpp"
#include "mspr/estimator.hpp"
#include "mspr/model.hpp"
#include "mspr/simulator.hpp"
#include "stats.hpp"

using namespace mspr;

TEST_CASE("pooled_isis keeps consecutive within-trial gaps only") {
  SpikeDataset data;
  data.p = 2;
  data.duration = 5.0;
  data.spikes = {{{1.0, 1.5, 3.5}, {0.25}}, {{2.0}, {}}};
  CHECK(pooled_isis(data, 0) == std::vector<double>{0.5, 2.0});
  CHECK(pooled_isis(data, 1).empty());  // single spikes contribute nothing
}

TEST_CASE("observed ISI moments match the Poisson law") {
  const Params params = Params::independent({10.0}, {0.0});
  const SpikeDataset data = simulate_dataset(params, 10.0, 400, 2024u);
  const std::vector<IsiMoments> obs = isi_moments_observed(data, 150, 11u);
  REQUIRE(obs.size() == 1);
  REQUIRE(obs[0].defined);
  CHECK(std::abs(obs[0].mean - 0.1) < 0.004);
  CHECK(std::abs(obs[0].variance - 0.01) < 0.001);
  CHECK(obs[0].se_mean > 1e-4);
  CHECK(obs[0].se_mean < 2e-3);
  CHECK(obs[0].se_variance > 0.0);
}

TEST_CASE("observed ISI moments are undefined without two pooled intervals") {
  SpikeDataset data;
  data.p = 2;
  data.duration = 4.0;
  // neuron 0: one spike per trial, no gaps; neuron 1: exactly one gap
  data.spikes = {{{1.0}, {1.0, 2.0}}, {{2.0}, {3.0}}};
  const std::vector<IsiMoments> obs = isi_moments_observed(data, 50, 1u);
  CHECK_FALSE(obs[0].defined);
  CHECK(std::isnan(obs[0].mean));
  CHECK_FALSE(obs[1].defined);  // one interval: mean exists but not variance
}

TEST_CASE("isi_moments_observed is deterministic in the seed") {
  const Params params = Params::independent({6.0}, {2.0});
  const SpikeDataset data = simulate_dataset(params, 5.0, 40, 77u);
  const auto a = isi_moments_observed(data, 80, 5u);
  const auto b = isi_moments_observed(data, 80, 5u);
  CHECK(a[0].se_mean == b[0].se_mean);
  CHECK(a[0].se_variance == b[0].se_variance);
  const auto c = isi_moments_observed(data, 80, 6u);
  CHECK_FALSE(a[0].se_mean == c[0].se_mean);
}

TEST_CASE("model ISI moments come from the fitted rates") {
  FitResult fit;
  fit.p = 2;
  fit.duration = 10.0;
  fit.marginal = {{35.0, 30.0}, {20.0, 20.0}};

  const std::vector<IsiMoments> plain = isi_moments_model(fit);
  REQUIRE(plain.size() == 2);
  CHECK(plain[0].defined);
  CHECK(plain[0].mean == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(plain[0].variance == doctest::Approx(0.52).epsilon(1e-12));
  CHECK(std::isnan(plain[0].se_mean));  // no bootstrap attached
  CHECK_FALSE(plain[1].defined);        // zero drift has no finite moments
  CHECK(std::isnan(plain[1].mean));

  // replicate draws with one undefined draw: it is skipped, not poisoned
  BootstrapResult boot;
  boot.rep_marginal = {{{35.0, 30.0}, {21.0, 20.0}},
                       {{35.0, 30.0}, {20.0, 22.0}},
                       {{35.0, 30.0}, {22.0, 20.0}},
                       {{35.0, 30.0}, {23.0, 20.0}}};
  const std::vector<IsiMoments> with_se = isi_moments_model(fit, &boot);
  CHECK(with_se[0].mean == plain[0].mean);
  CHECK(with_se[0].se_mean < 1e-9);  // identical draws collapse the spread
  CHECK(with_se[0].se_mean == with_se[0].se_mean);
  CHECK_FALSE(with_se[1].defined);
}

TEST_CASE("count_correlations nails a duplicated neuron and flags a flat one") {
  const Params params = Params::independent({8.0}, {0.0});
  const SpikeDataset base = simulate_dataset(params, 5.0, 24, 404u);
  SpikeDataset data;
  data.p = 3;
  data.duration = 5.0;
  for (const auto& trial : base.spikes)
    data.spikes.push_back({trial[0], trial[0], {1.0}});  // clone + flat neuron

  const CorrelationTest test = count_correlations(data, 999, 9u, Exec::Serial);
  CHECK(test.correlation(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(test.correlation(1, 0) == test.correlation(0, 1));
  CHECK(test.p_value(0, 1) <= 2.0 / 1000.0);
  CHECK(test.correlation(0, 0) == 1.0);
  CHECK(std::isnan(test.p_value(0, 0)));
  CHECK(std::isnan(test.correlation(0, 2)));  // zero-variance counts
  CHECK(std::isnan(test.p_value(2, 1)));
}

TEST_CASE("count_correlations detects negative coupling") {
  Params params;
  params.base_up = {1.0, 1.0};
  params.base_down = {0.5, 0.5};
  params.gamma = Matrix(2, 2);
  params.gamma(0, 1) = params.gamma(1, 0) = 4.0;
  params.signs = SignMatrix(2);
  params.signs.set_pair(0, 1, +1, -1);
  REQUIRE(validate(params).empty());

  const SpikeDataset data = simulate_dataset(params, 5.0, 40, 1618u);
  const CorrelationTest test = count_correlations(data, 999, 4u, Exec::Serial);
  CHECK(test.correlation(0, 1) < -0.4);
  CHECK(test.p_value(0, 1) <= 0.01);
}

TEST_CASE("null permutation p-values are close to uniform") {
  std::vector<double> pvals;
  for (std::uint64_t k = 0; k < 80; ++k) {
    const Params params = Params::independent({5.0, 5.0}, {0.0, 0.0});
    const SpikeDataset data = simulate_dataset(params, 2.0, 30, 5000u + k);
    const CorrelationTest test = count_correlations(data, 199, 100u + k, Exec::Serial);
    pvals.push_back(test.p_value(0, 1));
  }
  std::sort(pvals.begin(), pvals.end());
  // 0.005 slack on top of the critical value covers the permutation grid
  CHECK(stats::ks_uniform_sorted(pvals) < stats::ks_critical(pvals.size(), 0.001) + 0.005);
}

TEST_CASE("count_correlations is deterministic and serial matches parallel") {
  const Params params = builders::coupled_ensemble();
  const SpikeDataset data = simulate_dataset(params, 4.0, 25, 31u);
  const CorrelationTest a = count_correlations(data, 300, 8u, Exec::Serial);
  const CorrelationTest b = count_correlations(data, 300, 8u, Exec::Parallel);
  CHECK(a.correlation == b.correlation);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) {
        CHECK(std::isnan(a.p_value(i, j)));
        CHECK(std::isnan(b.p_value(i, j)));
      } else {
        CHECK(a.p_value(i, j) == b.p_value(i, j));
      }
    }
}

TEST_CASE("pp_points tracks the diagonal under the true model family") {
  const Params params = Params::independent({10.0}, {0.0});
  const SpikeDataset data = simulate_dataset(params, 10.0, 200, 787u);
  const FitResult fitted = fit(data);

  const std::vector<PpPoint> pts = pp_points(data, fitted, 0);
  REQUIRE(pts.size() > 5000);
  double max_dev = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    max_dev = std::max(max_dev, std::abs(pts[k].u_model - pts[k].u_empirical));
    if (k > 0) {
      CHECK(pts[k].u_empirical > pts[k - 1].u_empirical);
      CHECK(pts[k].u_model >= pts[k - 1].u_model);
    }
    CHECK(pts[k].u_model >= 0.0);
    CHECK(pts[k].u_model <= 1.0);
  }
  CHECK(max_dev < 0.04);

  // grossly wrong rates push the curve far off the diagonal
  FitResult wrong = fitted;
  wrong.marginal[0] = {2.0, 0.0};
  double wrong_dev = 0.0;
  for (const PpPoint& pt : pp_points(data, wrong, 0))
    wrong_dev = std::max(wrong_dev, std::abs(pt.u_model - pt.u_empirical));
  CHECK(wrong_dev > 0.3);
}

TEST_CASE("pp_points handles a single interval") {
  SpikeDataset data;
  data.p = 1;
  data.duration = 5.0;
  data.spikes = {{{1.0, 1.6}}};
  FitResult fit;
  fit.p = 1;
  fit.duration = 5.0;
  fit.marginal = {{3.0, 1.0}};
  const std::vector<PpPoint> pts = pp_points(data, fit, 0);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].u_empirical == 0.5);
  CHECK(pts[0].u_model > 0.0);
  CHECK(pts[0].u_model < 1.0);
}

TEST_CASE("diagnose assembles a coherent report") {
  const Params params = builders::coupled_ensemble();
  const SpikeDataset data = simulate_dataset(params, 5.0, 60, 606u);
  const FitResult fitted = fit(data);
  const BootstrapResult boot = bootstrap(data, 12, 2u);

  DiagnosticsOptions options;
  options.n_perm = 200;
  options.seed = 3u;
  options.alpha = 0.1;
  options.moment_bootstrap = 40;
  options.exec = Exec::Serial;
  const DiagnosticsReport report = diagnose(data, fitted, &boot, options);

  CHECK(report.p == 3);
  CHECK(report.alpha == 0.1);
  REQUIRE(report.observed.size() == 3);
  REQUIRE(report.model.size() == 3);
  REQUIRE(report.pp.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(report.observed[i].defined);
    CHECK_FALSE(report.pp[i].empty());
    if (report.model[i].defined) CHECK(report.model[i].se_mean >= 0.0);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(report.correlation(i, i) == 1.0);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(report.correlation(i, j) == report.correlation(j, i));
  }
  // only the strongest pair is reliably detectable at this sample size
  CHECK(report.p_value(0, 2) < 0.1);
  CHECK(report.p_value(0, 1) > 0.0);
  CHECK(report.p_value(0, 1) <= 1.0);
}
