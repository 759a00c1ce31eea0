#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "mspr/quadrature.hpp"
#include "mspr/skellam.hpp"
#include "oracles.hpp"
#include "stats.hpp"

using namespace mspr;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double rel_err(double got, long double want) {
  if (want == 0.0L) return std::abs(got);
  return static_cast<double>(std::abs((static_cast<long double>(got) - want) / want));
}

}  // namespace

TEST_CASE("bessel_i_scaled matches frozen high-precision values") {
  // values computed independently with 50-digit arithmetic
  struct Case {
    int n;
    double x;
    double want;
  };
  const Case cases[] = {
      {0, 0.0, 1.0},
      {1, 0.0, 0.0},
      {0, 0.5, 0.64503527044915006811},
      {2, 1.0, 0.049938776894223538763},
      {1, 2.0, 0.21526928924893765916},
      {5, 10.0, 0.035284293614933962722},
      {0, 100.0, 0.039944379299096682648},
      {1, 100.0, 0.039744153025130252674},
      {10, 300.0, 0.019499971453983564144},
      {50, 1000.0, 0.0036135818925941225465},
      {200, 10000.0, 0.00053989841809842857601},
      {200, 50.0, 2.0730980771108430743e-116},
      {100, 100.0, 1.7266862628167695785e-22},
  };
  for (const Case& c : cases) {
    CAPTURE(c.n);
    CAPTURE(c.x);
    CHECK(rel_err(bessel_i_scaled(c.n, c.x), c.want) <= 1e-10);
  }
}

TEST_CASE("bessel_i_scaled stays within 1e-10 of the series oracle") {
  const double xs[] = {1e-3, 0.1, 0.5, 1.0, 2.0, 5.0,   10.0,   20.0,  39.9,
                       40.1, 60.0, 100.0, 300.0, 1000.0, 5000.0, 10000.0};
  const int ns[] = {0, 1, 2, 3, 5, 10, 25, 50, 100, 200};
  for (const double x : xs) {
    for (const int n : ns) {
      const long double want = oracle::bessel_i_scaled(n, x);
      const double got = bessel_i_scaled(n, x);
      CAPTURE(n);
      CAPTURE(x);
      if (want < 1e-300L) {
        CHECK(got <= 1e-300);
      } else {
        CHECK(rel_err(got, want) <= 1e-10);
      }
    }
  }
}

TEST_CASE("bessel_i_scaled satisfies the three-term recurrence") {
  // I_{n-1}(x) - I_{n+1}(x) = (2n/x) I_n(x), in scaled form
  for (const double x : {0.5, 3.0, 17.0, 41.0, 250.0, 2000.0}) {
    for (const int n : {1, 2, 5, 20, 80}) {
      const double lo = bessel_i_scaled(n - 1, x);
      const double mid = bessel_i_scaled(n, x);
      const double hi = bessel_i_scaled(n + 1, x);
      CAPTURE(n);
      CAPTURE(x);
      CHECK(std::abs((lo - hi) - (2.0 * n / x) * mid) <= 2e-10 * (lo + hi));
    }
  }
}

TEST_CASE("bessel_i_scaled rejects bad input") {
  CHECK_THROWS_AS(bessel_i_scaled(0, -1.0), std::domain_error);
  CHECK_THROWS_AS(bessel_i_scaled(-1, 1.0), std::domain_error);
  CHECK_THROWS_AS(bessel_i_scaled(0, std::numeric_limits<double>::quiet_NaN()),
                  std::domain_error);
  CHECK_THROWS_AS(bessel_i_scaled(0, kInf), std::domain_error);
}

TEST_CASE("skellam_pmf matches frozen values and special branches") {
  CHECK(rel_err(skellam_pmf(0, 1.0, 1.0), 0.30850832255367103953L) <= 1e-12);
  CHECK(rel_err(skellam_pmf(2, 3.0, 0.0), 0.22404180765538774341L) <= 1e-12);
  // mu2 = 0 is plain Poisson; negative k then has no mass
  CHECK(skellam_pmf(-1, 3.0, 0.0) == 0.0);
  CHECK(skellam_pmf(1, 0.0, 3.0) == 0.0);
  CHECK(rel_err(skellam_pmf(-2, 0.0, 3.0), 0.22404180765538774341L) <= 1e-12);
  CHECK(skellam_pmf(0, 0.0, 0.0) == 1.0);
  CHECK(skellam_pmf(3, 0.0, 0.0) == 0.0);
  CHECK_THROWS_AS(skellam_pmf(0, -1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(skellam_pmf(0, 1.0, -1.0), std::domain_error);
}

TEST_CASE("skellam_pmf is symmetric under k -> -k for equal means") {
  for (const double mu : {0.3, 2.0, 25.0}) {
    for (int k = 0; k <= 40; ++k) {
      CHECK(skellam_pmf(k, mu, mu) == skellam_pmf(-k, mu, mu));
    }
  }
}

TEST_CASE("skellam_pmf agrees with the convolution oracle on a grid") {
  const double mus[] = {0.1, 1.0, 5.0, 30.0};
  for (const double mu1 : mus) {
    for (const double mu2 : mus) {
      for (int k = -60; k <= 60; ++k) {
        const long double want = oracle::skellam_pmf(k, mu1, mu2);
        CAPTURE(k);
        CAPTURE(mu1);
        CAPTURE(mu2);
        CHECK(std::abs(static_cast<long double>(skellam_pmf(k, mu1, mu2)) - want) <= 1e-10L);
      }
      // the support of any tested mean pair is exhausted well inside +-400
      double total = 0.0;
      for (int k = -400; k <= 400; ++k) total += skellam_pmf(k, mu1, mu2);
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("skellam_sample has the right moments and law") {
  Rng rng(20240811u);

  SUBCASE("no down-events means nonnegative samples") {
    for (int i = 0; i < 2000; ++i) CHECK(skellam_sample({4.0, 0.0}, 1.5, rng) >= 0);
  }

  SUBCASE("symmetric case mean within 3 sigma") {
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(skellam_sample({5.0, 5.0}, 1.0, rng));
    CHECK(std::abs(sum / n) <= 3.0 * std::sqrt(10.0 / n));
  }

  SUBCASE("empirical law matches the pmf (chi-square)") {
    const int n = 100000;
    const int lo = -8, hi = 14;  // Skellam(4,2): mean 2, sd sqrt(6)
    std::vector<double> observed(hi - lo + 1, 0.0);
    for (int i = 0; i < n; ++i) {
      const long s = skellam_sample({2.0, 1.0}, 2.0, rng);
      const long bin = std::min<long>(std::max<long>(s, lo), hi) - lo;
      observed[bin] += 1.0;
    }
    double chi2 = 0.0;
    for (int k = lo; k <= hi; ++k) {
      double expected;
      if (k == lo) {
        expected = 0.0;
        for (int j = lo - 40; j <= lo; ++j) expected += skellam_pmf(j, 4.0, 2.0);
      } else if (k == hi) {
        expected = 1.0;
        for (int j = lo - 40; j < hi; ++j) expected -= skellam_pmf(j, 4.0, 2.0);
      } else {
        expected = skellam_pmf(k, 4.0, 2.0);
      }
      expected *= n;
      const double diff = observed[k - lo] - expected;
      chi2 += diff * diff / expected;
    }
    CHECK(stats::chi2_sf(chi2, static_cast<double>(hi - lo)) > 0.01);
  }
}

TEST_CASE("fp_density special cases and domain") {
  for (const double t : {0.01, 0.3, 2.0}) {
    CHECK(rel_err(fp_density(t, {3.0, 0.0}), 3.0L * std::exp(-3.0L * t)) <= 1e-14);
  }
  CHECK_THROWS_AS(fp_density(0.0, {1.0, 0.5}), std::domain_error);
  CHECK_THROWS_AS(fp_density(1.0, {0.0, 0.5}), std::domain_error);
}

TEST_CASE("fp_cdf reaches the hitting mass and matches frozen values") {
  CHECK(fp_cdf(kInf, {3.0, 0.0}) == 1.0);
  CHECK(fp_cdf(kInf, {1.0, 2.0}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(fp_cdf(300.0, {35.0, 30.0}) - 1.0) <= 1e-6);
  CHECK(std::abs(fp_cdf(400.0, {1.0, 2.0}) - 0.5) <= 1e-6);

  CHECK(std::abs(fp_cdf(0.2, {35.0, 30.0}) - 0.8368622090852405) <= 1e-8);
  const double ts[] = {0.1, 0.5, 1.0, 2.0, 5.0};
  const double want[] = {0.1733221516948913, 0.5474898338811401, 0.7324092524821476,
                         0.8696866338401729, 0.967095949015723};
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(fp_cdf(ts[i], {2.0, 1.0}) - want[i]) <= 1e-8);
  }
}

TEST_CASE("fp_cdf is monotone and fp_cdf_grid matches pointwise evaluation") {
  const RatePair rates{35.0, 30.0};
  std::vector<double> grid;
  for (int i = 1; i <= 60; ++i) grid.push_back(0.013 * i * i / 10.0);
  std::vector<double> batch(grid.size());
  fp_cdf_grid(grid, rates, batch);
  double prev = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double direct = fp_cdf(grid[i], rates);
    CHECK(std::abs(batch[i] - direct) <= 1e-8);
    CHECK(batch[i] >= prev);
    prev = batch[i];
  }
}

TEST_CASE("fp survival identities") {
  const RatePair proper{35.0, 30.0};
  const RatePair defective{1.0, 2.0};
  for (const double t : {0.05, 0.2, 1.0, 3.0, 10.0}) {
    CHECK(std::abs(fp_cdf(t, proper) + fp_survival(t, proper) - 1.0) <= 1e-7);
    CHECK(std::abs(fp_cdf(t, defective) + fp_survival(t, defective) - 1.0) <= 1e-7);
    CHECK(std::abs(fp_log_survival(t, proper) - std::log(fp_survival(t, proper))) <= 1e-6);
  }
  // pure Poisson branch is exact
  for (const double t : {0.1, 1.0, 50.0}) {
    CHECK(fp_log_survival(t, {2.5, 0.0}) == -2.5 * t);
  }
  // deep tail: finite, strictly decreasing, far below log-double range
  double prev = 0.0;
  for (const double t : {100.0, 500.0, 1000.0, 5000.0}) {
    const double ls = fp_log_survival(t, proper);
    CHECK(std::isfinite(ls));
    CHECK(ls < prev);
    prev = ls;
  }
  CHECK(fp_log_survival(5000.0, proper) < -700.0);
}

TEST_CASE("fp_moments closed form and numeric cross-check") {
  const FpMoments poisson = fp_moments({4.0, 0.0});
  CHECK(poisson.mean == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(poisson.variance == doctest::Approx(0.0625).epsilon(1e-14));

  const FpMoments m = fp_moments({35.0, 30.0});
  CHECK(m.mean == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(m.variance == doctest::Approx(0.52).epsilon(1e-14));
  CHECK_THROWS_AS(fp_moments({2.0, 2.0}), std::domain_error);
  CHECK_THROWS_AS(fp_moments({1.0, 2.0}), std::domain_error);

  // integrate t f(t) and (t - mean)^2 f(t) for (2,1): mean 1, variance 3
  const RatePair rates{2.0, 1.0};
  const auto mean_integral = integrate_adaptive(
      [&](double t) { return t * fp_density(t, rates); }, 1e-12, 400.0, 1e-9);
  CHECK(mean_integral.converged);
  CHECK(std::abs(mean_integral.value - 1.0) <= 1e-6);
  const auto var_integral = integrate_adaptive(
      [&](double t) { return (t - 1.0) * (t - 1.0) * fp_density(t, rates); }, 1e-12, 400.0, 1e-9);
  CHECK(std::abs(var_integral.value - 3.0) <= 1e-5);
}

TEST_CASE("simulated first passage follows fp_cdf and fp_moments") {
  std::mt19937_64 engine(7041u);
  const double up = 2.0, down = 1.0;
  const int n = 200000;
  std::vector<double> sample;
  sample.reserve(n);
  for (int i = 0; i < n; ++i)
    sample.push_back(oracle::first_passage_sample(up, down, engine));

  double mean = 0.0;
  for (const double t : sample) mean += t;
  mean /= n;
  double var = 0.0;
  for (const double t : sample) var += (t - mean) * (t - mean);
  var /= n - 1;

  const FpMoments m = fp_moments({up, down});
  // sd of the sample mean, and of the sample variance via the 4th moment
  const auto fourth = integrate_adaptive(
      [&](double t) {
        const double d = t - m.mean;
        return d * d * d * d * fp_density(t, {up, down});
      },
      1e-12, 500.0, 1e-9);
  const double sd_mean = std::sqrt(m.variance / n);
  const double sd_var = std::sqrt((fourth.value - m.variance * m.variance) / n);
  CHECK(std::abs(mean - m.mean) <= 3.0 * sd_mean);
  CHECK(std::abs(var - m.variance) <= 3.0 * sd_var);

  const double d = stats::ks_statistic(sample, [&](double t) { return fp_cdf(t, {up, down}); });
  CHECK(d <= stats::ks_critical(n, 0.01));
}

TEST_CASE("defective first passage: hit fraction and conditional law") {
  std::mt19937_64 engine(90210u);
  const double up = 1.0, down = 2.0;
  const int n = 60000;
  std::vector<double> hits;
  for (int i = 0; i < n; ++i) {
    const double t = oracle::first_passage_sample(up, down, engine, -400);
    if (std::isfinite(t)) hits.push_back(t);
  }
  const double mass = fp_hit_probability({up, down});
  CHECK(mass == 0.5);
  const double frac = static_cast<double>(hits.size()) / n;
  CHECK(std::abs(frac - mass) <= 3.0 * std::sqrt(mass * (1.0 - mass) / n));

  const double d = stats::ks_statistic(
      hits, [&](double t) { return fp_cdf(t, {up, down}) / mass; });
  CHECK(d <= stats::ks_critical(hits.size(), 0.01));
}
