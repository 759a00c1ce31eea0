#include "mspr/skellam.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mspr/quadrature.hpp"

namespace mspr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSeriesCutoff = 40.0;

// log k! for small integers, precomputed because lgamma dominates the series
// branch otherwise (every likelihood term lands there).
double log_factorial(int k) {
  static const std::array<double, 512> table = [] {
    std::array<double, 512> t{};
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + std::log(double(i));
    return t;
  }();
  if (k < static_cast<int>(table.size())) return table[k];
  return std::lgamma(k + 1.0);
}

// Power series of e^(-x) I_n(x), anchored at the largest term so the scaled
// partial sums stay O(1) and only the final exp can underflow.
double scaled_series(int n, double x) {
  const double h = 0.5 * x;
  const double h2 = h * h;
  // peak index: largest k with k*(k+n) <= h^2
  const int kpeak = std::max(
      0, static_cast<int>(std::floor(0.5 * (-n + std::sqrt(n * double(n) + 4.0 * h2)))));
  const double log_peak =
      (2.0 * kpeak + n) * std::log(h) - log_factorial(kpeak) - log_factorial(kpeak + n) - x;
  double sum = 1.0;
  double term = 1.0;
  for (int k = kpeak; k-- > 0;) {
    term *= (k + 1.0) * (k + n + 1.0) / h2;
    sum += term;
    if (term < 1e-20 * sum) break;
  }
  term = 1.0;
  for (int k = kpeak + 1;; ++k) {
    term *= h2 / (k * (k + double(n)));
    sum += term;
    if (term < 1e-20 * sum) break;
  }
  return std::exp(log_peak + std::log(sum));
}

// Large-argument asymptotic expansion for orders 0 and 1; full double
// precision for x >= 40 (the smallest neglected term is below e^(-2x)).
double scaled_asymptotic_small_order(int n, double x) {
  const double mu = 4.0 * n * n;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 40; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (8.0 * k * x);
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

// Miller backward recurrence normalised by e^(-x)(I_0 + 2 sum I_k) = 1.
double scaled_miller(int n, double x) {
  const int start = n + static_cast<int>(12.0 * std::sqrt(x)) + 60;
  double above = 0.0;       // p_{k+1}
  double current = 1e-30;   // p_k, seeded at k = start
  double target = 0.0;      // p_n
  double norm = 0.0;        // 2 * sum_{k>=1} p_k, then + p_0
  for (int k = start; k >= 1; --k) {
    norm += 2.0 * current;
    const double below = above + (2.0 * k / x) * current;
    if (k - 1 == n) target = below;
    above = current;
    current = below;
    if (current > 1e250) {
      current *= 1e-250;
      above *= 1e-250;
      norm *= 1e-250;
      target *= 1e-250;
    }
  }
  norm += current;  // p_0
  return target / norm;
}

// exponent of the cancellation-free form: (up+down) - 2 sqrt(up*down)
double drift_exponent(const RatePair& r) {
  const double d = std::sqrt(r.up) - std::sqrt(r.down);
  return d * d;
}

}  // namespace

void check_rates(const RatePair& rates) {
  if (!(rates.up >= 0.0) || !(rates.down >= 0.0) || !std::isfinite(rates.up) ||
      !std::isfinite(rates.down)) {
    throw std::domain_error("rate pair: rates must be finite and nonnegative");
  }
  if (!(rates.up + rates.down > 0.0)) {
    throw std::domain_error("rate pair: at least one rate must be positive");
  }
}

double bessel_i_scaled(int n, double x) {
  if (n < 0) throw std::domain_error("bessel_i_scaled: order must be nonnegative");
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw std::domain_error("bessel_i_scaled: argument must be finite and nonnegative");
  }
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  if (x <= kSeriesCutoff) return scaled_series(n, x);
  if (n <= 1) return scaled_asymptotic_small_order(n, x);
  return scaled_miller(n, x);
}

double skellam_pmf(int k, double mu1, double mu2) {
  if (!(mu1 >= 0.0) || !(mu2 >= 0.0) || !std::isfinite(mu1) || !std::isfinite(mu2)) {
    throw std::domain_error("skellam_pmf: means must be finite and nonnegative");
  }
  if (mu1 == 0.0 && mu2 == 0.0) return k == 0 ? 1.0 : 0.0;
  if (mu2 == 0.0) {  // pure Poisson(mu1) at k
    if (k < 0) return 0.0;
    return std::exp(k * std::log(mu1) - mu1 - std::lgamma(k + 1.0));
  }
  if (mu1 == 0.0) {  // minus Poisson(mu2) at -k
    if (k > 0) return 0.0;
    return std::exp(-k * std::log(mu2) - mu2 - std::lgamma(-k + 1.0));
  }
  const double scaled = bessel_i_scaled(std::abs(k), 2.0 * std::sqrt(mu1 * mu2));
  if (scaled == 0.0) return 0.0;
  const double root_diff = std::sqrt(mu1) - std::sqrt(mu2);
  const double exponent =
      0.5 * k * (std::log(mu1) - std::log(mu2)) - root_diff * root_diff + std::log(scaled);
  return std::exp(exponent);
}

long skellam_sample(const RatePair& rates, double t, Rng& rng) {
  check_rates(rates);
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw std::domain_error("skellam_sample: t must be positive and finite");
  }
  const long n1 = rates.up > 0.0 ? rng.poisson(rates.up * t) : 0;
  const long n2 = rates.down > 0.0 ? rng.poisson(rates.down * t) : 0;
  return n1 - n2;
}

double fp_density(double t, const RatePair& rates) {
  check_rates(rates);
  if (!(rates.up > 0.0)) {
    throw std::domain_error("fp_density: level 1 is unreachable when up rate is zero");
  }
  if (!(t > 0.0)) throw std::domain_error("fp_density: t must be positive");
  if (rates.down == 0.0) return rates.up * std::exp(-rates.up * t);
  const double arg = 2.0 * t * std::sqrt(rates.up * rates.down);
  const double scaled = bessel_i_scaled(1, arg);
  if (scaled == 0.0) return 0.0;
  const double exponent = 0.5 * (std::log(rates.up) - std::log(rates.down)) -
                          drift_exponent(rates) * t + std::log(scaled);
  return std::exp(exponent) / t;
}

double fp_hit_probability(const RatePair& rates) {
  check_rates(rates);
  if (!(rates.up > 0.0)) return 0.0;
  return rates.up >= rates.down ? 1.0 : rates.up / rates.down;
}

double fp_cdf(double t, const RatePair& rates) {
  check_rates(rates);
  if (!(rates.up > 0.0)) {
    throw std::domain_error("fp_cdf: level 1 is unreachable when up rate is zero");
  }
  if (!(t > 0.0)) throw std::domain_error("fp_cdf: t must be positive");
  if (std::isinf(t)) return fp_hit_probability(rates);
  if (rates.down == 0.0) return -std::expm1(-rates.up * t);
  auto f = [&](double u) { return u > 0.0 ? fp_density(u, rates) : rates.up; };
  const QuadResult q = integrate_adaptive(f, 0.0, t, 1e-9);
  return std::clamp(q.value, 0.0, 1.0);
}

void fp_cdf_grid(std::span<const double> times, const RatePair& rates,
                 std::span<double> out) {
  check_rates(rates);
  if (times.size() != out.size()) {
    throw std::invalid_argument("fp_cdf_grid: output span size mismatch");
  }
  if (times.empty()) return;
  if (!(rates.up > 0.0)) {
    throw std::domain_error("fp_cdf_grid: level 1 is unreachable when up rate is zero");
  }
  auto f = [&](double u) { return u > 0.0 ? fp_density(u, rates) : rates.up; };
  const double span_total = times.back();
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (!(t > 0.0) || t < prev) {
      throw std::invalid_argument("fp_cdf_grid: times must be positive and sorted");
    }
    if (t > prev) {
      const double share = std::max(1e-12, 1e-9 * (t - prev) / span_total);
      acc += integrate_adaptive(f, prev, t, share).value;
      prev = t;
    }
    out[i] = std::clamp(acc, 0.0, 1.0);
  }
}

namespace {

// log of the integral of fp_density over (t, inf). Substituting u = t/w^2
// turns the tail into a finite integral in w while the dominant decay
// e^(-alpha t) is pulled out analytically, so the result stays accurate far
// beyond the point where the linear survival underflows.
double log_tail_mass(double t, const RatePair& rates) {
  if (rates.down == 0.0) return -rates.up * t;
  const double alpha = drift_exponent(rates);
  const double arg0 = 2.0 * t * std::sqrt(rates.up * rates.down);
  const double half_log_ratio = 0.5 * (std::log(rates.up) - std::log(rates.down));
  auto h = [&](double w) -> double {
    const double s = w * w;
    if (!(s > 0.0)) return 0.0;
    const double exponent = half_log_ratio - alpha * t * (1.0 - s) / s;
    if (exponent < -745.0) return 0.0;
    const double scaled = bessel_i_scaled(1, arg0 / s);
    return 2.0 * w * std::exp(exponent) * scaled / s;
  };
  const QuadResult probe = integrate_adaptive(h, 0.0, 1.0, 1e-13, 0.0, 4);
  const double tol = std::max(1e-300, 1e-11 * std::abs(probe.value));
  const QuadResult q = integrate_adaptive(h, 0.0, 1.0, tol);
  // a zero integral means even the integrand peak underflowed; floor the log
  // so callers keep a finite, strongly decreasing penalty
  const double log_integral = q.value > 0.0 ? std::log(q.value) : -745.0;
  return -alpha * t + log_integral;
}

}  // namespace

double fp_tail_mass(double t, const RatePair& rates) {
  check_rates(rates);
  if (!(rates.up > 0.0)) {
    throw std::domain_error("fp_tail_mass: level 1 is unreachable when up rate is zero");
  }
  if (!(t > 0.0)) throw std::domain_error("fp_tail_mass: t must be positive");
  return std::exp(log_tail_mass(t, rates));
}

double fp_survival(double t, const RatePair& rates) {
  const double never = 1.0 - fp_hit_probability(rates);
  return std::min(1.0, never + fp_tail_mass(t, rates));
}

double fp_log_survival(double t, const RatePair& rates) {
  check_rates(rates);
  if (!(rates.up > 0.0)) return 0.0;  // never hits: survival is 1
  if (!(t > 0.0)) throw std::domain_error("fp_log_survival: t must be positive");
  if (rates.down == 0.0) return -rates.up * t;
  // Survival well away from 0 is cheapest and accurate through the cdf; the
  // scaled tail integral is only needed once 1 - F becomes ill-conditioned.
  if (drift_exponent(rates) * t < 30.0) {
    const double cdf = fp_cdf(t, rates);
    if (cdf < 0.999) return std::log1p(-cdf);
  }
  const double never = 1.0 - fp_hit_probability(rates);
  const double log_tail = log_tail_mass(t, rates);
  if (never == 0.0) return std::min(0.0, log_tail);
  // log(never + tail) without losing the small component
  const double log_never = std::log(never);
  const double hi = std::max(log_never, log_tail);
  const double lo = std::min(log_never, log_tail);
  return std::min(0.0, hi + std::log1p(std::exp(lo - hi)));
}

FpMoments fp_moments(const RatePair& rates) {
  check_rates(rates);
  if (!(rates.up > rates.down)) {
    throw std::domain_error("fp_moments: moments require up > down");
  }
  const double drift = rates.up - rates.down;
  return {1.0 / drift, (rates.up + rates.down) / (drift * drift * drift)};
}

}  // namespace mspr
