#ifndef MSPR_QUADRATURE_HPP
#define MSPR_QUADRATURE_HPP

#include <cmath>
#include <cstddef>

namespace mspr {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;     // accumulated error estimate
  int evaluations = 0;
  bool converged = true;  // false if the depth cap was hit anywhere
};

namespace detail {

// 15-point Kronrod / 7-point Gauss pair (QUADPACK dqk15 constants).
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(F& f, double a, double b, double& kronrod, double& err, int& evals) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = kWgk[7] * fc;
  double resg = kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double lo = f(c - h * kXgk[i]);
    const double hi = f(c + h * kXgk[i]);
    resk += kWgk[i] * (lo + hi);
    if (i % 2 == 1) resg += kWg[i / 2] * (lo + hi);
  }
  evals += 15;
  kronrod = resk * h;
  err = std::abs((resk - resg) * h);
}

template <class F>
void adapt(F& f, double a, double b, double tol, int depth, int max_depth,
           QuadResult& out) {
  double value, err;
  gk15(f, a, b, value, err, out.evaluations);
  if (err <= tol || depth >= max_depth || !((b - a) > 1e-15 * (std::abs(a) + 1.0))) {
    out.value += value;
    out.error += err;
    if (err > tol && depth >= max_depth) out.converged = false;
    return;
  }
  const double c = 0.5 * (a + b);
  adapt(f, a, c, 0.5 * tol, depth + 1, max_depth, out);
  adapt(f, c, b, 0.5 * tol, depth + 1, max_depth, out);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod quadrature of f over [a, b]. Subdivision stops once
/// the local error estimate drops below the local share of abs_tol, or below
/// rel_tol relative to a first whole-interval estimate.
template <class F>
QuadResult integrate_adaptive(F&& f, double a, double b, double abs_tol,
                              double rel_tol = 0.0, int max_depth = 52) {
  QuadResult out;
  if (!(b > a)) return out;
  double whole, err0;
  int pre_evals = 0;
  detail::gk15(f, a, b, whole, err0, pre_evals);
  const double tol = std::max(abs_tol, rel_tol * std::abs(whole));
  detail::adapt(f, a, b, tol, 0, max_depth, out);
  return out;
}

}  // namespace mspr

#endif  // MSPR_QUADRATURE_HPP
