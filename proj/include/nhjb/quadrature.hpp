#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace nhjb {

namespace detail {

template <typename F, typename V>
V simpson_recurse(const F& f, double a, double b, const V& fa, const V& fm, const V& fb,
                  const V& whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const V fl = f(0.5 * (a + m));
  const V fr = f(0.5 * (m + b));
  const V left = (m - a) / 6.0 * (fa + 4.0 * fl + fm);
  const V right = (b - m) / 6.0 * (fm + 4.0 * fr + fb);
  const V refined = left + right;
  double err;
  if constexpr (std::is_same_v<V, double>) {
    err = std::abs(refined - whole);
  } else {
    err = (refined - whole).norm();
  }
  if (depth <= 0 || err <= 15.0 * tol) {
    return refined + (refined - whole) / 15.0;
  }
  return simpson_recurse(f, a, m, fa, fl, fm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(f, m, b, fm, fr, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson rule on [a, b]; tol is absolute.
template <typename F, typename V = std::invoke_result_t<F, double>>
V adaptive_simpson(const F& f, double a, double b, double tol, int max_depth = 24) {
  const V fa = f(a);
  const V fm = f(0.5 * (a + b));
  const V fb = f(b);
  const V whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  if (!(b > a)) {
    if constexpr (std::is_same_v<V, double>) return 0.0;
    else return V::Zero(fa.size());
  }
  return detail::simpson_recurse(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Adaptive Simpson over [a, b] split at the given interior knots, so the
/// integrand only needs to be smooth between consecutive knots.
template <typename F, typename V = std::invoke_result_t<F, double>>
V adaptive_simpson_split(const F& f, double a, double b, std::vector<double> knots, double tol) {
  knots.push_back(a);
  knots.push_back(b);
  std::sort(knots.begin(), knots.end());
  V total = [&] {
    if constexpr (std::is_same_v<V, double>) return 0.0;
    else return V(V::Zero(f(a).size()));
  }();
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double lo = std::max(a, knots[i]);
    const double hi = std::min(b, knots[i + 1]);
    if (hi - lo <= 0.0) continue;
    total += adaptive_simpson<F, V>(f, lo, hi, tol * (hi - lo) / (b - a));
  }
  return total;
}

}  // namespace nhjb
