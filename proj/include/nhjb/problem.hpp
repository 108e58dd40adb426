#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nhjb/history.hpp"

namespace nhjb {

/// Piecewise-constant control: value u_i on [grid[i], grid[i+1]); the grid
/// covers [tau, theta] including both ends.
struct ControlSignal {
  std::vector<double> grid;
  std::vector<Vec> values;

  Vec at(double t) const {
    if (values.empty()) throw std::domain_error("control signal: empty");
    if (t <= grid.front()) return values.front();
    std::size_t lo = 0, hi = grid.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (grid[mid] <= t) lo = mid;
      else hi = mid;
    }
    return values[std::min(lo, values.size() - 1)];
  }

  static ControlSignal constant(double tau, double theta, const Vec& u) {
    return ControlSignal{{tau, theta}, {u}};
  }
};

/// Per-axis uniform lattice over a box, both endpoints included, enumerated
/// lexicographically (first axis slowest).
inline std::vector<Vec> box_lattice(const Vec& lo, const Vec& hi, const std::vector<int>& counts) {
  const int m = static_cast<int>(lo.size());
  if (hi.size() != m || static_cast<int>(counts.size()) != m)
    throw std::invalid_argument("box_lattice: dim mismatch");
  for (int c : counts)
    if (c < 1) throw std::invalid_argument("box_lattice: counts must be >= 1");
  std::vector<Vec> out;
  std::vector<int> idx(m, 0);
  while (true) {
    Vec u(m);
    for (int a = 0; a < m; ++a)
      u[a] = counts[a] == 1 ? lo[a] : lo[a] + (hi[a] - lo[a]) * idx[a] / (counts[a] - 1);
    out.push_back(std::move(u));
    int a = m - 1;
    while (a >= 0 && ++idx[a] == counts[a]) idx[a--] = 0;
    if (a < 0) break;
  }
  return out;
}

/// One control problem: neutral dynamics d/dt [x(t) - g(t, x(t-h))] =
/// f(t, x(t), x(t-h), u(t)), running cost f0, terminal cost sigma.
struct ProblemSpec {
  std::string name;
  int n = 1;
  int m = 1;
  double h = 1.0;
  int intervals = 1;  // theta = intervals * h
  std::vector<Vec> controls;

  std::function<Vec(double, const Vec&)> g;
  std::function<Vec(double, const Vec&)> dg_dt;
  std::function<Mat(double, const Vec&)> grad_g;
  std::function<Vec(double, const Vec&, const Vec&, const Vec&)> f;     // (t, z, r, u)
  std::function<double(double, const Vec&, const Vec&, const Vec&)> f0; // (t, z, r, u)
  std::function<double(const Vec&, const History&)> sigma;
  std::optional<double> c_f;

  double theta() const { return static_cast<double>(intervals) * h; }

  /// Finite-difference consistency of dg_dt and grad_g against g at random
  /// points. Throws on disagreement.
  void self_check(unsigned seed = 2024u, double tol = 1e-5) const {
    if (controls.empty()) throw std::invalid_argument(name + ": empty control set");
    if (!(h > 0.0) || intervals < 1) throw std::invalid_argument(name + ": bad horizon");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ut(0.0, theta());
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double e = 1e-6;
    for (int trial = 0; trial < 8; ++trial) {
      const double t = std::min(std::max(ut(rng), e), theta() - e);
      Vec x(n);
      for (int i = 0; i < n; ++i) x[i] = gauss(rng);
      const Vec dt_fd = (g(t + e, x) - g(t - e, x)) / (2.0 * e);
      if ((dt_fd - dg_dt(t, x)).norm() > tol * (1.0 + dt_fd.norm()))
        throw std::invalid_argument(name + ": dg_dt inconsistent with g");
      const Mat J = grad_g(t, x);
      for (int c = 0; c < n; ++c) {
        Vec xp = x, xm = x;
        xp[c] += e;
        xm[c] -= e;
        const Vec col_fd = (g(t, xp) - g(t, xm)) / (2.0 * e);
        if ((col_fd - J.col(c)).norm() > tol * (1.0 + col_fd.norm()))
          throw std::invalid_argument(name + ": grad_g inconsistent with g");
      }
    }
  }
};

/// Convenience for problems with g identically zero.
inline void set_zero_g(ProblemSpec& p) {
  const int n = p.n;
  p.g = [n](double, const Vec&) { return Vec::Zero(n); };
  p.dg_dt = [n](double, const Vec&) { return Vec::Zero(n); };
  p.grad_g = [n](double, const Vec&) { return Mat::Zero(n, n); };
}

}  // namespace nhjb
