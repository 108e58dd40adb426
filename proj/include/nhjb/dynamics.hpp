#pragma once

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "nhjb/history.hpp"
#include "nhjb/problem.hpp"
#include "nhjb/sampling.hpp"

namespace nhjb {

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Radius of the velocity ball F^eta(x, y).
inline double ball_radius(const Vec& x, const Vec& y, double eta, double c_H) {
  return c_H * (1.0 + x.norm() + y.norm()) + eta;
}

/// Step grid on [tau, theta]: the step pattern repeats with period h so that
/// multiples of h, history knots shifted by tau, and any extra nodes (control
/// switches) land on grid nodes; the delayed argument of a node is a node.
inline std::vector<double> integration_grid(const ProblemSpec& prob, const PathPoint& p,
                                            int steps_per_interval,
                                            const std::vector<double>& extra_nodes = {}) {
  if (steps_per_interval < 1) throw std::invalid_argument("integration grid: steps_per_interval >= 1");
  const double h = prob.h, tau = p.tau, theta = prob.theta();
  if (tau < 0.0 || tau > theta + 1e-12) throw std::domain_error("integration grid: tau outside [0, theta]");

  std::vector<double> offsets;
  auto add_offset = [&](double t) {
    double o = std::fmod(t, h);
    if (o < 0.0) o += h;
    if (o >= h - 1e-13 * h) o = 0.0;
    offsets.push_back(o);
  };
  for (int i = 0; i < steps_per_interval; ++i) add_offset(h * static_cast<double>(i) / steps_per_interval);
  add_offset(tau);
  for (const auto& piece : p.w.pieces()) add_offset(tau + piece.a);
  for (double t : extra_nodes) add_offset(t);

  std::set<double> nodes{tau, theta};
  for (double o : offsets)
    for (long k = -1; k <= prob.intervals; ++k) {
      const double t = static_cast<double>(k) * h + o;
      if (t > tau + 1e-13 * h && t < theta - 1e-13 * h) nodes.insert(t);
    }
  std::vector<double> grid(nodes.begin(), nodes.end());
  // drop nodes closer than roundoff
  std::vector<double> out{grid.front()};
  for (double t : grid)
    if (t - out.back() > 1e-12 * h) out.push_back(t);
  if (out.back() != theta) out.back() = theta;
  return out;
}

namespace detail {

/// Method of steps on y(t) = x(t) - g(t, x(t-h)) with explicit Euler; the
/// per-step y-increment direction comes from `rate(k, t, x_k, r_k)`.
template <typename Rate>
Trajectory integrate_steps(const ProblemSpec& prob, const PathPoint& p,
                           const std::vector<double>& grid, Rate rate) {
  const double tau = p.tau;
  std::vector<Vec> xs;
  xs.reserve(grid.size());

  auto delayed = [&](double t) -> Vec {
    const double td = t - prob.h;
    if (td < tau - 1e-12 * prob.h) return p.w.eval(std::max(td - tau, -prob.h));
    if (td <= tau) return p.z;
    std::size_t lo = 0, hi = xs.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (grid[mid] <= td) lo = mid;
      else hi = mid;
    }
    const double span = grid[hi] - grid[lo];
    const double frac = span > 0.0 ? (td - grid[lo]) / span : 0.0;
    return xs[lo] + frac * (xs[hi] - xs[lo]);
  };

  xs.push_back(p.z);
  Vec y = p.z - prob.g(tau, p.w.at_minus_h());
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double t = grid[k], dt = grid[k + 1] - t;
    const Vec r = delayed(t);
    const Vec l = rate(k, t, xs[k], r);
    if (!l.allFinite())
      throw NumericError(prob.name + ": non-finite dynamics at t = " + std::to_string(t));
    y += dt * l;
    const Vec r_next = delayed(grid[k + 1]);
    Vec x_next = y + prob.g(grid[k + 1], r_next);
    if (!x_next.allFinite())
      throw NumericError(prob.name + ": non-finite state at t = " + std::to_string(grid[k + 1]));
    xs.push_back(std::move(x_next));
  }
  return Trajectory{p, grid, std::move(xs)};
}

}  // namespace detail

/// Trajectory of the controlled neutral equation under the given control.
inline Trajectory integrate_control(const ProblemSpec& prob, const PathPoint& p,
                                    const ControlSignal& u, int steps_per_interval) {
  const auto grid = integration_grid(prob, p, steps_per_interval, u.grid);
  return detail::integrate_steps(prob, p, grid, [&](std::size_t, double t, const Vec& x, const Vec& r) {
    return prob.f(t, x, r, u.at(t));
  });
}

/// A measurable selection of the differential inclusion.
struct Selection {
  enum class Kind { zero, constant, extremal, random };
  Kind kind = Kind::zero;
  Vec param;        // direction l (constant) or s (extremal)
  double eta = 0.0;
  double c_H = 1.0;
  unsigned seed = 0;

  static Selection zero(double c_H, double eta = 0.0) {
    return Selection{Kind::zero, Vec(), eta, c_H, 0};
  }
  static Selection constant(Vec l, double c_H, double eta = 0.0) {
    return Selection{Kind::constant, std::move(l), eta, c_H, 0};
  }
  static Selection extremal(Vec s, double c_H, double eta = 0.0) {
    return Selection{Kind::extremal, std::move(s), eta, c_H, 0};
  }
  static Selection random(unsigned seed, double c_H, double eta = 0.0) {
    return Selection{Kind::random, Vec(), eta, c_H, seed};
  }
};

/// Trajectory of the inclusion X^eta: per-step y-increments lie in the ball
/// F^eta evaluated at the step's left endpoint.
inline Trajectory integrate_inclusion(const ProblemSpec& prob, const PathPoint& p,
                                      const Selection& sel, int steps_per_interval) {
  if (sel.eta < 0.0 || sel.eta > 1.0) throw std::invalid_argument("selection: eta outside [0, 1]");
  const auto grid = integration_grid(prob, p, steps_per_interval);
  Rng rng(sel.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n = prob.n;
  return detail::integrate_steps(prob, p, grid, [&, n](std::size_t, double, const Vec& x, const Vec& r) {
    const double rho = ball_radius(x, r, sel.eta, sel.c_H);
    Vec l = Vec::Zero(n);
    switch (sel.kind) {
      case Selection::Kind::zero:
        break;
      case Selection::Kind::constant:
        l = sel.param;
        if (l.norm() > rho) l *= rho / l.norm();
        break;
      case Selection::Kind::extremal:
        if (sel.param.norm() > 1e-14) l = -rho * sel.param / sel.param.norm();
        break;
      case Selection::Kind::random:
        l = sample_direction(n, rng) * rho * unif(rng);
        break;
    }
    if (l.norm() > rho + 1e-9 * (1.0 + rho))
      throw std::logic_error("selection emitted a direction outside the ball");
    return l;
  });
}

/// Largest violation of the inclusion membership test over grid steps:
/// ||dy/dt|| - radius at the step's left endpoint (<= 0 means accepted).
inline double inclusion_residual(const ProblemSpec& prob, const Trajectory& x, double c_H,
                                 double eta) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < x.times.size(); ++k) {
    const double t0 = x.times[k], t1 = x.times[k + 1];
    const Vec r0 = x.at(t0 - prob.h), r1 = x.at(t1 - prob.h);
    const Vec y0 = x.values[k] - prob.g(t0, r0);
    const Vec y1 = x.values[k + 1] - prob.g(t1, r1);
    const double speed = (y1 - y0).norm() / (t1 - t0);
    worst = std::max(worst, speed - ball_radius(x.values[k], r0, eta, c_H));
  }
  return worst;
}

struct Bounds {
  double alpha_X;
  double alpha_X_star;
  double lambda_X_star;
};

/// A-priori bounds for trajectories started in P(alpha): a Gronwall-type
/// majorant for the state, the reduced-path bound, and its Lipschitz
/// constant (with the eta <= 1 contribution included).
inline Bounds apriori_bounds(const ProblemSpec& prob, double alpha, double c_H,
                             int samples = 256, unsigned seed = 7u) {
  if (!(alpha > 0.0)) throw std::invalid_argument("apriori_bounds: alpha must be positive");
  const double theta = prob.theta();
  Rng rng(seed);
  double alpha_g = 0.0;
  for (int i = 0; i <= 16; ++i) {
    const double t = theta * static_cast<double>(i) / 16.0;
    for (int k = 0; k < std::max(samples / 16, 4); ++k) {
      const Vec v = k == 0 ? Vec(Vec::Zero(prob.n)) : sample_ball(prob.n, alpha, rng);
      alpha_g = std::max(alpha_g, prob.g(t, v).norm());
    }
    for (int axis = 0; axis < prob.n; ++axis) {
      Vec v = Vec::Zero(prob.n);
      v[axis] = alpha;
      alpha_g = std::max(alpha_g, std::max(prob.g(t, v).norm(), prob.g(t, Vec(-v)).norm()));
    }
  }
  Bounds b;
  b.alpha_X = (alpha + alpha_g + (c_H + 1.0) * theta) * std::exp(2.0 * c_H * theta) + alpha_g;
  b.lambda_X_star = c_H * (1.0 + 2.0 * b.alpha_X) + 1.0;
  b.alpha_X_star = alpha + alpha_g + b.lambda_X_star * theta;
  if (!std::isfinite(b.alpha_X) || !std::isfinite(b.alpha_X_star) || !std::isfinite(b.lambda_X_star))
    throw NumericError("apriori_bounds: non-finite estimate");
  return b;
}

/// Coinvariant derivative of g_*(tau, z, w) = g(tau, w(-h)):
/// dg/dtau + grad_x g * d^+ w(-h). Defined only on the interior set.
inline Vec ci_derivative_g(const ProblemSpec& prob, double tau, const History& w) {
  if (!(w.delta_w() > 0.0))
    throw std::domain_error("ci_derivative_g: point is not in the interior set (delta_w = 0)");
  const Vec r = w.at_minus_h();
  return prob.dg_dt(tau, r) + prob.grad_g(tau, r) * right_derivative_at_start(w);
}

/// Reduced path value y(t) = x(t) - g(t, x(t-h)).
inline Vec y_at(const ProblemSpec& prob, const Trajectory& x, double t) {
  return x.at(t) - prob.g(t, x.at(t - prob.h));
}

}  // namespace nhjb
