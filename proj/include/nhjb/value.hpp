#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "nhjb/dynamics.hpp"
#include "nhjb/hamiltonian.hpp"
#include "nhjb/mollify.hpp"
#include "nhjb/problem.hpp"

namespace nhjb {

struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bolza cost of one control: terminal cost at theta plus composite-midpoint
/// quadrature of the running cost along the integrated trajectory.
inline double cost(const ProblemSpec& prob, const PathPoint& p, const ControlSignal& u,
                   int steps_per_interval) {
  const double theta = prob.theta();
  if (p.tau >= theta - 1e-14 * theta) return prob.sigma(p.z, p.w);
  const Trajectory x = integrate_control(prob, p, u, steps_per_interval);
  double running = 0.0;
  for (std::size_t k = 0; k + 1 < x.times.size(); ++k) {
    const double a = x.times[k], b = x.times[k + 1];
    const double mid = 0.5 * (a + b);
    running += (b - a) * prob.f0(mid, x.at(mid), x.at(mid - prob.h), u.at(mid));
  }
  return prob.sigma(x.at(theta), shift(x, theta)) + running;
}

struct ValueResult {
  double value;
  ControlSignal best;
};

/// Exhaustive minimum of the cost over piecewise-constant controls on the
/// uniform k-interval grid; ties broken by lexicographic control index.
inline ValueResult enumerate_value(const ProblemSpec& prob, const PathPoint& p, int k,
                                   int steps_per_interval, long budget = 1'000'000L) {
  if (k < 1) throw std::invalid_argument("enumerate_value: k >= 1");
  const double theta = prob.theta();
  if (p.tau >= theta - 1e-14 * theta)
    return {prob.sigma(p.z, p.w), ControlSignal{{theta, theta}, {prob.controls.front()}}};

  const std::size_t lattice = prob.controls.size();
  double total = 1.0;
  for (int i = 0; i < k; ++i) total *= static_cast<double>(lattice);
  if (total > static_cast<double>(budget))
    throw BudgetError(prob.name + ": control enumeration " + std::to_string(total) +
                      " exceeds budget " + std::to_string(budget));

  std::vector<double> grid(static_cast<std::size_t>(k) + 1);
  for (int i = 0; i <= k; ++i)
    grid[i] = p.tau + (theta - p.tau) * static_cast<double>(i) / static_cast<double>(k);

  std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
  ControlSignal u;
  u.grid = grid;
  u.values.assign(static_cast<std::size_t>(k), prob.controls.front());
  double best = std::numeric_limits<double>::infinity();
  ControlSignal best_u = u;
  while (true) {
    for (int i = 0; i < k; ++i) u.values[i] = prob.controls[idx[i]];
    const double c = cost(prob, p, u, steps_per_interval);
    if (c < best) {
      best = c;
      best_u = u;
    }
    int a = k - 1;
    while (a >= 0 && ++idx[a] == lattice) idx[a--] = 0;
    if (a < 0) break;
  }
  return {best, std::move(best_u)};
}

/// One coordinate-descent pass: flip each interval's control to its best
/// lattice value, keeping earlier intervals fixed.
inline ControlSignal refine_control_sweep(const ProblemSpec& prob, const PathPoint& p,
                                          ControlSignal u, int steps_per_interval) {
  double current = cost(prob, p, u, steps_per_interval);
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const Vec original = u.values[i];
    Vec best_v = original;
    for (const Vec& cand : prob.controls) {
      u.values[i] = cand;
      const double c = cost(prob, p, u, steps_per_interval);
      if (c < current - 1e-15 * (1.0 + std::abs(current))) {
        current = c;
        best_v = cand;
      }
    }
    u.values[i] = best_v;
  }
  return u;
}

struct FeedbackResult {
  ControlSignal control;
  Trajectory trajectory;
};

/// Hamiltonian-pointwise-minimizing feedback: at each control node t_i picks
/// argmin_u <f, s> + f0 at the current state and integrates to the next node.
inline FeedbackResult synthesize_feedback(const ProblemSpec& prob, const PathPoint& p, const Vec& s,
                                          int k, int steps_per_interval) {
  if (k < 1) throw std::invalid_argument("synthesize_feedback: k >= 1");
  const double theta = prob.theta();
  if (p.tau >= theta - 1e-14 * theta)
    return {ControlSignal{{theta, theta}, {prob.controls.front()}}, Trajectory{p, {theta}, {p.z}}};

  std::vector<double> cgrid(static_cast<std::size_t>(k) + 1);
  for (int i = 0; i <= k; ++i)
    cgrid[i] = p.tau + (theta - p.tau) * static_cast<double>(i) / static_cast<double>(k);

  const auto grid = integration_grid(prob, p, steps_per_interval, cgrid);
  std::vector<Vec> chosen;
  std::size_t next_node = 0;
  Vec u_cur = prob.controls.front();
  Trajectory x = detail::integrate_steps(
      prob, p, grid, [&](std::size_t, double t, const Vec& xk, const Vec& rk) {
        while (next_node < cgrid.size() - 1 && t >= cgrid[next_node] - 1e-12 * prob.h) {
          u_cur = hamiltonian(prob, t, xk, rk, s).argmin;
          chosen.push_back(u_cur);
          ++next_node;
        }
        return prob.f(t, xk, rk, u_cur);
      });
  while (chosen.size() < static_cast<std::size_t>(k)) chosen.push_back(u_cur);
  return {ControlSignal{cgrid, std::move(chosen)}, std::move(x)};
}

/// An evaluatable candidate solution, optionally with closed-form coinvariant
/// derivatives.
struct CandidateFunctional {
  std::string name;
  enum class Kind { analytic, numeric } kind = Kind::analytic;
  std::function<double(double, const Vec&, const History&)> eval;
  std::function<double(double, const Vec&, const History&)> ci_derivative;
  std::function<Vec(double, const Vec&, const History&)> gradient;

  bool has_derivatives() const {
    return static_cast<bool>(ci_derivative) && static_cast<bool>(gradient);
  }
  double operator()(double tau, const Vec& z, const History& w) const { return eval(tau, z, w); }
};

/// The value functional computed by control enumeration, usable wherever a
/// candidate is expected. Deterministic for a fixed budget.
inline CandidateFunctional value_candidate(const ProblemSpec& prob, int k, int steps_per_interval,
                                           long budget = 1'000'000L) {
  CandidateFunctional c;
  c.name = prob.name + ":value[k=" + std::to_string(k) + ",spi=" + std::to_string(steps_per_interval) + "]";
  c.kind = CandidateFunctional::Kind::numeric;
  c.eval = [prob, k, steps_per_interval, budget](double tau, const Vec& z, const History& w) {
    return enumerate_value(prob, PathPoint(tau, z, w), k, steps_per_interval, budget).value;
  };
  return c;
}

struct ExtensionResult {
  double value;
  std::vector<double> gaps;  // successive differences along the schedule
  bool converged;
  bool warning;              // gaps failed to decrease over the last three steps
};

/// Extension of a Lipschitz-defined functional to piecewise-Lipschitz points
/// through the smoothing sequence. Lipschitz points with z = w(-0) short-cut
/// to a direct evaluation.
inline ExtensionResult extend_value(const ProblemSpec& prob, const CandidateFunctional& base,
                                    const PathPoint& p, const std::vector<int>& schedule) {
  (void)prob;
  if (schedule.empty()) throw std::invalid_argument("extend_value: empty schedule");
  if (p.w.is_lipschitz() && detail::nearly_equal(p.z, p.w.left_limit_at_zero())) {
    const double v = base(p.tau, p.z, p.w);
    return {v, std::vector<double>(schedule.size() > 1 ? schedule.size() - 1 : 0, 0.0), true, false};
  }
  std::vector<double> values;
  values.reserve(schedule.size());
  for (int j : schedule) {
    const History wj = mollify(p.z, p.w, j);
    values.push_back(base(p.tau, wj.left_limit_at_zero(), wj));
  }
  std::vector<double> gaps;
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    gaps.push_back(std::abs(values[i + 1] - values[i]));
  const double v = values.back();
  const bool converged = gaps.empty() || gaps.back() < 1e-3 * (1.0 + std::abs(v));
  bool warning = false;
  if (gaps.size() >= 3) {
    const std::size_t g = gaps.size();
    warning = gaps[g - 1] >= gaps[g - 2] && gaps[g - 2] >= gaps[g - 3];
  }
  return {v, std::move(gaps), converged, warning};
}

}  // namespace nhjb
