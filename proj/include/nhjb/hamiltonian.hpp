#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "nhjb/dynamics.hpp"
#include "nhjb/problem.hpp"
#include "nhjb/sampling.hpp"

namespace nhjb {

struct HamiltonianValue {
  double value;
  Vec argmin;
  std::size_t argmin_index;
};

/// H(t, z, r, s) = min over the discretized control set of
/// <f(t,z,r,u), s> + f0(t,z,r,u). Ties go to the first lattice point.
inline HamiltonianValue hamiltonian(const ProblemSpec& prob, double t, const Vec& z, const Vec& r,
                                    const Vec& s) {
  if (prob.controls.empty()) throw std::invalid_argument("hamiltonian: empty control set");
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < prob.controls.size(); ++i) {
    const Vec& u = prob.controls[i];
    const double v = prob.f(t, z, r, u).dot(s) + prob.f0(t, z, r, u);
    if (!std::isfinite(v)) throw NumericError(prob.name + ": non-finite hamiltonian term");
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  return {best, prob.controls[best_i], best_i};
}

/// omega(tau, t, x, s): composite-midpoint quadrature of H along the
/// trajectory minus <y(t) - y(tau), s>.
inline double omega(const ProblemSpec& prob, double tau, double t, const Trajectory& x,
                    const Vec& s) {
  if (!(tau < t) || t > prob.theta() + 1e-12) throw std::domain_error("omega: need tau < t <= theta");
  double quad = 0.0;
  for (std::size_t k = 0; k + 1 < x.times.size(); ++k) {
    const double a = std::max(x.times[k], tau), b = std::min(x.times[k + 1], t);
    if (b - a <= 0.0) continue;
    const double mid = 0.5 * (a + b);
    quad += (b - a) * hamiltonian(prob, mid, x.at(mid), x.at(mid - prob.h), s).value;
  }
  const Vec dy = y_at(prob, x, t) - y_at(prob, x, tau);
  return quad - dy.dot(s);
}

/// Sampled estimates of the structural constants, reported together with the
/// sampling parameters that produced them. These are lower bounds on the true
/// constants, tight on the benchmark family.
struct StructuralConstants {
  double c_H = 0.0;
  double lambda_H = 0.0;
  double lambda_g = 0.0;
  double lambda_sigma = 0.0;
  double alpha = 0.0;
  int samples_used = 0;
  unsigned seed = 0;
};

inline StructuralConstants estimate_constants(const ProblemSpec& prob, double alpha, int samples,
                                              unsigned seed) {
  if (samples < 2) throw std::invalid_argument("estimate_constants: samples >= 2");
  Rng rng(seed);
  std::uniform_real_distribution<double> ut(0.0, prob.theta());
  const int n = prob.n;
  StructuralConstants out;
  out.alpha = alpha;
  out.seed = seed;

  HistorySampler hist;
  hist.h = prob.h;
  hist.n = n;
  hist.amplitude = alpha;

  int used = 0;
  auto ratio_or_skip = [&](double num, double den, double& acc) {
    if (den <= 1e-12) return;
    acc = std::max(acc, num / den);
    ++used;
  };

  // canonical probes: aligned/diagonal directions catch the Lipschitz
  // envelope of H in s exactly for control-affine benchmarks
  std::vector<Vec> probe_dirs;
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1.0;
    probe_dirs.push_back(e);
  }
  probe_dirs.push_back(Vec::Ones(n) / std::sqrt(static_cast<double>(n)));

  for (const Vec& d : probe_dirs) {
    const double t = 0.5 * prob.theta();
    const Vec zero = Vec::Zero(n);
    const double H1 = hamiltonian(prob, t, zero, zero, d).value;
    const double H0 = hamiltonian(prob, t, zero, zero, zero).value;
    ratio_or_skip(std::abs(H1 - H0), 1.0, out.c_H);
  }

  for (int i = 0; i < samples; ++i) {
    const double t = ut(rng);
    const Vec z = sample_ball(n, alpha, rng);
    const Vec r = sample_ball(n, alpha, rng);
    const Vec s = sample_ball(n, 2.0, rng);
    const Vec s2 = i % 4 == 0 ? Vec(Vec::Zero(n)) : sample_ball(n, 2.0, rng);
    const double H_s = hamiltonian(prob, t, z, r, s).value;
    const double H_s2 = hamiltonian(prob, t, z, r, s2).value;
    ratio_or_skip(std::abs(H_s - H_s2), (1.0 + z.norm() + r.norm()) * (s - s2).norm(), out.c_H);

    const Vec z2 = sample_ball(n, alpha, rng);
    const Vec r2 = sample_ball(n, alpha, rng);
    const double H_zr = hamiltonian(prob, t, z2, r2, s).value;
    ratio_or_skip(std::abs(H_s - H_zr),
                  ((z - z2).norm() + (r - r2).norm()) * (1.0 + s.norm()), out.lambda_H);

    const double t2 = i % 3 == 0 ? t : ut(rng);  // same-time probes isolate the state slope
    const Vec x = sample_ball(n, alpha, rng);
    Vec x2 = i % 3 == 0 ? Vec(x + 1e-3 * sample_direction(n, rng))
                        : (i % 3 == 1 ? x : sample_ball(n, alpha, rng));
    if (x2.norm() > alpha) x2 *= alpha / x2.norm();
    ratio_or_skip((prob.g(t, x) - prob.g(t2, x2)).norm(),
                  std::abs(t - t2) + (x - x2).norm(), out.lambda_g);

    const History w = sample_history(hist, rng);
    const History w2 = sample_history(hist, rng);
    const Vec dz = sample_direction(n, rng);
    const Vec z3 = sample_ball(n, alpha * 0.5, rng);
    Vec z4 = i % 2 == 0 ? Vec(z3 + 0.1 * alpha * dz) : sample_ball(n, alpha, rng);
    if (z4.norm() > alpha) z4 *= alpha / z4.norm();
    const double sig = prob.sigma(z3, w);
    const double sig_z = prob.sigma(z4, w);
    ratio_or_skip(std::abs(sig - sig_z), (z3 - z4).norm(), out.lambda_sigma);
    const double sig_w = prob.sigma(z3, w2);
    ratio_or_skip(std::abs(sig - sig_w), norms(w - w2).l1, out.lambda_sigma);
  }
  if (used == 0) throw NumericError("estimate_constants: all samples degenerate");
  out.samples_used = samples;
  return out;
}

}  // namespace nhjb
