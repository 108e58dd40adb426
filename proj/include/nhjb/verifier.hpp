#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "nhjb/dynamics.hpp"
#include "nhjb/hamiltonian.hpp"
#include "nhjb/sampling.hpp"
#include "nhjb/value.hpp"

namespace nhjb {

/// Outcome of one check. Slacks are sign-normalized: the check passes iff
/// slack >= -tolerance. Reports carry enough fields to be re-run.
struct VerificationReport {
  std::string check;
  bool pass = false;
  double slack = 0.0;
  double tolerance = 0.0;
  int samples = 0;
  unsigned seed = 0;
  nlohmann::ordered_json details;
};

inline VerificationReport make_report(std::string check, double slack, double tol, int samples,
                                      unsigned seed, nlohmann::ordered_json details = {}) {
  VerificationReport r;
  r.check = std::move(check);
  r.slack = slack;
  r.tolerance = tol;
  r.samples = samples;
  r.seed = seed;
  r.pass = slack >= -tol;
  r.details = std::move(details);
  return r;
}

/// phi(theta, z, w) = sigma(z, w) over random (z, w).
inline VerificationReport check_terminal(const ProblemSpec& prob, const CandidateFunctional& phi,
                                         int samples, unsigned seed, double tol = 1e-9,
                                         double alpha = 1.0) {
  Rng rng(seed);
  HistorySampler plain{prob.h, prob.n, alpha, 3, 4, false, 1.0};
  HistorySampler smooth{prob.h, prob.n, alpha, 3, 4, true, 1.0};
  const double theta = prob.theta();
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const History w = i == 0 ? History::constant(prob.h, Vec::Zero(prob.n))
                             : sample_history(i % 2 ? plain : smooth, rng);
    const Vec z = i == 0 ? Vec(Vec::Zero(prob.n)) : sample_ball(prob.n, alpha, rng);
    worst = std::max(worst, std::abs(phi(theta, z, w) - prob.sigma(z, w)));
  }
  return make_report("terminal", -worst, tol, samples, seed,
                     {{"problem", prob.name}, {"candidate", phi.name}, {"max_abs_gap", worst}});
}

struct DppOptions {
  double c_H = 1.0;
  int random_selections = 32;
  int steps_per_interval = 16;
  int feedback_k = 8;
};

/// Paired dynamic-programming inequalities over a finite family of inclusion
/// trajectories. A passing upper inequality is witnessed; a failing one only
/// means no witness was found within the sampled family.
inline VerificationReport check_dpp(const ProblemSpec& prob, const CandidateFunctional& phi,
                                    const PathPoint& p, double t, const std::vector<Vec>& s_samples,
                                    double eta, const DppOptions& opts, double tol, unsigned seed) {
  if (!(p.tau < t) || t > prob.theta() + 1e-12)
    throw std::domain_error("check_dpp: need tau < t <= theta");
  const double phi0 = phi(p.tau, p.z, p.w);

  struct Member {
    Trajectory x;
    double phi_t;
    std::string tag;
  };
  std::vector<Member> shared;
  auto add = [&](Trajectory x, std::string tag) {
    const double v = phi(t, x.at(t), shift(x, t));
    shared.push_back(Member{std::move(x), v, std::move(tag)});
  };
  add(integrate_inclusion(prob, p, Selection::zero(opts.c_H, eta), opts.steps_per_interval), "zero");
  for (int i = 0; i < opts.random_selections; ++i)
    add(integrate_inclusion(prob, p, Selection::random(seed + 101u * i, opts.c_H, eta),
                            opts.steps_per_interval),
        "random");

  nlohmann::ordered_json per_s = nlohmann::ordered_json::array();
  double slack = std::numeric_limits<double>::infinity();
  for (const Vec& s : s_samples) {
    std::vector<Member> family = shared;
    {
      Trajectory xe = integrate_inclusion(prob, p, Selection::extremal(s, opts.c_H, eta),
                                          opts.steps_per_interval);
      family.push_back(Member{std::move(xe), 0.0, "extremal+"});
      Trajectory xm = integrate_inclusion(prob, p, Selection::extremal(Vec(-s), opts.c_H, eta),
                                          opts.steps_per_interval);
      family.push_back(Member{std::move(xm), 0.0, "extremal-"});
      Trajectory xf = synthesize_feedback(prob, p, s, opts.feedback_k, opts.steps_per_interval).trajectory;
      family.push_back(Member{std::move(xf), 0.0, "feedback"});
      for (std::size_t i = family.size() - 3; i < family.size(); ++i)
        family[i].phi_t = phi(t, family[i].x.at(t), shift(family[i].x, t));
    }
    double vmin = std::numeric_limits<double>::infinity();
    double vmax = -vmin;
    std::string witness_min, witness_max;
    for (const Member& m : family) {
      const double v = m.phi_t + omega(prob, p.tau, t, m.x, s);
      if (v < vmin) {
        vmin = v;
        witness_min = m.tag;
      }
      if (v > vmax) {
        vmax = v;
        witness_max = m.tag;
      }
    }
    const double upper_slack = phi0 - vmin;  // inf family <= phi0
    const double lower_slack = vmax - phi0;  // sup family >= phi0
    slack = std::min({slack, upper_slack, lower_slack});
    per_s.push_back({{"s", std::vector<double>(s.data(), s.data() + s.size())},
                     {"upper_slack", upper_slack},
                     {"lower_slack", lower_slack},
                     {"witness_min", witness_min},
                     {"witness_max", witness_max}});
  }
  auto details = nlohmann::ordered_json{{"problem", prob.name},
                                        {"candidate", phi.name},
                                        {"tau", p.tau},
                                        {"t", t},
                                        {"eta", eta},
                                        {"family_size", shared.size() + 3},
                                        {"note", "upper-inequality failures mean no witness in budget"},
                                        {"per_s", per_s}};
  return make_report("dpp", slack, tol, static_cast<int>(s_samples.size()), seed, std::move(details));
}

enum class DerivativeSide { lower, upper };

/// One-sided directional derivative along (1, l) with constant path extension:
/// min (lower) or max (upper) of the last three difference quotients.
inline double directional_derivative(const CandidateFunctional& phi, const PathPoint& p,
                                     const Vec& l, DerivativeSide side,
                                     const std::vector<double>& steps) {
  if (steps.empty()) throw std::invalid_argument("directional_derivative: empty step list");
  const Trajectory kappa = extend_constant(p, p.tau + steps.front());
  const double phi0 = phi(p.tau, p.z, p.w);
  std::vector<double> quots;
  quots.reserve(steps.size());
  for (double d : steps) {
    if (!(d > 0.0)) throw std::invalid_argument("directional_derivative: steps must be positive");
    const History moved = shift(kappa, p.tau + d);
    quots.push_back((phi(p.tau + d, Vec(p.z + d * l), moved) - phi0) / d);
  }
  const std::size_t m = std::min<std::size_t>(3, quots.size());
  double acc = quots[quots.size() - 1];
  for (std::size_t i = quots.size() - m; i < quots.size(); ++i)
    acc = side == DerivativeSide::lower ? std::min(acc, quots[i]) : std::max(acc, quots[i]);
  return acc;
}

inline std::vector<double> default_fd_steps(double h, double span) {
  std::vector<double> steps;
  for (int k = 3; k <= 10; ++k) {
    const double d = std::ldexp(h, -k);
    if (d < 0.45 * span) steps.push_back(d);
  }
  if (steps.empty()) steps.push_back(0.25 * span);
  return steps;
}

namespace detail {

inline Vec fd_gradient(const CandidateFunctional& phi, double tau, const Vec& z, const History& w,
                       double step = 1e-5) {
  Vec g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    Vec zp = z, zm = z;
    zp[i] += step;
    zm[i] -= step;
    g[i] = (phi(tau, zp, w) - phi(tau, zm, w)) / (2.0 * step);
  }
  return g;
}

}  // namespace detail

/// Dini-form inequalities at an interior point: for every s the bracket
/// d_{1,l} phi + <dg, s> + H(tau, z, w(-h), s) - <l, s> must dip below zero
/// (lower, over l in the shifted velocity ball) and rise above zero (upper).
inline VerificationReport check_dini(const ProblemSpec& prob, const CandidateFunctional& phi,
                                     const PathPoint& p, const std::vector<Vec>& s_samples,
                                     int l_samples_per_s, double tol, unsigned seed, double c_H) {
  if (!p.interior_flag) throw std::domain_error("check_dini: point is not in the interior set");
  Rng rng(seed);
  const Vec b = ci_derivative_g(prob, p.tau, p.w);
  const Vec r = p.w.at_minus_h();
  const double rho = ball_radius(p.z, r, 0.0, c_H);
  const auto steps = default_fd_steps(prob.h, prob.theta() - p.tau);

  const Vec grad = phi.has_derivatives() ? phi.gradient(p.tau, p.z, p.w)
                                         : detail::fd_gradient(phi, p.tau, p.z, p.w);

  nlohmann::ordered_json per_s = nlohmann::ordered_json::array();
  double slack = std::numeric_limits<double>::infinity();
  for (const Vec& s : s_samples) {
    std::vector<Vec> ls;
    if (s.norm() > 1e-14) {
      ls.push_back(Vec(b + rho * s / s.norm()));
      ls.push_back(Vec(b - rho * s / s.norm()));
    } else {
      ls.push_back(b);
    }
    const Vec u = grad - s;
    if (u.norm() > 1e-14) {
      ls.push_back(Vec(b + rho * u / u.norm()));
      ls.push_back(Vec(b - rho * u / u.norm()));
    }
    while (static_cast<int>(ls.size()) < l_samples_per_s + 4)
      ls.push_back(Vec(b + sample_ball(prob.n, rho, rng)));

    const double H = hamiltonian(prob, p.tau, p.z, r, s).value;
    double lower_min = std::numeric_limits<double>::infinity();
    double upper_max = -lower_min;
    for (const Vec& l : ls) {
      std::vector<double> quots;
      const Trajectory kappa = extend_constant(p, p.tau + steps.front());
      const double phi0 = phi(p.tau, p.z, p.w);
      for (double d : steps)
        quots.push_back((phi(p.tau + d, Vec(p.z + d * l), shift(kappa, p.tau + d)) - phi0) / d);
      const std::size_t m = std::min<std::size_t>(3, quots.size());
      double dlow = quots.back(), dup = quots.back();
      for (std::size_t i = quots.size() - m; i < quots.size(); ++i) {
        dlow = std::min(dlow, quots[i]);
        dup = std::max(dup, quots[i]);
      }
      const double tail = b.dot(s) + H - l.dot(s);
      lower_min = std::min(lower_min, dlow + tail);
      upper_max = std::max(upper_max, dup + tail);
    }
    const double lower_slack = -lower_min;  // pass iff lower_min <= tol
    const double upper_slack = upper_max;   // pass iff upper_max >= -tol
    slack = std::min({slack, lower_slack, upper_slack});
    per_s.push_back({{"s", std::vector<double>(s.data(), s.data() + s.size())},
                     {"lower_min", lower_min},
                     {"upper_max", upper_max},
                     {"l_count", ls.size()}});
  }
  auto details = nlohmann::ordered_json{{"problem", prob.name},
                                        {"candidate", phi.name},
                                        {"tau", p.tau},
                                        {"rho", rho},
                                        {"c_H", c_H},
                                        {"per_s", per_s}};
  return make_report("dini", slack, tol, static_cast<int>(s_samples.size()), seed, std::move(details));
}

struct SubsuperCandidate {
  double p0;
  Vec p;
  enum class Kind { sub, super } kind;
};

struct SubsuperOptions {
  int box_samples = 16;
  int coarse_level = 3;   // delta = 2^-level * h ...
  int fine_level = 10;    // ... down to 2^-fine_level * h
};

/// Numerical sub/superdifferential membership over shrinking forward boxes,
/// then the viscosity inequality for the accepted members.
inline VerificationReport check_subsuper(const ProblemSpec& prob, const CandidateFunctional& phi,
                                         const PathPoint& p,
                                         const std::vector<SubsuperCandidate>& candidates,
                                         double tol, unsigned seed = 20250101u,
                                         const SubsuperOptions& opts = {}) {
  if (!p.interior_flag) throw std::domain_error("check_subsuper: point is not in the interior set");
  Rng rng(seed);
  const double span = prob.theta() - p.tau;
  const Vec b = ci_derivative_g(prob, p.tau, p.w);
  const Vec r = p.w.at_minus_h();
  const double phi0 = phi(p.tau, p.z, p.w);

  std::vector<double> deltas;
  for (int k = opts.coarse_level; k <= opts.fine_level; ++k) {
    const double d = std::ldexp(prob.h, -k);
    if (d < 0.45 * span) deltas.push_back(d);
  }
  if (deltas.empty()) deltas.push_back(0.25 * span);
  const Trajectory kappa = extend_constant(p, p.tau + deltas.front());

  nlohmann::ordered_json per_candidate = nlohmann::ordered_json::array();
  double slack = std::numeric_limits<double>::infinity();
  bool all_members_ok = true;
  for (const auto& cand : candidates) {
    const bool sub = cand.kind == SubsuperCandidate::Kind::sub;
    std::vector<double> extremes;  // per-delta inf (sub) or sup (super)
    for (double delta : deltas) {
      double ext = sub ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
      auto consider = [&](double t, const Vec& x) {
        const double dn = std::abs(t - p.tau) + (x - p.z).norm();
        if (dn < 1e-14) return;
        const double num =
            phi(t, x, shift(kappa, t)) - phi0 - (t - p.tau) * cand.p0 - (x - p.z).dot(cand.p);
        const double ratio = num / dn;
        ext = sub ? std::min(ext, ratio) : std::max(ext, ratio);
      };
      consider(p.tau + delta, p.z);
      consider(p.tau + 0.5 * delta, p.z);
      for (int i = 0; i < prob.n; ++i) {
        Vec e = Vec::Zero(prob.n);
        e[i] = delta;
        consider(p.tau, Vec(p.z + e));
        consider(p.tau, Vec(p.z - e));
        consider(p.tau + delta, Vec(p.z + e));
        consider(p.tau + delta, Vec(p.z - e));
      }
      std::uniform_real_distribution<double> ud(0.0, 1.0);
      for (int i = 0; i < opts.box_samples; ++i)
        consider(p.tau + delta * ud(rng), Vec(p.z + sample_ball(prob.n, delta, rng)));
      extremes.push_back(ext);
    }
    // liminf estimates grow as the box shrinks, limsup estimates shrink
    const std::size_t m = std::min<std::size_t>(3, extremes.size());
    double limit = extremes.back();
    for (std::size_t i = extremes.size() - m; i < extremes.size(); ++i)
      limit = sub ? std::max(limit, extremes[i]) : std::min(limit, extremes[i]);
    const bool member = sub ? limit >= -tol : limit <= tol;

    double ineq = std::numeric_limits<double>::quiet_NaN();
    double cand_slack = std::numeric_limits<double>::infinity();
    if (member) {
      const double expr = cand.p0 + b.dot(cand.p) + hamiltonian(prob, p.tau, p.z, r, cand.p).value;
      ineq = expr;
      cand_slack = sub ? -expr : expr;  // sub: expr <= tol; super: expr >= -tol
      slack = std::min(slack, cand_slack);
      if (cand_slack < -tol) all_members_ok = false;
    }
    per_candidate.push_back({{"kind", sub ? "sub" : "super"},
                             {"p0", cand.p0},
                             {"p", std::vector<double>(cand.p.data(), cand.p.data() + cand.p.size())},
                             {"membership_limit", limit},
                             {"member", member},
                             {"inequality", ineq},
                             {"slack", member ? cand_slack : std::numeric_limits<double>::quiet_NaN()}});
  }
  if (!std::isfinite(slack)) slack = 0.0;  // no accepted members: nothing to violate
  auto details = nlohmann::ordered_json{{"problem", prob.name},
                                        {"candidate", phi.name},
                                        {"tau", p.tau},
                                        {"per_candidate", per_candidate}};
  VerificationReport rep = make_report("subsuper", slack, tol, static_cast<int>(candidates.size()),
                                       seed, std::move(details));
  rep.pass = rep.pass && all_members_ok;
  return rep;
}

/// Classical residual at an interior point for a candidate with closed-form
/// derivatives.
inline double hj_residual(const ProblemSpec& prob, const CandidateFunctional& phi,
                          const PathPoint& p) {
  if (!phi.has_derivatives())
    throw std::invalid_argument("hj_residual: candidate lacks closed-form derivatives");
  if (!p.interior_flag) throw std::domain_error("hj_residual: point is not in the interior set");
  const Vec grad = phi.gradient(p.tau, p.z, p.w);
  const Vec dg = ci_derivative_g(prob, p.tau, p.w);
  return phi.ci_derivative(p.tau, p.z, p.w) + dg.dot(grad) +
         hamiltonian(prob, p.tau, p.z, p.w.at_minus_h(), grad).value;
}

/// One sampled pair for the Lipschitz estimate.
struct PhiPair {
  double tau;
  Vec z, z2;
  History w, w2;
};

using PairGenerator = std::function<PhiPair(int, Rng&)>;

inline PairGenerator default_pair_generator(const ProblemSpec& prob, double alpha) {
  return [&prob, alpha](int i, Rng& rng) {
    std::uniform_real_distribution<double> ut(0.0, prob.theta());
    HistorySampler hs{prob.h, prob.n, alpha, 3, 4, false, 1.0};
    PhiPair pair{ut(rng), sample_ball(prob.n, alpha, rng), Vec(), sample_history(hs, rng), History::constant(prob.h, Vec::Zero(prob.n))};
    if (i % 3 == 0) {
      pair.w2 = pair.w;  // z-only perturbation
      pair.z2 = pair.z + sample_ball(prob.n, 0.5 * alpha, rng);
      if (pair.z2.norm() > alpha) pair.z2 *= alpha / pair.z2.norm();
    } else if (i % 3 == 1) {
      pair.z2 = pair.z;  // history-only perturbation
      pair.w2 = sample_history(hs, rng);
    } else {
      pair.z2 = sample_ball(prob.n, alpha, rng);
      pair.w2 = sample_history(hs, rng);
    }
    return pair;
  };
}

/// Empirical Lipschitz constant w.r.t. the upsilon functional over P(alpha)
/// pairs; passes when the estimate is finite and stable under doubling the
/// sample count (the extended stream keeps the first half).
inline VerificationReport check_phi2(const ProblemSpec& prob, const CandidateFunctional& phi,
                                     double alpha, int pairs, unsigned seed,
                                     PairGenerator generator = {}, double rel_tol = 0.2) {
  if (pairs < 2) throw std::invalid_argument("check_phi2: pairs >= 2");
  if (!generator) generator = default_pair_generator(prob, alpha);
  Rng rng(seed);
  double lambda_half = 0.0, lambda_full = 0.0;
  int skipped = 0;
  for (int i = 0; i < 2 * pairs; ++i) {
    const PhiPair pr = generator(i, rng);
    const double u = upsilon(pr.tau, Vec(pr.z - pr.z2), pr.w - pr.w2);
    if (u <= 1e-12) {
      ++skipped;
      continue;
    }
    const double num = std::abs(phi(pr.tau, pr.z, pr.w) - phi(pr.tau, pr.z2, pr.w2));
    const double ratio = num / u;
    lambda_full = std::max(lambda_full, ratio);
    if (i < pairs) lambda_half = std::max(lambda_half, ratio);
  }
  const double rel_change = lambda_half > 0.0
                                ? lambda_full / lambda_half - 1.0
                                : (lambda_full > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  const bool finite = std::isfinite(lambda_full);
  auto details = nlohmann::ordered_json{{"problem", prob.name},
                                        {"candidate", phi.name},
                                        {"alpha", alpha},
                                        {"lambda_hat_half", lambda_half},
                                        {"lambda_hat_full", lambda_full},
                                        {"rel_change", rel_change},
                                        {"skipped", skipped}};
  VerificationReport rep = make_report("phi2", finite ? -rel_change : -1e30, rel_tol, pairs, seed,
                                       std::move(details));
  return rep;
}

struct NuDiagnostic {
  double lhs;
  double rhs;
  double theta_start;
  double theta_end;
};

inline double nu_theta(double lambda_H, double lambda_g, double h, double gamma, double tau) {
  return (std::exp(-(4.0 * lambda_H + 2.0 * lambda_g / h) * tau) - gamma) / gamma;
}

inline double nu_value(double lambda_H, double lambda_g, double h, double gamma, double eps,
                       double tau, const Vec& z, const History& w) {
  const double theta = nu_theta(lambda_H, lambda_g, h, gamma, tau);
  const double weighted = integrate_over_history(
      w, [&](double xi, const Vec& v) { return (1.0 - 2.0 * lambda_g * xi / h) * v.norm(); });
  return theta * (std::sqrt(eps * eps * eps * eps + z.squaredNorm()) + 2.0 * lambda_H * weighted);
}

/// Gronwall-type comparison along two trajectories: evaluates both sides of
/// the endpoint inequality nu(t) - nu(tau) <= integral of Delta-H. Constants
/// below one are raised to one, matching their admissible range.
inline NuDiagnostic nu_diagnostic(const StructuralConstants& consts, double gamma, double eps,
                                  const ProblemSpec& prob, const Trajectory& x,
                                  const Trajectory& x2, double tau, double t) {
  const double lambda_H = std::max(consts.lambda_H, 1.0 + 1e-9);
  const double lambda_g = std::max(consts.lambda_g, 1.0 + 1e-9);
  const double h = prob.h;
  if (nu_theta(lambda_H, lambda_g, h, gamma, prob.theta()) <= 1.0)
    throw std::invalid_argument("nu_diagnostic: gamma too large, theta must stay above 1 on [0, theta]");
  if (!(tau < t)) throw std::domain_error("nu_diagnostic: need tau < t");

  auto delta_y = [&](double s) { return Vec(y_at(prob, x, s) - y_at(prob, x2, s)); };
  auto nu_at = [&](double s) {
    const History dw = shift(x, s) - shift(x2, s);
    return nu_value(lambda_H, lambda_g, h, gamma, eps, s, delta_y(s), dw);
  };
  const double lhs = nu_at(t) - nu_at(tau);

  std::vector<double> nodes;
  for (double v : x.times)
    if (v >= tau - 1e-12 && v <= t + 1e-12) nodes.push_back(v);
  for (double v : x2.times)
    if (v >= tau - 1e-12 && v <= t + 1e-12) nodes.push_back(v);
  nodes.push_back(tau);
  nodes.push_back(t);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [&](double a, double b2) { return std::abs(a - b2) < 1e-13 * h; }),
              nodes.end());
  double rhs = 0.0;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const double a = nodes[k], b = nodes[k + 1];
    if (b - a <= 0.0) continue;
    const double mid = 0.5 * (a + b);
    const Vec dy = delta_y(mid);
    const double theta_mid = nu_theta(lambda_H, lambda_g, h, gamma, mid);
    const double denom = std::sqrt(eps * eps * eps * eps + dy.squaredNorm());
    const Vec grad_nu = denom > 0.0 ? Vec(theta_mid * dy / denom) : Vec(Vec::Zero(dy.size()));
    const double dH = hamiltonian(prob, mid, x.at(mid), x.at(mid - h), grad_nu).value -
                      hamiltonian(prob, mid, x2.at(mid), x2.at(mid - h), grad_nu).value +
                      dy.dot(grad_nu);
    rhs += (b - a) * dH;
  }
  return {lhs, rhs, nu_theta(lambda_H, lambda_g, h, gamma, tau),
          nu_theta(lambda_H, lambda_g, h, gamma, t)};
}

/// Max disagreement between closed-form derivatives and extrapolated one-sided
/// difference quotients at random interior points, for candidate validation.
/// Richardson extrapolation cancels the O(delta) bias of the forward quotient.
inline double check_candidate_derivatives(const ProblemSpec& prob, const CandidateFunctional& phi,
                                          int points, unsigned seed, double alpha = 1.0) {
  if (!phi.has_derivatives())
    throw std::invalid_argument("check_candidate_derivatives: candidate lacks derivatives");
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const PathPoint p = sample_interior_point(prob.h, prob.intervals, prob.n, alpha, rng);
    const Vec l = sample_ball(prob.n, 1.0, rng);
    const double expected = phi.ci_derivative(p.tau, p.z, p.w) + phi.gradient(p.tau, p.z, p.w).dot(l);
    const auto steps = default_fd_steps(prob.h, prob.theta() - p.tau);
    const Trajectory kappa = extend_constant(p, p.tau + steps.front());
    const double phi0 = phi(p.tau, p.z, p.w);
    auto quot = [&](double d) {
      return (phi(p.tau + d, Vec(p.z + d * l), shift(kappa, p.tau + d)) - phi0) / d;
    };
    const double d_fine = steps.back();
    const double estimate = 2.0 * quot(d_fine) - quot(2.0 * d_fine);
    worst = std::max(worst, std::abs(estimate - expected));
  }
  return worst;
}

}  // namespace nhjb
