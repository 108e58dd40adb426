#pragma once

#include <future>
#include <string>
#include <vector>

#include "nhjb/benchmarks.hpp"
#include "nhjb/verifier.hpp"

namespace nhjb {

struct SuiteConfig {
  unsigned seed = 20250101u;
  double alpha = 1.0;
  int steps_per_interval = 16;
  int k = 6;
  long budget = 1'000'000L;
  int terminal_samples = 200;
  int phi2_pairs = 200;
  int dpp_points = 5;
  int dini_points = 10;
  int residual_points = 50;
  int constants_samples = 256;
  int random_selections = 16;
  int jobs = 1;
  std::string candidate = "auto";  // auto | analytic | numeric
};

inline nlohmann::ordered_json suite_config_to_json(const SuiteConfig& c) {
  return {{"seed", c.seed},
          {"alpha", c.alpha},
          {"steps_per_interval", c.steps_per_interval},
          {"k", c.k},
          {"budget", c.budget},
          {"terminal_samples", c.terminal_samples},
          {"phi2_pairs", c.phi2_pairs},
          {"dpp_points", c.dpp_points},
          {"dini_points", c.dini_points},
          {"residual_points", c.residual_points},
          {"constants_samples", c.constants_samples},
          {"random_selections", c.random_selections},
          {"jobs", c.jobs},
          {"candidate", c.candidate}};
}

inline double control_mesh(const ProblemSpec& prob) {
  if (prob.controls.size() <= 1) return 0.0;
  double mesh = 0.0;
  for (std::size_t i = 0; i < prob.controls.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < prob.controls.size(); ++j)
      if (j != i) nearest = std::min(nearest, (prob.controls[i] - prob.controls[j]).norm());
    mesh = std::max(mesh, nearest);
  }
  return mesh;
}

struct SuiteResult {
  std::vector<VerificationReport> reports;
  StructuralConstants constants;
  bool all_pass = true;
};

/// The full verification battery for one problem/candidate pair. Checks own
/// disjoint sub-seeds; with jobs > 1 they run concurrently and are collected
/// in registration order, so reports are deterministic either way.
inline SuiteResult run_suite(const Benchmark& bench, const SuiteConfig& cfg) {
  const ProblemSpec& prob = bench.problem;
  prob.self_check();

  CandidateFunctional phi;
  if (cfg.candidate == "analytic" || (cfg.candidate == "auto" && bench.analytic)) {
    if (!bench.analytic) throw ConfigError(prob.name + ": no analytic candidate available");
    phi = *bench.analytic;
  } else {
    phi = value_candidate(prob, cfg.k, cfg.steps_per_interval, cfg.budget);
  }

  SuiteResult result;
  result.constants = estimate_constants(prob, 2.0 * cfg.alpha, cfg.constants_samples, cfg.seed + 1);
  const double c_H = result.constants.c_H;
  const double base_tol =
      5.0 * (prob.h / static_cast<double>(cfg.steps_per_interval) + control_mesh(prob));
  const bool analytic = phi.has_derivatives();
  const double fine_tol = 1e-3;

  std::vector<std::function<VerificationReport()>> tasks;

  {
    VerificationReport r = make_report("constants", 0.0, 0.0, cfg.constants_samples, cfg.seed + 1,
                                       {{"problem", prob.name},
                                        {"c_H", result.constants.c_H},
                                        {"lambda_H", result.constants.lambda_H},
                                        {"lambda_g", result.constants.lambda_g},
                                        {"lambda_sigma", result.constants.lambda_sigma},
                                        {"alpha", result.constants.alpha}});
    tasks.push_back([r] { return r; });
  }

  tasks.push_back([&prob, phi, &cfg] {
    return check_terminal(prob, phi, cfg.terminal_samples, cfg.seed + 2, 1e-9, cfg.alpha);
  });

  tasks.push_back([&prob, phi, &cfg] {
    return check_phi2(prob, phi, cfg.alpha, cfg.phi2_pairs, cfg.seed + 3);
  });

  // DPP points: general path points, t inside (tau, theta]
  for (int i = 0; i < cfg.dpp_points; ++i) {
    tasks.push_back([&prob, &bench, phi, &cfg, c_H, base_tol, i] {
      Rng rng(cfg.seed + 100u + static_cast<unsigned>(i));
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      HistorySampler hs{prob.h, prob.n, cfg.alpha, 3, 4, false, 1.0};
      const double tau = 0.9 * prob.theta() * u01(rng);
      PathPoint p(tau, sample_ball(prob.n, cfg.alpha, rng), sample_history(hs, rng));
      const double t = tau + (0.2 + 0.8 * u01(rng)) * (prob.theta() - tau);
      std::vector<Vec> s_samples = bench.s_probes;
      s_samples.push_back(sample_ball(prob.n, 1.5, rng));
      DppOptions opts;
      opts.c_H = c_H;
      opts.random_selections = cfg.random_selections;
      opts.steps_per_interval = cfg.steps_per_interval;
      opts.feedback_k = cfg.k;
      return check_dpp(prob, phi, p, t, s_samples, 0.0, opts, base_tol,
                       cfg.seed + 100u + static_cast<unsigned>(i));
    });
  }

  for (int i = 0; i < cfg.dini_points; ++i) {
    tasks.push_back([&prob, &bench, phi, &cfg, c_H, base_tol, analytic, fine_tol, i] {
      Rng rng(cfg.seed + 200u + static_cast<unsigned>(i));
      PathPoint p = sample_interior_point(prob.h, prob.intervals, prob.n, cfg.alpha, rng);
      std::vector<Vec> s_samples = bench.s_probes;
      s_samples.push_back(sample_ball(prob.n, 1.5, rng));
      return check_dini(prob, phi, p, s_samples, 8, analytic ? fine_tol : base_tol,
                        cfg.seed + 200u + static_cast<unsigned>(i), c_H);
    });
  }

  if (analytic) {
    for (int i = 0; i < cfg.dini_points; ++i) {
      tasks.push_back([&prob, phi, &cfg, fine_tol, i] {
        Rng rng(cfg.seed + 300u + static_cast<unsigned>(i));
        PathPoint p = sample_interior_point(prob.h, prob.intervals, prob.n, cfg.alpha, rng);
        const double d0 = phi.ci_derivative(p.tau, p.z, p.w);
        const Vec grad = phi.gradient(p.tau, p.z, p.w);
        std::vector<SubsuperCandidate> cands{
            {d0, grad, SubsuperCandidate::Kind::sub},
            {d0, grad, SubsuperCandidate::Kind::super},
            {d0 - 1.0, grad, SubsuperCandidate::Kind::sub},
        };
        return check_subsuper(prob, phi, p, cands, fine_tol, cfg.seed + 300u + static_cast<unsigned>(i));
      });
    }

    tasks.push_back([&prob, phi, &cfg] {
      Rng rng(cfg.seed + 400u);
      double worst = 0.0;
      for (int i = 0; i < cfg.residual_points; ++i) {
        const PathPoint p = sample_interior_point(prob.h, prob.intervals, prob.n, cfg.alpha, rng);
        worst = std::max(worst, std::abs(hj_residual(prob, phi, p)));
      }
      return make_report("residual", -worst, 1e-6, cfg.residual_points, cfg.seed + 400u,
                         {{"problem", prob.name}, {"candidate", phi.name}, {"max_abs_residual", worst}});
    });
  }

  result.reports.resize(tasks.size());
  if (cfg.jobs > 1) {
    std::vector<std::future<VerificationReport>> futures;
    futures.reserve(tasks.size());
    for (auto& t : tasks) futures.push_back(std::async(std::launch::async, t));
    for (std::size_t i = 0; i < futures.size(); ++i) result.reports[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < tasks.size(); ++i) result.reports[i] = tasks[i]();
  }
  for (const auto& r : result.reports) result.all_pass = result.all_pass && r.pass;
  return result;
}

}  // namespace nhjb
