#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nhjb/benchmarks.hpp"
#include "nhjb/sampling.hpp"
#include "nhjb/verifier.hpp"

using namespace nhjb;

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

CandidateFunctional constant_candidate(double value, int n) {
  CandidateFunctional c;
  c.name = "constant";
  c.eval = [value](double, const Vec&, const History&) { return value; };
  c.ci_derivative = [](double, const Vec&, const History&) { return 0.0; };
  c.gradient = [n](double, const Vec&, const History&) { return Vec::Zero(n); };
  return c;
}

}  // namespace

TEST_CASE("check_terminal: value functionals agree exactly at the horizon") {
  for (const char* name :
       {"delayless_min_norm", "pure_transport", "neutral_no_control", "neutral_linear_value"}) {
    Benchmark bm = make_benchmark(name, {});
    const auto phi = value_candidate(bm.problem, 2, 8);
    const auto rep = check_terminal(bm.problem, phi, 50, 7u);
    CHECK(rep.pass);
    CHECK(rep.slack == 0.0);  // same code path as sigma, no integration
  }
}

TEST_CASE("check_terminal: planted offset is flagged") {
  Benchmark bm = make_benchmark("neutral_linear_value", {});
  CandidateFunctional bad;
  bad.name = "sigma_plus_offset";
  const ProblemSpec prob = bm.problem;
  bad.eval = [prob](double, const Vec& z, const History& w) { return prob.sigma(z, w) + 0.1; };
  const auto rep = check_terminal(bm.problem, bad, 50, 7u);
  CHECK_FALSE(rep.pass);
  CHECK(rep.slack == Catch::Approx(-0.1).margin(1e-12));
}

TEST_CASE("check_terminal: manufactured solution matches sigma identically") {
  Benchmark bm = make_benchmark("neutral_linear_value", {});
  const auto rep = check_terminal(bm.problem, *bm.analytic, 200, 11u);
  CHECK(rep.pass);
  CHECK(std::abs(rep.slack) < 1e-12);
}

TEST_CASE("check_dpp: singleton control set gives near equality") {
  Benchmark bm = make_benchmark("pure_transport", {});
  const ProblemSpec& prob = bm.problem;
  const auto consts = estimate_constants(prob, 2.0, 256, 3u);
  const int spi = 16;
  DppOptions opts;
  opts.c_H = consts.c_H;
  opts.steps_per_interval = spi;
  PathPoint p(0.3, (Vec(2) << 0.4, -0.2).finished(),
              History::linear(1.0, (Vec(2) << 0.0, 0.1).finished(),
                              (Vec(2) << 0.4, -0.2).finished()));
  const double tol = 5.0 * (1.0 / spi);
  const Vec s = bm.s_probes.front();
  const double t = 1.4;
  const auto rep = check_dpp(prob, *bm.analytic, p, t, {s}, 0.0, opts, tol, 5u);
  CHECK(rep.pass);
  // the unique control trajectory realizes the propagation equality
  const Trajectory fb = synthesize_feedback(prob, p, s, 8, spi).trajectory;
  const double propagated =
      (*bm.analytic)(t, fb.at(t), shift(fb, t)) + omega(prob, p.tau, t, fb, s);
  CHECK(propagated == Catch::Approx((*bm.analytic)(p.tau, p.z, p.w)).margin(tol));
}

TEST_CASE("check_dpp: manufactured problem telescopes at s = c") {
  Benchmark bm = make_benchmark("neutral_linear_value", {});
  const auto consts = estimate_constants(bm.problem, 2.0, 256, 3u);
  DppOptions opts;
  opts.c_H = consts.c_H;
  Rng rng(23);
  HistorySampler hs{1.0, 2, 1.0, 3, 3, false, 1.0};
  PathPoint p(0.25, sample_ball(2, 1.0, rng), sample_history(hs, rng));
  const auto rep =
      check_dpp(bm.problem, *bm.analytic, p, 1.6, {bm.s_probes.front()}, 0.0, opts, 1e-6, 5u);
  CHECK(rep.pass);  // the u0 trajectory realizes equality up to quadrature
}

TEST_CASE("check_dpp: planted running-cost violation is flagged with slack t - tau") {
  Benchmark bm = make_benchmark("unit_running_cost", {});
  const auto phi = constant_candidate(0.0, 1);
  DppOptions opts;
  opts.c_H = 0.0;
  PathPoint p(0.2, v1(0.0), History::constant(1.0, v1(0.0)));
  const double t = 1.4;
  const auto rep = check_dpp(bm.problem, phi, p, t, {Vec::Zero(1)}, 0.0, opts, 1e-3, 5u);
  CHECK_FALSE(rep.pass);
  CHECK(rep.slack <= -(t - p.tau) + 1e-9);
}

TEST_CASE("check_dpp: restricted same-interval smooth mode passes") {
  for (const char* name : {"pure_transport", "neutral_linear_value"}) {
    Benchmark bm = make_benchmark(name, {});
    const auto consts = estimate_constants(bm.problem, 2.0, 256, 3u);
    DppOptions opts;
    opts.c_H = consts.c_H;
    const int n = bm.problem.n;
    // C1 history, tau and t inside the same delay interval, eta in (0, 1]
    const History w = History::linear(1.0, Vec::Zero(n), Vec::Ones(n) * 0.5);
    PathPoint p(1.2, Vec::Ones(n) * 0.5, w);
    const double tol = 5.0 / 16.0;
    for (double eta : {0.3, 1.0}) {
      const auto rep =
          check_dpp(bm.problem, *bm.analytic, p, 1.9, bm.s_probes, eta, opts, tol, 6u);
      CHECK(rep.pass);
    }
  }
}

TEST_CASE("directional_derivative: closed forms") {
  const int n = 2;
  const Vec c = (Vec(2) << 1.0, -0.5).finished();
  CandidateFunctional linear_z;
  linear_z.eval = [c](double, const Vec& z, const History&) { return c.dot(z); };
  CandidateFunctional time_only;
  time_only.eval = [](double tau, const Vec&, const History&) { return tau; };

  Rng rng(3);
  const PathPoint p = sample_interior_point(1.0, 2, n, 1.0, rng);
  const auto steps = default_fd_steps(1.0, 2.0 - p.tau);
  const Vec l = (Vec(2) << 0.7, 0.3).finished();
  for (auto side : {DerivativeSide::lower, DerivativeSide::upper}) {
    CHECK(directional_derivative(linear_z, p, l, side, steps) ==
          Catch::Approx(c.dot(l)).margin(1e-10));
    CHECK(directional_derivative(time_only, p, l, side, steps) == Catch::Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("directional_derivative: manufactured solution chain rule") {
  Benchmark bm = make_benchmark("neutral_linear_value", {});
  Rng rng(9);
  const Vec c = bm.s_probes.front();
  for (int rep = 0; rep < 10; ++rep) {
    const PathPoint p = sample_interior_point(1.0, 2, 2, 1.0, rng);
    const Vec l = sample_ball(2, 1.5, rng);
    const Vec b = ci_derivative_g(bm.problem, p.tau, p.w);
    const double expected = -c.dot(b) + c.dot(l);
    const auto steps = default_fd_steps(1.0, 2.0 - p.tau);
    const double lo = directional_derivative(*bm.analytic, p, l, DerivativeSide::lower, steps);
    const double hi = directional_derivative(*bm.analytic, p, l, DerivativeSide::upper, steps);
    CHECK(lo == Catch::Approx(expected).margin(1e-8));
    CHECK(hi == Catch::Approx(expected).margin(1e-8));
  }
}

TEST_CASE("check_dini: manufactured solution passes at interior points") {
  Benchmark bm = make_benchmark("neutral_linear_value", {});
  const auto consts = estimate_constants(bm.problem, 2.0, 256, 3u);
  Rng rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const PathPoint p = sample_interior_point(1.0, 2, 2, 1.0, rng);
    std::vector<Vec> s_samples{bm.s_probes.front(), sample_ball(2, 1.5, rng)};
    const auto r = check_dini(bm.problem, *bm.analytic, p, s_samples, 8,
                              1e-3, 100u + rep, consts.c_H);
    CHECK(r.pass);
  }
}

TEST_CASE("check_dini: planted violation fails by the running cost") {
  Benchmark bm = make_benchmark("unit_running_cost", {});
  const auto phi = constant_candidate(0.0, 1);
  Rng rng(19);
  const PathPoint p = sample_interior_point(1.0, 2, 1, 1.0, rng);
  const auto r = check_dini(bm.problem, phi, p, {Vec::Zero(1)}, 8, 1e-3, 3u, 0.0);
  CHECK_FALSE(r.pass);
  CHECK(r.slack <= -1.0 + 1e-9);  // bracket equals the unit running cost for every l
}

TEST_CASE("check_dini: symmetric ball saturates a trivial hamiltonian") {
  ProblemSpec prob;
  prob.name = "frozen";
  prob.n = 2;
  prob.m = 1;
  prob.h = 1.0;
  prob.intervals = 2;
  prob.controls = {Vec::Zero(1)};
  set_zero_g(prob);
  prob.f = [](double, const Vec&, const Vec&, const Vec&) { return Vec::Zero(2); };
  prob.f0 = [](double, const Vec&, const Vec&, const Vec&) { return 0.0; };
  prob.sigma = [](const Vec&, const History&) { return 0.0; };
  const auto phi = constant_candidate(3.0, 2);
  Rng rng(21);
  const PathPoint p = sample_interior_point(1.0, 2, 2, 1.0, rng);
  const auto r = check_dini(prob, phi, p, {sample_ball(2, 1.0, rng)}, 8, 1e-9, 5u, 1.0);
  CHECK(r.pass);
}

TEST_CASE("check_subsuper: manufactured pair accepted, shifted pairs sorted correctly") {
  Benchmark bm = make_benchmark("neutral_linear_value", {});
  Rng rng(29);
  const PathPoint p = sample_interior_point(1.0, 2, 2, 1.0, rng);
  const auto& phi = *bm.analytic;
  const double d0 = phi.ci_derivative(p.tau, p.z, p.w);
  const Vec grad = phi.gradient(p.tau, p.z, p.w);
  std::vector<SubsuperCandidate> cands{
      {d0, grad, SubsuperCandidate::Kind::sub},
      {d0, grad, SubsuperCandidate::Kind::super},
      {d0 - 1.0, grad, SubsuperCandidate::Kind::sub},   // member, holds a fortiori
      {d0 + 1.0, grad, SubsuperCandidate::Kind::sub},   // rejected from membership
  };
  const auto r = check_subsuper(bm.problem, phi, p, cands, 1e-3);
  CHECK(r.pass);
  const auto& det = r.details.at("per_candidate");
  CHECK(det[0].at("member").get<bool>());
  CHECK(std::abs(det[0].at("inequality").get<double>()) < 1e-9);
  CHECK(det[1].at("member").get<bool>());
  CHECK(det[2].at("member").get<bool>());
  CHECK(det[2].at("inequality").get<double>() == Catch::Approx(-1.0).margin(1e-9));
  CHECK_FALSE(det[3].at("member").get<bool>());
  CHECK(det[3].at("membership_limit").get<double>() <= -1.0 + 1e-6);  // 10x tolerance margin
}

TEST_CASE("hj_residual: manufactured solutions solve the equation") {
  Rng rng(31);
  for (const char* name : {"neutral_linear_value", "history_integral", "unit_running_cost"}) {
    Benchmark bm = make_benchmark(name, {});
    for (int rep = 0; rep < 20; ++rep) {
      const PathPoint p = sample_interior_point(1.0, 2, bm.problem.n, 1.0, rng);
      CHECK(std::abs(hj_residual(bm.problem, *bm.analytic, p)) < 1e-10);
    }
  }
}

TEST_CASE("hj_residual: planted non-solution has order-one residual") {
  Benchmark bm = make_benchmark("delayless_min_norm", {});
  CandidateFunctional planted;
  planted.name = "linear_in_z";
  planted.eval = [](double, const Vec& z, const History&) { return z[0]; };
  planted.ci_derivative = [](double, const Vec&, const History&) { return 0.0; };
  planted.gradient = [](double, const Vec&, const History&) { return Vec::Ones(1); };
  Rng rng(33);
  const PathPoint p = sample_interior_point(1.0, 2, 1, 1.0, rng);
  const double res = hj_residual(bm.problem, planted, p);
  CHECK(std::abs(res) > 0.1);
  CHECK(res == Catch::Approx(-1.0).margin(1e-12));  // H(tau, z, r, 1) = min u = -1
}

TEST_CASE("hj_residual: missing derivatives is a contract error") {
  Benchmark bm = make_benchmark("delayless_min_norm", {});
  Rng rng(35);
  const PathPoint p = sample_interior_point(1.0, 2, 1, 1.0, rng);
  CHECK_THROWS_AS(hj_residual(bm.problem, *bm.analytic, p), std::invalid_argument);
}

TEST_CASE("candidate derivatives: finite-difference cross-check") {
  for (const char* name :
       {"pure_transport", "neutral_linear_value", "history_integral", "unit_running_cost"}) {
    Benchmark bm = make_benchmark(name, {});
    CHECK(check_candidate_derivatives(bm.problem, *bm.analytic, 10, 41u) < 1e-4);
  }
}

TEST_CASE("check_phi2: constant functional has zero constant") {
  Benchmark bm = make_benchmark("pure_transport", {});
  const auto rep = check_phi2(bm.problem, constant_candidate(1.0, 2), 1.0, 100, 43u);
  CHECK(rep.pass);
  CHECK(rep.details.at("lambda_hat_full").get<double>() == 0.0);
}

TEST_CASE("check_phi2: manufactured solution is upsilon-Lipschitz") {
  Benchmark bm = make_benchmark("neutral_linear_value", {});
  const auto rep = check_phi2(bm.problem, *bm.analytic, 1.0, 200, 47u);
  CHECK(rep.pass);
  const double lam = rep.details.at("lambda_hat_full").get<double>();
  const double c_norm = bm.s_probes.front().norm();
  CHECK(lam <= c_norm + 1e-9);  // phi depends on z and w(-h) only, both upsilon terms
  CHECK(lam > 0.0);
}

TEST_CASE("check_phi2: movable-step functional is rejected") {
  Benchmark bm = make_benchmark("delayless_min_norm", {});
  CandidateFunctional adv;
  adv.name = "midpoint_probe";
  adv.eval = [](double, const Vec&, const History& w) { return w.eval(-0.5)[0]; };
  PairGenerator gen = [](int i, Rng&) {
    const double d = 0.08 / (1.0 + static_cast<double>(i));
    PhiPair pr{0.4, Vec::Zero(1), Vec::Zero(1),
               History::step(1.0, {{-1.0, Vec::Zero(1)}, {-0.5 - d, Vec::Ones(1)}}),
               History::step(1.0, {{-1.0, Vec::Zero(1)}, {-0.5 + d, Vec::Ones(1)}})};
    return pr;
  };
  const auto rep = check_phi2(bm.problem, adv, 1.0, 100, 49u, gen);
  CHECK_FALSE(rep.pass);  // the ratio grows without bound as the steps close in
}

TEST_CASE("nu diagnostic: closed-form spot values") {
  const double lambda_H = 1.5, lambda_g = 1.2, h = 1.0, gamma = 0.001, eps = 0.1;
  CHECK(nu_theta(lambda_H, lambda_g, h, gamma, 0.0) ==
        Catch::Approx((1.0 - gamma) / gamma).margin(1e-9));
  const History zero = History::constant(1.0, Vec::Zero(2));
  CHECK(nu_value(lambda_H, lambda_g, h, gamma, eps, 0.3, Vec::Zero(2), zero) ==
        Catch::Approx(nu_theta(lambda_H, lambda_g, h, gamma, 0.3) * eps * eps).margin(1e-9));
}

TEST_CASE("nu diagnostic: identical trajectories vanish on both sides") {
  Benchmark bm = make_benchmark("neutral_no_control", {});
  const ProblemSpec& prob = bm.problem;
  const auto consts = estimate_constants(prob, 2.0, 128, 3u);
  PathPoint p(0.0, v1(0.5), History::constant(1.0, v1(0.5)));
  const Trajectory x =
      integrate_control(prob, p, ControlSignal::constant(0.0, 2.0, prob.controls[0]), 8);
  const double rate = 4.0 * std::max(consts.lambda_H, 1.0 + 1e-9) +
                      2.0 * std::max(consts.lambda_g, 1.0 + 1e-9) / prob.h;
  const double gamma = 0.25 * std::exp(-rate * prob.theta());
  // eps = 0 so the regularizing offset does not enter: every Delta vanishes
  const auto d = nu_diagnostic(consts, gamma, 0.0, prob, x, x, 0.0, 1.5);
  CHECK(d.lhs == Catch::Approx(0.0).margin(1e-12));
  CHECK(d.rhs == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("nu diagnostic: comparison inequality on random pairs") {
  Benchmark bm = make_benchmark("neutral_no_control", {});
  const ProblemSpec& prob = bm.problem;
  Rng rng(51);
  HistorySampler hs{1.0, 1, 1.0, 2, 3, false, 1.0};
  for (int rep = 0; rep < 5; ++rep) {
    PathPoint p1(0.0, sample_ball(1, 1.0, rng), sample_history(hs, rng));
    PathPoint p2(0.0, sample_ball(1, 1.0, rng), sample_history(hs, rng));
    const auto u = ControlSignal::constant(0.0, 2.0, prob.controls[0]);
    const Trajectory x1 = integrate_control(prob, p1, u, 32);
    const Trajectory x2 = integrate_control(prob, p2, u, 32);
    double alpha = 1.0;
    for (const auto& v : x1.values) alpha = std::max(alpha, v.norm());
    for (const auto& v : x2.values) alpha = std::max(alpha, v.norm());
    const auto consts = estimate_constants(prob, 1.05 * alpha, 128, 3u);
    const double rate = 4.0 * std::max(consts.lambda_H, 1.0 + 1e-9) +
                        2.0 * std::max(consts.lambda_g, 1.0 + 1e-9) / prob.h;
    const double gamma = 0.25 * std::exp(-rate * prob.theta());
    const auto d = nu_diagnostic(consts, gamma, 0.05, prob, x1, x2, 0.0, 2.0);
    CHECK(d.lhs <= d.rhs + 1e-3);
    CHECK(d.theta_end > 1.0);
  }
}

TEST_CASE("nu diagnostic: oversized gamma is a parameter error") {
  Benchmark bm = make_benchmark("neutral_no_control", {});
  const auto consts = estimate_constants(bm.problem, 1.0, 64, 3u);
  PathPoint p(0.0, v1(0.0), History::constant(1.0, v1(0.0)));
  const Trajectory x = integrate_control(
      bm.problem, p, ControlSignal::constant(0.0, 2.0, bm.problem.controls[0]), 8);
  CHECK_THROWS_AS(nu_diagnostic(consts, 0.9, 0.1, bm.problem, x, x, 0.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("equivalence coherence: all characterizations agree at shared points") {
  Benchmark bm = make_benchmark("neutral_linear_value", {});
  const ProblemSpec& prob = bm.problem;
  const auto& phi = *bm.analytic;
  const auto consts = estimate_constants(prob, 2.0, 256, 3u);
  Rng rng(61);
  DppOptions opts;
  opts.c_H = consts.c_H;
  const double tol = 1e-3;
  for (int rep = 0; rep < 5; ++rep) {
    const PathPoint p = sample_interior_point(1.0, 2, 2, 1.0, rng);
    const double t = p.tau + 0.5 * (prob.theta() - p.tau);
    std::vector<Vec> s_samples{bm.s_probes.front(), sample_ball(2, 1.0, rng)};
    const auto dpp = check_dpp(prob, phi, p, t, s_samples, 0.0, opts, 5.0 / 16.0, 70u + rep);
    const auto dini = check_dini(prob, phi, p, s_samples, 8, tol, 70u + rep, consts.c_H);
    const double d0 = phi.ci_derivative(p.tau, p.z, p.w);
    const Vec grad = phi.gradient(p.tau, p.z, p.w);
    const auto dpm = check_subsuper(prob, phi, p,
                                    {{d0, grad, SubsuperCandidate::Kind::sub},
                                     {d0, grad, SubsuperCandidate::Kind::super}},
                                    tol);
    CHECK(dpp.pass);
    CHECK(dini.pass);
    CHECK(dpm.pass);
  }
}
