#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nhjb/benchmarks.hpp"
#include "nhjb/sampling.hpp"
#include "nhjb/value.hpp"

using namespace nhjb;

namespace {
Vec v1(double x) { return Vec::Constant(1, x); }
}  // namespace

TEST_CASE("cost: zero running and terminal costs") {
  Benchmark bm = make_benchmark("pure_transport", {});
  ProblemSpec prob = bm.problem;
  prob.sigma = [](const Vec&, const History&) { return 0.0; };
  PathPoint p(0.0, (Vec(2) << 0.5, 0.5).finished(),
              History::constant(1.0, (Vec(2) << 0.5, 0.5).finished()));
  CHECK(cost(prob, p, ControlSignal::constant(0.0, 2.0, prob.controls[0]), 8) == 0.0);
}

TEST_CASE("cost: unit running cost counts the horizon") {
  Benchmark bm = make_benchmark("unit_running_cost", {});
  PathPoint p(0.5, v1(0.2), History::constant(1.0, v1(0.2)));
  const double c =
      cost(bm.problem, p, ControlSignal::constant(0.5, 2.0, bm.problem.controls[0]), 8);
  CHECK(c == Catch::Approx(1.5).margin(1e-12));
}

TEST_CASE("cost: manufactured neutral problem telescopes to the closed form") {
  Benchmark bm = make_benchmark("neutral_linear_value", {});
  const ProblemSpec& prob = bm.problem;
  Rng rng(2);
  HistorySampler hs{1.0, 2, 1.0, 3, 3, false, 1.0};
  for (int rep = 0; rep < 5; ++rep) {
    std::uniform_real_distribution<double> ut(0.0, 1.9);
    PathPoint p(ut(rng), sample_ball(2, 1.0, rng), sample_history(hs, rng));
    const double c =
        cost(prob, p, ControlSignal::constant(p.tau, 2.0, prob.controls[0]), 16);
    CHECK(c == Catch::Approx((*bm.analytic)(p.tau, p.z, p.w)).margin(1e-10));
  }
}

TEST_CASE("enumerate_value: singleton control set returns the unique cost") {
  Benchmark bm = make_benchmark("pure_transport", {});
  const ProblemSpec& prob = bm.problem;
  PathPoint p(0.3, (Vec(2) << 0.1, -0.4).finished(),
              History::constant(1.0, (Vec(2) << 0.1, -0.4).finished()));
  const auto r = enumerate_value(prob, p, 4, 8);
  CHECK(r.value ==
        Catch::Approx(cost(prob, p, ControlSignal::constant(p.tau, 2.0, prob.controls[0]), 8))
            .margin(1e-14));
}

TEST_CASE("enumerate_value: bang-bang oracle for the delayless problem") {
  Benchmark bm = make_benchmark("delayless_min_norm", {});
  const ProblemSpec& prob = bm.problem;
  const int k = 6, spi = 4;
  const double tol = 2.0 / k + 2.0 / spi * 0.0 + 1e-9;  // integration is exact for f = u
  Rng rng(8);
  std::uniform_real_distribution<double> ut(0.0, 1.9), uz(-2.5, 2.5);
  for (int rep = 0; rep < 8; ++rep) {
    const double tau = ut(rng), z = uz(rng);
    PathPoint p(tau, v1(z), History::constant(1.0, v1(0.0)));
    const auto r = enumerate_value(prob, p, k, spi);
    const double oracle = std::max(0.0, std::abs(z) - (2.0 - tau));
    CHECK(std::abs(r.value - oracle) <= tol);
    CHECK(r.value >= oracle - 1e-12);  // discrete controls cannot beat the true value
  }
}

TEST_CASE("enumerate_value: nested control classes are monotone") {
  Benchmark bm = make_benchmark("delayless_min_norm", {});
  PathPoint p(0.0, v1(1.3), History::constant(1.0, v1(0.0)));
  const double v2 = enumerate_value(bm.problem, p, 2, 4).value;
  const double v4 = enumerate_value(bm.problem, p, 4, 4).value;
  CHECK(v4 <= v2 + 1e-12);
}

TEST_CASE("enumerate_value: manufactured value is independent of the control grid") {
  Benchmark bm = make_benchmark("neutral_linear_value", {});
  const History w = History::step(1.0, {{-1.0, (Vec(2) << 0.5, -0.5).finished()},
                                        {-0.3, (Vec(2) << -0.2, 0.8).finished()}});
  PathPoint p(0.4, (Vec(2) << 0.9, 0.1).finished(), w);
  const double expected = (*bm.analytic)(p.tau, p.z, p.w);
  for (int k : {1, 3}) {
    const auto r = enumerate_value(bm.problem, p, k, 16);
    CHECK(r.value == Catch::Approx(expected).margin(1e-10));
  }
}

TEST_CASE("enumerate_value: budget overflow is a distinct error") {
  Benchmark bm = make_benchmark("delayless_min_norm", {});
  PathPoint p(0.0, v1(1.0), History::constant(1.0, v1(0.0)));
  CHECK_THROWS_AS(enumerate_value(bm.problem, p, 20, 4, 1'000'000L), BudgetError);
}

TEST_CASE("enumerate_value: terminal point needs no integration") {
  Benchmark bm = make_benchmark("neutral_linear_value", {});
  const History w = History::step(1.0, {{-1.0, (Vec(2) << 1.0, 0.0).finished()},
                                        {-0.5, (Vec(2) << 0.0, 1.0).finished()}});
  PathPoint p(2.0, (Vec(2) << 0.3, 0.3).finished(), w);
  const auto r = enumerate_value(bm.problem, p, 4, 8);
  CHECK(r.value == bm.problem.sigma(p.z, p.w));  // exact equality
}

TEST_CASE("synthesize_feedback: singleton control set returns the constant control") {
  Benchmark bm = make_benchmark("pure_transport", {});
  PathPoint p(0.0, (Vec(2) << 0.2, 0.2).finished(),
              History::constant(1.0, (Vec(2) << 0.2, 0.2).finished()));
  const auto res = synthesize_feedback(bm.problem, p, (Vec(2) << 1.0, 0.0).finished(), 4, 8);
  REQUIRE(res.control.values.size() == 4);
  for (const Vec& u : res.control.values) CHECK((u - bm.problem.controls[0]).norm() == 0.0);
}

TEST_CASE("synthesize_feedback: positive costate drives the state down") {
  Benchmark bm = make_benchmark("delayless_min_norm", {});
  PathPoint p(0.0, v1(1.5), History::constant(1.0, v1(1.5)));
  const auto res = synthesize_feedback(bm.problem, p, v1(1.0), 8, 4);
  for (const Vec& u : res.control.values) CHECK(u[0] == -1.0);
}

TEST_CASE("synthesize_feedback: argmin identity holds at the nodes") {
  Benchmark bm = make_benchmark("delayless_min_norm", {});
  const ProblemSpec& prob = bm.problem;
  PathPoint p(0.2, v1(-0.7), History::constant(1.0, v1(-0.7)));
  const Vec s = v1(-0.8);
  const auto res = synthesize_feedback(prob, p, s, 6, 4);
  for (std::size_t i = 0; i < res.control.values.size(); ++i) {
    const double ti = res.control.grid[i];
    const Vec xi = res.trajectory.at(ti);
    const Vec ri = res.trajectory.at(ti - prob.h);
    const auto H = hamiltonian(prob, ti, xi, ri, s);
    const double chosen = prob.f(ti, xi, ri, res.control.values[i]).dot(s) +
                          prob.f0(ti, xi, ri, res.control.values[i]);
    CHECK(chosen == Catch::Approx(H.value).margin(1e-13));
  }
}

TEST_CASE("extend_value: Lipschitz points short-circuit") {
  Benchmark bm = make_benchmark("neutral_linear_value", {});
  const History w = History::linear(1.0, (Vec(2) << 0.1, 0.2).finished(),
                                    (Vec(2) << 0.5, -0.1).finished());
  PathPoint p(0.5, w.left_limit_at_zero(), w);
  const auto base = value_candidate(bm.problem, 2, 8);
  const auto ext = extend_value(bm.problem, base, p, {4, 8, 16});
  CHECK(ext.value == base(p.tau, p.z, p.w));
  CHECK(ext.converged);
  for (double g : ext.gaps) CHECK(g == 0.0);
}

TEST_CASE("extend_value: step history recovers the closed form") {
  Benchmark bm = make_benchmark("neutral_linear_value", {});
  const History w = History::step(1.0, {{-1.0, (Vec(2) << 0.6, -0.2).finished()},
                                        {-0.45, (Vec(2) << -0.9, 0.4).finished()}});
  PathPoint p(0.7, (Vec(2) << 0.25, 0.55).finished(), w);  // jump at zero as well
  const auto base = value_candidate(bm.problem, 2, 16);
  const auto ext = extend_value(bm.problem, base, p, {4, 8, 16, 32, 64});
  CHECK(ext.converged);
  CHECK(ext.value == Catch::Approx((*bm.analytic)(p.tau, p.z, p.w)).margin(1e-6));
}

TEST_CASE("extend_value: delayless value depends on z only") {
  Benchmark bm = make_benchmark("delayless_min_norm", {});
  const History w = History::step(1.0, {{-1.0, v1(2.0)}, {-0.5, v1(-1.0)}});
  PathPoint p(0.5, v1(1.2), w);  // z != w(-0)
  const auto base = value_candidate(bm.problem, 6, 4);
  const auto ext = extend_value(bm.problem, base, p, {4, 8, 16});
  const double oracle = std::max(0.0, 1.2 - (2.0 - 0.5));
  CHECK(std::abs(ext.value - oracle) <= 2.0 / 6 + 1e-9);
  for (double g : ext.gaps) CHECK(g < 1e-12);  // the smoothed history never matters
}

TEST_CASE("refine_control_sweep: never increases the cost") {
  Benchmark bm = make_benchmark("delayless_min_norm", {});
  const ProblemSpec& prob = bm.problem;
  Rng rng(14);
  PathPoint p(0.0, v1(1.7), History::constant(1.0, v1(0.0)));
  ControlSignal u;
  const int k = 5;
  for (int i = 0; i <= k; ++i) u.grid.push_back(2.0 * i / k);
  for (int i = 0; i < k; ++i)
    u.values.push_back(prob.controls[rng() % prob.controls.size()]);
  const double before = cost(prob, p, u, 4);
  const ControlSignal improved = refine_control_sweep(prob, p, u, 4);
  CHECK(cost(prob, p, improved, 4) <= before + 1e-12);
}

TEST_CASE("value candidate: time continuity refines with the sampling grid") {
  Benchmark bm = make_benchmark("pure_transport", {});
  const History w = History::linear(1.0, (Vec(2) << 0.3, 0.0).finished(),
                                    (Vec(2) << 0.1, 0.4).finished());
  const Vec z = w.left_limit_at_zero();
  const auto phi = value_candidate(bm.problem, 2, 8);
  auto modulus = [&](int grid) {
    double worst = 0.0;
    double prev = phi(0.0, z, w);
    for (int i = 1; i <= grid; ++i) {
      const double t = 2.0 * i / grid;
      const double cur = phi(t, z, w);
      worst = std::max(worst, std::abs(cur - prev));
      prev = cur;
    }
    return worst;
  };
  const double coarse = modulus(8), fine = modulus(32);
  CHECK(fine <= 0.5 * coarse + 1e-9);
}
