#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nhjb/problem.hpp"
#include "nhjb/value.hpp"

namespace nhjb {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Benchmark {
  ProblemSpec problem;
  std::optional<CandidateFunctional> analytic;
  nlohmann::ordered_json params;  // resolved parameter map
  std::vector<Vec> s_probes;      // problem-adapted costate directions
};

namespace detail {

inline Vec vec_param(const nlohmann::json& params, const std::string& key, const Vec& fallback) {
  if (!params.contains(key)) return fallback;
  const auto& j = params.at(key);
  if (j.is_number()) return Vec::Constant(1, j.get<double>());
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

inline double num_param(const nlohmann::json& params, const std::string& key, double fallback) {
  return params.contains(key) ? params.at(key).get<double>() : fallback;
}

inline int int_param(const nlohmann::json& params, const std::string& key, int fallback) {
  return params.contains(key) ? params.at(key).get<int>() : fallback;
}

/// Exact integral of <d, w(.)> over [-h, 0) for the piecewise-linear history.
inline double weighted_history_integral(const Vec& d, const History& w) {
  double total = 0.0;
  for (const auto& p : w.pieces()) total += (p.b - p.a) * 0.5 * d.dot(p.va + p.vb);
  return total;
}

}  // namespace detail

/// Built-in problems. Each returns the problem, its resolved parameters, and
/// a closed-form candidate solution where one exists.
inline Benchmark make_benchmark(const std::string& name, const nlohmann::json& params = {}) {
  using detail::int_param;
  using detail::num_param;
  using detail::vec_param;
  Benchmark b;
  ProblemSpec& p = b.problem;
  p.name = name;
  p.h = num_param(params, "h", 1.0);
  p.intervals = int_param(params, "I", 2);
  const double theta = p.theta();

  if (name == "delayless_min_norm") {
    p.n = 1;
    p.m = 1;
    p.controls = {Vec::Constant(1, -1.0), Vec::Constant(1, 0.0), Vec::Constant(1, 1.0)};
    set_zero_g(p);
    p.f = [](double, const Vec&, const Vec&, const Vec& u) { return u; };
    p.f0 = [](double, const Vec&, const Vec&, const Vec&) { return 0.0; };
    p.sigma = [](const Vec& z, const History&) { return std::abs(z[0]); };
    CandidateFunctional c;
    c.name = name + ":analytic";
    c.eval = [theta](double tau, const Vec& z, const History&) {
      return std::max(0.0, std::abs(z[0]) - (theta - tau));
    };
    b.analytic = std::move(c);
    b.params = {{"h", p.h}, {"I", p.intervals}};
    b.s_probes = {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
    return b;
  }

  if (name == "pure_transport") {
    const Vec u0 = vec_param(params, "u0", (Vec(2) << 1.0, -0.5).finished());
    p.n = static_cast<int>(u0.size());
    p.m = p.n;
    p.controls = {u0};
    set_zero_g(p);
    p.f = [](double, const Vec&, const Vec&, const Vec& u) { return u; };
    p.f0 = [](double, const Vec&, const Vec&, const Vec&) { return 0.0; };
    p.sigma = [](const Vec& z, const History&) { return z.squaredNorm(); };
    CandidateFunctional c;
    c.name = name + ":analytic";
    c.eval = [theta, u0](double tau, const Vec& z, const History&) {
      return (z + (theta - tau) * u0).squaredNorm();
    };
    c.ci_derivative = [theta, u0](double tau, const Vec& z, const History&) {
      return -2.0 * u0.dot(z + (theta - tau) * u0);
    };
    c.gradient = [theta, u0](double tau, const Vec& z, const History&) {
      return Vec(2.0 * (z + (theta - tau) * u0));
    };
    b.analytic = std::move(c);
    b.params = {{"h", p.h}, {"I", p.intervals}, {"u0", std::vector<double>(u0.data(), u0.data() + u0.size())}};
    b.s_probes = {u0};
    return b;
  }

  if (name == "neutral_no_control") {
    const Vec u0 = vec_param(params, "u0", Vec::Constant(1, 0.3));
    const double a = num_param(params, "a", 0.5);
    const double decay = num_param(params, "decay", 0.0);
    const Vec cvec = vec_param(params, "c", Vec::Ones(u0.size()));
    p.n = static_cast<int>(u0.size());
    p.m = p.n;
    p.controls = {u0};
    const int n = p.n;
    p.g = [a](double, const Vec& x) { return Vec(a * x); };
    p.dg_dt = [n](double, const Vec&) { return Vec::Zero(n); };
    p.grad_g = [a, n](double, const Vec&) { return Mat(a * Mat::Identity(n, n)); };
    p.f = [decay](double, const Vec& z, const Vec&, const Vec& u) { return Vec(u - decay * z); };
    p.f0 = [](double, const Vec&, const Vec&, const Vec&) { return 0.0; };
    p.sigma = [cvec](const Vec& z, const History&) { return cvec.dot(z); };
    b.params = {{"h", p.h},
                {"I", p.intervals},
                {"a", a},
                {"decay", decay},
                {"u0", std::vector<double>(u0.data(), u0.data() + u0.size())},
                {"c", std::vector<double>(cvec.data(), cvec.data() + cvec.size())}};
    b.s_probes = {cvec};
    return b;
  }

  if (name == "neutral_linear_value") {
    const Vec cvec = vec_param(params, "c", (Vec(2) << 1.0, 0.5).finished());
    const Vec u0 = vec_param(params, "u0", (Vec(2) << 0.4, 0.2).finished());
    const double a = num_param(params, "a", 0.5);
    if (u0.size() != cvec.size()) throw ConfigError(name + ": c and u0 must share a dimension");
    p.n = static_cast<int>(cvec.size());
    p.m = p.n;
    p.controls = {u0};
    const int n = p.n;
    p.g = [a](double, const Vec& x) { return Vec(a * x); };
    p.dg_dt = [n](double, const Vec&) { return Vec::Zero(n); };
    p.grad_g = [a, n](double, const Vec&) { return Mat(a * Mat::Identity(n, n)); };
    p.f = [](double, const Vec&, const Vec&, const Vec& u) { return u; };
    p.f0 = [u0, cvec](double, const Vec&, const Vec&, const Vec&) { return -u0.dot(cvec); };
    p.sigma = [cvec, a](const Vec& z, const History& w) { return cvec.dot(z - a * w.at_minus_h()); };
    CandidateFunctional c;
    c.name = name + ":analytic";
    c.eval = [cvec, a](double, const Vec& z, const History& w) {
      return cvec.dot(z - a * w.at_minus_h());
    };
    c.ci_derivative = [cvec, a](double, const Vec&, const History& w) {
      return -cvec.dot(a * right_derivative_at_start(w));
    };
    c.gradient = [cvec](double, const Vec&, const History&) { return cvec; };
    b.analytic = std::move(c);
    b.params = {{"h", p.h},
                {"I", p.intervals},
                {"a", a},
                {"c", std::vector<double>(cvec.data(), cvec.data() + cvec.size())},
                {"u0", std::vector<double>(u0.data(), u0.data() + u0.size())}};
    b.s_probes = {cvec};
    return b;
  }

  if (name == "unit_running_cost") {
    const int n = int_param(params, "n", 1);
    p.n = n;
    p.m = 1;
    p.controls = {Vec::Zero(1)};
    set_zero_g(p);
    p.f = [n](double, const Vec&, const Vec&, const Vec&) { return Vec::Zero(n); };
    p.f0 = [](double, const Vec&, const Vec&, const Vec&) { return 1.0; };
    p.sigma = [](const Vec&, const History&) { return 0.0; };
    CandidateFunctional c;
    c.name = name + ":analytic";
    c.eval = [theta](double tau, const Vec&, const History&) { return theta - tau; };
    c.ci_derivative = [](double, const Vec&, const History&) { return -1.0; };
    c.gradient = [n](double, const Vec&, const History&) { return Vec::Zero(n); };
    b.analytic = std::move(c);
    b.params = {{"h", p.h}, {"I", p.intervals}, {"n", n}};
    b.s_probes = {Vec::Zero(n)};
    return b;
  }

  if (name == "history_integral") {
    const Vec d = vec_param(params, "d", (Vec(2) << 0.7, -0.3).finished());
    p.n = static_cast<int>(d.size());
    p.m = 1;
    p.controls = {Vec::Zero(1)};
    const int n = p.n;
    set_zero_g(p);
    p.f = [n](double, const Vec&, const Vec&, const Vec&) { return Vec::Zero(n); };
    p.f0 = [d](double, const Vec& z, const Vec& r, const Vec&) { return d.dot(r) - d.dot(z); };
    p.sigma = [d](const Vec&, const History& w) { return detail::weighted_history_integral(d, w); };
    CandidateFunctional c;
    c.name = name + ":analytic";
    c.eval = [d](double, const Vec&, const History& w) {
      return detail::weighted_history_integral(d, w);
    };
    c.ci_derivative = [d](double, const Vec& z, const History& w) {
      return d.dot(z) - d.dot(w.at_minus_h());
    };
    c.gradient = [n](double, const Vec&, const History&) { return Vec::Zero(n); };
    b.analytic = std::move(c);
    b.params = {{"h", p.h}, {"I", p.intervals},
                {"d", std::vector<double>(d.data(), d.data() + d.size())}};
    b.s_probes = {d, Vec(Vec::Zero(p.n))};
    return b;
  }

  throw ConfigError("unknown problem: " + name);
}

inline std::vector<std::string> benchmark_names() {
  return {"delayless_min_norm", "pure_transport", "neutral_no_control",
          "neutral_linear_value", "unit_running_cost", "history_integral"};
}

}  // namespace nhjb
