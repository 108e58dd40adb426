#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "nhjb/benchmarks.hpp"
#include "nhjb/hamiltonian.hpp"
#include "nhjb/history.hpp"
#include "nhjb/verifier.hpp"

namespace nhjb {

using json = nlohmann::ordered_json;

inline json history_to_json(const History& w) {
  json segs = json::array();
  for (const Segment& s : w.segments()) {
    json samples = json::array();
    for (const Vec& v : s.samples) samples.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    segs.push_back({{"start", s.start}, {"samples", samples}});
  }
  json j{{"h", w.h()}, {"segments", segs}, {"delta_w", w.delta_w()}};
  if (w.start_derivative()) {
    const Vec& d = *w.start_derivative();
    j["start_deriv"] = std::vector<double>(d.data(), d.data() + d.size());
  }
  return j;
}

inline History history_from_json(const nlohmann::json& j) {
  const double h = j.at("h").get<double>();
  std::vector<Segment> segs;
  for (const auto& js : j.at("segments")) {
    Segment s;
    s.start = js.at("start").get<double>();
    for (const auto& jv : js.at("samples")) {
      Vec v(jv.size());
      for (std::size_t i = 0; i < jv.size(); ++i) v[static_cast<Eigen::Index>(i)] = jv[i].get<double>();
      s.samples.push_back(std::move(v));
    }
    segs.push_back(std::move(s));
  }
  std::optional<Vec> deriv;
  if (j.contains("start_deriv")) {
    const auto& jd = j.at("start_deriv");
    Vec d(jd.size());
    for (std::size_t i = 0; i < jd.size(); ++i) d[static_cast<Eigen::Index>(i)] = jd[i].get<double>();
    deriv = std::move(d);
  }
  return History(h, std::move(segs), j.value("delta_w", 0.0), std::move(deriv));
}

/// History literals for configs: constant / linear / step / samples / file.
inline History history_from_literal(const nlohmann::json& lit, double h, int n) {
  auto vec_of = [n](const nlohmann::json& jv) {
    if (jv.is_number()) return Vec(Vec::Constant(1, jv.get<double>()));
    Vec v(jv.size());
    for (std::size_t i = 0; i < jv.size(); ++i) v[static_cast<Eigen::Index>(i)] = jv[i].get<double>();
    return v;
  };
  if (!lit.contains("kind")) throw ConfigError("history literal: missing kind");
  const std::string kind = lit.at("kind").get<std::string>();
  try {
    if (kind == "constant") return History::constant(h, vec_of(lit.at("value")));
    if (kind == "linear") return History::linear(h, vec_of(lit.at("from")), vec_of(lit.at("to")));
    if (kind == "step") {
      std::vector<std::pair<double, Vec>> pieces;
      for (const auto& jp : lit.at("pieces"))
        pieces.emplace_back(jp.at("start").get<double>(), vec_of(jp.at("value")));
      return History::step(h, pieces);
    }
    if (kind == "samples") return history_from_json(lit);
    if (kind == "file") {
      std::ifstream in(lit.at("path").get<std::string>());
      if (!in) throw ConfigError("history literal: cannot open " + lit.at("path").get<std::string>());
      nlohmann::json j;
      in >> j;
      return history_from_json(j);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed history literal: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("malformed history literal: ") + e.what());
  }
  throw ConfigError("history literal: unknown kind '" + kind + "'");
}

inline json constants_to_json(const StructuralConstants& c) {
  return {{"c_H", c.c_H},        {"lambda_H", c.lambda_H},   {"lambda_g", c.lambda_g},
          {"lambda_sigma", c.lambda_sigma}, {"alpha", c.alpha}, {"samples_used", c.samples_used},
          {"seed", c.seed}};
}

inline json report_to_json(const VerificationReport& r) {
  return {{"check", r.check},     {"pass", r.pass},   {"slack", r.slack},
          {"tolerance", r.tolerance}, {"samples", r.samples}, {"seed", r.seed},
          {"details", r.details}};
}

inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Write-then-rename so readers never observe partial artifacts.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

/// Tidy CSV of a trajectory: time, state columns, reduced-path columns. The
/// producing config rides along in a leading comment line.
inline std::string trajectory_csv(const ProblemSpec& prob, const Trajectory& x,
                                  const json& config_echo) {
  std::ostringstream out;
  out << "# config=" << config_echo.dump() << "\n";
  out << "t";
  for (int i = 0; i < prob.n; ++i) out << ",x" << i;
  for (int i = 0; i < prob.n; ++i) out << ",y" << i;
  out << "\n";
  for (std::size_t k = 0; k < x.times.size(); ++k) {
    const double t = x.times[k];
    const Vec y = x.values[k] - prob.g(t, x.at(t - prob.h));
    out << format_g17(t);
    for (int i = 0; i < prob.n; ++i) out << "," << format_g17(x.values[k][i]);
    for (int i = 0; i < prob.n; ++i) out << "," << format_g17(y[i]);
    out << "\n";
  }
  return out.str();
}

inline std::string control_csv(const ProblemSpec& prob, const ControlSignal& u,
                               const json& config_echo) {
  std::ostringstream out;
  out << "# config=" << config_echo.dump() << "\n";
  out << "t";
  for (int i = 0; i < prob.m; ++i) out << ",u" << i;
  out << "\n";
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    out << format_g17(u.grid[k]);
    for (int i = 0; i < prob.m; ++i) out << "," << format_g17(u.values[k][i]);
    out << "\n";
  }
  return out.str();
}

}  // namespace nhjb
