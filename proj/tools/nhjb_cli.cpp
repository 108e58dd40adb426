// Command-line front end: simulate trajectories, compute value functionals,
// synthesize feedback controls, emit smoothing sequences, and run the
// verification suite. All runs are driven by a single JSON config and are
// reproducible from it.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "nhjb/nhjb.hpp"

namespace fs = std::filesystem;
using nhjb::Vec;

namespace {

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw nhjb::ConfigError("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw nhjb::ConfigError(std::string("config parse error: ") + e.what());
  }
  return j;
}

Vec vec_from_json(const nlohmann::json& jv) {
  if (jv.is_number()) return Vec::Constant(1, jv.get<double>());
  Vec v(jv.size());
  for (std::size_t i = 0; i < jv.size(); ++i) v[static_cast<Eigen::Index>(i)] = jv[i].get<double>();
  return v;
}

struct Run {
  nlohmann::json config;
  nhjb::Benchmark bench;
  fs::path out;
  unsigned seed = 20250101u;
  int jobs = 1;
  int steps_per_interval = 16;
  int k = 6;
  long budget = 1'000'000L;
  std::vector<int> schedule{4, 8, 16, 32, 64};
  double alpha = 1.0;
};

Run make_run(const nlohmann::json& cfg, const std::string& out_dir, long seed_override,
             int jobs_override) {
  Run r;
  r.config = cfg;
  if (!cfg.contains("problem") || !cfg.at("problem").contains("name"))
    throw nhjb::ConfigError("config: missing problem.name");
  const std::string name = cfg.at("problem").at("name").get<std::string>();
  r.bench = nhjb::make_benchmark(name, cfg.at("problem").value("params", nlohmann::json::object()));
  r.bench.problem.self_check();
  r.out = out_dir;
  fs::create_directories(r.out);

  const auto num = cfg.value("numerics", nlohmann::json::object());
  r.steps_per_interval = num.value("steps_per_interval", 16);
  r.k = num.value("k", 6);
  r.budget = num.value("budget", 1'000'000L);
  r.seed = num.value("seed", 20250101u);
  r.alpha = num.value("alpha", 1.0);
  r.jobs = num.value("jobs", 1);
  if (num.contains("mollify_schedule"))
    r.schedule = num.at("mollify_schedule").get<std::vector<int>>();
  if (seed_override >= 0) {
    r.seed = static_cast<unsigned>(seed_override);
    r.config["numerics"]["seed"] = r.seed;
  }
  if (jobs_override > 0) {
    r.jobs = jobs_override;
    r.config["numerics"]["jobs"] = r.jobs;
  }
  return r;
}

nhjb::PathPoint point_from_config(const Run& r) {
  if (!r.config.contains("point")) throw nhjb::ConfigError("config: missing point");
  const auto& jp = r.config.at("point");
  const double tau = jp.value("tau", 0.0);
  if (tau < 0.0 || tau > r.bench.problem.theta())
    throw nhjb::ConfigError("config: point.tau outside [0, theta]");
  if (!jp.contains("history")) throw nhjb::ConfigError("config: missing point.history");
  nhjb::History w =
      nhjb::history_from_literal(jp.at("history"), r.bench.problem.h, r.bench.problem.n);
  if (w.dim() != r.bench.problem.n) throw nhjb::ConfigError("config: history dimension mismatch");
  Vec z = jp.contains("z") ? vec_from_json(jp.at("z")) : w.left_limit_at_zero();
  if (z.size() != r.bench.problem.n) throw nhjb::ConfigError("config: z dimension mismatch");
  return nhjb::PathPoint(tau, std::move(z), std::move(w));
}

nhjb::ControlSignal control_from_config(const Run& r, const nhjb::PathPoint& p) {
  const auto& prob = r.bench.problem;
  const auto jc = r.config.value("simulate", nlohmann::json::object())
                      .value("control", nlohmann::json::object());
  if (jc.empty() || !jc.contains("kind"))
    return nhjb::ControlSignal::constant(p.tau, prob.theta(), prob.controls.front());
  const std::string kind = jc.at("kind").get<std::string>();
  if (kind == "constant")
    return nhjb::ControlSignal::constant(p.tau, prob.theta(), vec_from_json(jc.at("value")));
  if (kind == "piecewise") {
    nhjb::ControlSignal u;
    u.grid = jc.at("grid").get<std::vector<double>>();
    for (const auto& jv : jc.at("values")) u.values.push_back(vec_from_json(jv));
    if (u.grid.size() != u.values.size() + 1)
      throw nhjb::ConfigError("config: control grid must have one more node than values");
    return u;
  }
  throw nhjb::ConfigError("config: unknown control kind '" + kind + "'");
}

int cmd_simulate(const Run& r) {
  const auto p = point_from_config(r);
  const auto u = control_from_config(r, p);
  const auto x = nhjb::integrate_control(r.bench.problem, p, u, r.steps_per_interval);
  nhjb::write_atomic(r.out / "trajectory.csv", nhjb::trajectory_csv(r.bench.problem, x, r.config));
  std::cout << "wrote " << (r.out / "trajectory.csv").string() << " (" << x.times.size()
            << " nodes)\n";
  return 0;
}

int cmd_value(const Run& r) {
  const auto p = point_from_config(r);
  const auto base = nhjb::value_candidate(r.bench.problem, r.k, r.steps_per_interval, r.budget);
  const auto ext = nhjb::extend_value(r.bench.problem, base, p, r.schedule);
  nhjb::json record{{"problem", {{"name", r.bench.problem.name}, {"params", r.bench.params}}},
                    {"point",
                     {{"tau", p.tau},
                      {"z", std::vector<double>(p.z.data(), p.z.data() + p.z.size())},
                      {"history", nhjb::history_to_json(p.w)}}},
                    {"k", r.k},
                    {"steps", r.steps_per_interval},
                    {"value", ext.value},
                    {"gaps", ext.gaps},
                    {"budget", r.budget},
                    {"converged", ext.converged},
                    {"warning", ext.warning},
                    {"config", r.config}};
  nhjb::write_atomic(r.out / "value.json", record.dump(2) + "\n");
  std::cout << "value = " << nhjb::format_g17(ext.value) << "\n";
  if (ext.warning) std::cout << "warning: smoothing gaps did not decrease over the last steps\n";
  return 0;
}

int cmd_feedback(const Run& r) {
  const auto p = point_from_config(r);
  const auto& prob = r.bench.problem;
  Vec s = r.bench.s_probes.empty() ? Vec(Vec::Zero(prob.n)) : r.bench.s_probes.front();
  const auto jf = r.config.value("feedback", nlohmann::json::object());
  if (jf.contains("s")) s = vec_from_json(jf.at("s"));
  const auto res = nhjb::synthesize_feedback(prob, p, s, r.k, r.steps_per_interval);
  nhjb::write_atomic(r.out / "control.csv", nhjb::control_csv(prob, res.control, r.config));
  nhjb::write_atomic(r.out / "trajectory.csv",
                     nhjb::trajectory_csv(prob, res.trajectory, r.config));
  std::cout << "wrote " << (r.out / "control.csv").string() << " and trajectory.csv\n";
  return 0;
}

int cmd_mollify(const Run& r) {
  const auto p = point_from_config(r);
  for (int j : r.schedule) {
    const nhjb::History wj = nhjb::mollify(p.z, p.w, j);
    nhjb::json artifact{{"config", r.config}, {"j", j}, {"history", nhjb::history_to_json(wj)}};
    const fs::path path = r.out / ("mollify_j" + std::to_string(j) + ".json");
    nhjb::write_atomic(path, artifact.dump(2) + "\n");
    std::cout << "wrote " << path.string() << "\n";
  }
  return 0;
}

std::string summary_table(const std::vector<nhjb::VerificationReport>& reports) {
  std::ostringstream out;
  out << "check        result  slack          tolerance      samples  seed\n";
  for (const auto& rep : reports) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %-7s %-14.6g %-14.6g %-8d %u\n", rep.check.c_str(),
                  rep.pass ? "PASS" : "FAIL", rep.slack, rep.tolerance, rep.samples, rep.seed);
    out << line;
  }
  return out.str();
}

int cmd_verify(const Run& r) {
  nhjb::SuiteConfig sc;
  sc.seed = r.seed;
  sc.alpha = r.alpha;
  sc.steps_per_interval = r.steps_per_interval;
  sc.k = r.k;
  sc.budget = r.budget;
  sc.jobs = r.jobs;
  const auto jv = r.config.value("verify", nlohmann::json::object());
  sc.terminal_samples = jv.value("terminal_samples", sc.terminal_samples);
  sc.phi2_pairs = jv.value("phi2_pairs", sc.phi2_pairs);
  sc.dpp_points = jv.value("dpp_points", sc.dpp_points);
  sc.dini_points = jv.value("dini_points", sc.dini_points);
  sc.residual_points = jv.value("residual_points", sc.residual_points);
  sc.constants_samples = jv.value("constants_samples", sc.constants_samples);
  sc.random_selections = jv.value("random_selections", sc.random_selections);
  sc.candidate = jv.value("candidate", sc.candidate);

  const auto result = nhjb::run_suite(r.bench, sc);

  std::ostringstream lines;
  for (const auto& rep : result.reports) {
    nhjb::json jrep = nhjb::report_to_json(rep);
    jrep["config"] = r.config;
    jrep["suite"] = nhjb::suite_config_to_json(sc);
    lines << jrep.dump() << "\n";
  }
  nhjb::write_atomic(r.out / "reports.jsonl", lines.str());
  const std::string table = summary_table(result.reports);
  nhjb::write_atomic(r.out / "summary.txt", table);
  std::cout << table;
  std::cout << (result.all_pass ? "all checks passed" : "CHECK FAILURES PRESENT") << "\n";
  return result.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical toolkit for path-dependent Hamilton-Jacobi equations of neutral-type systems"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".";
  long seed_override = -1;
  int jobs_override = 0;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "artifact directory");
  app.add_option("--seed", seed_override, "override numerics.seed");
  app.add_option("--jobs", jobs_override, "override numerics.jobs");

  auto* sim = app.add_subcommand("simulate", "integrate the controlled neutral equation");
  auto* val = app.add_subcommand("value", "compute the value functional at a point");
  auto* fb = app.add_subcommand("feedback", "synthesize the Hamiltonian-minimizing feedback");
  auto* mol = app.add_subcommand("mollify", "emit the smoothing sequence for a history");
  auto* ver = app.add_subcommand("verify", "run the verification suite");

  CLI11_PARSE(app, argc, argv);

  try {
    const Run r = make_run(load_config(config_path), out_dir, seed_override, jobs_override);
    if (sim->parsed()) return cmd_simulate(r);
    if (val->parsed()) return cmd_value(r);
    if (fb->parsed()) return cmd_feedback(r);
    if (mol->parsed()) return cmd_mollify(r);
    if (ver->parsed()) return cmd_verify(r);
    return 2;
  } catch (const nhjb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nhjb::BudgetError& e) {
    std::cerr << "budget error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
