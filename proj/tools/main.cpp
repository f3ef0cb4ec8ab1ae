// Batch front end: parses a run configuration, executes one subcommand and
// persists CSV artifacts plus a reproducibility manifest.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfsmp/cost.hpp"
#include "mfsmp/csv.hpp"
#include "mfsmp/invariants.hpp"
#include "mfsmp/optimizer.hpp"
#include "mfsmp/rng.hpp"
#include "mfsmp/verify.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string model_name = "lq";
  std::map<std::string, double> model_params;
  mfsmp::TimeGrid grid{1.0, 50};
  int particles = 2000;
  std::uint64_t seed = 1;
  int workers = 1;
  int basis_degree = 2;
  double fd_step = 1e-4;
  std::vector<std::string> features{"const", "t", "y"};
  json theta = "zeros";
  json constraint;  // optional override
  mfsmp::OptimizerConfig opt;
  std::string output_dir = "out";

  json resolved;  // echo of everything above, written to the manifest
};

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw mfsmp::ConfigError("config: unknown key \"" + it.key() + "\" in " + where);
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mfsmp::ConfigError("config: cannot read " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const std::exception& e) {
    throw mfsmp::ConfigError(std::string("config: parse failure: ") + e.what());
  }
  // A manifest is accepted in place of a config: unwrap its echo.
  if (root.contains("config")) root = root.at("config");

  reject_unknown(root,
                 {"model", "grid", "particles", "seed", "workers", "basis_degree", "fd_step",
                  "policy", "constraint", "optimizer", "output_dir"},
                 "top level");
  RunConfig cfg;
  if (root.contains("model")) {
    const json& m = root["model"];
    reject_unknown(m, {"name", "params"}, "model");
    if (m.contains("name")) cfg.model_name = m.at("name").get<std::string>();
    if (m.contains("params"))
      for (auto it = m["params"].begin(); it != m["params"].end(); ++it)
        cfg.model_params[it.key()] = it.value().get<double>();
  }
  if (root.contains("grid")) {
    const json& g = root["grid"];
    reject_unknown(g, {"T", "steps"}, "grid");
    const double T = g.value("T", 1.0);
    const int steps = g.value("steps", 50);
    if (!(T > 0.0)) throw mfsmp::ConfigError("config: grid.T must be positive");
    if (steps < 1) throw mfsmp::ConfigError("config: grid.steps must be >= 1");
    cfg.grid = mfsmp::TimeGrid(T, steps);
  }
  if (root.contains("particles")) {
    cfg.particles = root.at("particles").get<int>();
    if (cfg.particles < 2) throw mfsmp::ConfigError("config: particles must be >= 2");
  }
  if (root.contains("seed")) cfg.seed = root.at("seed").get<std::uint64_t>();
  if (root.contains("workers")) {
    cfg.workers = root.at("workers").get<int>();
    if (cfg.workers < 1) throw mfsmp::ConfigError("config: workers must be >= 1");
  }
  if (root.contains("basis_degree")) {
    cfg.basis_degree = root.at("basis_degree").get<int>();
    if (cfg.basis_degree < 0) throw mfsmp::ConfigError("config: basis_degree must be >= 0");
  }
  if (root.contains("fd_step")) {
    cfg.fd_step = root.at("fd_step").get<double>();
    if (!(cfg.fd_step > 0.0)) throw mfsmp::ConfigError("config: fd_step must be positive");
  }
  if (root.contains("policy")) {
    const json& p = root["policy"];
    reject_unknown(p, {"features", "theta"}, "policy");
    if (p.contains("features")) cfg.features = p.at("features").get<std::vector<std::string>>();
    if (p.contains("theta")) cfg.theta = p.at("theta");
  }
  if (root.contains("constraint")) {
    cfg.constraint = root["constraint"];
    reject_unknown(cfg.constraint, {"family", "lower", "upper", "radius"}, "constraint");
  }
  if (root.contains("optimizer")) {
    const json& o = root["optimizer"];
    reject_unknown(o,
                   {"max_iters", "step0", "backtrack", "armijo_c1", "max_backtracks",
                    "max_line_failures", "grad_tol", "residual_tol"},
                   "optimizer");
    cfg.opt.max_iters = o.value("max_iters", cfg.opt.max_iters);
    cfg.opt.step0 = o.value("step0", cfg.opt.step0);
    cfg.opt.backtrack = o.value("backtrack", cfg.opt.backtrack);
    cfg.opt.armijo_c1 = o.value("armijo_c1", cfg.opt.armijo_c1);
    cfg.opt.max_backtracks = o.value("max_backtracks", cfg.opt.max_backtracks);
    cfg.opt.max_line_failures = o.value("max_line_failures", cfg.opt.max_line_failures);
    cfg.opt.grad_tol = o.value("grad_tol", cfg.opt.grad_tol);
    cfg.opt.residual_tol = o.value("residual_tol", cfg.opt.residual_tol);
  }
  if (root.contains("output_dir")) cfg.output_dir = root.at("output_dir").get<std::string>();
  if (const char* env = std::getenv("MFSMP_OUTPUT_DIR")) cfg.output_dir = env;

  // Resolved echo (independent of which keys were present in the input).
  json r;
  r["model"]["name"] = cfg.model_name;
  r["model"]["params"] = cfg.model_params;
  r["grid"]["T"] = cfg.grid.T;
  r["grid"]["steps"] = cfg.grid.steps;
  r["particles"] = cfg.particles;
  r["seed"] = cfg.seed;
  r["workers"] = cfg.workers;
  r["basis_degree"] = cfg.basis_degree;
  r["fd_step"] = cfg.fd_step;
  r["policy"]["features"] = cfg.features;
  r["policy"]["theta"] = cfg.theta;
  if (!cfg.constraint.is_null()) r["constraint"] = cfg.constraint;
  r["optimizer"]["max_iters"] = cfg.opt.max_iters;
  r["optimizer"]["step0"] = cfg.opt.step0;
  r["optimizer"]["backtrack"] = cfg.opt.backtrack;
  r["optimizer"]["armijo_c1"] = cfg.opt.armijo_c1;
  r["optimizer"]["max_backtracks"] = cfg.opt.max_backtracks;
  r["optimizer"]["max_line_failures"] = cfg.opt.max_line_failures;
  r["optimizer"]["grad_tol"] = cfg.opt.grad_tol;
  r["optimizer"]["residual_tol"] = cfg.opt.residual_tol;
  r["output_dir"] = cfg.output_dir;
  cfg.resolved = r;
  return cfg;
}

mfsmp::CoefficientSet build_model(const RunConfig& cfg) {
  mfsmp::CoefficientSet model = mfsmp::make_model(cfg.model_name, cfg.model_params);
  if (!cfg.constraint.is_null()) {
    const std::string fam = cfg.constraint.value("family", "box");
    if (fam == "box") {
      const auto lo = cfg.constraint.at("lower").get<std::vector<double>>();
      const auto hi = cfg.constraint.at("upper").get<std::vector<double>>();
      model.constraint = mfsmp::ControlConstraintSet::box(
          Eigen::Map<const mfsmp::Vec>(lo.data(), lo.size()),
          Eigen::Map<const mfsmp::Vec>(hi.data(), hi.size()));
    } else if (fam == "ball") {
      model.constraint = mfsmp::ControlConstraintSet::ball(
          model.dims.k_u, cfg.constraint.at("radius").get<double>());
    } else {
      throw mfsmp::ConfigError("config: constraint.family must be box or ball");
    }
    model.check_shapes();
  }
  return model;
}

mfsmp::LinearFeaturePolicy build_policy(const RunConfig& cfg,
                                        const mfsmp::CoefficientSet& model) {
  const mfsmp::FeatureSet fs = mfsmp::FeatureSet::from_names(cfg.features);
  mfsmp::Mat theta = mfsmp::Mat::Zero(model.dims.k_u, fs.dim());
  if (cfg.theta.is_array()) {
    if (static_cast<int>(cfg.theta.size()) != model.dims.k_u)
      throw mfsmp::ConfigError("config: policy.theta row count must equal the control dimension");
    for (int r = 0; r < model.dims.k_u; ++r) {
      const auto row = cfg.theta.at(r).get<std::vector<double>>();
      if (static_cast<int>(row.size()) != fs.dim())
        throw mfsmp::ConfigError("config: policy.theta column count must equal feature count");
      for (int c = 0; c < fs.dim(); ++c) theta(r, c) = row[c];
    }
  } else if (!(cfg.theta.is_string() && cfg.theta.get<std::string>() == "zeros")) {
    throw mfsmp::ConfigError("config: policy.theta must be \"zeros\" or a matrix");
  }
  return mfsmp::LinearFeaturePolicy(fs, theta, model.constraint);
}

void write_manifest(const RunConfig& cfg, const std::string& subcommand) {
  json m;
  m["tool_version"] = MFSMP_VERSION;
  m["subcommand"] = subcommand;
  m["config"] = cfg.resolved;
  std::ofstream out(fs::path(cfg.output_dir) / "manifest.json", std::ios::binary);
  if (!out) throw mfsmp::ConfigError("cannot write manifest in " + cfg.output_dir);
  out << m.dump(2) << '\n';
}

json policy_to_json(const mfsmp::LinearFeaturePolicy& policy) {
  json p;
  p["features"] = policy.features().names();
  std::vector<std::vector<double>> rows;
  for (int r = 0; r < policy.theta().rows(); ++r) {
    std::vector<double> row;
    for (int c = 0; c < policy.theta().cols(); ++c) row.push_back(policy.theta()(r, c));
    rows.push_back(row);
  }
  p["theta"] = rows;
  return p;
}

int cmd_simulate(const RunConfig& cfg) {
  const auto model = build_model(cfg);
  const auto policy = build_policy(cfg, model);
  const auto fwd = mfsmp::simulate_forward(model, policy, cfg.grid, cfg.particles, cfg.seed,
                                           cfg.workers);
  const auto bwd = mfsmp::solve_backward_y(model, fwd, policy, cfg.basis_degree);
  const auto adj = mfsmp::solve_adjoint(model, fwd, bwd, policy, {}, cfg.basis_degree);
  const fs::path dir(cfg.output_dir);
  mfsmp::write_forward_csv((dir / "forward.csv").string(), fwd);
  mfsmp::write_backward_csv((dir / "backward.csv").string(), fwd, bwd);
  mfsmp::write_adjoint_csv((dir / "adjoint.csv").string(), fwd, adj);
  mfsmp::write_picard_csv((dir / "picard.csv").string(), adj);
  const auto cost = mfsmp::evaluate_cost(model, fwd, bwd);
  std::cout << "simulate: particles=" << cfg.particles << " steps=" << cfg.grid.steps
            << " cost=" << mfsmp::format_double(cost.value)
            << " se=" << mfsmp::format_double(cost.value_se) << '\n';
  return 0;
}

int cmd_gradient_check(const RunConfig& cfg) {
  const auto model = build_model(cfg);
  const auto policy = build_policy(cfg, model);
  const auto fwd = mfsmp::simulate_forward(model, policy, cfg.grid, cfg.particles, cfg.seed,
                                           cfg.workers);
  const auto bwd = mfsmp::solve_backward_y(model, fwd, policy, cfg.basis_degree);
  const auto adj = mfsmp::solve_adjoint(model, fwd, bwd, policy, {}, cfg.basis_degree);
  const auto gf = mfsmp::gradient(model, fwd, bwd, adj, policy);
  const mfsmp::Vec fd = mfsmp::fd_gradient(model, policy, cfg.grid, cfg.particles, cfg.seed,
                                           cfg.fd_step, cfg.basis_degree, cfg.workers);

  const fs::path dir(cfg.output_dir);
  std::ofstream out(dir / "gradient_check.csv", std::ios::binary);
  out << "param,analytic,fd,abs_err\n";
  for (int i = 0; i < fd.size(); ++i)
    out << i << ',' << mfsmp::format_double(gf.grad_theta[i]) << ','
        << mfsmp::format_double(fd[i]) << ','
        << mfsmp::format_double(std::abs(gf.grad_theta[i] - fd[i])) << '\n';
  const double rel =
      (gf.grad_theta - fd).norm() / std::max(1e-12, std::max(gf.grad_theta.norm(), fd.norm()));
  out << "max_relative_error," << mfsmp::format_double(rel) << ",,\n";
  std::cout << "gradient-check: relative L2 error " << mfsmp::format_double(rel) << '\n';
  return 0;
}

int cmd_optimize(const RunConfig& cfg) {
  const auto model = build_model(cfg);
  const auto policy0 = build_policy(cfg, model);
  mfsmp::OptimizerConfig oc = cfg.opt;
  oc.grid = cfg.grid;
  oc.particles = cfg.particles;
  oc.seed = cfg.seed;
  oc.workers = cfg.workers;
  oc.basis_degree = cfg.basis_degree;
  mfsmp::RunTrace trace;
  const auto policy = mfsmp::optimize(model, policy0, oc, &trace);

  const fs::path dir(cfg.output_dir);
  mfsmp::write_trace_csv((dir / "trace.csv").string(), trace);
  std::ofstream out(dir / "policy.json", std::ios::binary);
  out << policy_to_json(policy).dump(2) << '\n';
  std::cout << "optimize: " << trace.stop_reason << " after " << trace.iters.size()
            << " iterations, final cost " << mfsmp::format_double(trace.final_cost) << '\n';
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  const auto model = build_model(cfg);
  const auto policy = build_policy(cfg, model);
  const auto rep =
      mfsmp::run_invariant_suite(model, policy, cfg.grid, cfg.particles, cfg.seed);
  mfsmp::write_invariant_csv((fs::path(cfg.output_dir) / "invariants.csv").string(), rep);
  for (const auto& c : rep.checks)
    std::cout << (c.passed ? "pass" : "FAIL") << "  [" << c.module << "] " << c.name << ": "
              << c.detail << '\n';
  if (!rep.all_passed()) {
    std::cout << "verify: failures present\n";
    return 1;
  }
  std::cout << "verify: all invariants hold\n";
  return 0;
}

int cmd_benchmark_lq(const RunConfig& cfg) {
  if (cfg.model_name != "lq")
    throw mfsmp::ConfigError("benchmark-lq: config key model.name must be \"lq\"");
  const auto model = build_model(cfg);
  const auto policy0 = build_policy(cfg, model);
  auto param = [&](const std::string& key, double dflt) {
    auto it = cfg.model_params.find(key);
    return it == cfg.model_params.end() ? dflt : it->second;
  };
  const double a = param("a", 0.0), c = param("c", 1.0), sigma = param("sigma", 0.2);
  const double q = param("q", 1.0), r = param("r", 1.0), g = param("g", 0.5);
  const double x0 = param("x0", 1.0);
  const auto ref = mfsmp::lq_reference(a, c, sigma, q, r, g, x0, cfg.grid);

  mfsmp::OptimizerConfig oc = cfg.opt;
  oc.grid = cfg.grid;
  oc.particles = cfg.particles;
  oc.seed = cfg.seed;
  oc.workers = cfg.workers;
  oc.basis_degree = cfg.basis_degree;
  mfsmp::RunTrace trace;
  const auto policy = mfsmp::optimize(model, policy0, oc, &trace);

  const auto fwd = mfsmp::simulate_forward(model, policy, cfg.grid, cfg.particles,
                                           mfsmp::rng::derive(cfg.seed, 777), cfg.workers);
  const auto bwd = mfsmp::solve_backward_y(model, fwd, policy, cfg.basis_degree);
  const double cost = mfsmp::evaluate_cost(model, fwd, bwd).value;

  double num = 0.0, den = 0.0;
  const fs::path dir(cfg.output_dir);
  std::ofstream out(dir / "benchmark.csv", std::ios::binary);
  out << "node,t,u_opt,u_ref\n";
  for (int i = 0; i < cfg.grid.steps; ++i) {
    const double uo = fwd.u_mean(i, 0);
    const double ur = ref.u_star(i);
    out << i << ',' << mfsmp::format_double(cfg.grid.node(i)) << ','
        << mfsmp::format_double(uo) << ',' << mfsmp::format_double(ur) << '\n';
    num += (uo - ur) * (uo - ur);
    den += ur * ur;
  }
  const double gain_err = std::sqrt(num / std::max(den, 1e-300));
  const double cost_err = std::abs(cost - ref.total_cost()) / std::abs(ref.total_cost());
  out << "control_l2_error," << mfsmp::format_double(gain_err) << ",,\n";
  out << "cost_rel_error," << mfsmp::format_double(cost_err) << ",,\n";
  std::cout << "benchmark-lq: control L2 error " << mfsmp::format_double(gain_err)
            << ", cost " << mfsmp::format_double(cost) << " vs reference "
            << mfsmp::format_double(ref.total_cost()) << " (rel err "
            << mfsmp::format_double(cost_err) << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle solver for partially observed mean-field stochastic control"};
  app.require_subcommand(1);
  std::string config_path;
  for (const char* name : {"simulate", "gradient-check", "optimize", "verify", "benchmark-lq"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("config", config_path, "run configuration (JSON)")->required();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg = parse_config(config_path);
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw mfsmp::ConfigError("cannot create output_dir " + cfg.output_dir);
    write_manifest(cfg, sub);
    if (sub == "simulate") return cmd_simulate(cfg);
    if (sub == "gradient-check") return cmd_gradient_check(cfg);
    if (sub == "optimize") return cmd_optimize(cfg);
    if (sub == "verify") return cmd_verify(cfg);
    if (sub == "benchmark-lq") return cmd_benchmark_lq(cfg);
    std::cerr << "unknown subcommand\n";
    return 2;
  } catch (const mfsmp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const mfsmp::Error& e) {
    std::cerr << "computation error (" << sub << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error (" << sub << "): " << e.what() << '\n';
    return 1;
  }
}
