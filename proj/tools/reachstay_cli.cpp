/*
 * Command-line front end.
 *
 *   reachstay synth <config.json>        run synthesis, write artifacts
 *   reachstay simulate <controller.json> closed-loop rollout to CSV
 *   reachstay check <config.json>        validate and print derived quantities
 *
 * Exit codes: 0 success, 2 usage or configuration error, 3 specification
 * not realizable at the configured precision, 4 resource cap reached.
 */

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "reachstay/config.hpp"
#include "reachstay/simulate.hpp"

using namespace reachstay;

namespace {

int thread_count(const ProblemConfig& cfg, int override_threads) {
  if (override_threads > 0) return override_threads;
  if (const char* env = std::getenv("REACHSTAY_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return cfg.threads;
}

int cmd_synth(const std::string& config_path, int threads_override) {
  ProblemConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  cfg.threads = thread_count(cfg, threads_override);

  SynthArtifacts art;
  try {
    art = run_synthesis(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  const SynthResult& r = art.result;
  std::cout << cfg.name << ": " << (r.status == SynthStatus::Converged ? "converged" : "capped")
            << " after " << r.stats.outer_iterations << " outer iterations, "
            << r.stats.winning_boxes << " winning boxes, " << r.stats.seconds << " s\n";

  if (!cfg.out_csv.empty()) write_winning_csv(cfg.out_csv, r, cfg.system.state_dim);
  if (!cfg.out_stats.empty()) write_stats_json(cfg.out_stats, cfg, art);

  if (r.winning.empty()) {
    std::cerr << r.message << "\n";
    return 3;
  }
  if (!cfg.out_controller.empty()) {
    Controller c = extract(r, cfg.system, cfg.sched.eps_min);
    c.spec = cfg.raw;
    c.spec["dynamics"] = {{"source", cfg.dynamics_source}};
    save_controller(c, cfg.out_controller);
    std::cout << "controller: " << cfg.out_controller << " (" << c.cells().size() << " cells)\n";
  }
  if (r.status == SynthStatus::Capped) {
    std::cerr << r.message << "\n";
    return 4;
  }
  return 0;
}

int cmd_simulate(const std::string& controller_path, const std::string& x0_str, long steps,
                 std::uint64_t seed, const std::string& disturbance, const std::string& tie,
                 const std::string& out_path) {
  Controller ctrl;
  try {
    ctrl = load_controller(controller_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (!ctrl.spec.contains("dynamics") || !ctrl.spec["dynamics"].contains("source")) {
    std::cerr << "error: controller file carries no dynamics source\n";
    return 2;
  }
  ProblemConfig cfg;
  try {
    cfg = parse_config(ctrl.spec);
  } catch (const std::exception& e) {
    std::cerr << "error: controller spec: " << e.what() << "\n";
    return 2;
  }
  if (cfg.system.system_hash() != ctrl.system_hash) {
    std::cerr << "error: controller system hash does not match its embedded dynamics\n";
    return 2;
  }

  std::vector<double> x0;
  std::stringstream ss(x0_str);
  std::string tok;
  while (std::getline(ss, tok, ',')) x0.push_back(std::stod(tok));
  if (static_cast<int>(x0.size()) != cfg.system.state_dim) {
    std::cerr << "error: --x0 needs " << cfg.system.state_dim << " components\n";
    return 2;
  }

  SimulateOptions opt;
  opt.horizon = steps;
  opt.seed = seed;
  opt.tau = cfg.system.kind == SystemKind::ContinuousField ? cfg.taylor.tau : 0.0;
  if (tie == "first")
    opt.tie = TiePolicy::First;
  else if (tie == "random")
    opt.tie = TiePolicy::Random;
  else if (tie == "minnorm")
    opt.tie = TiePolicy::MinNorm;
  else {
    std::cerr << "error: unknown tie policy '" << tie << "'\n";
    return 2;
  }
  if (disturbance == "none" || disturbance.empty()) {
    opt.disturbance.kind = DisturbancePolicy::Kind::None;
  } else if (disturbance.rfind("const:", 0) == 0) {
    opt.disturbance.kind = DisturbancePolicy::Kind::Const;
    std::stringstream ds(disturbance.substr(6));
    while (std::getline(ds, tok, ',')) opt.disturbance.value.push_back(std::stod(tok));
    if (static_cast<int>(opt.disturbance.value.size()) != cfg.system.state_dim) {
      std::cerr << "error: const disturbance needs " << cfg.system.state_dim << " components\n";
      return 2;
    }
  } else if (disturbance.rfind("random:", 0) == 0) {
    opt.disturbance.kind = DisturbancePolicy::Kind::Random;
    opt.disturbance.bound = std::stod(disturbance.substr(7));
  } else if (disturbance.rfind("extreme:", 0) == 0) {
    opt.disturbance.kind = DisturbancePolicy::Kind::Extreme;
    opt.disturbance.bound = std::stod(disturbance.substr(8));
  } else {
    std::cerr << "error: unknown disturbance spec '" << disturbance << "'\n";
    return 2;
  }

  Paver omega(cfg.spec.target_boxes);
  TargetSet target = cfg.spec.target_inequalities.empty()
                         ? TargetSet::boxes(&omega)
                         : TargetSet::inequalities(cfg.spec.target_inequalities,
                                                   cfg.system.state_dim);

  PointDynamics dyn(cfg.system);
  Trajectory tr = simulate(dyn, ctrl, x0, opt, &target);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) {
      std::cerr << "error: cannot open " << out_path << "\n";
      return 2;
    }
    os = &file;
  }
  *os << "t";
  for (int i = 0; i < cfg.system.state_dim; ++i) *os << ",x_" << i + 1;
  for (int j = 0; j < std::max(1, cfg.system.control_dim); ++j) *os << ",u_" << j + 1;
  for (int i = 0; i < cfg.system.state_dim; ++i) *os << ",d_" << i + 1;
  *os << ",in_target\n";
  char buf[64];
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    *os << k;
    for (double v : tr.states[k]) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      *os << buf;
    }
    const bool applied = k < tr.controls.size();
    for (int j = 0; j < std::max(1, cfg.system.control_dim); ++j) {
      if (applied && j < cfg.system.control_dim) {
        std::snprintf(buf, sizeof(buf), ",%.17g", cfg.system.controls[tr.controls[k]][j]);
        *os << buf;
      } else {
        *os << ",";
      }
    }
    for (int i = 0; i < cfg.system.state_dim; ++i) {
      if (applied) {
        std::snprintf(buf, sizeof(buf), ",%.17g", tr.disturbances[k][i]);
        *os << buf;
      } else {
        *os << ",";
      }
    }
    *os << "," << (tr.in_target.empty() ? 0 : static_cast<int>(tr.in_target[k])) << "\n";
  }
  if (tr.violation)
    std::cerr << "warning: empty strategy encountered after " << tr.controls.size()
              << " steps\n";
  return 0;
}

int cmd_check(const std::string& config_path) {
  ProblemConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "name: " << cfg.name << "\n";
  std::cout << "kind: "
            << (cfg.system.kind == SystemKind::ContinuousField ? "sampled-data" : "discrete-time")
            << "\n";
  std::cout << "state dimension: " << cfg.system.state_dim << "\n";
  std::cout << "control values: " << cfg.system.n_modes() << "\n";
  std::cout << "additive disturbance bound: " << cfg.system.delta << "\n";
  std::cout << "precision: eps_outer=" << cfg.sched.eps_outer
            << " eps_inner=" << cfg.sched.eps_inner << " eps_min=" << cfg.sched.eps_min << "\n";

  if (cfg.system.kind == SystemKind::ContinuousField) {
    std::cout << "sampling time: " << cfg.taylor.tau << "\n";
    if (cfg.taylor.delta <= 0.0) {
      std::cout << "warning: delta = 0 degenerates the precision bound (eps <= 0); "
                   "order selection is disabled and the configured eps is used as-is\n";
    } else {
      SampledImage img(cfg.system, cfg.taylor);
      double K = cfg.taylor.K;
      if (K <= 0.0) K = img.estimate_width_constant(cfg.spec.state_space, cfg.seed + 1);
      std::cout << "width constant K: " << K << (cfg.taylor.K <= 0.0 ? " (estimated)" : "")
                << "\n";
      TaylorConfig ty = cfg.taylor;
      ty.K = K;
      ImageWorkspace ws;
      Box probe(cfg.spec.state_space.size());
      for (std::size_t i = 0; i < probe.size(); ++i)
        probe[i] = Interval(cfg.spec.state_space[i].mid());
      SampledImage probe_img(cfg.system, ty);
      Enclosure enc = probe_img.apriori_enclosure(probe, ImageOp::kJointMode, ws);
      if (enc.ok) {
        try {
          OrderSelection sel = select_order(ty, enc.y.width(), enc.kbar);
          std::cout << "taylor order seed: " << sel.k << " (kbar=" << enc.kbar << ")\n";
          std::cout << "precision bound: eps <= " << sel.eps_bound << "\n";
          if (cfg.sched.eps_min > sel.eps_bound)
            std::cout << "warning: configured eps_min exceeds the precision bound\n";
        } catch (const std::exception& e) {
          std::cout << "warning: order selection failed at the probe point: " << e.what()
                    << "\n";
        }
      } else {
        std::cout << "warning: no a priori enclosure at the probe point\n";
      }
    }
  }
  std::cout << "config ok\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"interval synthesis of reach-and-stay controllers"};
  app.require_subcommand(1);

  std::string config_path, controller_path, x0, disturbance = "none", tie = "first", out_path;
  long steps = 100;
  std::uint64_t seed = 0;
  int threads_override = 0;

  auto* synth = app.add_subcommand("synth", "run synthesis from a problem config");
  synth->add_option("config", config_path, "problem config (JSON)")->required();
  synth->add_option("--threads", threads_override, "worker threads for the sweeps");

  auto* sim = app.add_subcommand("simulate", "closed-loop rollout under a saved controller");
  sim->add_option("controller", controller_path, "controller file")->required();
  sim->add_option("--x0", x0, "initial state, comma separated")->required();
  sim->add_option("--steps", steps, "number of sampling steps");
  sim->add_option("--seed", seed, "seed for tie and disturbance sampling");
  sim->add_option("--disturbance", disturbance, "none | const:v,... | random:bound | extreme:bound");
  sim->add_option("--tie", tie, "first | random | minnorm");
  sim->add_option("--out", out_path, "trajectory CSV path (default stdout)");

  auto* check = app.add_subcommand("check", "validate a config and print derived quantities");
  check->add_option("config", config_path, "problem config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (synth->parsed()) return cmd_synth(config_path, threads_override);
  if (sim->parsed()) return cmd_simulate(controller_path, x0, steps, seed, disturbance, tie, out_path);
  if (check->parsed()) return cmd_check(config_path);
  return 2;
}
