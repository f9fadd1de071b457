/*
 * config.hpp
 *
 * Problem configuration: a single JSON document naming the dynamics,
 * the reach-and-stay specification, precision schedule, Taylor settings
 * for sampled-data systems, resource limits and output paths.  Angles
 * may be written as "<value> deg" strings and are converted to radians
 * here.
 */

#ifndef REACHSTAY_CONFIG_HPP
#define REACHSTAY_CONFIG_HPP

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reachstay/controller.hpp"
#include "reachstay/reach.hpp"
#include "reachstay/synth.hpp"

namespace reachstay {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/* numbers pass through; strings accept a 'deg' or 'rad' suffix */
inline double angle_aware(const nlohmann::ordered_json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    std::size_t pos = 0;
    double num;
    try {
      num = std::stod(s, &pos);
    } catch (...) {
      throw ConfigError(where + ": cannot parse number '" + s + "'");
    }
    while (pos < s.size() && s[pos] == ' ') ++pos;
    std::string unit = s.substr(pos);
    if (unit == "deg") return num * 3.141592653589793 / 180.0;
    if (unit == "rad" || unit.empty()) return num;
    throw ConfigError(where + ": unknown unit '" + unit + "'");
  }
  throw ConfigError(where + ": expected a number or a unit string");
}

inline Box parse_box(const nlohmann::ordered_json& j, const std::string& where) {
  if (!j.contains("lo") || !j.contains("hi"))
    throw ConfigError(where + ": box needs 'lo' and 'hi' arrays");
  const auto& lo = j["lo"];
  const auto& hi = j["hi"];
  if (lo.size() != hi.size() || lo.empty())
    throw ConfigError(where + ": 'lo' and 'hi' must have equal positive length");
  Box b(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) {
    b[i] = Interval(angle_aware(lo[i], where), angle_aware(hi[i], where));
    if (b[i].is_empty()) throw ConfigError(where + ": lo > hi in dimension " + std::to_string(i));
  }
  return b;
}

/* parse one expression over the system's state names */
inline ExprPtr parse_expression(const std::string& text,
                                const std::vector<std::string>& state_names) {
  std::string src = "state";
  for (const auto& n : state_names) src += " " + n;
  src += ";\n";
  src += state_names[0] + "+ = " + text + ";\n";
  for (std::size_t i = 1; i < state_names.size(); ++i) src += state_names[i] + "+ = 0;\n";
  return parse_dsl(src).field[0];
}

struct ProblemConfig {
  std::string name;
  std::uint64_t seed = 0;
  SystemModel system;
  std::string dynamics_source;
  Spec spec;
  PrecisionSchedule sched;
  TaylorConfig taylor;
  std::optional<double> rho;
  SynthLimits limits;
  int threads = 1;
  std::string out_controller, out_csv, out_stats;
  nlohmann::ordered_json raw;
};

inline ProblemConfig parse_config(const nlohmann::ordered_json& doc,
                                  const std::string& base_dir = ".") {
  ProblemConfig cfg;
  cfg.raw = doc;
  cfg.name = doc.value("name", std::string("unnamed"));
  cfg.seed = doc.value("seed", 0ull);

  if (!doc.contains("dynamics")) throw ConfigError("config: missing 'dynamics'");
  const auto& dyn = doc["dynamics"];
  if (dyn.contains("source")) {
    cfg.dynamics_source = dyn["source"].get<std::string>();
  } else if (dyn.contains("file")) {
    std::string path = dyn["file"].get<std::string>();
    if (!path.empty() && path[0] != '/') path = base_dir + "/" + path;
    std::ifstream in(path);
    if (!in) throw ConfigError("config: dynamics file not found: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    cfg.dynamics_source = os.str();
  } else {
    throw ConfigError("config: dynamics needs 'source' or 'file'");
  }
  try {
    cfg.system = parse_system(cfg.dynamics_source);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: dynamics: ") + e.what());
  }

  if (!doc.contains("spec")) throw ConfigError("config: missing 'spec'");
  const auto& sp = doc["spec"];
  if (!sp.contains("state_space")) throw ConfigError("config: spec needs 'state_space'");
  cfg.spec.state_space = parse_box(sp["state_space"], "state_space");
  if (static_cast<int>(cfg.spec.state_space.size()) != cfg.system.state_dim)
    throw ConfigError("config: state_space dimension does not match the dynamics");
  for (const auto& tb : sp.value("target_boxes", nlohmann::ordered_json::array()))
    cfg.spec.target_boxes.push_back(parse_box(tb, "target_boxes"));
  for (const auto& s : sp.value("target_inequalities", nlohmann::ordered_json::array()))
    cfg.spec.target_inequalities.push_back(
        parse_expression(s.get<std::string>(), cfg.system.state_names));
  for (const auto& conj : sp.value("obstacles", nlohmann::ordered_json::array())) {
    std::vector<ExprPtr> g;
    for (const auto& s : conj)
      g.push_back(parse_expression(s.get<std::string>(), cfg.system.state_names));
    cfg.spec.obstacles.push_back(std::move(g));
  }
  if (!cfg.spec.has_target()) throw ConfigError("config: spec has no target");

  if (!doc.contains("precision")) throw ConfigError("config: missing 'precision'");
  const auto& pr = doc["precision"];
  cfg.sched.eps_outer = pr.value("eps_outer", 0.0);
  cfg.sched.eps_inner = pr.value("eps_inner", 0.0);
  cfg.sched.shrink = pr.value("shrink", 1.0);
  cfg.sched.eps_min = pr.value("eps_min", 0.0);
  try {
    cfg.sched.normalize();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: precision: ") + e.what());
  }

  if (cfg.system.kind == SystemKind::ContinuousField) {
    if (!doc.contains("taylor"))
      throw ConfigError("config: continuous-time dynamics need a 'taylor' section");
    const auto& ty = doc["taylor"];
    cfg.taylor.tau = ty.value("tau", 0.0);
    cfg.taylor.kmax = ty.value("kmax", 5);
    cfg.taylor.order = ty.value("order", 3);
    cfg.taylor.alpha = ty.value("alpha", 0.5);
    cfg.taylor.delta = ty.value("delta", 0.0);
    cfg.taylor.eps_frac = ty.value("eps_frac", 0.01);
    cfg.taylor.K = ty.value("K", 0.0);
    try {
      cfg.taylor.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: taylor: ") + e.what());
    }
  }

  if (doc.contains("rho")) cfg.rho = doc["rho"].get<double>();
  if (doc.contains("limits")) {
    const auto& lm = doc["limits"];
    if (lm.value("max_boxes", 0.0) > 0) cfg.limits.max_boxes = lm["max_boxes"].get<std::size_t>();
    if (lm.value("max_seconds", 0.0) > 0) cfg.limits.max_seconds = lm["max_seconds"].get<double>();
  }
  cfg.threads = doc.value("threads", 1);

  if (doc.contains("output")) {
    const auto& out = doc["output"];
    cfg.out_controller = out.value("controller", "");
    cfg.out_csv = out.value("winning_csv", "");
    cfg.out_stats = out.value("stats", "");
  }
  return cfg;
}

inline ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  nlohmann::ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: invalid JSON: " + std::string(e.what()));
  }
  std::string dir = ".";
  auto slash = path.find_last_of('/');
  if (slash != std::string::npos) dir = path.substr(0, slash);
  return parse_config(doc, dir);
}

/* ---- derived quantities and synthesis drivers ---- */

struct SynthArtifacts {
  SynthResult result;
  double estimated_K = 0.0;
};

inline SynthArtifacts run_synthesis(const ProblemConfig& cfg) {
  SynthArtifacts out;
  SynthOptions opt;
  opt.sched = cfg.sched;
  opt.threads = cfg.threads;
  opt.limits = cfg.limits;
  opt.rho = cfg.rho;

  DomainInit dom = initialize_domain(cfg.spec, cfg.system.state_dim, cfg.sched.eps_inner);

  if (cfg.system.kind == SystemKind::ContinuousField) {
    TaylorConfig ty = cfg.taylor;
    SampledImage img(cfg.system, ty);
    if (ty.delta > 0.0 && ty.K <= 0.0) {
      out.estimated_K = img.estimate_width_constant(cfg.spec.state_space, cfg.seed + 1);
      img.set_width_constant(out.estimated_K);
    } else {
      out.estimated_K = ty.K;
    }
    out.result = synthesize(img, dom, opt);
  } else {
    DiscreteImage img(cfg.system);
    out.result = synthesize(img, dom, opt);
  }
  return out;
}

inline void write_winning_csv(const std::string& path, const SynthResult& r, int state_dim) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (int i = 0; i < state_dim; ++i) out << "lo_" << i + 1 << ",hi_" << i + 1 << ",";
  out << "tag\n";
  char buf[64];
  auto row = [&](const Box& b, const char* tag) {
    for (const auto& d : b.dims) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,", d.lo, d.hi);
      out << buf;
    }
    out << tag << "\n";
  };
  for (const auto& b : r.winning.boxes) row(b, "inner");
  for (const auto& b : r.undetermined.boxes) row(b, "undet");
  for (const auto& b : r.outside.boxes) row(b, "outside");
}

inline void write_stats_json(const std::string& path, const ProblemConfig& cfg,
                             const SynthArtifacts& art) {
  nlohmann::ordered_json doc;
  doc["name"] = cfg.name;
  doc["status"] = art.result.status == SynthStatus::Converged ? "converged" : "capped";
  doc["outer_iterations"] = art.result.stats.outer_iterations;
  doc["inner_iterations"] = art.result.stats.inner_iterations;
  doc["boxes_classified"] = art.result.stats.boxes_classified;
  doc["winning_boxes"] = art.result.stats.winning_boxes;
  doc["undetermined_boxes"] = art.result.undetermined.size();
  doc["outside_boxes"] = art.result.outside.size();
  doc["partitions"] =
      art.result.stats.winning_boxes + art.result.undetermined.size() + art.result.outside.size();
  doc["winning_volume"] = art.result.winning.volume();
  doc["wall_seconds"] = art.result.stats.seconds;
  if (art.estimated_K > 0.0) doc["width_constant_K"] = art.estimated_K;
  if (!art.result.message.empty()) doc["message"] = art.result.message;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << doc.dump(1) << "\n";
}

} // namespace reachstay

#endif
