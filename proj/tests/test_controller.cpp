#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "reachstay/controller.hpp"
#include "reachstay/simulate.hpp"

using namespace reachstay;

namespace {

Box box1(double lo, double hi) { return Box(std::vector<Interval>{Interval(lo, hi)}); }

SystemModel& linear_system() {
  static SystemModel sys =
      parse_system("state x1; control finite {(-0.4),(0),(0.4)}; x1+ = 0.5*x1 + u1;");
  return sys;
}

SynthResult synth_linear(double eps = 0.02) {
  DiscreteImage img(linear_system());
  Spec spec;
  spec.state_space = box1(-2, 2);
  spec.target_boxes = {box1(-0.5, 0.5)};
  DomainInit dom = initialize_domain(spec, 1, eps);
  SynthOptions opt;
  opt.sched.eps_outer = eps;
  return synthesize(img, dom, opt);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

} // namespace

TEST_CASE("single-cell strategy lookup") {
  Controller c({{box1(0, 1), {0}}}, {{0.0}}, 1);
  REQUIRE(c.lookup({0.5}) == std::vector<std::uint32_t>{0});
  REQUIRE(c.lookup({2.0}).empty());
}

TEST_CASE("boundary points return the union of touching cells") {
  Controller c({{box1(0, 1), {0}}, {box1(1, 2), {1}}}, {{-1.0}, {1.0}}, 1);
  REQUIRE(c.lookup({1.0}) == std::vector<std::uint32_t>{0, 1});
  REQUIRE(c.lookup({0.5}) == std::vector<std::uint32_t>{0});
  REQUIRE(c.lookup({1.5}) == std::vector<std::uint32_t>{1});
}

TEST_CASE("extraction fails on an empty winning set") {
  SystemModel sys = parse_system("state x1; control finite {(0)}; x1+ = 2*x1;");
  DiscreteImage img(sys);
  Spec spec;
  spec.state_space = box1(-2, 2);
  spec.target_boxes = {box1(0.5, 1.0)};
  DomainInit dom = initialize_domain(spec, 1, 0.01);
  SynthOptions opt;
  opt.sched.eps_outer = 0.01;
  SynthResult r = synthesize(img, dom, opt);
  REQUIRE_THROWS_WITH(extract(r, sys, 0.01),
                      Catch::Matchers::ContainsSubstring("not realizable"));
}

TEST_CASE("save/load round trip is byte-identical and lookup-stable") {
  SynthResult r = synth_linear();
  Controller c = extract(r, linear_system(), 0.02);
  c.spec["name"] = "linear1d";

  const std::string p1 = "ctrl_roundtrip_1.json", p2 = "ctrl_roundtrip_2.json";
  save_controller(c, p1);
  Controller loaded = load_controller(p1);
  save_controller(loaded, p2);
  REQUIRE(slurp(p1) == slurp(p2));

  REQUIRE(loaded.lookup({0.3}) == c.lookup({0.3}));
  REQUIRE(loaded.epsilon == c.epsilon);
  REQUIRE(loaded.system_hash == c.system_hash);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("corrupted controller files are rejected") {
  SynthResult r = synth_linear();
  Controller c = extract(r, linear_system(), 0.02);
  const std::string path = "ctrl_corrupt.json";
  save_controller(c, path);

  std::string text = slurp(path);
  {
    /* truncated file */
    std::ofstream out(path, std::ios::binary);
    out << text.substr(0, text.size() / 2);
  }
  REQUIRE_THROWS_WITH(load_controller(path), Catch::Matchers::ContainsSubstring("malformed"));

  {
    /* tampered payload breaks the digest */
    std::string t = text;
    auto pos = t.find("\"cells\"");
    pos = t.find("0x", pos);
    t[pos + 2] = t[pos + 2] == '1' ? '2' : '1';
    std::ofstream out(path, std::ios::binary);
    out << t;
  }
  REQUIRE_THROWS_WITH(load_controller(path), Catch::Matchers::ContainsSubstring("digest"));

  {
    /* wrong version */
    nlohmann::ordered_json doc = nlohmann::ordered_json::parse(text);
    doc["format_version"] = 99;
    std::ofstream out(path, std::ios::binary);
    out << doc.dump(1);
  }
  REQUIRE_THROWS_WITH(load_controller(path), Catch::Matchers::ContainsSubstring("version"));
  std::remove(path.c_str());
}

TEST_CASE("interior points of the winning region hit exactly one cell") {
  SynthResult r = synth_linear();
  Controller c = extract(r, linear_system(), 0.02);
  std::mt19937_64 rng(808);
  auto unit = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
  CoverQuery cover(&r.winning.boxes);
  int checked = 0;
  for (int t = 0; t < 10000; ++t) {
    double x = -1.9 + 3.8 * unit();
    if (!cover.covered(box1(x, x))) continue;
    int hits = 0;
    for (const auto& e : c.cells())
      if (e.box[0].lo < x && x < e.box[0].hi) ++hits;
    /* dyadic cell boundaries have measure zero; random points land inside */
    if (hits == 0) continue;
    REQUIRE(hits == 1);
    ++checked;
  }
  REQUIRE(checked > 9000);
}

TEST_CASE("closed loop reaches and stays under every tie policy") {
  SynthResult r = synth_linear();
  Controller c = extract(r, linear_system(), 0.02);
  PointDynamics dyn(linear_system());
  Paver omega;
  omega.boxes.push_back(box1(-0.5, 0.5));
  TargetSet target = TargetSet::boxes(&omega);

  std::mt19937_64 rng(99);
  auto unit = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
  CoverQuery cover(&r.winning.boxes);
  for (TiePolicy tie : {TiePolicy::First, TiePolicy::Random, TiePolicy::MinNorm}) {
    for (int t = 0; t < 50; ++t) {
      double x = -1.9 + 3.8 * unit();
      if (!cover.covered(box1(x, x))) continue;
      SimulateOptions opt;
      opt.horizon = 200;
      opt.tie = tie;
      opt.seed = 1000 + t;
      Trajectory tr = simulate(dyn, c, {x}, opt, &target);
      REQUIRE(!tr.violation);
      REQUIRE(tr.satisfied_from >= 0);
      /* persistence for at least 100 recorded steps after entry */
      REQUIRE(static_cast<long>(tr.states.size()) - tr.satisfied_from >= 100);
    }
  }
}

TEST_CASE("a start outside the winning set is flagged, not crashed") {
  SynthResult r = synth_linear();
  Controller c = extract(r, linear_system(), 0.02);
  PointDynamics dyn(linear_system());
  SimulateOptions opt;
  opt.horizon = 10;
  Trajectory tr = simulate(dyn, c, {5.0}, opt, nullptr);
  REQUIRE(tr.violation);
  REQUIRE(tr.states.size() == 1);
}

TEST_CASE("disturbed closed loop stays when synthesis accounted for the bound") {
  SystemModel sys = parse_system(
      "state x1; control finite {(-0.4),(0),(0.4)}; disturbance additive 0.05; "
      "x1+ = 0.5*x1 + u1;");
  DiscreteImage img(sys);
  Spec spec;
  spec.state_space = box1(-2, 2);
  spec.target_boxes = {box1(-0.6, 0.6)};
  DomainInit dom = initialize_domain(spec, 1, 0.01);
  SynthOptions opt;
  opt.sched.eps_outer = 0.01;
  SynthResult r = synthesize(img, dom, opt);
  REQUIRE(!r.winning.empty());
  Controller c = extract(r, sys, 0.01);
  PointDynamics dyn(sys);
  Paver omega;
  omega.boxes.push_back(box1(-0.6, 0.6));
  TargetSet target = TargetSet::boxes(&omega);
  CoverQuery cover(&r.winning.boxes);

  std::mt19937_64 rng(4242);
  auto unit = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
  for (int t = 0; t < 100; ++t) {
    double x = -1.9 + 3.8 * unit();
    if (!cover.covered(box1(x, x))) continue;
    SimulateOptions sopt;
    sopt.horizon = 300;
    sopt.disturbance.kind = DisturbancePolicy::Kind::Extreme;
    sopt.disturbance.bound = sys.delta;
    sopt.seed = t;
    Trajectory tr = simulate(dyn, c, {x}, sopt, &target);
    REQUIRE(!tr.violation);
    REQUIRE(tr.satisfied_from >= 0);
  }
}
