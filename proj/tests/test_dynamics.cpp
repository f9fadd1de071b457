#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "reachstay/dsl.hpp"
#include "reachstay/expr.hpp"
#include "reachstay/system.hpp"

using namespace reachstay;

namespace {

const char* kVanDerPol = R"(
# reversed Van der Pol field
state x1 x2;
x1' = -x2;
x2' = x1 + (x1^2 - 1)*x2;
)";

const char* kPendulum = R"(
state x1 x2;
control box [-10,10] step 0.05;
x1' = x2;
x2' = 24.5*sin(x1) - 4.1666666666666667*x2 + 12.5*cos(x1)*u1;
)";

double unit(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

Box point_box(std::vector<double> p) {
  std::vector<Interval> d;
  for (double v : p) d.push_back(Interval(v));
  return Box(d);
}

} // namespace

TEST_CASE("parse the Van der Pol field") {
  SystemModel s = parse_system(kVanDerPol);
  REQUIRE(s.kind == SystemKind::ContinuousField);
  REQUIRE(s.state_dim == 2);
  REQUIRE(s.n_modes() == 1);
  REQUIRE(s.controls[0].empty());
}

TEST_CASE("parse a one-dimensional field") {
  SystemModel s = parse_system("state x1; x1' = x1;");
  REQUIRE(s.state_dim == 1);
  REQUIRE(s.field[0]->op == ExprOp::StateVar);
}

TEST_CASE("malformed input gives a positioned syntax error") {
  REQUIRE_THROWS_AS(parse_system("state x1; x1' = *;"), ParseError);
  try {
    parse_system("state x1;\nx1' = *;");
  } catch (const ParseError& e) {
    REQUIRE(e.line == 2);
    REQUIRE(e.col >= 6);
  }
  REQUIRE_THROWS_AS(parse_system("state x1; x1' = y2;"), ParseError);
  REQUIRE_THROWS_AS(parse_system("state x1; x1' = u1;"), ParseError); /* no controls */
  REQUIRE_THROWS_AS(parse_system("state x1 x2; x1' = x1;"), ParseError); /* missing eq */
  REQUIRE_THROWS_AS(parse_system("state x1 x2; x1' = x1; x2+ = x2;"), ParseError);
}

TEST_CASE("print/parse round trip is structurally stable") {
  const char* sources[] = {
      kVanDerPol, kPendulum,
      "state x1; control finite {(-0.4),(0),(0.4)}; x1+ = 0.5*x1 + u1;",
      "state a b c; control finite {(1,0)}; a+ = sqrt(a^2) + mod2pi(b); b+ = atan(c/a) - "
      "exp(b)*u2; c+ = tan(c)^3 + u1;",
  };
  for (const char* src : sources) {
    SystemModel s1 = parse_system(src);
    SystemModel s2 = parse_system(print_system(s1));
    REQUIRE(s1.kind == s2.kind);
    REQUIRE(s1.state_names == s2.state_names);
    REQUIRE(s1.controls == s2.controls);
    REQUIRE(s1.delta == s2.delta);
    for (std::size_t i = 0; i < s1.field.size(); ++i) REQUIRE(equal(s1.field[i], s2.field[i]));
    /* a second pass through the printer is a fixed point */
    REQUIRE(print_system(s1) == print_system(s2));
  }
}

TEST_CASE("lie derivative identities") {
  SystemModel vdp = parse_system(kVanDerPol);

  auto f0 = lie_derivative(vdp, 0);
  REQUIRE(f0[0]->op == ExprOp::StateVar);
  REQUIRE(f0[0]->index == 0);
  REQUIRE(f0[1]->index == 1);

  auto f1 = lie_derivative(vdp, 1);
  REQUIRE(equal(f1[0], vdp.field[0]));
  REQUIRE(equal(f1[1], vdp.field[1]));

  /* d/dt of -x is x: second Lie derivative of the 1-dim decay field */
  SystemModel dec = parse_system("state x1; x1' = 0 - x1;");
  auto f2 = lie_derivative(dec, 2);
  InclusionFn fn({f2[0]}, 1);
  InclusionFn::Scratch s;
  Box r = fn.eval(point_box({3.0}), {}, {}, InclusionForm::Natural, s);
  REQUIRE(r[0].contains(3.0));
  REQUIRE(r[0].width() < 1e-12);
}

TEST_CASE("expression budget error names the order") {
  SystemModel vdp = parse_system(kVanDerPol);
  REQUIRE_THROWS_WITH(lie_derivative(vdp, 8, 50),
                      Catch::Matchers::ContainsSubstring("order"));
}

TEST_CASE("inclusion evaluation at the Van der Pol equilibrium") {
  SystemModel vdp = parse_system(kVanDerPol);
  InclusionFn fn(vdp.field, 2);
  InclusionFn::Scratch s;
  Box r = fn.eval(point_box({0.0, 0.0}), {}, {}, InclusionForm::Natural, s);
  REQUIRE(r[0].contains(0.0));
  REQUIRE(r[1].contains(0.0));
  REQUIRE(r[0].width() < 1e-12);
  REQUIRE(r[1].width() < 1e-12);
}

TEST_CASE("natural form of x*x against the brute-force range oracle") {
  SystemModel s = parse_system("state x1; x1+ = x1*x1;");
  InclusionFn fn(s.field, 1);
  InclusionFn::Scratch sc;
  Box b(std::vector<Interval>{Interval(-1, 2)});
  Box r = fn.eval(b, {}, {}, InclusionForm::Natural, sc);
  /* dependency-blind product gives the [-2,4] hull */
  REQUIRE(r[0].lo <= -2.0);
  REQUIRE(r[0].hi >= 4.0);
  REQUIRE(r[0].lo >= -2.0 - 1e-12);
  REQUIRE(r[0].hi <= 4.0 + 1e-12);
  /* brute-force range scan: true range is [0,4] and must be contained */
  double lo = 1e30, hi = -1e30;
  for (int i = 0; i <= 10000; ++i) {
    double x = -1.0 + 3.0 * i / 10000.0;
    lo = std::min(lo, x * x);
    hi = std::max(hi, x * x);
  }
  REQUIRE(r[0].lo <= lo);
  REQUIRE(r[0].hi >= hi);
}

TEST_CASE("pendulum field vanishes at the upright equilibrium with no input") {
  SystemModel p = parse_system(kPendulum);
  REQUIRE(p.n_modes() == 401);
  /* u = 0 sits in the sampled set */
  int zero_mode = -1;
  for (std::size_t k = 0; k < p.controls.size(); ++k)
    if (std::abs(p.controls[k][0]) < 1e-12) zero_mode = static_cast<int>(k);
  REQUIRE(zero_mode >= 0);
  Box r = eval_inclusion(p, point_box({0.0, 0.0}), zero_mode);
  REQUIRE(r[0].contains(0.0));
  REQUIRE(r[1].contains(0.0));
  REQUIRE(r[0].width() < 1e-12);
  REQUIRE(r[1].width() < 1e-10);
}

TEST_CASE("inclusion width vanishes with the box width") {
  SystemModel vdp = parse_system(kVanDerPol);
  InclusionFn nat(vdp.field, 2);
  InclusionFn cen(vdp.field, 2, true);
  InclusionFn::Scratch s;
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    double cx = -2.0 + 4.0 * unit(rng), cy = -2.0 + 4.0 * unit(rng);
    double prev_n = kInf, prev_c = kInf;
    for (double w = 0.5; w > 1e-6; w *= 0.5) {
      Box b(std::vector<Interval>{Interval(cx - w / 2, cx + w / 2),
                                  Interval(cy - w / 2, cy + w / 2)});
      Box rn = nat.eval(b, {}, {}, InclusionForm::Natural, s);
      Box rc = cen.eval(b, {}, {}, InclusionForm::Centered, s);
      double wn = std::max(rn[0].width(), rn[1].width());
      double wc = std::max(rc[0].width(), rc[1].width());
      REQUIRE(wn <= prev_n + 1e-12);
      REQUIRE(wc <= prev_c + 1e-12);
      /* linear convergence schedule: width within a constant factor of box width */
      REQUIRE(wn <= 40.0 * w + 1e-12);
      REQUIRE(wc <= 40.0 * w + 1e-12);
      prev_n = wn;
      prev_c = wc;
    }
  }
}

TEST_CASE("order-1 Jacobian-vector product matches finite differences") {
  SystemModel vdp = parse_system(kVanDerPol);
  SystemModel pend = parse_system(kPendulum);
  std::mt19937_64 rng(11);
  for (const SystemModel* sys : {&vdp, &pend}) {
    auto f1 = lie_derivative(*sys, 1);
    auto f2 = lie_derivative(*sys, 2);
    InclusionFn fn1(f1, 2), fn2(f2, 2);
    InclusionFn::Scratch s;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> x = {-1.0 + 2.0 * unit(rng), -1.0 + 2.0 * unit(rng)};
      std::vector<double> u = {-5.0 + 10.0 * unit(rng)};
      std::span<const double> uspan(u.data(), sys->control_dim);
      /* f2 = (df/dx) f; compare against central differences of f along f */
      auto fx = fn1.eval_point(x, uspan, {}, s);
      const double h = 1e-6;
      std::vector<double> fd(2);
      for (int i = 0; i < 2; ++i) {
        std::vector<double> xp = x, xm = x;
        for (int j = 0; j < 2; ++j) {
          xp[j] = x[j] + h * fx[j];
          xm[j] = x[j] - h * fx[j];
        }
        auto fp = fn1.eval_point(xp, uspan, {}, s);
        auto fm = fn1.eval_point(xm, uspan, {}, s);
        fd[i] = (fp[i] - fm[i]) / (2 * h);
      }
      auto jvp = fn2.eval_point(x, uspan, {}, s);
      for (int i = 0; i < 2; ++i) {
        double scale = std::max(1.0, std::abs(jvp[i]));
        REQUIRE(std::abs(jvp[i] - fd[i]) / scale < 1e-6);
      }
    }
  }
}

TEST_CASE("control sampling on the paper grids") {
  auto g = sample_controls(Box(std::vector<Interval>{Interval(-1, 1), Interval(-1, 1)}), 0.3);
  REQUIRE(g.size() == 49);
  /* per-axis values include 0, +-0.3, +-0.6, +-0.9 */
  for (double want : {-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9}) {
    bool found = false;
    for (const auto& v : g)
      if (std::abs(v[0] - want) < 1e-12 && std::abs(v[1] - want) < 1e-12) found = true;
    REQUIRE(found);
  }
  /* lexicographic order */
  for (std::size_t i = 1; i < g.size(); ++i)
    REQUIRE((g[i - 1][0] < g[i][0] ||
             (g[i - 1][0] == g[i][0] && g[i - 1][1] < g[i][1])));

  auto p = sample_controls(Box(std::vector<Interval>{Interval(-10, 10)}), 0.05);
  REQUIRE(p.size() == 401);

  auto z = sample_controls(Box(std::vector<Interval>{Interval(0, 0)}), 1.0);
  REQUIRE(z.size() == 1);
  REQUIRE(z[0][0] == 0.0);

  REQUIRE_THROWS_AS(sample_controls(Box(std::vector<Interval>{Interval(0.2, 0.25)}), 1.0),
                    std::invalid_argument);
}

TEST_CASE("mode overrides bind to matching control values") {
  SystemModel s = parse_system(R"(
state x1;
control finite {(0),(1)};
x1+ = x1 + u1;
mode (0) { x1+ = x1; }
)");
  REQUIRE(s.overrides.size() == 1);
  REQUIRE(s.overrides.count(0) == 1);
  Box r = eval_inclusion(s, Box(std::vector<Interval>{Interval(2, 3)}), 0);
  REQUIRE(r[0].lo == 2.0); /* override is the pure identity, no rounding applied */
  REQUIRE(r[0].hi == 3.0);
  Box r1 = eval_inclusion(s, Box(std::vector<Interval>{Interval(2, 3)}), 1);
  REQUIRE(r1[0].contains(3.5));
  REQUIRE(r1[0].lo <= 3.0);
  REQUIRE(r1[0].hi >= 4.0);

  REQUIRE_THROWS_AS(parse_system(R"(
state x1;
control finite {(0),(1)};
x1+ = x1 + u1;
mode (2) { x1+ = x1; }
)"),
                    std::invalid_argument);
}

TEST_CASE("centered form is tighter on small boxes") {
  SystemModel vdp = parse_system(kVanDerPol);
  InclusionFn cen(vdp.field, 2, true);
  InclusionFn nat(vdp.field, 2);
  InclusionFn::Scratch s;
  Box b(std::vector<Interval>{Interval(1.0, 1.01), Interval(0.5, 0.51)});
  Box rn = nat.eval(b, {}, {}, InclusionForm::Natural, s);
  Box rc = cen.eval(b, {}, {}, InclusionForm::Centered, s);
  /* both contain the point image of the center */
  auto c = b.center();
  auto fc = nat.eval_point(c, {}, {}, s);
  for (int i = 0; i < 2; ++i) {
    REQUIRE(rn[i].contains(fc[i]));
    REQUIRE(rc[i].contains(fc[i]));
  }
  REQUIRE(rc[1].width() <= rn[1].width() * 1.5 + 1e-12);
}
