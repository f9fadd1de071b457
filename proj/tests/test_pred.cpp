#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "reachstay/pred.hpp"

using namespace reachstay;

namespace {

double unit(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

Box box1(double lo, double hi) { return Box(std::vector<Interval>{Interval(lo, hi)}); }

Paver paver1(std::initializer_list<std::pair<double, double>> spans) {
  Paver p;
  for (auto [lo, hi] : spans) p.boxes.push_back(box1(lo, hi));
  return p;
}

std::string dump(const CPredResult& r) {
  std::ostringstream os;
  for (const auto& b : r.inner.boxes) os << "I" << to_string(b);
  for (const auto& b : r.undetermined.boxes) os << "U" << to_string(b);
  for (const auto& b : r.outside.boxes) os << "O" << to_string(b);
  for (const auto& e : r.table.entries) {
    os << "K" << to_string(e.box) << ":";
    for (auto u : e.controls) os << u << ",";
  }
  return os.str();
}

/* analytic predecessor of [ylo,yhi] under x+ = a x + u over the control list */
auto pre_member(double a, std::vector<double> us, double ylo, double yhi) {
  return [=](double x) {
    for (double u : us)
      if (a * x + u >= ylo && a * x + u <= yhi) return true;
    return false;
  };
}

/* grid-sampled sandwich check: every grid point satisfying `lower` must be
 * covered by the inner paving, and every inner point must satisfy `upper` */
template <class Lower, class Upper>
void check_sandwich(const CPredResult& r, double xlo, double xhi, double step, Lower lower,
                    Upper upper) {
  CoverQuery cover(&r.inner.boxes);
  int n = static_cast<int>((xhi - xlo) / step + 0.5);
  for (int i = 0; i <= n; ++i) {
    double x = xlo + (xhi - xlo) * i / n;
    if (lower(x)) {
      INFO("grid point " << x << " should be in the inner paving");
      REQUIRE(cover.covered(box1(x, x)));
    }
  }
  for (const auto& b : r.inner.boxes) {
    INFO("inner box " << to_string(b) << " must lie inside the analytic predecessor");
    for (int k = 0; k <= 10; ++k)
      REQUIRE(upper(b[0].lo + b[0].width() * k / 10.0));
  }
}

} // namespace

TEST_CASE("paver coverage across a seam") {
  Paver p = paver1({{0, 1}, {1, 2}});
  REQUIRE(paver_covers(p, box1(0.5, 1.5)) == Where::Inside);

  Paver q = paver1({{0, 1}});
  REQUIRE(paver_covers(q, box1(2, 3)) == Where::Outside);
  REQUIRE(paver_covers(q, box1(0.5, 1.5)) == Where::Boundary);
}

TEST_CASE("paver coverage in two dimensions") {
  Paver p;
  p.boxes.push_back(Box(std::vector<Interval>{Interval(0, 1), Interval(0, 2)}));
  p.boxes.push_back(Box(std::vector<Interval>{Interval(1, 2), Interval(0, 1)}));
  p.boxes.push_back(Box(std::vector<Interval>{Interval(1, 2), Interval(1, 2)}));
  Box q(std::vector<Interval>{Interval(0.5, 1.5), Interval(0.5, 1.5)});
  REQUIRE(paver_covers(p, q) == Where::Inside);
  Box out(std::vector<Interval>{Interval(0.5, 2.5), Interval(0.5, 1.5)});
  REQUIRE(paver_covers(p, out) == Where::Boundary);
}

TEST_CASE("cpred on the contraction map") {
  SystemModel sys = parse_system("state x1; control finite {(0)}; x1+ = 0.5*x1;");
  DiscreteImage img(sys);
  Paver X = paver1({{-2, 2}});
  Paver Y = paver1({{-1, 1}});
  auto r = cpred(img, X, TargetSet::boxes(&Y), {.eps = 0.01});

  /* analytic Pre(Y) is all of X; rounding may park only boundary slivers */
  check_sandwich(r, -1.99, 1.99, 0.01, pre_member(0.5, {0}, -0.99, 0.99),
                 pre_member(0.5, {0}, -1.0 - 1e-9, 1.0 + 1e-9));
  for (const auto& b : r.undetermined.boxes) {
    REQUIRE(b[0].width() < 0.01);
    REQUIRE(std::abs(std::abs(b[0].mid()) - 2.0) < 0.05);
  }
  REQUIRE(r.outside.empty());
  /* K's boxes are exactly the inner paving */
  REQUIRE(r.table.size() == r.inner.size());
}

TEST_CASE("empty target sends everything outside") {
  SystemModel sys = parse_system("state x1; control finite {(0)}; x1+ = 0.5*x1;");
  DiscreteImage img(sys);
  Paver X = paver1({{-2, 2}});
  Paver Y;
  auto r = cpred(img, X, TargetSet::boxes(&Y), {.eps = 0.01});
  REQUIRE(r.inner.empty());
  REQUIRE(r.undetermined.empty());
  REQUIRE(r.outside.size() == 1);
  REQUIRE(r.outside.boxes[0] == X.boxes[0]);
}

TEST_CASE("cpred with shift controls") {
  SystemModel sys = parse_system("state x1; control finite {(-1),(0),(1)}; x1+ = x1 + u1;");
  DiscreteImage img(sys);
  Paver X = paver1({{-2, 2}});
  Paver Y = paver1({{-0.5, 0.5}});
  auto r = cpred(img, X, TargetSet::boxes(&Y), {.eps = 0.01});
  /* analytic Pre = Y + [-1,1] = [-1.5,1.5]; allow the eps boundary band */
  check_sandwich(r, -2, 2, 0.01, pre_member(1.0, {-1, 0, 1}, -0.49, 0.49),
                 pre_member(1.0, {-1, 0, 1}, -0.5 - 1e-9, 0.5 + 1e-9));
}

TEST_CASE("sandwich of Lemma 1 on the linear benchmark") {
  SystemModel sys =
      parse_system("state x1; control finite {(-0.4),(0),(0.4)}; x1+ = 0.5*x1 + u1;");
  DiscreteImage img(sys);
  const double rho = 0.5;
  for (double eps : {0.1, 0.01}) {
    Paver X = paver1({{-2, 2}});
    Paver Y = paver1({{-0.5, 0.5}});
    auto r = cpred(img, X, TargetSet::boxes(&Y), {.eps = eps});
    /* lower: Pre(Y erode B_{rho eps}); upper: Pre(Y) */
    double re = rho * eps;
    check_sandwich(r, -2, 2, eps / 10.0,
                   pre_member(0.5, {-0.4, 0.0, 0.4}, -0.5 + re, 0.5 - re),
                   pre_member(0.5, {-0.4, 0.0, 0.4}, -0.5 - 1e-9, 0.5 + 1e-9));
  }
}

TEST_CASE("sandwich of Lemma 2 with a sampled control box") {
  SystemModel sys = parse_system("state x1; control box [-0.4,0.4] step 0.4; x1+ = 0.5*x1 + u1;");
  REQUIRE(parse_system("state x1; control box [-0.4,0.4] step 0.4; x1+ = 0.5*x1 + u1;")
              .n_modes() == 3);
  DiscreteImage img(sys);
  const double rho = 0.5, eta = 0.4, eps = 0.01;
  Paver X = paver1({{-2, 2}});
  Paver Y = paver1({{-0.5, 0.5}});
  auto r = cpred(img, X, TargetSet::boxes(&Y), {.eps = eps});
  double margin = rho * (eps + eta);
  check_sandwich(r, -2, 2, eps / 10.0,
                 pre_member(0.5, {-0.4, 0.0, 0.4}, -0.5 + margin, 0.5 - margin),
                 pre_member(0.5, {-0.4, 0.0, 0.4}, -0.5 - 1e-9, 0.5 + 1e-9));
}

TEST_CASE("non-additive disturbance is minced per Remark 3") {
  SystemModel sys = parse_system(
      "state x1; control finite {(0)}; disturbance inner box [-0.2,0.2] step 0.1; "
      "x1+ = x1 + w1;");
  DiscreteImage img(sys);
  Paver X = paver1({{-2, 2}});
  Paver Y = paver1({{-1, 1}});
  auto r = cpred(img, X, TargetSet::boxes(&Y), {.eps = 0.01});
  /* inner must satisfy x + [-0.2,0.2] subset of Y, i.e. |x| <= 0.8 */
  check_sandwich(r, -2, 2, 0.001, [](double x) { return std::abs(x) <= 0.79; },
                 [](double x) { return std::abs(x) <= 0.8 + 1e-9; });
  /* pieces: image evaluation produces one box per W cell */
  ImageWorkspace ws;
  std::vector<Box> pieces;
  REQUIRE(img.eval(box1(0, 0.1), 0, pieces, ws));
  REQUIRE(pieces.size() == 4);
}

TEST_CASE("inequality targets follow Remark 2") {
  SystemModel sys = parse_system("state x1; control finite {(0)}; x1+ = 0.5*x1;");
  DiscreteImage img(sys);
  Paver X = paver1({{-2, 2}});
  /* y^2 - 1 <= 0 describes [-1,1] */
  auto g = parse_system("state x1; x1+ = x1^2 - 1;").field;
  auto r = cpred(img, X, TargetSet::inequalities(g, 1), {.eps = 0.01});
  check_sandwich(r, -1.99, 1.99, 0.01, [](double x) { return std::abs(x) <= 1.98; },
                 [](double) { return true; });
  REQUIRE(r.outside.empty());

  /* and a target the map cannot always hit: y^2 - 0.25 <= 0 is [-0.5,0.5] */
  auto g2 = parse_system("state x1; x1+ = x1^2 - 0.25;").field;
  auto r2 = cpred(img, X, TargetSet::inequalities(g2, 1), {.eps = 0.01});
  check_sandwich(r2, -2, 2, 0.001, [](double x) { return std::abs(x) <= 0.99; },
                 [](double x) { return std::abs(x) <= 1.0 + 1e-9; });
  REQUIRE(!r2.outside.empty());
}

TEST_CASE("valid control records are sound under the declared disturbance") {
  SystemModel sys = parse_system(
      "state x1; control finite {(-0.4),(0),(0.4)}; disturbance additive 0.05; "
      "x1+ = 0.5*x1 + u1;");
  DiscreteImage img(sys);
  Paver X = paver1({{-2, 2}});
  Paver Y = paver1({{-0.6, 0.6}});
  auto r = cpred(img, X, TargetSet::boxes(&Y), {.eps = 0.01});
  REQUIRE(!r.table.entries.empty());
  TargetSet target = TargetSet::boxes(&Y);
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto& e = r.table.entries[rng() % r.table.entries.size()];
    const auto u = e.controls[rng() % e.controls.size()];
    double x = e.box[0].lo + e.box[0].width() * unit(rng);
    double d = (2.0 * unit(rng) - 1.0) * sys.delta;
    double succ = 0.5 * x + sys.controls[u][0] + d;
    REQUIRE(target.contains_point({succ}));
  }
}

TEST_CASE("cpred rejects a nonpositive precision") {
  SystemModel sys = parse_system("state x1; control finite {(0)}; x1+ = x1;");
  DiscreteImage img(sys);
  Paver X = paver1({{-1, 1}});
  Paver Y = paver1({{-1, 1}});
  REQUIRE_THROWS_AS(cpred(img, X, TargetSet::boxes(&Y), {.eps = 0.0}),
                    std::invalid_argument);
}

TEST_CASE("empty input domain yields an empty result") {
  SystemModel sys = parse_system("state x1; control finite {(0)}; x1+ = x1;");
  DiscreteImage img(sys);
  Paver X, Y = paver1({{-1, 1}});
  auto r = cpred(img, X, TargetSet::boxes(&Y), {.eps = 0.1});
  REQUIRE(r.inner.empty());
  REQUIRE(r.undetermined.empty());
  REQUIRE(r.outside.empty());
}

TEST_CASE("identical inputs and thread counts give identical pavings") {
  SystemModel sys = parse_system(
      "state x1 x2; control finite {(-0.3),(0),(0.3)}; "
      "x1+ = 0.9*x1 + 0.1*x2 + u1; x2+ = 0.8*x2 - 0.05*x1;");
  DiscreteImage img(sys);
  Paver X;
  X.boxes.push_back(Box(std::vector<Interval>{Interval(-2, 2), Interval(-2, 2)}));
  Paver Y;
  Y.boxes.push_back(Box(std::vector<Interval>{Interval(-1, 1), Interval(-1, 1)}));
  auto r1 = cpred(img, X, TargetSet::boxes(&Y), {.eps = 0.05, .threads = 1});
  auto r2 = cpred(img, X, TargetSet::boxes(&Y), {.eps = 0.05, .threads = 4});
  auto r3 = cpred(img, X, TargetSet::boxes(&Y), {.eps = 0.05, .threads = 1});
  REQUIRE(dump(r1) == dump(r2));
  REQUIRE(dump(r1) == dump(r3));
  REQUIRE(!r1.inner.empty());
}
