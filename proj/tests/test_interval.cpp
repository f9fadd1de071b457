#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "reachstay/box.hpp"
#include "reachstay/interval.hpp"

using namespace reachstay;

namespace {

/* deterministic uniform double in [0,1); std distributions are not
 * portable across implementations, so map the raw bits ourselves */
double unit(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit(rng);
}

Interval random_interval(std::mt19937_64& rng, double lo, double hi, double max_w) {
  double a = uniform(rng, lo, hi);
  double w = max_w * unit(rng);
  return Interval(a, std::min(a + w, hi));
}

double point_in(std::mt19937_64& rng, const Interval& iv) {
  return iv.lo + (iv.hi - iv.lo) * unit(rng);
}

} // namespace

TEST_CASE("addition on exact rational endpoints") {
  Interval r = Interval(1, 2) + Interval(3, 4);
  REQUIRE(r.lo <= 4.0);
  REQUIRE(r.hi >= 6.0);
  REQUIRE(r.lo >= 4.0 - 1e-12);
  REQUIRE(r.hi <= 6.0 + 1e-12);
}

TEST_CASE("sin of a point stays near the point value") {
  Interval r = sin(Interval(0.0));
  REQUIRE(r.contains(0.0));
  REQUIRE(r.width() < 1e-12);
}

TEST_CASE("product matches the endpoint-product oracle") {
  /* brute-force min/max over the four endpoint products */
  double a = -1, b = 2, c = -3, d = 1;
  double prods[4] = {a * c, a * d, b * c, b * d};
  double lo = *std::min_element(prods, prods + 4);
  double hi = *std::max_element(prods, prods + 4);
  REQUIRE(lo == -6.0);
  REQUIRE(hi == 3.0);
  Interval r = Interval(a, b) * Interval(c, d);
  REQUIRE(r.lo <= -6.0);
  REQUIRE(r.hi >= 3.0);
  REQUIRE(r.lo >= -6.0 - 1e-12);
  REQUIRE(r.hi <= 3.0 + 1e-12);
}

TEST_CASE("division by a zero-straddling interval returns the whole line") {
  Interval r = Interval(1, 2) / Interval(-1, 1);
  REQUIRE(r.lo == -kInf);
  REQUIRE(r.hi == kInf);
}

TEST_CASE("empty propagates through arithmetic") {
  Interval e = Interval::empty();
  REQUIRE((e + Interval(1, 2)).is_empty());
  REQUIRE((Interval(1, 2) * e).is_empty());
  REQUIRE(sin(e).is_empty());
  REQUIRE(pow_int(e, 3).is_empty());
}

TEST_CASE("containment soundness of every primitive") {
  std::mt19937_64 rng(2024);
  const int N = 10000;
  for (int it = 0; it < N; ++it) {
    Interval x = random_interval(rng, -10.0, 10.0, 3.0);
    Interval y = random_interval(rng, -10.0, 10.0, 3.0);
    double px = point_in(rng, x), py = point_in(rng, y);

    REQUIRE((x + y).contains(px + py));
    REQUIRE((x - y).contains(px - py));
    REQUIRE((x * y).contains(px * py));
    if (!y.contains(0.0)) REQUIRE((x / y).contains(px / py));
    REQUIRE(sin(x).contains(std::sin(px)));
    REQUIRE(cos(x).contains(std::cos(px)));
    REQUIRE(atan(x).contains(std::atan(px)));
    Interval t = tan(x);
    REQUIRE(t.contains(std::tan(px)));
    Interval ex = exp(intersect(x, Interval(-50, 50)));
    if (!ex.is_empty() && x.subset_of(Interval(-50, 50)))
      REQUIRE(ex.contains(std::exp(px)));
    for (long n = 2; n <= 5; ++n)
      REQUIRE(pow_int(x, n).contains(std::pow(px, static_cast<double>(n))));
    if (x.lo > 0.1) {
      REQUIRE(sqrt(x).contains(std::sqrt(px)));
      REQUIRE(pow_int(x, -2).contains(std::pow(px, -2.0)));
    }
    /* mod2pi: reduced value must be congruent to the input */
    Interval m = mod2pi(x);
    double red = std::fmod(px, 2 * M_PI);
    if (red < 0) red += 2 * M_PI;
    REQUIRE(m.lo <= red + 1e-9);
    REQUIRE(m.hi >= red - 1e-9);
  }
}

TEST_CASE("inclusion monotonicity on nested intervals") {
  std::mt19937_64 rng(77);
  for (int it = 0; it < 2000; ++it) {
    Interval b = random_interval(rng, -8.0, 8.0, 4.0);
    double l = point_in(rng, b), r = point_in(rng, b);
    Interval a(std::min(l, r), std::max(l, r));
    REQUIRE(a.subset_of(b));
    REQUIRE(sin(a).subset_of(sin(b)));
    REQUIRE(cos(a).subset_of(cos(b)));
    REQUIRE(tan(a).subset_of(tan(b)));
    REQUIRE(atan(a).subset_of(atan(b)));
    REQUIRE(sqr(a).subset_of(sqr(b)));
    REQUIRE(pow_int(a, 3).subset_of(pow_int(b, 3)));
    Interval c = random_interval(rng, -8.0, 8.0, 4.0);
    REQUIRE((a + c).subset_of(b + c));
    REQUIRE((a * c).subset_of(b * c));
  }
}

TEST_CASE("erode and inflate") {
  Box b(std::vector<Interval>{Interval(0, 4), Interval(0, 2)});
  Box e = erode(b, 0.5);
  REQUIRE(e[0].lo == Catch::Approx(0.5));
  REQUIRE(e[0].hi == Catch::Approx(3.5));
  REQUIRE(e[1].lo == Catch::Approx(0.5));
  REQUIRE(e[1].hi == Catch::Approx(1.5));

  REQUIRE(erode(Box(std::vector<Interval>{Interval(0, 1)}), 0.6).is_empty());

  Box same = erode(b, 0.0);
  REQUIRE(same == b);

  Interval i = inflate(Interval(0, 1), 0.5);
  REQUIRE(i.lo <= -0.5);
  REQUIRE(i.hi >= 1.5);
  REQUIRE(i.width() <= 2.0 + 1e-12);
}

TEST_CASE("erode/inflate adjunction") {
  std::mt19937_64 rng(9);
  for (int it = 0; it < 2000; ++it) {
    Box b(std::vector<Interval>{random_interval(rng, -5, 5, 4), random_interval(rng, -5, 5, 4)});
    double r = 2.0 * unit(rng);
    Box ei = erode(inflate(b, r), r);
    REQUIRE(b.subset_of(inflate(ei, 1e-12)));
    Box ie_src = erode(b, r);
    if (!ie_src.is_empty()) {
      Box ie = inflate(ie_src, r);
      /* allow the rounding introduced by the two outward passes */
      REQUIRE(ie.subset_of(inflate(b, 1e-12)));
    }
  }
}

TEST_CASE("bisect splits the widest dimension at its midpoint") {
  Box b(std::vector<Interval>{Interval(0, 2), Interval(0, 1)});
  auto [l, r] = bisect(b);
  REQUIRE(l[0] == Interval(0, 1));
  REQUIRE(r[0] == Interval(1, 2));
  REQUIRE(l[1] == Interval(0, 1));
  REQUIRE(r[1] == Interval(0, 1));

  /* symmetric tie -> lowest dimension */
  Box sq(std::vector<Interval>{Interval(0, 1), Interval(0, 1)});
  auto [sl, sr] = bisect(sq);
  REQUIRE(sl[0].hi == 0.5);
  REQUIRE(sr[0].lo == 0.5);
  REQUIRE(sl[1] == Interval(0, 1));

  /* max-width rule picks dimension 1 */
  Box t(std::vector<Interval>{Interval(0, 1), Interval(0, 4), Interval(0, 2)});
  auto [tl, tr] = bisect(t);
  REQUIRE(tl[1] == Interval(0, 2));
  REQUIRE(tr[1] == Interval(2, 4));
  REQUIRE(tl[0] == Interval(0, 1));
  REQUIRE(tl[2] == Interval(0, 2));
}

TEST_CASE("bisect partition property") {
  std::mt19937_64 rng(5);
  for (int it = 0; it < 2000; ++it) {
    Box b(std::vector<Interval>{random_interval(rng, -5, 5, 3), random_interval(rng, -5, 5, 3),
                                random_interval(rng, -5, 5, 3)});
    if (b.width() == 0.0) continue;
    auto [l, r] = bisect(b);
    std::size_t j = widest_dim(b);
    /* per-endpoint equality of the union */
    REQUIRE(l[j].lo == b[j].lo);
    REQUIRE(r[j].hi == b[j].hi);
    REQUIRE(l[j].hi == r[j].lo);
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (i == j) continue;
      REQUIRE(l[i] == b[i]);
      REQUIRE(r[i] == b[i]);
    }
    /* interiors disjoint */
    REQUIRE(l[j].hi <= r[j].lo);
  }
}

TEST_CASE("box predicates") {
  Box b(std::vector<Interval>{Interval(0, 1), Interval(0, 1)});
  REQUIRE(b.contains({0.5, 0.5}));
  REQUIRE(!b.contains({1.5, 0.5}));
  REQUIRE(!Interval(0, 1).intersects(Interval(2, 3)));
  REQUIRE(Interval(0, 1).intersects(Interval(1, 3)));
  Interval h = hull(Interval(0, 1), Interval(2, 3));
  REQUIRE(h == Interval(0, 3));
}

TEST_CASE("mod2pi stays inside [0,2pi)") {
  std::mt19937_64 rng(31);
  for (int it = 0; it < 2000; ++it) {
    Interval x = random_interval(rng, -40.0, 40.0, 2.0);
    Interval m = mod2pi(x);
    REQUIRE(m.lo >= 0.0);
    REQUIRE(m.hi <= kTwoPi.hi);
  }
  /* a wide argument collapses to the full period */
  Interval w = mod2pi(Interval(0.0, 10.0));
  REQUIRE(w.lo == 0.0);
  REQUIRE(w.hi >= kTwoPi.lo);
}
