/*
 * interval.hpp
 *
 * Closed interval arithmetic over double with outward rounding.
 * Every primitive widens its result by one ulp per endpoint (two for
 * the libm-backed functions), so the computed interval always contains
 * the exact real-arithmetic image.  Endpoints may be +/-infinity; the
 * canonical empty interval is [+inf,-inf].
 */

#ifndef REACHSTAY_INTERVAL_HPP
#define REACHSTAY_INTERVAL_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace reachstay {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/* one ulp towards -inf; exact bit stepping, no libm call */
inline double ulp_down(double x) {
  if (std::isnan(x) || x == -kInf) return x;
  if (x == 0.0) return -std::numeric_limits<double>::denorm_min();
  std::uint64_t b = std::bit_cast<std::uint64_t>(x);
  b = (x > 0.0) ? b - 1 : b + 1;
  return std::bit_cast<double>(b);
}

/* one ulp towards +inf */
inline double ulp_up(double x) {
  if (std::isnan(x) || x == kInf) return x;
  if (x == 0.0) return std::numeric_limits<double>::denorm_min();
  std::uint64_t b = std::bit_cast<std::uint64_t>(x);
  b = (x > 0.0) ? b + 1 : b - 1;
  return std::bit_cast<double>(b);
}

struct Interval {
  double lo;
  double hi;

  constexpr Interval() : lo(0.0), hi(0.0) {}
  constexpr explicit Interval(double v) : lo(v), hi(v) {}
  constexpr Interval(double l, double h) : lo(l), hi(h) {}

  static constexpr Interval empty() { return Interval(kInf, -kInf); }
  static constexpr Interval whole() { return Interval(-kInf, kInf); }

  bool is_empty() const { return !(lo <= hi); }
  bool is_point() const { return lo == hi; }
  double width() const { return is_empty() ? 0.0 : hi - lo; }
  double mid() const { return lo + (hi - lo) * 0.5; }
  double rad() const { return (hi - lo) * 0.5; }

  bool contains(double x) const { return lo <= x && x <= hi; }
  bool subset_of(const Interval& o) const {
    if (is_empty()) return true;
    return o.lo <= lo && hi <= o.hi;
  }
  bool intersects(const Interval& o) const {
    if (is_empty() || o.is_empty()) return false;
    return lo <= o.hi && o.lo <= hi;
  }

  bool operator==(const Interval& o) const { return lo == o.lo && hi == o.hi; }
  bool operator!=(const Interval& o) const { return !(*this == o); }
};

/* outward widening applied after each primitive */
inline Interval outward(double lo, double hi, int steps = 1) {
  for (int i = 0; i < steps; ++i) {
    lo = ulp_down(lo);
    hi = ulp_up(hi);
  }
  return Interval(lo, hi);
}

/* enclosures of pi and 2*pi (the double constants round below the true value) */
inline const Interval kPi(3.14159265358979311600, ulp_up(3.14159265358979311600));
inline const Interval kTwoPi(6.28318530717958623200, ulp_up(6.28318530717958623200));
inline const Interval kHalfPi(1.57079632679489655800, ulp_up(1.57079632679489655800));

inline Interval intersect(const Interval& a, const Interval& b) {
  if (a.is_empty() || b.is_empty()) return Interval::empty();
  double lo = std::max(a.lo, b.lo), hi = std::min(a.hi, b.hi);
  if (lo > hi) return Interval::empty();
  return Interval(lo, hi);
}

inline Interval hull(const Interval& a, const Interval& b) {
  if (a.is_empty()) return b;
  if (b.is_empty()) return a;
  return Interval(std::min(a.lo, b.lo), std::max(a.hi, b.hi));
}

inline Interval inflate(const Interval& a, double r) {
  if (a.is_empty()) return a;
  return outward(a.lo - r, a.hi + r);
}

/* Pontryagin difference with the ball B_r: shrinks both sides, inward rounding */
inline Interval erode(const Interval& a, double r) {
  if (a.is_empty()) return a;
  if (r == 0.0) return a;
  double lo = ulp_up(a.lo + r), hi = ulp_down(a.hi - r);
  if (lo > hi) return Interval::empty();
  return Interval(lo, hi);
}

inline Interval operator-(const Interval& a) {
  if (a.is_empty()) return a;
  return Interval(-a.hi, -a.lo);
}

inline Interval operator+(const Interval& a, const Interval& b) {
  if (a.is_empty() || b.is_empty()) return Interval::empty();
  return outward(a.lo + b.lo, a.hi + b.hi);
}

inline Interval operator-(const Interval& a, const Interval& b) {
  if (a.is_empty() || b.is_empty()) return Interval::empty();
  return outward(a.lo - b.hi, a.hi - b.lo);
}

inline Interval operator*(const Interval& a, const Interval& b) {
  if (a.is_empty() || b.is_empty()) return Interval::empty();
  /* inf*0 must act as 0 here (an infinite endpoint times a zero-width zero) */
  auto prod = [](double x, double y) {
    double p = x * y;
    return std::isnan(p) ? 0.0 : p;
  };
  double p1 = prod(a.lo, b.lo), p2 = prod(a.lo, b.hi);
  double p3 = prod(a.hi, b.lo), p4 = prod(a.hi, b.hi);
  return outward(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
}

/* divisor straddling zero yields the whole line (documented over-approximation) */
inline Interval operator/(const Interval& a, const Interval& b) {
  if (a.is_empty() || b.is_empty()) return Interval::empty();
  if (b.lo <= 0.0 && b.hi >= 0.0) return Interval::whole();
  double q1 = a.lo / b.lo, q2 = a.lo / b.hi, q3 = a.hi / b.lo, q4 = a.hi / b.hi;
  return outward(std::min({q1, q2, q3, q4}), std::max({q1, q2, q3, q4}));
}

inline Interval operator+(const Interval& a, double s) { return a + Interval(s); }
inline Interval operator+(double s, const Interval& a) { return a + Interval(s); }
inline Interval operator-(const Interval& a, double s) { return a - Interval(s); }
inline Interval operator-(double s, const Interval& a) { return Interval(s) - a; }
inline Interval operator*(const Interval& a, double s) { return a * Interval(s); }
inline Interval operator*(double s, const Interval& a) { return a * Interval(s); }
inline Interval operator/(const Interval& a, double s) { return a / Interval(s); }

inline Interval sqr(const Interval& a) {
  if (a.is_empty()) return a;
  double m = std::max(std::abs(a.lo), std::abs(a.hi));
  double lo = (a.lo <= 0.0 && a.hi >= 0.0) ? 0.0 : std::min(a.lo * a.lo, a.hi * a.hi);
  return outward(lo, m * m);
}

inline Interval sqrt(const Interval& a) {
  if (a.is_empty()) return a;
  if (a.hi < 0.0) return Interval::empty();
  double lo = a.lo <= 0.0 ? 0.0 : ulp_down(std::sqrt(a.lo));
  if (lo < 0.0) lo = 0.0;
  return Interval(lo, ulp_up(std::sqrt(a.hi)));
}

inline Interval exp(const Interval& a) {
  if (a.is_empty()) return a;
  Interval r = outward(std::exp(a.lo), std::exp(a.hi), 2);
  if (r.lo < 0.0) r.lo = 0.0;
  return r;
}

inline Interval atan(const Interval& a) {
  if (a.is_empty()) return a;
  return outward(std::atan(a.lo), std::atan(a.hi), 2);
}

/* integer power; negative exponents go through division */
inline Interval pow_int(const Interval& a, long n) {
  if (a.is_empty()) return a;
  if (n == 0) return Interval(1.0);
  if (n < 0) return Interval(1.0) / pow_int(a, -n);
  if (n == 1) return a;
  if (n == 2) return sqr(a);
  auto ipow = [](double x, long k) { return std::pow(x, static_cast<double>(k)); };
  if (n % 2 == 1) /* odd powers are monotone */
    return outward(ipow(a.lo, n), ipow(a.hi, n), 2);
  double m = std::max(std::abs(a.lo), std::abs(a.hi));
  double lo = (a.lo <= 0.0 && a.hi >= 0.0)
                  ? 0.0
                  : ipow(std::min(std::abs(a.lo), std::abs(a.hi)), n);
  Interval r = outward(lo, ipow(m, n), 2);
  if (r.lo < 0.0) r.lo = 0.0;
  return r;
}

namespace detail {

/* does pi*(off + 2k) fall inside [a,b] for some integer k? conservative near
 * the endpoints, so extrema are never missed for arguments of sane size */
inline bool has_critical(double a, double b, double off) {
  if (b - a >= kTwoPi.lo) return true;
  double slack = 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
  double k0 = std::floor((a / kPi.lo - off) / 2.0);
  for (double k = k0 - 1.0; k <= k0 + 2.0; k += 1.0) {
    double c = (off + 2.0 * k) * kPi.lo;
    if (c >= a - slack && c <= b + slack) return true;
  }
  return false;
}

} // namespace detail

inline Interval sin(const Interval& a) {
  if (a.is_empty()) return a;
  if (!(std::isfinite(a.lo) && std::isfinite(a.hi))) return Interval(-1.0, 1.0);
  if (std::max(std::abs(a.lo), std::abs(a.hi)) > 1e12) return Interval(-1.0, 1.0);
  double sl = std::sin(a.lo), sh = std::sin(a.hi);
  Interval r = outward(std::min(sl, sh), std::max(sl, sh), 2);
  if (detail::has_critical(a.lo, a.hi, 0.5)) r.hi = 1.0;   /* pi/2 + 2k pi */
  if (detail::has_critical(a.lo, a.hi, -0.5)) r.lo = -1.0; /* -pi/2 + 2k pi */
  r.lo = std::max(r.lo, -1.0);
  r.hi = std::min(r.hi, 1.0);
  return r;
}

inline Interval cos(const Interval& a) {
  if (a.is_empty()) return a;
  if (!(std::isfinite(a.lo) && std::isfinite(a.hi))) return Interval(-1.0, 1.0);
  if (std::max(std::abs(a.lo), std::abs(a.hi)) > 1e12) return Interval(-1.0, 1.0);
  double cl = std::cos(a.lo), ch = std::cos(a.hi);
  Interval r = outward(std::min(cl, ch), std::max(cl, ch), 2);
  if (detail::has_critical(a.lo, a.hi, 0.0)) r.hi = 1.0;  /* 2k pi */
  if (detail::has_critical(a.lo, a.hi, 1.0)) r.lo = -1.0; /* pi + 2k pi */
  r.lo = std::max(r.lo, -1.0);
  r.hi = std::min(r.hi, 1.0);
  return r;
}

inline Interval tan(const Interval& a) {
  if (a.is_empty()) return a;
  if (!(std::isfinite(a.lo) && std::isfinite(a.hi))) return Interval::whole();
  if (std::max(std::abs(a.lo), std::abs(a.hi)) > 1e12) return Interval::whole();
  /* pole at pi/2 + k pi = pi*(0.5 + 2*(k/2)) -> reuse the 2k pi scan at half period */
  if (a.hi - a.lo >= kPi.lo) return Interval::whole();
  double slack = 1e-9 * std::max({1.0, std::abs(a.lo), std::abs(a.hi)});
  double k0 = std::floor(a.lo / kPi.lo - 0.5);
  for (double k = k0 - 1.0; k <= k0 + 2.0; k += 1.0) {
    double pole = (k + 0.5) * kPi.lo;
    if (pole >= a.lo - slack && pole <= a.hi + slack) return Interval::whole();
  }
  return outward(std::tan(a.lo), std::tan(a.hi), 2);
}

/* conservative reduction into [0, 2pi) */
inline Interval mod2pi(const Interval& a) {
  if (a.is_empty()) return a;
  if (!(std::isfinite(a.lo) && std::isfinite(a.hi))) return Interval(0.0, kTwoPi.hi);
  if (a.hi - a.lo >= kTwoPi.lo) return Interval(0.0, kTwoPi.hi);
  double k = std::floor(a.lo / kTwoPi.lo);
  Interval r = a - Interval(k) * kTwoPi;
  if (r.lo < 0.0) r = r + kTwoPi;
  if (r.lo < 0.0 || r.hi >= kTwoPi.lo) return Interval(0.0, kTwoPi.hi);
  return r;
}

inline std::string to_string(const Interval& a) {
  if (a.is_empty()) return "[empty]";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "[%.17g,%.17g]", a.lo, a.hi);
  return buf;
}

} // namespace reachstay

#endif
