/*
 * box.hpp
 *
 * Axis-aligned interval vectors and the set operations the paver and
 * predecessor layers are built on.  wid() is the max over coordinate
 * widths; bisection splits the widest dimension at its midpoint with
 * ties broken by the lowest index.
 */

#ifndef REACHSTAY_BOX_HPP
#define REACHSTAY_BOX_HPP

#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "reachstay/interval.hpp"

namespace reachstay {

struct Box {
  std::vector<Interval> dims;

  Box() = default;
  explicit Box(std::size_t n) : dims(n) {}
  explicit Box(std::vector<Interval> d) : dims(std::move(d)) {}

  std::size_t size() const { return dims.size(); }
  Interval& operator[](std::size_t i) { return dims[i]; }
  const Interval& operator[](std::size_t i) const { return dims[i]; }

  bool is_empty() const {
    if (dims.empty()) return true;
    for (const auto& d : dims)
      if (d.is_empty()) return true;
    return false;
  }

  double width() const {
    double w = 0.0;
    for (const auto& d : dims) w = std::max(w, d.width());
    return w;
  }

  double min_width() const {
    double w = kInf;
    for (const auto& d : dims) w = std::min(w, d.width());
    return w;
  }

  double volume() const {
    if (is_empty()) return 0.0;
    double v = 1.0;
    for (const auto& d : dims) v *= d.width();
    return v;
  }

  std::vector<double> center() const {
    std::vector<double> c(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) c[i] = dims[i].mid();
    return c;
  }

  bool contains(const std::vector<double>& x) const {
    if (x.size() != dims.size()) return false;
    for (std::size_t i = 0; i < dims.size(); ++i)
      if (!dims[i].contains(x[i])) return false;
    return true;
  }

  bool subset_of(const Box& o) const {
    if (is_empty()) return true;
    for (std::size_t i = 0; i < dims.size(); ++i)
      if (!dims[i].subset_of(o.dims[i])) return false;
    return true;
  }

  bool intersects(const Box& o) const {
    if (is_empty() || o.is_empty()) return false;
    for (std::size_t i = 0; i < dims.size(); ++i)
      if (!dims[i].intersects(o.dims[i])) return false;
    return true;
  }

  bool operator==(const Box& o) const { return dims == o.dims; }
  bool operator!=(const Box& o) const { return !(*this == o); }
};

/* lexicographic order on bounds; used for canonical sorting */
inline bool box_less(const Box& a, const Box& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].lo != b[i].lo) return a[i].lo < b[i].lo;
    if (a[i].hi != b[i].hi) return a[i].hi < b[i].hi;
  }
  return a.size() < b.size();
}

inline Box intersect(const Box& a, const Box& b) {
  Box r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    r[i] = intersect(a[i], b[i]);
    if (r[i].is_empty()) return Box(std::vector<Interval>(a.size(), Interval::empty()));
  }
  return r;
}

inline Box hull(const Box& a, const Box& b) {
  if (a.is_empty()) return b;
  if (b.is_empty()) return a;
  Box r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = hull(a[i], b[i]);
  return r;
}

inline Box inflate(const Box& a, double r) {
  Box out = a;
  for (auto& d : out.dims) d = inflate(d, r);
  return out;
}

inline Box erode(const Box& a, double r) {
  Box out = a;
  for (auto& d : out.dims) {
    d = erode(d, r);
    if (d.is_empty()) {
      for (auto& e : out.dims) e = Interval::empty();
      return out;
    }
  }
  return out;
}

/* widest dimension, ties to the lowest index */
inline std::size_t widest_dim(const Box& b) {
  std::size_t j = 0;
  double w = -1.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    double wi = b[i].width();
    if (wi > w) {
      w = wi;
      j = i;
    }
  }
  return j;
}

/* split at the midpoint of the widest dimension; the two halves share the
 * cut endpoint exactly, so their union equals the input */
inline std::pair<Box, Box> bisect(const Box& b) {
  std::size_t j = widest_dim(b);
  double m = b[j].mid();
  Box left = b, right = b;
  left[j] = Interval(b[j].lo, m);
  right[j] = Interval(m, b[j].hi);
  return {left, right};
}

inline std::string to_string(const Box& b) {
  std::string s;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (i) s += "x";
    s += to_string(b[i]);
  }
  return s;
}

} // namespace reachstay

#endif
