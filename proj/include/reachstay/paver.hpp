/*
 * paver.hpp
 *
 * Box collections with disjoint interiors, an intersection index, and
 * the exact coverage test used for the "inside the target" decision.
 * Coverage is decided by axis-aligned subtraction, so a query box lying
 * across the seam of two adjacent cells is still recognized as covered.
 */

#ifndef REACHSTAY_PAVER_HPP
#define REACHSTAY_PAVER_HPP

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <vector>

#include "reachstay/box.hpp"

namespace reachstay {

struct Paver {
  std::vector<Box> boxes;

  Paver() = default;
  explicit Paver(std::vector<Box> b) : boxes(std::move(b)) {}

  bool empty() const { return boxes.empty(); }
  std::size_t size() const { return boxes.size(); }

  double volume() const {
    double v = 0.0;
    for (const auto& b : boxes) v += b.volume();
    return v;
  }

  void append(const Paver& o) {
    boxes.insert(boxes.end(), o.boxes.begin(), o.boxes.end());
  }

  Paver sorted() const {
    Paver p = *this;
    std::sort(p.boxes.begin(), p.boxes.end(), box_less);
    return p;
  }

  /* canonical (order-insensitive) equality on exact bounds */
  bool same_boxes(const Paver& o) const {
    if (boxes.size() != o.boxes.size()) return false;
    return sorted().boxes == o.sorted().boxes;
  }
};

enum class Where { Inside, Outside, Boundary };

/* bounding-volume tree over a fixed box list */
class PaverIndex {
 public:
  PaverIndex() = default;

  explicit PaverIndex(const std::vector<Box>* boxes) : boxes_(boxes) {
    if (!boxes_ || boxes_->empty()) return;
    order_.resize(boxes_->size());
    std::iota(order_.begin(), order_.end(), 0u);
    root_ = build(0, static_cast<std::uint32_t>(order_.size()));
  }

  bool empty() const { return !boxes_ || boxes_->empty(); }

  /* indices of stored boxes whose closed intersection with q is nonempty */
  void query(const Box& q, std::vector<std::uint32_t>& out) const {
    out.clear();
    if (empty()) return;
    collect(root_, q, out);
  }

  bool any_intersection(const Box& q) const {
    if (empty()) return false;
    return probe(root_, q);
  }

 private:
  struct Node {
    Box bbox;
    std::uint32_t begin = 0, end = 0; /* leaf range in order_ */
    std::int32_t left = -1, right = -1;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end) {
    Node n;
    n.bbox = (*boxes_)[order_[begin]];
    for (std::uint32_t i = begin + 1; i < end; ++i) n.bbox = hull(n.bbox, (*boxes_)[order_[i]]);
    if (end - begin <= 8) {
      n.begin = begin;
      n.end = end;
      nodes_.push_back(n);
      return static_cast<std::uint32_t>(nodes_.size() - 1);
    }
    std::size_t dim = widest_dim(n.bbox);
    std::uint32_t mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [this, dim](std::uint32_t a, std::uint32_t b) {
                       return (*boxes_)[a][dim].mid() < (*boxes_)[b][dim].mid();
                     });
    std::uint32_t id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(n);
    std::uint32_t l = build(begin, mid);
    std::uint32_t r = build(mid, end);
    nodes_[id].left = static_cast<std::int32_t>(l);
    nodes_[id].right = static_cast<std::int32_t>(r);
    return id;
  }

  void collect(std::uint32_t id, const Box& q, std::vector<std::uint32_t>& out) const {
    const Node& n = nodes_[id];
    if (!n.bbox.intersects(q)) return;
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i)
        if ((*boxes_)[order_[i]].intersects(q)) out.push_back(order_[i]);
      return;
    }
    collect(static_cast<std::uint32_t>(n.left), q, out);
    collect(static_cast<std::uint32_t>(n.right), q, out);
  }

  bool probe(std::uint32_t id, const Box& q) const {
    const Node& n = nodes_[id];
    if (!n.bbox.intersects(q)) return false;
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i)
        if ((*boxes_)[order_[i]].intersects(q)) return true;
      return false;
    }
    return probe(static_cast<std::uint32_t>(n.left), q) ||
           probe(static_cast<std::uint32_t>(n.right), q);
  }

  const std::vector<Box>* boxes_ = nullptr;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
};

namespace detail {

/* does the candidate cover a positive-measure part of q? */
inline bool positive_overlap(const Box& q, const Box& b) {
  for (std::size_t i = 0; i < q.size(); ++i) {
    double lo = std::max(q[i].lo, b[i].lo), hi = std::min(q[i].hi, b[i].hi);
    if (q[i].lo < q[i].hi) {
      if (!(lo < hi)) return false;
    } else {
      if (!(lo <= hi)) return false; /* q degenerate in this dim */
    }
  }
  return true;
}

} // namespace detail

/*
 * Exact union-coverage test.  Subtracts candidate boxes from the query
 * axis-alignedly; the query is covered iff nothing with positive measure
 * remains.
 */
class CoverQuery {
 public:
  CoverQuery() = default;
  explicit CoverQuery(const std::vector<Box>* boxes) : boxes_(boxes), index_(boxes) {}

  bool covered(const Box& q) const {
    if (q.is_empty()) return true;
    std::vector<Box> stack{q};
    std::vector<std::uint32_t> cand;
    while (!stack.empty()) {
      Box cur = stack.back();
      stack.pop_back();
      index_.query(cur, cand);
      const Box* hit = nullptr;
      for (std::uint32_t id : cand) {
        const Box& b = (*boxes_)[id];
        if (cur.subset_of(b)) {
          hit = &b;
          break;
        }
        if (!hit && detail::positive_overlap(cur, b)) hit = &b;
      }
      if (!hit) return false;
      if (cur.subset_of(*hit)) continue;
      carve(cur, *hit, stack);
    }
    return true;
  }

  bool disjoint(const Box& q) const { return !index_.any_intersection(q); }

  Where classify(const Box& q) const {
    if (disjoint(q)) return Where::Outside;
    if (covered(q)) return Where::Inside;
    return Where::Boundary;
  }

 private:
  static void carve(const Box& cur, const Box& b, std::vector<Box>& out) {
    Box rem = cur;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (rem[i].lo < b[i].lo) {
        Box piece = rem;
        piece[i] = Interval(rem[i].lo, b[i].lo);
        out.push_back(std::move(piece));
        rem[i].lo = b[i].lo;
      }
      if (rem[i].hi > b[i].hi) {
        Box piece = rem;
        piece[i] = Interval(b[i].hi, rem[i].hi);
        out.push_back(std::move(piece));
        rem[i].hi = b[i].hi;
      }
    }
  }

  const std::vector<Box>* boxes_ = nullptr;
  PaverIndex index_;
};

/* three-valued coverage of a box against a union of boxes */
inline Where paver_covers(const Paver& p, const Box& b) {
  CoverQuery q(&p.boxes);
  return q.classify(b);
}

/* ---- region pavings (domain and target initialization) ---- */

using RegionQuery = std::function<Where(const Box&)>;

struct RegionPaving {
  Paver inside, boundary, outside;
};

/*
 * Bisect the domain until each cell is classified or narrower than eps.
 * FIFO order, deterministic.
 */
inline RegionPaving pave_region(const Box& domain, const RegionQuery& query, double eps) {
  RegionPaving out;
  if (domain.is_empty()) return out;
  std::deque<Box> work{domain};
  while (!work.empty()) {
    Box b = work.front();
    work.pop_front();
    switch (query(b)) {
      case Where::Inside:
        out.inside.boxes.push_back(b);
        break;
      case Where::Outside:
        out.outside.boxes.push_back(b);
        break;
      case Where::Boundary:
        if (b.width() < eps) {
          out.boundary.boxes.push_back(b);
        } else {
          auto [l, r] = bisect(b);
          work.push_back(l);
          work.push_back(r);
        }
        break;
    }
  }
  return out;
}

} // namespace reachstay

#endif
