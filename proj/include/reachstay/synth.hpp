/*
 * synth.hpp
 *
 * The nested fixed-point engine.  The outer loop grows the winning set
 * by one predecessor layer per iteration; the inner loop shrinks the
 * candidate stay region to a controlled invariant core.  G1 tracks the
 * part of the state space still to be verified against the current
 * winning set, G2 the part of the target region not yet certified to be
 * controlled-invariant.  Valid control values are recorded as the
 * iterations run, so the strategy is available the moment the fixed
 * point is reached.
 */

#ifndef REACHSTAY_SYNTH_HPP
#define REACHSTAY_SYNTH_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "reachstay/pred.hpp"
#include "reachstay/system.hpp"

namespace reachstay {

/* reach-and-stay problem data: state space, target, obstacles */
struct Spec {
  Box state_space;
  std::vector<Box> target_boxes;              /* union */
  std::vector<ExprPtr> target_inequalities;   /* conjunction g(x) <= 0 */
  std::vector<std::vector<ExprPtr>> obstacles; /* each conjunction is a collision region */

  bool has_target() const { return !target_boxes.empty() || !target_inequalities.empty(); }
};

struct PrecisionSchedule {
  double eps_outer = 0.0;
  double eps_inner = 0.0; /* 0: same as eps_outer */
  double shrink = 1.0;    /* per-outer-iteration factor for eps_outer */
  double eps_min = 0.0;   /* 0: no lower schedule bound */

  void normalize() {
    if (eps_inner <= 0.0) eps_inner = eps_outer;
    if (eps_min <= 0.0) eps_min = std::min(eps_outer, eps_inner);
    if (eps_outer <= 0.0 || eps_inner <= 0.0)
      throw std::invalid_argument("precision schedule: eps must be positive");
    if (!(shrink > 0.0 && shrink <= 1.0))
      throw std::invalid_argument("precision schedule: shrink must be in (0,1]");
  }

  double outer_at(int iteration) const {
    double e = eps_outer * std::pow(shrink, iteration - 1);
    return std::max(e, eps_min);
  }
};

struct DomainInit {
  Paver g1;       /* X minus the certified target region */
  Paver g2;       /* cells certified inside the target */
  Paver excluded; /* obstacle cells and unresolved boundary slivers */
};

namespace detail {

class ConjunctionQuery {
 public:
  explicit ConjunctionQuery(const std::vector<ExprPtr>& g, int n) : fn_(g, n) {}

  /* Inside: g <= 0 everywhere on b; Outside: some component positive */
  Where classify(const Box& b, InclusionFn::Scratch& s) const {
    Box g = fn_.eval(b, {}, {}, InclusionForm::Natural, s);
    bool inside = true, outside = false;
    for (const auto& gi : g.dims) {
      if (!(gi.hi <= 0.0)) inside = false;
      if (gi.lo > 0.0) outside = true;
    }
    if (inside) return Where::Inside;
    if (outside) return Where::Outside;
    return Where::Boundary;
  }

 private:
  InclusionFn fn_;
};

} // namespace detail

/*
 * Partition the state space into target cells (G2), non-target cells
 * (G1) and excluded obstacle cells.  Boundary cells at width < eps are
 * conservative: obstacle boundaries are excluded, target boundaries go
 * to G1.
 */
inline DomainInit initialize_domain(const Spec& spec, int state_dim, double eps) {
  for (const auto& tb : spec.target_boxes)
    if (!tb.subset_of(spec.state_space))
      throw std::invalid_argument("spec: target box is not contained in the state space");

  std::vector<detail::ConjunctionQuery> obstacle_q;
  for (const auto& conj : spec.obstacles) obstacle_q.emplace_back(conj, state_dim);
  std::optional<detail::ConjunctionQuery> target_ineq;
  if (!spec.target_inequalities.empty())
    target_ineq.emplace(spec.target_inequalities, state_dim);
  Paver target_paver(spec.target_boxes);
  CoverQuery target_cover(&target_paver.boxes);

  InclusionFn::Scratch scratch;

  RegionQuery free_query = [&](const Box& b) {
    bool all_out = true;
    for (const auto& q : obstacle_q) {
      Where w = q.classify(b, scratch);
      if (w == Where::Inside) return Where::Outside; /* certainly colliding */
      if (w != Where::Outside) all_out = false;
    }
    return all_out ? Where::Inside : Where::Boundary;
  };

  const bool no_target = !spec.has_target();
  RegionQuery target_query = [&](const Box& b) {
    if (no_target) return Where::Outside;
    Where boxes_part = spec.target_boxes.empty() ? Where::Inside : target_cover.classify(b);
    Where ineq_part = target_ineq ? target_ineq->classify(b, scratch) : Where::Inside;
    if (boxes_part == Where::Outside || ineq_part == Where::Outside) return Where::Outside;
    if (boxes_part == Where::Inside && ineq_part == Where::Inside) return Where::Inside;
    return Where::Boundary;
  };

  DomainInit out;
  RegionPaving free = spec.obstacles.empty()
                          ? RegionPaving{Paver({spec.state_space}), {}, {}}
                          : pave_region(spec.state_space, free_query, eps);
  out.excluded.append(free.boundary);
  out.excluded.append(free.outside);

  for (const auto& cell : free.inside.boxes) {
    RegionPaving t = pave_region(cell, target_query, eps);
    out.g2.append(t.inside);
    out.g1.append(t.outside);
    out.g1.append(t.boundary); /* unresolved target boundary is not a stay candidate */
  }
  return out;
}

struct SynthLimits {
  std::size_t max_boxes = std::numeric_limits<std::size_t>::max();
  double max_seconds = std::numeric_limits<double>::infinity();
};

enum class SynthStatus { Converged, Capped };

struct SynthStats {
  int outer_iterations = 0;
  long inner_iterations = 0;
  std::size_t boxes_classified = 0;
  std::size_t winning_boxes = 0;
  double seconds = 0.0;
};

struct SynthResult {
  Paver winning;      /* interval part of K */
  ControlTable table; /* consolidated and canonically ordered */
  Paver undetermined; /* unresolved cells at the final iterate */
  Paver outside;      /* cells with no one-step transition into the winning set */
  SynthStats stats;
  SynthStatus status = SynthStatus::Converged;
  std::string message;
};

struct SynthOptions {
  PrecisionSchedule sched;
  int threads = 1;
  SynthLimits limits;
  bool check_invariants = false;
  std::optional<double> rho; /* user diagnostic for the realizability message */
};

namespace detail {

inline void merge_table(std::vector<ControlEntry>& into, const ControlTable& t) {
  into.insert(into.end(), t.entries.begin(), t.entries.end());
}

/* canonical order + duplicate fusion (the converged iteration re-adds
 * the stable stay region verbatim) */
inline ControlTable consolidate(std::vector<ControlEntry> raw) {
  std::sort(raw.begin(), raw.end(), [](const ControlEntry& a, const ControlEntry& b) {
    return box_less(a.box, b.box);
  });
  ControlTable out;
  for (auto& e : raw) {
    if (!out.entries.empty() && out.entries.back().box == e.box) {
      auto& c = out.entries.back().controls;
      c.insert(c.end(), e.controls.begin(), e.controls.end());
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end()), c.end());
    } else {
      out.entries.push_back(std::move(e));
    }
  }
  return out;
}

} // namespace detail

inline SynthResult synthesize(const ImageOp& image, const DomainInit& dom,
                              const SynthOptions& options) {
  SynthOptions opt = options;
  opt.sched.normalize();
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&t_start]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  SynthResult res;
  Paver Y;
  Paver G1 = dom.g1, G2 = dom.g2;
  std::vector<ControlEntry> table_raw;

  /* snapshot of the last completed outer iteration: a sound partial result */
  Paver snap_Y;
  std::size_t snap_table = 0;
  SynthStats snap_stats;

  const double total_volume = G1.volume() + G2.volume();
  double prev_g1_volume = std::numeric_limits<double>::infinity();
  const double vol_tol = 1e-9 * std::max(1.0, total_volume);

  auto capped = [&]() {
    return res.stats.boxes_classified > opt.limits.max_boxes ||
           elapsed() > opt.limits.max_seconds;
  };

  bool done = false;
  while (!done) {
    if (capped()) {
      res.winning = snap_Y;
      table_raw.resize(snap_table);
      res.stats = snap_stats;
      res.stats.seconds = elapsed();
      res.status = SynthStatus::Capped;
      res.message = "resource cap reached; returning the last completed iterate";
      break;
    }
    snap_Y = Y;
    snap_table = table_raw.size();
    snap_stats = res.stats;

    ++res.stats.outer_iterations;
    const double eps_o = opt.sched.outer_at(res.stats.outer_iterations);

    TargetSet Yt = TargetSet::boxes(&Y);
    CPredResult cz = cpred(image, G1, Yt, {.eps = eps_o, .threads = opt.threads});
    res.stats.boxes_classified += cz.boxes_classified;
    detail::merge_table(table_raw, cz.table);

    Paver Z = Y;
    Z.append(cz.inner);

    /* inner fixed point on the candidate stay region */
    Paver V = G2;
    Paver newG2;
    Paver X_target = Z;
    X_target.append(V);
    ControlTable Kv_last;
    bool inner_capped = false;
    while (true) {
      ++res.stats.inner_iterations;
      TargetSet Xt = TargetSet::boxes(&X_target);
      CPredResult cv = cpred(image, V, Xt, {.eps = opt.sched.eps_inner, .threads = opt.threads});
      res.stats.boxes_classified += cv.boxes_classified;
      Kv_last = std::move(cv.table);
      newG2.append(cv.undetermined);
      newG2.append(cv.outside);

      Paver Xnew = Z;
      Xnew.append(cv.inner);
      bool stable = Xnew.same_boxes(X_target);
      if (opt.check_invariants && cv.inner.volume() > V.volume() + vol_tol)
        throw std::logic_error("synthesize: inner iterate grew");
      V = std::move(cv.inner);
      X_target = std::move(Xnew);
      if (stable) break;
      if (capped()) {
        inner_capped = true;
        break;
      }
    }
    if (inner_capped) continue; /* the cap branch at loop head restores the snapshot */
    detail::merge_table(table_raw, Kv_last);

    Paver Ynew = X_target; /* = Z ∪ V̲ */
    Paver G1new = cz.undetermined;
    G1new.append(cz.outside);

    if (opt.check_invariants) {
      double u = Ynew.volume() + G1new.volume() + newG2.volume();
      if (std::abs(u - total_volume) > vol_tol)
        throw std::logic_error("synthesize: Y ∪ G1 ∪ G2 volume drifted");
      if (Ynew.volume() + vol_tol < Y.volume())
        throw std::logic_error("synthesize: winning iterate shrank");
      if (G1new.volume() > prev_g1_volume + vol_tol)
        throw std::logic_error("synthesize: G1 grew");
      prev_g1_volume = G1new.volume();
    }

    done = Ynew.same_boxes(Y);
    Y = std::move(Ynew);
    G1 = std::move(G1new);
    G2 = std::move(newG2);
    if (done) {
      res.undetermined = cz.undetermined;
      res.undetermined.append(G2);
      res.outside = cz.outside;
    }
  }

  if (res.status == SynthStatus::Converged) {
    res.winning = std::move(Y);
    res.stats.seconds = elapsed();
  }
  res.table = detail::consolidate(std::move(table_raw));
  res.stats.winning_boxes = res.winning.size();

  if (res.winning.empty()) {
    res.message = "specification not realizable at this precision";
    if (opt.rho) {
      char buf[128];
      std::snprintf(buf, sizeof(buf),
                    "; not delta-realizable for delta >= rho*eps = %.17g",
                    *opt.rho * opt.sched.eps_min);
      res.message += buf;
    }
  }
  return res;
}

/* ---- finite-grid oracle (test support) ---- */

/*
 * Explicit finite transition system: post[s * n_controls + u] lists the
 * successors of state s under control u (several entries model
 * nondeterminism; empty means the control is unusable at s).
 */
struct FiniteSystem {
  std::size_t n_states = 0;
  std::size_t n_controls = 0;
  std::vector<std::vector<std::uint32_t>> post;

  const std::vector<std::uint32_t>& succ(std::size_t s, std::size_t u) const {
    return post[s * n_controls + u];
  }
};

/* exact nested fixed point on the finite system */
inline std::vector<char> oracle_win_set(const FiniteSystem& fs, const std::vector<char>& omega) {
  const std::size_t n = fs.n_states;
  auto pre = [&fs, n](const std::vector<char>& S) {
    std::vector<char> P(n, 0);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t u = 0; u < fs.n_controls && !P[s]; ++u) {
        const auto& succ = fs.succ(s, u);
        if (succ.empty()) continue;
        bool all = true;
        for (auto t : succ)
          if (!S[t]) {
            all = false;
            break;
          }
        if (all) P[s] = 1;
      }
    }
    return P;
  };

  std::vector<char> Y(n, 1), Ynext(n, 0);
  while (Y != Ynext) {
    Y = Ynext;
    std::vector<char> Z = pre(Y);
    std::vector<char> X(n, 0), Xnext(n, 0);
    for (std::size_t s = 0; s < n; ++s) Xnext[s] = omega[s] || Z[s];
    while (X != Xnext) {
      X = Xnext;
      std::vector<char> p = pre(X);
      for (std::size_t s = 0; s < n; ++s) Xnext[s] = Z[s] || (X[s] && p[s]);
    }
    Ynext = X;
  }
  return Y;
}

} // namespace reachstay

#endif
