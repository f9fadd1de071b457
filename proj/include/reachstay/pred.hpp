/*
 * pred.hpp
 *
 * Branch-and-bound approximation of constrained predecessors.  A box is
 * outside when its image misses the target for every control, inside
 * (with the valid controls recorded) when the image lands in the target
 * for some control, and is otherwise bisected until narrower than eps.
 *
 * Targets are either unions of boxes (exact coverage tests) or
 * inequality systems g(y) <= 0 evaluated on the image box.  Work lists
 * are FIFO; classification may run on several threads, and results are
 * merged in dequeue order so the output never depends on the thread
 * count.
 */

#ifndef REACHSTAY_PRED_HPP
#define REACHSTAY_PRED_HPP

#include <atomic>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <thread>
#include <vector>

#include "reachstay/paver.hpp"
#include "reachstay/system.hpp"

namespace reachstay {

class TargetSet {
 public:
  static TargetSet boxes(const Paver* p) {
    TargetSet t;
    t.paver_ = p;
    t.cover_ = CoverQuery(&p->boxes);
    return t;
  }

  /* conjunction g_i(y) <= 0; tests run on the image box, so they apply
   * to sampled-data images as well as to discrete maps */
  static TargetSet inequalities(const std::vector<ExprPtr>& g, int state_dim) {
    TargetSet t;
    t.ineq_ = std::make_shared<InclusionFn>(g, state_dim);
    return t;
  }

  bool is_paver() const { return paver_ != nullptr; }

  Where classify(const Box& image, InclusionFn::Scratch& scratch) const {
    if (paver_) return cover_.classify(image);
    Box g = ineq_->eval(image, {}, {}, InclusionForm::Natural, scratch);
    bool inside = true, outside = false;
    for (const auto& gi : g.dims) {
      if (!(gi.hi <= 0.0)) inside = false;
      if (gi.lo > 0.0) outside = true; /* some component certifiably positive */
    }
    if (inside) return Where::Inside;
    if (outside) return Where::Outside;
    return Where::Boundary;
  }

  /* exact membership on boxes / sign of g; used by simulation checks */
  bool contains_point(const std::vector<double>& x) const {
    if (paver_) {
      for (const auto& b : paver_->boxes)
        if (b.contains(x)) return true;
      return false;
    }
    InclusionFn::Scratch s;
    auto g = ineq_->eval_point(x, {}, {}, s);
    for (double gi : g)
      if (gi > 0.0) return false;
    return true;
  }

 private:
  const Paver* paver_ = nullptr;
  CoverQuery cover_;
  std::shared_ptr<InclusionFn> ineq_;
};

struct ControlEntry {
  Box box;
  std::vector<std::uint32_t> controls; /* sorted indices into the control enumeration */
};

struct ControlTable {
  std::vector<ControlEntry> entries;

  std::size_t size() const { return entries.size(); }
};

struct CPredResult {
  ControlTable table; /* K: one entry per inner box, all valid controls */
  Paver inner;        /* certified subset of X ∩ Pre(Y) */
  Paver undetermined; /* unresolved, width < eps */
  Paver outside;      /* image misses Y for every control */
  std::size_t boxes_classified = 0;
};

struct CPredOptions {
  double eps = 0.0;
  int threads = 1;
};

namespace detail {

enum class BoxClass : std::uint8_t { Inner, Outside, Split, Park };

struct Classification {
  BoxClass cls;
  std::vector<std::uint32_t> controls;
};

inline Classification classify_box(const ImageOp& image, const Box& b, const TargetSet& Y,
                                   double eps, ImageWorkspace& ws) {
  auto combine = [&](const std::vector<Box>& pieces) {
    bool all_in = true, all_out = true;
    for (const auto& piece : pieces) {
      Where w = Y.classify(piece, ws.scratch);
      if (w != Where::Inside) all_in = false;
      if (w != Where::Outside) all_out = false;
      if (!all_in && !all_out) break;
    }
    if (all_in) return Where::Inside;
    if (all_out) return Where::Outside;
    return Where::Boundary;
  };

  const std::size_t n_modes = image.n_modes();

  if (image.supports_joint() && n_modes > 1) {
    if (image.eval(b, ImageOp::kJointMode, ws.pieces, ws)) {
      Where w = combine(ws.pieces);
      if (w == Where::Outside) return {BoxClass::Outside, {}};
      if (w == Where::Inside) {
        /* every control maps the box inside the target */
        Classification c{BoxClass::Inner, {}};
        c.controls.resize(n_modes);
        for (std::size_t u = 0; u < n_modes; ++u) c.controls[u] = static_cast<std::uint32_t>(u);
        return c;
      }
    }
  }

  std::vector<std::uint32_t> valid;
  bool undecided = false;
  for (std::size_t u = 0; u < n_modes; ++u) {
    if (!image.eval(b, static_cast<int>(u), ws.pieces, ws)) {
      undecided = true; /* no validated image: conservatively unknown */
      continue;
    }
    Where w = combine(ws.pieces);
    if (w == Where::Inside)
      valid.push_back(static_cast<std::uint32_t>(u));
    else if (w != Where::Outside)
      undecided = true;
  }
  if (!valid.empty()) return {BoxClass::Inner, std::move(valid)};
  if (!undecided) return {BoxClass::Outside, {}};
  if (b.width() < eps) return {BoxClass::Park, {}};
  return {BoxClass::Split, {}};
}

} // namespace detail

/*
 * CPred.  X is consumed as a FIFO work list; undetermined boxes wider
 * than eps are bisected into L/R halves appended in order.  The returned
 * pavers partition X.
 */
inline CPredResult cpred(const ImageOp& image, const Paver& X, const TargetSet& Y,
                         const CPredOptions& opt) {
  if (opt.eps <= 0.0) throw std::invalid_argument("cpred: eps must be positive");
  CPredResult res;
  std::vector<Box> wave = X.boxes;
  const int threads = std::max(1, opt.threads);

  std::vector<detail::Classification> cls;
  while (!wave.empty()) {
    cls.resize(wave.size());
    if (threads == 1 || wave.size() < 32) {
      ImageWorkspace ws;
      for (std::size_t i = 0; i < wave.size(); ++i)
        cls[i] = detail::classify_box(image, wave[i], Y, opt.eps, ws);
    } else {
      std::atomic<std::size_t> next{0};
      auto worker = [&]() {
        ImageWorkspace ws;
        while (true) {
          std::size_t i = next.fetch_add(16);
          if (i >= wave.size()) break;
          std::size_t end = std::min(wave.size(), i + 16);
          for (; i < end; ++i) cls[i] = detail::classify_box(image, wave[i], Y, opt.eps, ws);
        }
      };
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    std::vector<Box> next_wave;
    for (std::size_t i = 0; i < wave.size(); ++i) {
      ++res.boxes_classified;
      switch (cls[i].cls) {
        case detail::BoxClass::Inner:
          res.inner.boxes.push_back(wave[i]);
          res.table.entries.push_back({wave[i], std::move(cls[i].controls)});
          break;
        case detail::BoxClass::Outside:
          res.outside.boxes.push_back(wave[i]);
          break;
        case detail::BoxClass::Park:
          res.undetermined.boxes.push_back(wave[i]);
          break;
        case detail::BoxClass::Split: {
          auto [l, r] = bisect(wave[i]);
          next_wave.push_back(std::move(l));
          next_wave.push_back(std::move(r));
          break;
        }
      }
    }
    wave = std::move(next_wave);
  }
  return res;
}

} // namespace reachstay

#endif
