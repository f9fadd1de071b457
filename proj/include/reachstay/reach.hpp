/*
 * reach.hpp
 *
 * Validated reachable-set over-approximation for sampled-data systems:
 * interval Taylor expansion with a verified a priori enclosure over the
 * sampling interval.  The remainder term is always evaluated on the
 * enclosure, never on the initial box.
 *
 * With a positive disturbance budget the expansion order is seeded by
 * the closed-form estimate and then raised until the width inequality
 *    K wbar tau^{k+1} / (kbar+1)! <= (1-alpha) delta tau
 * holds; that inequality, not the logarithmic seed, is the ground
 * truth.  With delta = 0 a fixed user-chosen order is used.
 */

#ifndef REACHSTAY_REACH_HPP
#define REACHSTAY_REACH_HPP

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "reachstay/pred.hpp"
#include "reachstay/system.hpp"

namespace reachstay {

struct TaylorConfig {
  double tau = 0.0;      /* sampling time */
  int kmax = 5;          /* highest usable order */
  int order = 3;         /* fixed expansion order when delta == 0 */
  double eps_frac = 0.01; /* enclosure pad: +-2*eps_frac per component */
  double alpha = 0.5;    /* truncation / propagation error split */
  double delta = 0.0;    /* disturbance budget for order selection */
  double K = 0.0;        /* Assumption-2 width constant; <=0 requests an estimate */

  void validate() const {
    if (tau <= 0.0) throw std::invalid_argument("taylor: tau must be positive");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("taylor: alpha must be in (0,1)");
    if (kmax < 1) throw std::invalid_argument("taylor: kmax must be at least 1");
    if (!(eps_frac > 0.0 && eps_frac < 1.0))
      throw std::invalid_argument("taylor: enclosure fraction must be in (0,1)");
  }
};

struct Enclosure {
  Box y;        /* a priori enclosure of the solution over [0,tau] */
  int kbar = 0; /* order the containment test succeeded with */
  bool ok = false;
};

struct OrderSelection {
  int k = 0;
  double eps_bound = 0.0; /* precision bound of the box width */
};

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

/*
 * Seed k from the log formula (the ratio of logs is base-free), then
 * enforce the width inequality directly.
 */
inline OrderSelection select_order(const TaylorConfig& cfg, double wbar, int kbar) {
  if (cfg.delta <= 0.0)
    throw std::invalid_argument("select_order: needs a positive disturbance budget");
  if (cfg.K <= 0.0) throw std::invalid_argument("select_order: needs the width constant K");
  const double tau = cfg.tau;
  double seed_arg = (1.0 - cfg.alpha) * cfg.delta / (cfg.K * wbar);
  int k = kbar - 1;
  if (std::log(tau) != 0.0) {
    double s = (std::log(seed_arg) + std::log(factorial(kbar + 1))) / std::log(tau);
    k = std::max(k, static_cast<int>(std::ceil(s)));
  }
  k = std::max(k, 1);
  auto holds = [&](int kk) {
    return cfg.K * wbar * std::pow(tau, kk + 1) / factorial(kbar + 1) <=
           (1.0 - cfg.alpha) * cfg.delta * tau;
  };
  while (k <= cfg.kmax && !holds(k)) ++k;
  if (k > cfg.kmax)
    throw std::runtime_error("select_order: required order " + std::to_string(k) +
                             " exceeds kmax " + std::to_string(cfg.kmax));
  OrderSelection out;
  out.k = k;
  out.eps_bound = cfg.alpha * tau * cfg.delta / (cfg.K * std::exp(tau));
  return out;
}

struct ReachInfo {
  Box result;
  Enclosure enclosure;
  int order = 0;
  bool halved = false; /* the step was recomposed from half-steps */
};

/*
 * Sampled-data image operator: eval() returns the Taylor over-
 * approximation of the reach set at time tau.  Lie derivative tapes up
 * to kmax+1 are built once.
 */
class SampledImage : public ImageOp {
 public:
  SampledImage(const SystemModel& sys, const TaylorConfig& cfg)
      : sys_(sys), cfg_(cfg) {
    cfg_.validate();
    if (sys.kind != SystemKind::ContinuousField)
      throw std::invalid_argument("SampledImage: system is not continuous-time");
    if (!sys.overrides.empty())
      throw std::invalid_argument("SampledImage: per-mode overrides are not supported "
                                  "for continuous fields");
    std::vector<ExprPtr> ident(sys.state_dim);
    for (int i = 0; i < sys.state_dim; ++i) ident[i] = state_var(i);
    lie_.push_back(InclusionFn(ident, sys.state_dim)); /* order 0 */
    for (int k = 1; k <= cfg_.kmax + 1; ++k)
      lie_.push_back(InclusionFn(lie_derivative(sys.field, k), sys.state_dim));
    hull_ = sys.control_hull();
  }

  std::size_t n_modes() const override { return sys_.n_modes(); }
  bool supports_joint() const override { return true; }

  const TaylorConfig& config() const { return cfg_; }
  double width_constant() const { return cfg_.K; }
  void set_width_constant(double K) { cfg_.K = K; }

  bool eval(const Box& x, int mode, std::vector<Box>& pieces,
            ImageWorkspace& ws) const override {
    bind_control(mode, ws);
    ReachInfo info;
    if (!step(x, ws, cfg_.tau, 0, info)) return false;
    pieces.clear();
    pieces.push_back(info.result);
    return true;
  }

  Enclosure apriori_enclosure(const Box& x, int mode, ImageWorkspace& ws) const {
    bind_control(mode, ws);
    std::vector<Box> terms;
    return find_enclosure(x, ws, cfg_.tau, terms);
  }

  bool reach_detailed(const Box& x, int mode, ImageWorkspace& ws, ReachInfo& info) const {
    bind_control(mode, ws);
    return step(x, ws, cfg_.tau, 0, info);
  }

  /*
   * Empirical estimate of the Assumption-2 constant: the largest width
   * ratio wid([f]^[i](b)) / wid(b) over sampled boxes, inflated by 2.
   */
  double estimate_width_constant(const Box& domain, std::uint64_t seed = 1,
                                 int samples = 1000) const {
    std::mt19937_64 rng(seed);
    auto unit = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
    ImageWorkspace ws;
    ws.ctrl = hull_;
    double K = 0.0;
    std::vector<Interval> out;
    for (int s = 0; s < samples; ++s) {
      Box b(domain.size());
      double w = std::pow(10.0, -3.0 + 2.0 * unit());
      for (std::size_t j = 0; j < domain.size(); ++j) {
        double c = domain[j].lo + domain[j].width() * unit();
        b[j] = intersect(Interval(c - w / 2, c + w / 2), domain[j]);
        if (b[j].is_empty()) b[j] = Interval(domain[j].mid());
      }
      double bw = b.width();
      if (bw <= 0.0) continue;
      for (int i = 1; i <= cfg_.kmax + 1; ++i) {
        eval_tape(lie_[i].tape(), b.dims, ws.ctrl, {}, ws.scratch.regs, out);
        double iw = 0.0;
        for (const auto& c : out) iw = std::max(iw, c.width());
        K = std::max(K, iw / bw);
      }
    }
    return 2.0 * K;
  }

 private:
  void bind_control(int mode, ImageWorkspace& ws) const {
    if (mode == kJointMode) {
      ws.ctrl = hull_;
    } else {
      const auto& u = sys_.controls[mode];
      ws.ctrl.resize(u.size());
      for (std::size_t j = 0; j < u.size(); ++j) ws.ctrl[j] = Interval(u[j]);
    }
  }

  Box eval_lie(int i, const Box& x, ImageWorkspace& ws) const {
    std::vector<Interval> out;
    eval_tape(lie_[i].tape(), x.dims, ws.ctrl, {}, ws.scratch.regs, out);
    return Box(out);
  }

  /*
   * Enclosure per Lemma-3 shape: yhat = x + sum_{i<kbar} [f]^[i](x) [0,tau^i]/i!
   * + [-2e,2e], accepted only after the containment re-check.  terms[]
   * caches [f]^[i](x) so the Taylor sum can reuse them.
   */
  Enclosure find_enclosure(const Box& x, ImageWorkspace& ws, double tau,
                           std::vector<Box>& terms) const {
    Enclosure enc;
    const double pad = 2.0 * cfg_.eps_frac;
    const int kbar_cap = std::min(cfg_.kmax, 4);
    for (int kbar = 1; kbar <= kbar_cap; ++kbar) {
      Box y = x;
      for (int i = 1; i < kbar; ++i) {
        if (static_cast<int>(terms.size()) < i) terms.push_back(eval_lie(i, x, ws));
        Interval fac = Interval(0.0, 1.0) * pow_int(Interval(tau), i) / factorial(i);
        for (std::size_t d = 0; d < y.size(); ++d) y[d] = y[d] + terms[i - 1][d] * fac;
      }
      for (auto& d : y.dims) d = inflate(d, pad);
      /* containment test: one more Taylor step evaluated on yhat */
      Box fk = eval_lie(kbar, y, ws);
      Interval fac = Interval(0.0, 1.0) * pow_int(Interval(tau), kbar) / factorial(kbar);
      Box lhs = x;
      for (int i = 1; i < kbar; ++i) {
        Interval fi = Interval(0.0, 1.0) * pow_int(Interval(tau), i) / factorial(i);
        for (std::size_t d = 0; d < lhs.size(); ++d) lhs[d] = lhs[d] + terms[i - 1][d] * fi;
      }
      for (std::size_t d = 0; d < lhs.size(); ++d) lhs[d] = lhs[d] + fk[d] * fac;
      if (lhs.subset_of(y)) {
        enc.y = y;
        enc.kbar = kbar;
        enc.ok = true;
        return enc;
      }
    }
    return enc;
  }

  bool step(const Box& x, ImageWorkspace& ws, double tau, int depth, ReachInfo& info) const {
    std::vector<Box> terms;
    Enclosure enc = find_enclosure(x, ws, tau, terms);
    if (!enc.ok) {
      if (depth >= 2) return false;
      /* recompose from two half-steps */
      ReachInfo first;
      if (!step(x, ws, tau / 2, depth + 1, first)) return false;
      ReachInfo second;
      if (!step(first.result, ws, tau / 2, depth + 1, second)) return false;
      info = second;
      info.halved = true;
      return true;
    }

    int k;
    if (cfg_.delta > 0.0 && cfg_.K > 0.0) {
      TaylorConfig local = cfg_;
      local.tau = tau; /* half-steps select against their own horizon */
      try {
        k = select_order(local, enc.y.width(), enc.kbar).k;
      } catch (const std::runtime_error&) {
        if (depth >= 2) return false;
        ReachInfo first;
        if (!step(x, ws, tau / 2, depth + 1, first)) return false;
        ReachInfo second;
        if (!step(first.result, ws, tau / 2, depth + 1, second)) return false;
        info = second;
        info.halved = true;
        return true;
      }
    } else {
      k = std::min(cfg_.order, cfg_.kmax);
    }
    k = std::max(k, 1);

    Box acc = x; /* order-0 term */
    for (int i = 1; i <= k; ++i) {
      if (static_cast<int>(terms.size()) < i) terms.push_back(eval_lie(i, x, ws));
      Interval fac = pow_int(Interval(tau), i) / factorial(i);
      for (std::size_t d = 0; d < acc.size(); ++d) acc[d] = acc[d] + terms[i - 1][d] * fac;
    }
    Box rem = eval_lie(k + 1, enc.y, ws);
    Interval rfac = pow_int(Interval(tau), k + 1) / factorial(k + 1);
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] = acc[d] + rem[d] * rfac;

    info.result = acc;
    info.enclosure = enc;
    info.order = k;
    return true;
  }

  const SystemModel& sys_;
  TaylorConfig cfg_;
  std::vector<InclusionFn> lie_; /* orders 0..kmax+1 */
  std::vector<Interval> hull_;
};

/* spec-shaped wrappers */
inline Enclosure apriori_enclosure(const SampledImage& img, const Box& b0, int mode) {
  ImageWorkspace ws;
  return img.apriori_enclosure(b0, mode, ws);
}

inline Box reach_over(const SampledImage& img, const Box& b0, int mode) {
  ImageWorkspace ws;
  ReachInfo info;
  if (!img.reach_detailed(b0, mode, ws, info))
    throw std::runtime_error("reach_over: no a priori enclosure found");
  return info.result;
}

} // namespace reachstay

#endif
