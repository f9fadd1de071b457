/*
 * simulate.hpp
 *
 * Closed-loop rollout under an extracted strategy.  Discrete maps apply
 * the mode expression at the point; sampled-data systems integrate the
 * field with the adaptive integrator at tight tolerance.  Simulation is
 * plain floating point: the rigorous guarantees live in synthesis, this
 * layer only exercises them.
 */

#ifndef REACHSTAY_SIMULATE_HPP
#define REACHSTAY_SIMULATE_HPP

#include <cmath>
#include <random>
#include <vector>

#include "reachstay/controller.hpp"
#include "reachstay/odeint.hpp"
#include "reachstay/pred.hpp"
#include "reachstay/system.hpp"

namespace reachstay {

enum class TiePolicy { First, Random, MinNorm };

struct DisturbancePolicy {
  enum class Kind { None, Const, Random, Extreme } kind = Kind::None;
  std::vector<double> value; /* Const */
  double bound = 0.0;        /* Random: uniform in the bound box; Extreme: corners */
};

struct Trajectory {
  std::vector<std::vector<double>> states;       /* x_0 .. x_T */
  std::vector<int> controls;                     /* mode index per applied step */
  std::vector<std::vector<double>> disturbances; /* d_k per applied step */
  std::vector<char> in_target;                   /* per state */
  bool violation = false;  /* empty strategy encountered mid-trajectory */
  long satisfied_from = -1; /* first j with every later recorded state in the target */
};

/* point evaluator honoring per-mode overrides */
class PointDynamics {
 public:
  explicit PointDynamics(const SystemModel& sys) : sys_(sys), generic_(sys.field, sys.state_dim) {
    for (const auto& [k, f] : sys.overrides) overrides_[k] = InclusionFn(f, sys.state_dim);
  }

  const SystemModel& system() const { return sys_; }

  std::vector<double> map(const std::vector<double>& x, int mode,
                          const std::vector<double>& w = {}) const {
    const InclusionFn* fn = &generic_;
    auto it = overrides_.find(mode);
    if (it != overrides_.end()) fn = &it->second;
    InclusionFn::Scratch s;
    return fn->eval_point(x, sys_.controls[mode], w, s);
  }

  /* endpoint of the sampled flow under a constant control */
  std::vector<double> flow(const std::vector<double>& x, int mode, double tau,
                           double rtol = 1e-10) const {
    const auto& u = sys_.controls[mode];
    InclusionFn::Scratch s;
    auto rhs = [this, &u, &s](const std::vector<double>& y, std::vector<double>& dy) {
      auto v = generic_.eval_point(y, u, {}, s);
      dy = v;
    };
    return integrate_dopri(rhs, x, 0.0, tau, rtol, rtol * 1e-2);
  }

 private:
  const SystemModel& sys_;
  InclusionFn generic_;
  std::map<int, InclusionFn> overrides_;
};

struct SimulateOptions {
  long horizon = 1000;
  TiePolicy tie = TiePolicy::First;
  DisturbancePolicy disturbance;
  std::uint64_t seed = 0;
  double tau = 0.0; /* required for continuous-time systems */
};

inline Trajectory simulate(const PointDynamics& dyn, const Controller& ctrl,
                           const std::vector<double>& x0, const SimulateOptions& opt,
                           const TargetSet* target = nullptr) {
  const SystemModel& sys = dyn.system();
  if (sys.kind == SystemKind::ContinuousField && opt.tau <= 0.0)
    throw std::invalid_argument("simulate: continuous-time system needs a sampling time");

  std::mt19937_64 rng(opt.seed);
  auto unit = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };

  Trajectory tr;
  tr.states.push_back(x0);
  std::vector<double> x = x0;
  for (long k = 0; k < opt.horizon; ++k) {
    auto menu = ctrl.lookup(x);
    if (menu.empty()) {
      tr.violation = true;
      break;
    }
    std::uint32_t pick = menu.front();
    if (opt.tie == TiePolicy::Random) {
      pick = menu[static_cast<std::size_t>(unit() * menu.size()) % menu.size()];
    } else if (opt.tie == TiePolicy::MinNorm) {
      double best = std::numeric_limits<double>::infinity();
      for (auto m : menu) {
        double n2 = 0.0;
        for (double v : sys.controls[m]) n2 += v * v;
        if (n2 < best) {
          best = n2;
          pick = m;
        }
      }
    }

    std::vector<double> d(sys.state_dim, 0.0);
    switch (opt.disturbance.kind) {
      case DisturbancePolicy::Kind::None:
        break;
      case DisturbancePolicy::Kind::Const:
        d = opt.disturbance.value;
        break;
      case DisturbancePolicy::Kind::Random:
        for (auto& di : d) di = (2.0 * unit() - 1.0) * opt.disturbance.bound;
        break;
      case DisturbancePolicy::Kind::Extreme:
        for (auto& di : d) di = (unit() < 0.5 ? -1.0 : 1.0) * opt.disturbance.bound;
        break;
    }

    std::vector<double> next;
    if (sys.kind == SystemKind::DiscreteMap) {
      std::vector<double> w(sys.has_wbox ? sys.wbox.size() : 0, 0.0);
      if (sys.has_wbox)
        for (std::size_t i = 0; i < w.size(); ++i)
          w[i] = sys.wbox[i].lo + sys.wbox[i].width() * unit();
      next = dyn.map(x, static_cast<int>(pick), w);
    } else {
      next = dyn.flow(x, static_cast<int>(pick), opt.tau);
    }
    for (int i = 0; i < sys.state_dim; ++i) next[i] += d[i];

    tr.controls.push_back(static_cast<int>(pick));
    tr.disturbances.push_back(d);
    tr.states.push_back(next);
    x = next;
  }

  if (target) {
    tr.in_target.resize(tr.states.size());
    for (std::size_t i = 0; i < tr.states.size(); ++i)
      tr.in_target[i] = target->contains_point(tr.states[i]) ? 1 : 0;
    long j = -1;
    for (long i = static_cast<long>(tr.states.size()) - 1; i >= 0; --i) {
      if (!tr.in_target[i]) break;
      j = i;
    }
    /* a suffix entirely inside the target, judged over the recorded horizon */
    if (j >= 0 && !tr.violation) tr.satisfied_from = j;
  }
  return tr;
}

} // namespace reachstay

#endif
