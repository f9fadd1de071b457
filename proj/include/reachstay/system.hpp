/*
 * system.hpp
 *
 * SystemModel: parsed dynamics with an enumerated control set, additive
 * disturbance bound, optional non-additive disturbance box, and per-mode
 * expression overrides.  Provides Lie derivative generation for
 * continuous fields and the one-step image operator for discrete maps.
 */

#ifndef REACHSTAY_SYSTEM_HPP
#define REACHSTAY_SYSTEM_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reachstay/box.hpp"
#include "reachstay/dsl.hpp"
#include "reachstay/expr.hpp"

namespace reachstay {

/* eta Z^m intersected with the box U, enumerated lexicographically */
inline std::vector<std::vector<double>> sample_controls(const Box& U, double eta) {
  if (eta <= 0.0) throw std::invalid_argument("sample_controls: step must be positive");
  const std::size_t m = U.size();
  std::vector<long> klo(m), khi(m);
  for (std::size_t j = 0; j < m; ++j) {
    klo[j] = static_cast<long>(std::ceil(U[j].lo / eta - 1e-9));
    khi[j] = static_cast<long>(std::floor(U[j].hi / eta + 1e-9));
    if (klo[j] > khi[j])
      throw std::invalid_argument("sample_controls: no lattice point inside the control box");
  }
  std::vector<std::vector<double>> out;
  std::vector<long> k = klo;
  while (true) {
    std::vector<double> v(m);
    for (std::size_t j = 0; j < m; ++j) v[j] = static_cast<double>(k[j]) * eta;
    out.push_back(v);
    std::size_t j = m;
    while (j > 0) {
      --j;
      if (k[j] < khi[j]) {
        ++k[j];
        for (std::size_t r = j + 1; r < m; ++r) k[r] = klo[r];
        break;
      }
      if (j == 0) return out;
    }
  }
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct SystemModel {
  SystemKind kind = SystemKind::DiscreteMap;
  int state_dim = 0;
  int control_dim = 0;
  std::vector<std::string> state_names;
  std::vector<ExprPtr> field;                    /* u_j appear symbolically */
  std::map<int, std::vector<ExprPtr>> overrides; /* mode index -> expressions */
  std::vector<std::vector<double>> controls;     /* enumerated control values */
  bool control_is_box = false;
  Box control_box;
  double eta = 0.0;
  double delta = 0.0; /* additive disturbance bound */
  bool has_wbox = false;
  Box wbox;
  double mu = 0.0;
  std::optional<double> rho; /* user-supplied Lipschitz diagnostic */
  std::string source;

  std::size_t n_modes() const { return controls.size(); }

  std::string system_hash() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(source)));
    return buf;
  }

  /* tightest interval hull of the enumerated control set */
  std::vector<Interval> control_hull() const {
    std::vector<Interval> h(control_dim, Interval::empty());
    for (const auto& u : controls)
      for (int j = 0; j < control_dim; ++j) h[j] = hull(h[j], Interval(u[j]));
    return h;
  }
};

inline SystemModel build_system(const ParsedSystem& p) {
  SystemModel s;
  s.kind = p.kind;
  s.state_dim = static_cast<int>(p.state_names.size());
  s.control_dim = p.control_dim;
  s.state_names = p.state_names;
  s.field = p.field;
  s.control_is_box = p.control_is_box;
  s.control_box = p.control_box;
  s.eta = p.eta;
  s.delta = p.delta;
  s.has_wbox = p.has_wbox;
  s.wbox = p.wbox;
  s.mu = p.mu;
  s.source = p.source;

  if (p.control_is_box)
    s.controls = sample_controls(p.control_box, p.eta);
  else if (!p.finite_controls.empty())
    s.controls = p.finite_controls;
  else
    s.controls = {std::vector<double>{}}; /* autonomous: one mode, no inputs */

  for (const auto& [u, f] : p.mode_overrides) {
    int found = -1;
    for (std::size_t k = 0; k < s.controls.size(); ++k) {
      if (s.controls[k].size() != u.size()) continue;
      bool same = true;
      for (std::size_t j = 0; j < u.size(); ++j)
        if (std::abs(s.controls[k][j] - u[j]) > 1e-9) same = false;
      if (same) {
        found = static_cast<int>(k);
        break;
      }
    }
    if (found < 0)
      throw std::invalid_argument("mode override does not match any control value");
    s.overrides[found] = f;
  }
  return s;
}

inline SystemModel parse_system(const std::string& dsl_source) {
  return build_system(parse_dsl(dsl_source));
}

/* regenerate a DSL document that parses back to an equal model */
inline std::string print_system(const SystemModel& s) {
  auto num = [](double v) {
    char b[64];
    std::snprintf(b, sizeof(b), "%.17g", v);
    return std::string(b);
  };
  std::string out = "state";
  for (const auto& n : s.state_names) out += " " + n;
  out += ";\n";
  if (s.control_is_box) {
    out += "control box [" + num(s.control_box[0].lo) + "," + num(s.control_box[0].hi) +
           "]^" + std::to_string(s.control_dim) + " step " + num(s.eta) + ";\n";
  } else if (!s.controls.empty() && !s.controls[0].empty()) {
    out += "control finite {";
    for (std::size_t k = 0; k < s.controls.size(); ++k) {
      if (k) out += ", ";
      out += "(";
      for (std::size_t j = 0; j < s.controls[k].size(); ++j) {
        if (j) out += ",";
        out += num(s.controls[k][j]);
      }
      out += ")";
    }
    out += "};\n";
  }
  if (s.delta > 0.0) out += "disturbance additive " + num(s.delta) + ";\n";
  if (s.has_wbox)
    out += "disturbance inner box [" + num(s.wbox[0].lo) + "," + num(s.wbox[0].hi) + "]^" +
           std::to_string(s.wbox.size()) + " step " + num(s.mu) + ";\n";
  const std::string marker = s.kind == SystemKind::ContinuousField ? "'" : "+";
  for (int i = 0; i < s.state_dim; ++i)
    out += s.state_names[i] + marker + " = " + to_string(s.field[i], &s.state_names) + ";\n";
  for (const auto& [k, f] : s.overrides) {
    out += "mode (";
    for (std::size_t j = 0; j < s.controls[k].size(); ++j) {
      if (j) out += ",";
      out += num(s.controls[k][j]);
    }
    out += ") {\n";
    for (int i = 0; i < s.state_dim; ++i)
      out += "  " + s.state_names[i] + marker + " = " + to_string(f[i], &s.state_names) + ";\n";
    out += "}\n";
  }
  return out;
}

/*
 * Lie derivative vectors: f^[0](x) = x, f^[i] = (d f^[i-1] / dx) f.
 * Shared subexpressions differentiate once; a node budget guards
 * against expression swell at high orders.
 */
inline std::vector<ExprPtr> lie_derivative(const std::vector<ExprPtr>& f, int order,
                                           std::size_t node_budget = 2000000) {
  const int n = static_cast<int>(f.size());
  std::vector<ExprPtr> cur(n);
  for (int i = 0; i < n; ++i) cur[i] = state_var(i);
  for (int k = 1; k <= order; ++k) {
    std::vector<ExprPtr> next(n);
    for (int i = 0; i < n; ++i) {
      ExprPtr acc = constant(0.0);
      for (int j = 0; j < n; ++j) acc = add(acc, mul(differentiate(cur[i], j), f[j]));
      next[i] = acc;
    }
    cur = std::move(next);
    if (node_count(cur) > node_budget)
      throw std::runtime_error(
          "lie_derivative: expression budget exceeded at order " + std::to_string(k) +
          "; use a lower Taylor order");
  }
  return cur;
}

inline std::vector<ExprPtr> lie_derivative(const SystemModel& sys, int order,
                                           std::size_t node_budget = 2000000) {
  if (sys.kind != SystemKind::ContinuousField)
    throw std::invalid_argument("lie_derivative: system is not a continuous-time field");
  return lie_derivative(sys.field, order, node_budget);
}

/* ---- one-step image operator ---- */

struct ImageWorkspace {
  InclusionFn::Scratch scratch;
  std::vector<Interval> ctrl, dist;
  std::vector<Box> pieces;
};

/*
 * Interface shared by the discrete-map inclusion image and the
 * sampled-data Taylor image.  eval() writes one box per non-additive
 * disturbance cell (a single box when W is absent) and returns false if
 * a validated evaluation could not be produced for this input.
 */
class ImageOp {
 public:
  virtual ~ImageOp() = default;
  virtual std::size_t n_modes() const = 0;
  /* joint evaluation over the whole control set in one call */
  virtual bool supports_joint() const = 0;
  static constexpr int kJointMode = -1;
  virtual bool eval(const Box& x, int mode, std::vector<Box>& pieces,
                    ImageWorkspace& ws) const = 0;
};

/* [f_u]([x]) (+ [-delta,delta])^n, minced over [W]_mu when W is present */
class DiscreteImage : public ImageOp {
 public:
  DiscreteImage(const SystemModel& sys, InclusionForm form = InclusionForm::Natural)
      : sys_(sys), form_(form) {
    generic_ = InclusionFn(sys.field, sys.state_dim, form == InclusionForm::Centered);
    for (const auto& [k, f] : sys.overrides)
      override_fns_[k] = InclusionFn(f, sys.state_dim, form == InclusionForm::Centered);
    if (sys.has_wbox) {
      wcells_ = mince(sys.wbox, sys.mu);
    } else {
      wcells_.push_back({});
    }
    hull_ = sys.control_hull();
  }

  static std::vector<std::vector<Interval>> mince(const Box& w, double mu) {
    std::vector<std::vector<Interval>> cells;
    std::vector<std::vector<Interval>> per_dim(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) {
      int parts = std::max(1, static_cast<int>(std::ceil(w[j].width() / mu - 1e-12)));
      for (int i = 0; i < parts; ++i) {
        double a = w[j].lo + w[j].width() * i / parts;
        double b = (i + 1 == parts) ? w[j].hi : w[j].lo + w[j].width() * (i + 1) / parts;
        per_dim[j].push_back(Interval(a, b));
      }
    }
    std::vector<std::size_t> idx(w.size(), 0);
    while (true) {
      std::vector<Interval> cell(w.size());
      for (std::size_t j = 0; j < w.size(); ++j) cell[j] = per_dim[j][idx[j]];
      cells.push_back(cell);
      std::size_t j = w.size();
      while (j > 0) {
        --j;
        if (++idx[j] < per_dim[j].size()) break;
        idx[j] = 0;
        if (j == 0) return cells;
      }
    }
  }

  std::size_t n_modes() const override { return sys_.n_modes(); }

  bool supports_joint() const override { return sys_.overrides.empty(); }

  bool eval(const Box& x, int mode, std::vector<Box>& pieces,
            ImageWorkspace& ws) const override {
    const InclusionFn* fn = &generic_;
    if (mode == kJointMode) {
      ws.ctrl = hull_;
    } else {
      auto it = override_fns_.find(mode);
      if (it != override_fns_.end()) fn = &it->second;
      const auto& u = sys_.controls[mode];
      ws.ctrl.resize(u.size());
      for (std::size_t j = 0; j < u.size(); ++j) ws.ctrl[j] = Interval(u[j]);
    }
    pieces.clear();
    for (const auto& w : wcells_) {
      Box img = fn->eval(x, ws.ctrl, w, form_, ws.scratch);
      if (sys_.delta > 0.0) img = inflate(img, sys_.delta);
      pieces.push_back(std::move(img));
    }
    return true;
  }

  const InclusionFn& generic_fn() const { return generic_; }

 private:
  const SystemModel& sys_;
  InclusionForm form_;
  InclusionFn generic_;
  std::map<int, InclusionFn> override_fns_;
  std::vector<std::vector<Interval>> wcells_;
  std::vector<Interval> hull_;
};

/* natural or centered inclusion image of one mode, no disturbance pad */
inline Box eval_inclusion(const SystemModel& sys, const Box& x, int mode,
                          InclusionForm form = InclusionForm::Natural) {
  InclusionFn fn(sys.overrides.count(mode) ? sys.overrides.at(mode) : sys.field,
                 sys.state_dim, form == InclusionForm::Centered);
  InclusionFn::Scratch scratch;
  std::vector<Interval> ctrl;
  for (double v : sys.controls[mode]) ctrl.push_back(Interval(v));
  return fn.eval(x, ctrl, {}, form, scratch);
}

} // namespace reachstay

#endif
