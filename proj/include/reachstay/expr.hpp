/*
 * expr.hpp
 *
 * Immutable expression DAG for vector fields and constraint functions,
 * with symbolic differentiation (shared subexpressions differentiate
 * once), a flat tape compiler, and natural / centered inclusion-function
 * evaluation.  Constant subtrees are folded at tape-compile time in
 * interval arithmetic, so folding never loses rigor.
 */

#ifndef REACHSTAY_EXPR_HPP
#define REACHSTAY_EXPR_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "reachstay/box.hpp"
#include "reachstay/interval.hpp"

namespace reachstay {

enum class ExprOp : std::uint8_t {
  Const,
  StateVar,
  ControlVar,
  DistVar,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Sin,
  Cos,
  Tan,
  Atan,
  Exp,
  Sqrt,
  Mod2Pi,
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprOp op = ExprOp::Const;
  double value = 0.0; /* Const */
  int index = 0;      /* variable index */
  long ipow = 0;      /* Pow exponent */
  ExprPtr a, b;
};

inline ExprPtr constant(double v) {
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Const;
  n->value = v;
  return n;
}

inline ExprPtr variable(ExprOp kind, int idx) {
  auto n = std::make_shared<ExprNode>();
  n->op = kind;
  n->index = idx;
  return n;
}

inline ExprPtr state_var(int i) { return variable(ExprOp::StateVar, i); }
inline ExprPtr control_var(int j) { return variable(ExprOp::ControlVar, j); }
inline ExprPtr dist_var(int k) { return variable(ExprOp::DistVar, k); }

inline bool is_const(const ExprPtr& e, double v) {
  return e->op == ExprOp::Const && e->value == v;
}

/* bounded-depth structural comparison; pointer hits make it cheap on DAGs */
inline bool equal_shallow(const ExprPtr& x, const ExprPtr& y, int depth = 4) {
  if (x == y) return true;
  if (depth == 0 || x->op != y->op) return false;
  switch (x->op) {
    case ExprOp::Const: return x->value == y->value;
    case ExprOp::StateVar:
    case ExprOp::ControlVar:
    case ExprOp::DistVar: return x->index == y->index;
    case ExprOp::Pow:
      return x->ipow == y->ipow && equal_shallow(x->a, y->a, depth - 1);
    default: break;
  }
  if (static_cast<bool>(x->b) != static_cast<bool>(y->b)) return false;
  if (!equal_shallow(x->a, y->a, depth - 1)) return false;
  return !x->b || equal_shallow(x->b, y->b, depth - 1);
}

inline ExprPtr binary(ExprOp op, ExprPtr a, ExprPtr b) {
  /* exact algebraic identities only; numeric folding happens on the tape */
  switch (op) {
    case ExprOp::Add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case ExprOp::Sub:
      if (is_const(b, 0.0)) return a;
      if (equal_shallow(a, b)) return constant(0.0);
      break;
    case ExprOp::Mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case ExprOp::Div:
      if (is_const(a, 0.0)) return constant(0.0);
      if (is_const(b, 1.0)) return a;
      break;
    default:
      break;
  }
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

inline ExprPtr add(ExprPtr a, ExprPtr b) { return binary(ExprOp::Add, std::move(a), std::move(b)); }
inline ExprPtr sub(ExprPtr a, ExprPtr b) { return binary(ExprOp::Sub, std::move(a), std::move(b)); }
inline ExprPtr mul(ExprPtr a, ExprPtr b) { return binary(ExprOp::Mul, std::move(a), std::move(b)); }
inline ExprPtr div(ExprPtr a, ExprPtr b) { return binary(ExprOp::Div, std::move(a), std::move(b)); }
inline ExprPtr neg(ExprPtr a) { return mul(constant(-1.0), std::move(a)); }

inline ExprPtr unary(ExprOp op, ExprPtr a) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  return n;
}

inline ExprPtr sin_e(ExprPtr a) { return unary(ExprOp::Sin, std::move(a)); }
inline ExprPtr cos_e(ExprPtr a) { return unary(ExprOp::Cos, std::move(a)); }
inline ExprPtr tan_e(ExprPtr a) { return unary(ExprOp::Tan, std::move(a)); }
inline ExprPtr atan_e(ExprPtr a) { return unary(ExprOp::Atan, std::move(a)); }
inline ExprPtr exp_e(ExprPtr a) { return unary(ExprOp::Exp, std::move(a)); }
inline ExprPtr sqrt_e(ExprPtr a) { return unary(ExprOp::Sqrt, std::move(a)); }
inline ExprPtr mod2pi_e(ExprPtr a) { return unary(ExprOp::Mod2Pi, std::move(a)); }

inline ExprPtr pow_e(ExprPtr a, long n) {
  if (n == 0) return constant(1.0);
  if (n == 1) return a;
  auto node = std::make_shared<ExprNode>();
  node->op = ExprOp::Pow;
  node->ipow = n;
  node->a = std::move(a);
  return node;
}

/* ---- structural equality (used by the parser round-trip tests) ---- */

inline bool equal(const ExprPtr& x, const ExprPtr& y) {
  if (x == y) return true;
  if (x->op != y->op) return false;
  switch (x->op) {
    case ExprOp::Const:
      return x->value == y->value;
    case ExprOp::StateVar:
    case ExprOp::ControlVar:
    case ExprOp::DistVar:
      return x->index == y->index;
    case ExprOp::Pow:
      return x->ipow == y->ipow && equal(x->a, y->a);
    default:
      break;
  }
  if (x->b || y->b) {
    if (!x->b || !y->b) return false;
    return equal(x->a, y->a) && equal(x->b, y->b);
  }
  return equal(x->a, y->a);
}

/* unique node count of the DAG */
inline std::size_t node_count(const std::vector<ExprPtr>& roots) {
  std::unordered_map<const ExprNode*, bool> seen;
  std::size_t n = 0;
  std::vector<const ExprNode*> stack;
  for (const auto& r : roots) stack.push_back(r.get());
  while (!stack.empty()) {
    const ExprNode* e = stack.back();
    stack.pop_back();
    if (!e || seen.count(e)) continue;
    seen[e] = true;
    ++n;
    if (e->a) stack.push_back(e->a.get());
    if (e->b) stack.push_back(e->b.get());
  }
  return n;
}

/* ---- symbolic differentiation w.r.t. a state variable ---- */

class Differentiator {
 public:
  explicit Differentiator(int state_index) : var_(state_index) {}

  ExprPtr operator()(const ExprPtr& e) {
    auto it = memo_.find(e.get());
    if (it != memo_.end()) return it->second;
    ExprPtr d = derive(e);
    memo_.emplace(e.get(), d);
    return d;
  }

 private:
  ExprPtr derive(const ExprPtr& e) {
    switch (e->op) {
      case ExprOp::Const:
      case ExprOp::ControlVar:
      case ExprOp::DistVar:
        return constant(0.0);
      case ExprOp::StateVar:
        return constant(e->index == var_ ? 1.0 : 0.0);
      case ExprOp::Add:
        return add((*this)(e->a), (*this)(e->b));
      case ExprOp::Sub:
        return sub((*this)(e->a), (*this)(e->b));
      case ExprOp::Mul:
        return add(mul((*this)(e->a), e->b), mul(e->a, (*this)(e->b)));
      case ExprOp::Div:
        return div(sub(mul((*this)(e->a), e->b), mul(e->a, (*this)(e->b))),
                   pow_e(e->b, 2));
      case ExprOp::Pow:
        return mul(mul(constant(static_cast<double>(e->ipow)), pow_e(e->a, e->ipow - 1)),
                   (*this)(e->a));
      case ExprOp::Sin:
        return mul(cos_e(e->a), (*this)(e->a));
      case ExprOp::Cos:
        return neg(mul(sin_e(e->a), (*this)(e->a)));
      case ExprOp::Tan:
        return mul(add(constant(1.0), pow_e(tan_e(e->a), 2)), (*this)(e->a));
      case ExprOp::Atan:
        return div((*this)(e->a), add(constant(1.0), pow_e(e->a, 2)));
      case ExprOp::Exp:
        return mul(exp_e(e->a), (*this)(e->a));
      case ExprOp::Sqrt:
        return div((*this)(e->a), mul(constant(2.0), sqrt_e(e->a)));
      case ExprOp::Mod2Pi:
        /* derivative of the reduction is 1 away from the wrap points */
        return (*this)(e->a);
    }
    throw std::logic_error("derive: unhandled op");
  }

  int var_;
  std::unordered_map<const ExprNode*, ExprPtr> memo_;
};

inline ExprPtr differentiate(const ExprPtr& e, int state_index) {
  Differentiator d(state_index);
  return d(e);
}

/* ---- pretty printer (reparses to an equal AST) ---- */

inline std::string to_string(const ExprPtr& e, const std::vector<std::string>* names) {
  char buf[64];
  switch (e->op) {
    case ExprOp::Const:
      std::snprintf(buf, sizeof(buf), "%.17g", e->value);
      return buf;
    case ExprOp::StateVar:
      if (names && e->index < static_cast<int>(names->size())) return (*names)[e->index];
      return "x" + std::to_string(e->index + 1);
    case ExprOp::ControlVar:
      return "u" + std::to_string(e->index + 1);
    case ExprOp::DistVar:
      return "w" + std::to_string(e->index + 1);
    case ExprOp::Add:
      return "(" + to_string(e->a, names) + " + " + to_string(e->b, names) + ")";
    case ExprOp::Sub:
      return "(" + to_string(e->a, names) + " - " + to_string(e->b, names) + ")";
    case ExprOp::Mul:
      return "(" + to_string(e->a, names) + " * " + to_string(e->b, names) + ")";
    case ExprOp::Div:
      return "(" + to_string(e->a, names) + " / " + to_string(e->b, names) + ")";
    case ExprOp::Pow:
      return "(" + to_string(e->a, names) + ")^" + std::to_string(e->ipow);
    case ExprOp::Sin:
      return "sin(" + to_string(e->a, names) + ")";
    case ExprOp::Cos:
      return "cos(" + to_string(e->a, names) + ")";
    case ExprOp::Tan:
      return "tan(" + to_string(e->a, names) + ")";
    case ExprOp::Atan:
      return "atan(" + to_string(e->a, names) + ")";
    case ExprOp::Exp:
      return "exp(" + to_string(e->a, names) + ")";
    case ExprOp::Sqrt:
      return "sqrt(" + to_string(e->a, names) + ")";
    case ExprOp::Mod2Pi:
      return "mod2pi(" + to_string(e->a, names) + ")";
  }
  return "?";
}

inline std::string to_string(const ExprPtr& e) { return to_string(e, nullptr); }

/* ---- flat tape ---- */

struct TapeSlot {
  ExprOp op;
  std::uint32_t a = 0, b = 0;
  Interval cval;  /* Const: rigorous enclosure */
  int index = 0;  /* variable slot */
  long ipow = 0;
};

struct Tape {
  std::vector<TapeSlot> slots;
  std::vector<std::uint32_t> outputs;

  std::size_t size() const { return slots.size(); }
};

class TapeBuilder {
 public:
  Tape compile(const std::vector<ExprPtr>& roots) {
    Tape t;
    for (const auto& r : roots) t.outputs.push_back(visit(r, t));
    return t;
  }

 private:
  std::uint32_t visit(const ExprPtr& e, Tape& t) {
    auto it = memo_.find(e.get());
    if (it != memo_.end()) return it->second;

    TapeSlot s;
    s.op = e->op;
    s.index = e->index;
    s.ipow = e->ipow;
    bool const_args = true;
    if (e->a) {
      s.a = visit(e->a, t);
      const_args = const_args && t.slots[s.a].op == ExprOp::Const;
    }
    if (e->b) {
      s.b = visit(e->b, t);
      const_args = const_args && t.slots[s.b].op == ExprOp::Const;
    }

    switch (e->op) {
      case ExprOp::Const:
        s.cval = Interval(e->value);
        break;
      case ExprOp::StateVar:
      case ExprOp::ControlVar:
      case ExprOp::DistVar:
        break;
      default:
        if (const_args) {
          /* fold in interval arithmetic: sound by construction */
          Interval a = t.slots[s.a].cval;
          Interval b = e->b ? t.slots[s.b].cval : Interval();
          s.cval = apply(e->op, a, b, e->ipow);
          s.op = ExprOp::Const;
          s.a = s.b = 0;
        }
        break;
    }

    auto id = static_cast<std::uint32_t>(t.slots.size());
    t.slots.push_back(s);
    memo_.emplace(e.get(), id);
    return id;
  }

 public:
  static Interval apply(ExprOp op, const Interval& a, const Interval& b, long ipow) {
    switch (op) {
      case ExprOp::Add: return a + b;
      case ExprOp::Sub: return a - b;
      case ExprOp::Mul: return a * b;
      case ExprOp::Div: return a / b;
      case ExprOp::Pow: return pow_int(a, ipow);
      case ExprOp::Sin: return sin(a);
      case ExprOp::Cos: return cos(a);
      case ExprOp::Tan: return tan(a);
      case ExprOp::Atan: return atan(a);
      case ExprOp::Exp: return exp(a);
      case ExprOp::Sqrt: return sqrt(a);
      case ExprOp::Mod2Pi: return mod2pi(a);
      default: break;
    }
    throw std::logic_error("apply: unhandled op");
  }

 private:
  std::unordered_map<const ExprNode*, std::uint32_t> memo_;
};

inline Tape compile_tape(const std::vector<ExprPtr>& roots) {
  TapeBuilder b;
  return b.compile(roots);
}

/* interval evaluation; scratch is reused across calls by hot loops */
inline void eval_tape(const Tape& t, std::span<const Interval> state,
                      std::span<const Interval> ctrl, std::span<const Interval> dist,
                      std::vector<Interval>& scratch, std::vector<Interval>& out) {
  scratch.resize(t.slots.size());
  for (std::size_t i = 0; i < t.slots.size(); ++i) {
    const TapeSlot& s = t.slots[i];
    switch (s.op) {
      case ExprOp::Const: scratch[i] = s.cval; break;
      case ExprOp::StateVar: scratch[i] = state[s.index]; break;
      case ExprOp::ControlVar: scratch[i] = ctrl[s.index]; break;
      case ExprOp::DistVar: scratch[i] = dist[s.index]; break;
      default: {
        const bool binary = s.op == ExprOp::Add || s.op == ExprOp::Sub ||
                            s.op == ExprOp::Mul || s.op == ExprOp::Div;
        scratch[i] = TapeBuilder::apply(s.op, scratch[s.a],
                                        binary ? scratch[s.b] : Interval(), s.ipow);
      }
    }
  }
  out.resize(t.outputs.size());
  for (std::size_t k = 0; k < t.outputs.size(); ++k) out[k] = scratch[t.outputs[k]];
}

/* point evaluation (non-validated; used by simulation and test oracles) */
inline void eval_tape_point(const Tape& t, std::span<const double> state,
                            std::span<const double> ctrl, std::span<const double> dist,
                            std::vector<double>& scratch, std::vector<double>& out) {
  scratch.resize(t.slots.size());
  for (std::size_t i = 0; i < t.slots.size(); ++i) {
    const TapeSlot& s = t.slots[i];
    double a = s.a < i ? scratch[s.a] : 0.0;
    double b = s.b < i ? scratch[s.b] : 0.0;
    switch (s.op) {
      case ExprOp::Const: scratch[i] = s.cval.mid(); break;
      case ExprOp::StateVar: scratch[i] = state[s.index]; break;
      case ExprOp::ControlVar: scratch[i] = ctrl[s.index]; break;
      case ExprOp::DistVar: scratch[i] = dist[s.index]; break;
      case ExprOp::Add: scratch[i] = a + b; break;
      case ExprOp::Sub: scratch[i] = a - b; break;
      case ExprOp::Mul: scratch[i] = a * b; break;
      case ExprOp::Div: scratch[i] = a / b; break;
      case ExprOp::Pow: scratch[i] = std::pow(a, static_cast<double>(s.ipow)); break;
      case ExprOp::Sin: scratch[i] = std::sin(a); break;
      case ExprOp::Cos: scratch[i] = std::cos(a); break;
      case ExprOp::Tan: scratch[i] = std::tan(a); break;
      case ExprOp::Atan: scratch[i] = std::atan(a); break;
      case ExprOp::Exp: scratch[i] = std::exp(a); break;
      case ExprOp::Sqrt: scratch[i] = std::sqrt(a); break;
      case ExprOp::Mod2Pi: {
        double r = std::fmod(a, 6.283185307179586);
        scratch[i] = r < 0 ? r + 6.283185307179586 : r;
        break;
      }
    }
  }
  out.resize(t.outputs.size());
  for (std::size_t k = 0; k < t.outputs.size(); ++k) out[k] = scratch[t.outputs[k]];
}

enum class InclusionForm { Natural, Centered };

/*
 * Inclusion-function evaluator for an expression vector.  The natural
 * form applies interval rules directly; the centered form evaluates at
 * the midpoint and adds the interval Jacobian times the offset box.
 * Both are convergent; the centered form needs the symbolic Jacobian.
 */
class InclusionFn {
 public:
  InclusionFn() = default;

  InclusionFn(std::vector<ExprPtr> exprs, int n_state, bool with_jacobian = false)
      : exprs_(std::move(exprs)), n_state_(n_state) {
    tape_ = compile_tape(exprs_);
    if (with_jacobian) build_jacobian();
  }

  const std::vector<ExprPtr>& exprs() const { return exprs_; }
  const Tape& tape() const { return tape_; }
  bool has_jacobian() const { return !jac_tape_.slots.empty() || !jac_exprs_.empty(); }

  void build_jacobian() {
    if (has_jacobian()) return;
    for (const auto& e : exprs_)
      for (int j = 0; j < n_state_; ++j) jac_exprs_.push_back(differentiate(e, j));
    jac_tape_ = compile_tape(jac_exprs_);
  }

  struct Scratch {
    std::vector<Interval> regs, out, jout, mid_out;
    std::vector<double> pregs, pout;
  };

  Box eval(const Box& x, std::span<const Interval> ctrl, std::span<const Interval> dist,
           InclusionForm form, Scratch& s) const {
    if (form == InclusionForm::Natural || !has_jacobian()) {
      eval_tape(tape_, x.dims, ctrl, dist, s.regs, s.out);
      return Box(s.out);
    }
    /* centered: f(c) + J([x]) (x - c) */
    std::vector<Interval> c(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) c[i] = Interval(x[i].mid());
    eval_tape(tape_, c, ctrl, dist, s.regs, s.mid_out);
    eval_tape(jac_tape_, x.dims, ctrl, dist, s.regs, s.jout);
    Box r(x.size());
    const int n = n_state_;
    for (std::size_t i = 0; i < s.mid_out.size(); ++i) {
      Interval acc = s.mid_out[i];
      for (int j = 0; j < n; ++j) {
        Interval off = x[j] - Interval(x[j].mid());
        acc = acc + s.jout[i * n + j] * off;
      }
      r[i] = acc;
    }
    return r;
  }

  std::vector<double> eval_point(std::span<const double> x, std::span<const double> ctrl,
                                 std::span<const double> dist, Scratch& s) const {
    eval_tape_point(tape_, x, ctrl, dist, s.pregs, s.pout);
    return s.pout;
  }

 private:
  std::vector<ExprPtr> exprs_;
  std::vector<ExprPtr> jac_exprs_;
  int n_state_ = 0;
  Tape tape_, jac_tape_;
};

} // namespace reachstay

#endif
