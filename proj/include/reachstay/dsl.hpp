/*
 * dsl.hpp
 *
 * Parser for the dynamics description language.
 *
 *   state x1 x2;
 *   control finite {(-0.4), (0), (0.4)};     |  control box [-1,1]^2 step 0.3;
 *   disturbance additive 0.05;               # optional, additive bound
 *   disturbance inner box [-0.2,0.2]^1 step 0.1;   # optional, non-additive
 *   x1' = -x2;                               # ' continuous, + discrete map
 *   x2' = x1 + (x1^2 - 1)*x2;
 *   mode (0.3, 0) { x1+ = ...; ... }         # per-control override block
 *
 * Expressions use + - * / ^int and sin cos tan atan exp sqrt mod2pi, the
 * literal pi, state names, and u1..um / w1..wp.  '#' starts a line comment.
 */

#ifndef REACHSTAY_DSL_HPP
#define REACHSTAY_DSL_HPP

#include <cctype>
#include <cstdlib>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reachstay/expr.hpp"

namespace reachstay {

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(const std::string& msg, int l, int c)
      : std::runtime_error("parse error at " + std::to_string(l) + ":" + std::to_string(c) +
                           ": " + msg),
        line(l),
        col(c) {}
};

enum class SystemKind { DiscreteMap, ContinuousField };

struct ParsedSystem {
  SystemKind kind = SystemKind::DiscreteMap;
  std::vector<std::string> state_names;
  bool control_is_box = false;
  std::vector<std::vector<double>> finite_controls;
  Box control_box;
  double eta = 0.0;
  int control_dim = 0;
  double delta = 0.0;
  bool has_wbox = false;
  Box wbox;
  double mu = 0.0;
  std::vector<ExprPtr> field;
  std::vector<std::pair<std::vector<double>, std::vector<ExprPtr>>> mode_overrides;
  std::string source;
};

namespace detail {

struct Token {
  enum Kind { Ident, Number, Punct, End } kind = End;
  std::string text;
  double num = 0.0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : s_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        ++pos_;
        ++line_;
        col_ = 1;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
        ++col_;
      } else {
        break;
      }
    }
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= s_.size()) {
      tok_.kind = Token::End;
      return;
    }
    char c = s_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
        ++col_;
      }
      tok_.kind = Token::Ident;
      tok_.text = s_.substr(start, pos_ - start);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) ||
                                  s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E' ||
                                  ((s_[pos_] == '+' || s_[pos_] == '-') && pos_ > start &&
                                   (s_[pos_ - 1] == 'e' || s_[pos_ - 1] == 'E')))) {
        ++pos_;
        ++col_;
      }
      tok_.kind = Token::Number;
      tok_.text = s_.substr(start, pos_ - start);
      tok_.num = std::strtod(tok_.text.c_str(), nullptr);
      return;
    }
    tok_.kind = Token::Punct;
    tok_.text = std::string(1, c);
    ++pos_;
    ++col_;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) { out_.source = src; }

  ParsedSystem run() {
    bool kind_set = false;
    std::map<std::string, ExprPtr> equations;
    while (lex_.peek().kind != Token::End) {
      const Token& t = lex_.peek();
      if (t.kind == Token::Ident && t.text == "state") {
        parse_state_decl();
      } else if (t.kind == Token::Ident && t.text == "control") {
        parse_control_decl();
      } else if (t.kind == Token::Ident && t.text == "disturbance") {
        parse_disturbance_decl();
      } else if (t.kind == Token::Ident && t.text == "mode") {
        parse_mode_block();
      } else if (t.kind == Token::Ident) {
        parse_equation(equations, kind_set);
      } else {
        fail("unexpected token '" + t.text + "'", t);
      }
    }
    if (out_.state_names.empty()) throw ParseError("missing 'state' declaration", 1, 1);
    out_.field.resize(out_.state_names.size());
    for (std::size_t i = 0; i < out_.state_names.size(); ++i) {
      auto it = equations.find(out_.state_names[i]);
      if (it == equations.end())
        throw ParseError("missing equation for state '" + out_.state_names[i] + "'", 1, 1);
      out_.field[i] = it->second;
    }
    if (equations.size() != out_.state_names.size())
      throw ParseError("equation count does not match state dimension", 1, 1);
    validate_indices();
    return out_;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, const Token& t) {
    throw ParseError(msg, t.line, t.col);
  }

  Token expect_punct(const std::string& p) {
    Token t = lex_.next();
    if (t.kind != Token::Punct || t.text != p) fail("expected '" + p + "'", t);
    return t;
  }

  Token expect_ident(const std::string& kw = {}) {
    Token t = lex_.next();
    if (t.kind != Token::Ident) fail("expected identifier", t);
    if (!kw.empty() && t.text != kw) fail("expected '" + kw + "'", t);
    return t;
  }

  double expect_number() {
    bool negate = false;
    if (lex_.peek().kind == Token::Punct && lex_.peek().text == "-") {
      lex_.next();
      negate = true;
    }
    Token t = lex_.next();
    if (t.kind != Token::Number) fail("expected number", t);
    return negate ? -t.num : t.num;
  }

  void parse_state_decl() {
    lex_.next();
    while (lex_.peek().kind == Token::Ident) out_.state_names.push_back(lex_.next().text);
    if (out_.state_names.empty()) fail("state declaration lists no names", lex_.peek());
    expect_punct(";");
  }

  void parse_control_decl() {
    Token kw = lex_.next();
    Token which = expect_ident();
    if (which.text == "finite") {
      expect_punct("{");
      while (true) {
        expect_punct("(");
        std::vector<double> v;
        v.push_back(expect_number());
        while (lex_.peek().kind == Token::Punct && lex_.peek().text == ",") {
          lex_.next();
          v.push_back(expect_number());
        }
        expect_punct(")");
        if (out_.control_dim == 0)
          out_.control_dim = static_cast<int>(v.size());
        else if (static_cast<int>(v.size()) != out_.control_dim)
          fail("control vectors have inconsistent dimension", kw);
        out_.finite_controls.push_back(v);
        if (lex_.peek().kind == Token::Punct && lex_.peek().text == ",") {
          lex_.next();
          continue;
        }
        break;
      }
      expect_punct("}");
      expect_punct(";");
    } else if (which.text == "box") {
      expect_punct("[");
      double lo = expect_number();
      expect_punct(",");
      double hi = expect_number();
      expect_punct("]");
      int m = 1;
      if (lex_.peek().kind == Token::Punct && lex_.peek().text == "^") {
        lex_.next();
        Token d = lex_.next();
        if (d.kind != Token::Number) fail("expected integer after '^'", d);
        m = static_cast<int>(d.num);
      }
      expect_ident("step");
      double eta = expect_number();
      expect_punct(";");
      if (eta <= 0.0) fail("step must be positive", kw);
      out_.control_is_box = true;
      out_.control_dim = m;
      out_.eta = eta;
      out_.control_box = Box(std::vector<Interval>(m, Interval(lo, hi)));
    } else {
      fail("expected 'finite' or 'box'", which);
    }
  }

  void parse_disturbance_decl() {
    Token kw = lex_.next();
    Token which = expect_ident();
    if (which.text == "additive") {
      out_.delta = expect_number();
      expect_punct(";");
      if (out_.delta < 0.0) fail("disturbance bound must be nonnegative", kw);
    } else if (which.text == "inner") {
      expect_ident("box");
      expect_punct("[");
      double lo = expect_number();
      expect_punct(",");
      double hi = expect_number();
      expect_punct("]");
      int p = 1;
      if (lex_.peek().kind == Token::Punct && lex_.peek().text == "^") {
        lex_.next();
        Token d = lex_.next();
        if (d.kind != Token::Number) fail("expected integer after '^'", d);
        p = static_cast<int>(d.num);
      }
      expect_ident("step");
      out_.mu = expect_number();
      expect_punct(";");
      if (out_.mu <= 0.0) fail("partition step must be positive", kw);
      out_.has_wbox = true;
      out_.wbox = Box(std::vector<Interval>(p, Interval(lo, hi)));
    } else {
      fail("expected 'additive' or 'inner'", which);
    }
  }

  void parse_equation(std::map<std::string, ExprPtr>& eqs, bool& kind_set) {
    Token name = lex_.next();
    int idx = state_index(name.text);
    if (idx < 0) fail("undeclared state '" + name.text + "'", name);
    Token marker = lex_.next();
    if (marker.kind != Token::Punct || (marker.text != "'" && marker.text != "+"))
      fail("expected \"'\" or '+' after state name", marker);
    SystemKind k = marker.text == "'" ? SystemKind::ContinuousField : SystemKind::DiscreteMap;
    if (!kind_set) {
      out_.kind = k;
      kind_set = true;
    } else if (out_.kind != k) {
      fail("mixed discrete and continuous equations", marker);
    }
    expect_punct("=");
    ExprPtr e = parse_expr();
    expect_punct(";");
    if (eqs.count(name.text)) fail("duplicate equation for '" + name.text + "'", name);
    eqs[name.text] = e;
  }

  void parse_mode_block() {
    lex_.next();
    expect_punct("(");
    std::vector<double> u;
    u.push_back(expect_number());
    while (lex_.peek().kind == Token::Punct && lex_.peek().text == ",") {
      lex_.next();
      u.push_back(expect_number());
    }
    expect_punct(")");
    expect_punct("{");
    std::map<std::string, ExprPtr> eqs;
    while (!(lex_.peek().kind == Token::Punct && lex_.peek().text == "}")) {
      bool dummy = true; /* the main block fixes the kind */
      parse_equation(eqs, dummy);
    }
    expect_punct("}");
    if (eqs.size() != out_.state_names.size())
      fail("mode block must define every state equation", lex_.peek());
    std::vector<ExprPtr> f(out_.state_names.size());
    for (std::size_t i = 0; i < out_.state_names.size(); ++i) f[i] = eqs[out_.state_names[i]];
    out_.mode_overrides.emplace_back(u, f);
  }

  int state_index(const std::string& name) const {
    for (std::size_t i = 0; i < out_.state_names.size(); ++i)
      if (out_.state_names[i] == name) return static_cast<int>(i);
    return -1;
  }

  void validate_indices() const {
    std::vector<const ExprNode*> stack;
    auto push_all = [&stack](const std::vector<ExprPtr>& v) {
      for (const auto& e : v) stack.push_back(e.get());
    };
    push_all(out_.field);
    for (const auto& [u, f] : out_.mode_overrides) push_all(f);
    while (!stack.empty()) {
      const ExprNode* e = stack.back();
      stack.pop_back();
      if (!e) continue;
      if (e->op == ExprOp::ControlVar &&
          (out_.control_dim == 0 || e->index >= out_.control_dim))
        throw ParseError("control index u" + std::to_string(e->index + 1) +
                             " exceeds declared dimension", 1, 1);
      if (e->op == ExprOp::DistVar &&
          (!out_.has_wbox || e->index >= static_cast<int>(out_.wbox.size())))
        throw ParseError("disturbance index w" + std::to_string(e->index + 1) +
                             " exceeds declared dimension", 1, 1);
      if (e->a) stack.push_back(e->a.get());
      if (e->b) stack.push_back(e->b.get());
    }
  }

  /* expression grammar: sum -> term (+|- term)*; term -> factor (*|/ factor)*;
   * factor -> - factor | primary ^int | primary */
  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    while (lex_.peek().kind == Token::Punct &&
           (lex_.peek().text == "+" || lex_.peek().text == "-")) {
      /* "x1+ =" only appears at statement level, never inside an expression */
      std::string op = lex_.next().text;
      ExprPtr rhs = parse_term();
      e = op == "+" ? add(e, rhs) : sub(e, rhs);
    }
    return e;
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_factor();
    while (lex_.peek().kind == Token::Punct &&
           (lex_.peek().text == "*" || lex_.peek().text == "/")) {
      std::string op = lex_.next().text;
      ExprPtr rhs = parse_factor();
      e = op == "*" ? mul(e, rhs) : div(e, rhs);
    }
    return e;
  }

  ExprPtr parse_factor() {
    if (lex_.peek().kind == Token::Punct && lex_.peek().text == "-") {
      Token m = lex_.next();
      return neg(parse_factor());
    }
    ExprPtr e = parse_primary();
    if (lex_.peek().kind == Token::Punct && lex_.peek().text == "^") {
      lex_.next();
      bool negexp = false;
      if (lex_.peek().kind == Token::Punct && lex_.peek().text == "-") {
        lex_.next();
        negexp = true;
      }
      Token d = lex_.next();
      if (d.kind != Token::Number || d.num != std::floor(d.num))
        fail("exponent must be an integer", d);
      long n = static_cast<long>(d.num);
      e = pow_e(e, negexp ? -n : n);
    }
    return e;
  }

  ExprPtr parse_primary() {
    Token t = lex_.next();
    if (t.kind == Token::Number) return constant(t.num);
    if (t.kind == Token::Punct && t.text == "(") {
      ExprPtr e = parse_expr();
      expect_punct(")");
      return e;
    }
    if (t.kind == Token::Ident) {
      if (t.text == "pi") return constant(3.141592653589793);
      if (t.text == "sin" || t.text == "cos" || t.text == "tan" || t.text == "atan" ||
          t.text == "exp" || t.text == "sqrt" || t.text == "mod2pi") {
        expect_punct("(");
        ExprPtr a = parse_expr();
        expect_punct(")");
        if (t.text == "sin") return sin_e(a);
        if (t.text == "cos") return cos_e(a);
        if (t.text == "tan") return tan_e(a);
        if (t.text == "atan") return atan_e(a);
        if (t.text == "exp") return exp_e(a);
        if (t.text == "sqrt") return sqrt_e(a);
        return mod2pi_e(a);
      }
      int si = state_index(t.text);
      if (si >= 0) return state_var(si);
      if (t.text.size() >= 2 && (t.text[0] == 'u' || t.text[0] == 'w')) {
        bool digits = true;
        for (std::size_t i = 1; i < t.text.size(); ++i)
          if (!std::isdigit(static_cast<unsigned char>(t.text[i]))) digits = false;
        if (digits) {
          int idx = std::stoi(t.text.substr(1)) - 1;
          if (idx < 0) fail("variable index must be positive", t);
          if (t.text[0] == 'u') {
            if (out_.control_dim > 0 && idx >= out_.control_dim)
              fail("control index exceeds declared dimension", t);
            return control_var(idx);
          }
          if (out_.has_wbox && idx >= static_cast<int>(out_.wbox.size()))
            fail("disturbance index exceeds declared dimension", t);
          if (!out_.has_wbox) fail("no inner disturbance declared", t);
          return dist_var(idx);
        }
      }
      fail("undeclared variable '" + t.text + "'", t);
    }
    fail("unexpected token '" + t.text + "'", t);
  }

  Lexer lex_;
  ParsedSystem out_;
};

} // namespace detail

inline ParsedSystem parse_dsl(const std::string& source) {
  detail::Parser p(source);
  return p.run();
}

} // namespace reachstay

#endif
