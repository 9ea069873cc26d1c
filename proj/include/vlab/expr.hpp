#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vlab/error.hpp"
#include "vlab/numeric.hpp"

namespace vlab {

/// Small expression grammar over one variable: constants, the variable,
/// + - * /, pow and ln. The same tree serves as a function of x on [0,1]
/// and as a sequence term in n.
class Expr {
 public:
  enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Ln };

  struct Node {
    Op op;
    double value = 0.0;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
  };

  Expr() : Expr(constant(0.0)) {}

  static Expr constant(double v) { return Expr(std::make_shared<Node>(Node{Op::Const, v, nullptr, nullptr})); }
  static Expr var() { return Expr(std::make_shared<Node>(Node{Op::Var, 0.0, nullptr, nullptr})); }
  static Expr binary(Op op, const Expr& a, const Expr& b) {
    return Expr(std::make_shared<Node>(Node{op, 0.0, a.node_, b.node_}));
  }
  static Expr ln(const Expr& a) { return Expr(std::make_shared<Node>(Node{Op::Ln, 0.0, a.node_, nullptr})); }
  static Expr pow(const Expr& a, const Expr& b) { return binary(Op::Pow, a, b); }

  friend Expr operator+(const Expr& a, const Expr& b) { return binary(Op::Add, a, b); }
  friend Expr operator-(const Expr& a, const Expr& b) { return binary(Op::Sub, a, b); }
  friend Expr operator*(const Expr& a, const Expr& b) { return binary(Op::Mul, a, b); }
  friend Expr operator/(const Expr& a, const Expr& b) { return binary(Op::Div, a, b); }

  /// a - b, cancelling an additive constant shared with b so that
  /// (c + E) - c is E exactly rather than a rounded difference.
  static Expr minus(const Expr& a, const Expr& b) {
    if (same(a.node_.get(), b.node_.get())) return constant(0.0);
    if (b.is_const() && a.op() == Op::Add) {
      if (a.lhs().is_const()) return Expr(add(cst(a.lhs().const_value() - b.const_value()), a.node_->b));
      if (a.rhs().is_const()) return Expr(add(a.node_->a, cst(a.rhs().const_value() - b.const_value())));
    }
    return Expr(sub(a.node_, b.node_));
  }

  Op op() const { return node_->op; }
  double const_value() const { return node_->value; }
  Expr lhs() const { return Expr(node_->a); }
  Expr rhs() const { return Expr(node_->b); }

  bool is_const() const { return node_->op == Op::Const; }
  bool depends_on_var() const { return depends(node_.get()); }

  /// Evaluates at x; u must equal 1 - x and is used verbatim wherever the tree
  /// contains the literal pattern (1 - var), which keeps (1-x)^r accurate near 1.
  double eval(double x, double u) const { return eval_node(node_.get(), x, u); }
  double eval(double x) const { return eval(x, 1.0 - x); }
  double operator()(double x) const { return eval(x); }

  /// Evaluates as a sequence term at integer index n.
  double at(long n) const {
    const double v = static_cast<double>(n);
    return eval(v, 1.0 - v);
  }

  Expr derivative() const { return Expr(diff(node_)); }

  /// 1 - this, with (1 - E) simplified to E.
  Expr complement() const {
    if (node_->op == Op::Sub && node_->a->op == Op::Const && node_->a->value == 1.0) return Expr(node_->b);
    return constant(1.0) - *this;
  }

  struct Range {
    double lo;
    double hi;
    bool ok;
  };

  /// Interval enclosure of the expression for var in [xl, xh]. ok is false
  /// when the enclosure hits a domain error (division by a range containing 0,
  /// ln of a range reaching 0 or below, non-integer powers of negative ranges).
  Range enclose(double xl, double xh) const { return enc(node_.get(), xl, xh); }

  /// Limit as var -> +infinity, if the simple extended-real rules decide it.
  std::optional<double> limit_at_infinity() const { return lim(node_.get()); }

  std::string to_string() const {
    std::ostringstream os;
    print(os, node_.get());
    return os.str();
  }

  friend bool operator==(const Expr& a, const Expr& b) { return same(a.node_.get(), b.node_.get()); }

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static bool depends(const Node* n) {
    if (!n) return false;
    if (n->op == Op::Var) return true;
    return depends(n->a.get()) || depends(n->b.get());
  }

  static bool same(const Node* x, const Node* y) {
    if (x == y) return true;
    if (!x || !y) return false;
    if (x->op != y->op) return false;
    if (x->op == Op::Const) return x->value == y->value;
    return same(x->a.get(), y->a.get()) && same(x->b.get(), y->b.get());
  }

  static bool is_one_minus_var(const Node* n) {
    return n->op == Op::Sub && n->a->op == Op::Const && n->a->value == 1.0 && n->b->op == Op::Var;
  }

  static double eval_node(const Node* n, double x, double u) {
    switch (n->op) {
      case Op::Const: return n->value;
      case Op::Var: return x;
      case Op::Add: return eval_node(n->a.get(), x, u) + eval_node(n->b.get(), x, u);
      case Op::Sub:
        if (is_one_minus_var(n)) return u;
        return eval_node(n->a.get(), x, u) - eval_node(n->b.get(), x, u);
      case Op::Mul: return eval_node(n->a.get(), x, u) * eval_node(n->b.get(), x, u);
      case Op::Div: {
        const double d = eval_node(n->b.get(), x, u);
        if (d == 0.0) return std::nan("");
        return eval_node(n->a.get(), x, u) / d;
      }
      case Op::Pow: return std::pow(eval_node(n->a.get(), x, u), eval_node(n->b.get(), x, u));
      case Op::Ln: {
        const double v = eval_node(n->a.get(), x, u);
        if (!(v > 0.0)) return std::nan("");
        return std::log(v);
      }
    }
    return std::nan("");
  }

  using NodeP = std::shared_ptr<const Node>;

  static NodeP mk(Op op, NodeP a, NodeP b, double v = 0.0) {
    return std::make_shared<Node>(Node{op, v, std::move(a), std::move(b)});
  }
  static NodeP cst(double v) { return mk(Op::Const, nullptr, nullptr, v); }
  static bool is_c(const NodeP& n, double v) { return n->op == Op::Const && n->value == v; }

  static NodeP add(NodeP a, NodeP b) {
    if (is_c(a, 0.0)) return b;
    if (is_c(b, 0.0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return cst(a->value + b->value);
    return mk(Op::Add, a, b);
  }
  static NodeP sub(NodeP a, NodeP b) {
    if (is_c(b, 0.0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return cst(a->value - b->value);
    return mk(Op::Sub, a, b);
  }
  static NodeP mul(NodeP a, NodeP b) {
    if (is_c(a, 0.0) || is_c(b, 0.0)) return cst(0.0);
    if (is_c(a, 1.0)) return b;
    if (is_c(b, 1.0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return cst(a->value * b->value);
    return mk(Op::Mul, a, b);
  }
  static NodeP div(NodeP a, NodeP b) {
    if (is_c(a, 0.0)) return cst(0.0);
    if (is_c(b, 1.0)) return a;
    return mk(Op::Div, a, b);
  }

  static NodeP diff(const NodeP& n) {
    switch (n->op) {
      case Op::Const: return cst(0.0);
      case Op::Var: return cst(1.0);
      case Op::Add: return add(diff(n->a), diff(n->b));
      case Op::Sub: return sub(diff(n->a), diff(n->b));
      case Op::Mul: return add(mul(diff(n->a), n->b), mul(n->a, diff(n->b)));
      case Op::Div:
        return div(sub(mul(diff(n->a), n->b), mul(n->a, diff(n->b))), mul(n->b, n->b));
      case Op::Pow: {
        const bool base_var = depends(n->a.get());
        const bool exp_var = depends(n->b.get());
        if (!base_var && !exp_var) return cst(0.0);
        if (!exp_var) {
          // b * a^(b-1) * a'
          return mul(mul(n->b, mk(Op::Pow, n->a, sub(n->b, cst(1.0)))), diff(n->a));
        }
        const NodeP lna = mk(Op::Ln, n->a, nullptr);
        if (!base_var) return mul(mul(n, lna), diff(n->b));
        // a^b * (b' ln a + b a'/a)
        return mul(n, add(mul(diff(n->b), lna), div(mul(n->b, diff(n->a)), n->a)));
      }
      case Op::Ln: return div(diff(n->a), n->a);
    }
    return cst(0.0);
  }

  // Exact zeros are kept: they only arise from exact cancellations or exact
  // factors, and widening them would destroy sign information.
  static double down(double v) { return (std::isfinite(v) && v != 0.0) ? std::nextafter(v, -kInf) : v; }
  static double up(double v) { return (std::isfinite(v) && v != 0.0) ? std::nextafter(v, kInf) : v; }

  static Range widen(double lo, double hi) {
    if (std::isnan(lo) || std::isnan(hi)) return {0, 0, false};
    return {down(lo), up(hi), true};
  }

  static Range enc(const Node* n, double xl, double xh) {
    switch (n->op) {
      case Op::Const: return {n->value, n->value, true};
      case Op::Var: return {xl, xh, true};
      case Op::Add: {
        auto a = enc(n->a.get(), xl, xh), b = enc(n->b.get(), xl, xh);
        if (!a.ok || !b.ok) return {0, 0, false};
        return widen(a.lo + b.lo, a.hi + b.hi);
      }
      case Op::Sub: {
        if (is_one_minus_var(n)) return widen(1.0 - xh, 1.0 - xl);
        auto a = enc(n->a.get(), xl, xh), b = enc(n->b.get(), xl, xh);
        if (!a.ok || !b.ok) return {0, 0, false};
        return widen(a.lo - b.hi, a.hi - b.lo);
      }
      case Op::Mul: {
        auto a = enc(n->a.get(), xl, xh), b = enc(n->b.get(), xl, xh);
        if (!a.ok || !b.ok) return {0, 0, false};
        return corners(a, b, [](double p, double q) {
          if ((p == 0.0 && std::isinf(q)) || (q == 0.0 && std::isinf(p))) return 0.0;
          return p * q;
        });
      }
      case Op::Div: {
        auto a = enc(n->a.get(), xl, xh), b = enc(n->b.get(), xl, xh);
        if (!a.ok || !b.ok || (b.lo <= 0.0 && b.hi >= 0.0)) return {0, 0, false};
        return corners(a, b, [](double p, double q) { return p / q; });
      }
      case Op::Ln: {
        auto a = enc(n->a.get(), xl, xh);
        if (!a.ok || a.lo <= 0.0) return {0, 0, false};
        return widen(std::log(a.lo), std::log(a.hi));
      }
      case Op::Pow: {
        auto a = enc(n->a.get(), xl, xh), b = enc(n->b.get(), xl, xh);
        if (!a.ok || !b.ok) return {0, 0, false};
        if (a.lo >= 0.0) {
          if (a.lo == 0.0 && b.lo <= 0.0 && b.hi >= 0.0 && b.lo < b.hi) return {0.0, kInf, true};
          return corners(a, b, [](double p, double q) { return std::pow(p, q); });
        }
        if (b.lo == b.hi && std::floor(b.lo) == b.lo) {
          const double e = b.lo;
          if (e == 0.0) return {1.0, 1.0, true};
          const bool even = std::fmod(std::fabs(e), 2.0) == 0.0;
          if (e > 0.0) {
            if (even && a.hi >= 0.0) return widen(0.0, std::pow(std::fmax(-a.lo, a.hi), e));
            return corners(a, b, [](double p, double q) { return std::pow(p, q); });
          }
          if (a.hi >= 0.0) return {0, 0, false};
          return corners(a, b, [](double p, double q) { return std::pow(p, q); });
        }
        return {0, 0, false};
      }
    }
    return {0, 0, false};
  }

  template <typename F>
  static Range corners(const Range& a, const Range& b, F f) {
    const double v[4] = {f(a.lo, b.lo), f(a.lo, b.hi), f(a.hi, b.lo), f(a.hi, b.hi)};
    double lo = v[0], hi = v[0];
    for (double x : v) {
      if (std::isnan(x)) return {0, 0, false};
      lo = std::fmin(lo, x);
      hi = std::fmax(hi, x);
    }
    return widen(lo, hi);
  }

  static std::optional<double> lim(const Node* n) {
    switch (n->op) {
      case Op::Const: return n->value;
      case Op::Var: return kInf;
      case Op::Ln: {
        auto a = lim(n->a.get());
        if (!a || *a < 0.0) return std::nullopt;
        if (*a == 0.0) return -kInf;
        return std::log(*a);
      }
      default: break;
    }
    auto a = lim(n->a.get());
    auto b = lim(n->b.get());
    if (!a || !b) return std::nullopt;
    const double x = *a, y = *b;
    double r = std::nan("");
    switch (n->op) {
      case Op::Add: r = x + y; break;
      case Op::Sub: r = x - y; break;
      case Op::Mul:
        if ((x == 0.0 && std::isinf(y)) || (y == 0.0 && std::isinf(x))) return std::nullopt;
        r = x * y;
        break;
      case Op::Div:
        if (y == 0.0 || (std::isinf(x) && std::isinf(y))) return std::nullopt;
        r = x / y;
        break;
      case Op::Pow:
        if (x < 0.0) return std::nullopt;
        if (x == 1.0 && std::isinf(y)) return std::nullopt;
        if ((x == 0.0 || std::isinf(x)) && y == 0.0) return std::nullopt;
        r = std::pow(x, y);
        break;
      default: break;
    }
    if (std::isnan(r)) return std::nullopt;
    return r;
  }

  static void print(std::ostream& os, const Node* n) {
    switch (n->op) {
      case Op::Const: os << n->value; return;
      case Op::Var: os << "x"; return;
      case Op::Ln: os << "ln("; print(os, n->a.get()); os << ")"; return;
      default: break;
    }
    const char* sym = n->op == Op::Add ? " + " : n->op == Op::Sub ? " - " : n->op == Op::Mul ? " * " : n->op == Op::Div ? " / " : " ^ ";
    os << "(";
    print(os, n->a.get());
    os << sym;
    print(os, n->b.get());
    os << ")";
  }

  NodeP node_;
};

using SequenceExpr = Expr;

}  // namespace vlab
