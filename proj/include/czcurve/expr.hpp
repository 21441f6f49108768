// Small expression grammar for custom convolution kernels.
//
// Expressions are evaluated at a point x of the ambient normed space; `xN`
// is the N-th coordinate (1-based) and `norm` is the ambient norm of x.
//
//   expr    = term { ("+" | "-") term } ;
//   term    = unary { ("*" | "/") unary } ;
//   unary   = [ "+" | "-" ] power ;
//   power   = atom [ "^" unary ] ;
//   atom    = number | coord | "norm" | func "(" expr ")" | "(" expr ")" ;
//   coord   = "x" digits ;
//   func    = "abs" | "sqrt" | "sin" | "cos" | "exp" | "log" | "sign" ;
//   number  = digits [ "." digits ] [ ("e"|"E") ["+"|"-"] digits ] ;
//
// Example: the planar Riesz kernel in the first coordinate is "x1 / norm^2".
#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace czcurve {

class ExprError : public std::invalid_argument {
 public:
  ExprError(const std::string& msg, std::size_t pos)
      : std::invalid_argument(msg + " at position " + std::to_string(pos)), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

namespace exprdetail {

enum class Op { Const, Coord, Norm, Add, Sub, Mul, Div, Pow, Neg, Abs, Sqrt, Sin, Cos, Exp, Log, Sign };

struct Node {
  Op op;
  double value = 0.0;   // Const
  int coord = 0;        // Coord (0-based)
  std::unique_ptr<Node> lhs, rhs;
};

inline double eval(const Node& n, std::span<const double> x, double norm_x) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Coord:
      if (n.coord >= static_cast<int>(x.size())) throw std::invalid_argument("coordinate index beyond dimension");
      return x[n.coord];
    case Op::Norm: return norm_x;
    case Op::Add: return eval(*n.lhs, x, norm_x) + eval(*n.rhs, x, norm_x);
    case Op::Sub: return eval(*n.lhs, x, norm_x) - eval(*n.rhs, x, norm_x);
    case Op::Mul: return eval(*n.lhs, x, norm_x) * eval(*n.rhs, x, norm_x);
    case Op::Div: return eval(*n.lhs, x, norm_x) / eval(*n.rhs, x, norm_x);
    case Op::Pow: return std::pow(eval(*n.lhs, x, norm_x), eval(*n.rhs, x, norm_x));
    case Op::Neg: return -eval(*n.lhs, x, norm_x);
    case Op::Abs: return std::fabs(eval(*n.lhs, x, norm_x));
    case Op::Sqrt: return std::sqrt(eval(*n.lhs, x, norm_x));
    case Op::Sin: return std::sin(eval(*n.lhs, x, norm_x));
    case Op::Cos: return std::cos(eval(*n.lhs, x, norm_x));
    case Op::Exp: return std::exp(eval(*n.lhs, x, norm_x));
    case Op::Log: return std::log(eval(*n.lhs, x, norm_x));
    case Op::Sign: {
      double v = eval(*n.lhs, x, norm_x);
      return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    }
  }
  return 0.0;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  std::unique_ptr<Node> parse() {
    auto e = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) throw ExprError("unexpected trailing input", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  std::unique_ptr<Node> parse_expr() {
    auto lhs = parse_term();
    for (;;) {
      if (eat('+')) {
        auto n = std::make_unique<Node>(Node{Op::Add});
        n->lhs = std::move(lhs);
        n->rhs = parse_term();
        lhs = std::move(n);
      } else if (eat('-')) {
        auto n = std::make_unique<Node>(Node{Op::Sub});
        n->lhs = std::move(lhs);
        n->rhs = parse_term();
        lhs = std::move(n);
      } else {
        return lhs;
      }
    }
  }

  std::unique_ptr<Node> parse_term() {
    auto lhs = parse_unary();
    for (;;) {
      if (eat('*')) {
        auto n = std::make_unique<Node>(Node{Op::Mul});
        n->lhs = std::move(lhs);
        n->rhs = parse_unary();
        lhs = std::move(n);
      } else if (eat('/')) {
        auto n = std::make_unique<Node>(Node{Op::Div});
        n->lhs = std::move(lhs);
        n->rhs = parse_unary();
        lhs = std::move(n);
      } else {
        return lhs;
      }
    }
  }

  std::unique_ptr<Node> parse_unary() {
    if (eat('-')) {
      auto n = std::make_unique<Node>(Node{Op::Neg});
      n->lhs = parse_unary();
      return n;
    }
    (void)eat('+');
    return parse_power();
  }

  std::unique_ptr<Node> parse_power() {
    auto base = parse_atom();
    if (eat('^')) {
      auto n = std::make_unique<Node>(Node{Op::Pow});
      n->lhs = std::move(base);
      n->rhs = parse_unary();  // right-associative
      return n;
    }
    return base;
  }

  std::unique_ptr<Node> parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) throw ExprError("unexpected end of expression", pos_);
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = parse_expr();
      if (!eat(')')) throw ExprError("missing ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    throw ExprError(std::string("unexpected character '") + c + "'", pos_);
  }

  std::unique_ptr<Node> parse_number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.' || src_[pos_] == 'e' ||
            src_[pos_] == 'E' ||
            ((src_[pos_] == '+' || src_[pos_] == '-') && (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E'))))
      ++pos_;
    try {
      auto n = std::make_unique<Node>(Node{Op::Const});
      n->value = std::stod(std::string(src_.substr(start, pos_ - start)));
      return n;
    } catch (const std::exception&) {
      throw ExprError("malformed number", start);
    }
  }

  std::unique_ptr<Node> parse_ident() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    std::string name(src_.substr(start, pos_ - start));
    if (name == "x") {
      std::size_t dstart = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (pos_ == dstart) throw ExprError("coordinate needs an index, e.g. x1", dstart);
      int idx = std::stoi(std::string(src_.substr(dstart, pos_ - dstart)));
      if (idx < 1) throw ExprError("coordinates are 1-based", dstart);
      auto n = std::make_unique<Node>(Node{Op::Coord});
      n->coord = idx - 1;
      return n;
    }
    if (name == "norm") return std::make_unique<Node>(Node{Op::Norm});
    Op op;
    if (name == "abs") op = Op::Abs;
    else if (name == "sqrt") op = Op::Sqrt;
    else if (name == "sin") op = Op::Sin;
    else if (name == "cos") op = Op::Cos;
    else if (name == "exp") op = Op::Exp;
    else if (name == "log") op = Op::Log;
    else if (name == "sign") op = Op::Sign;
    else throw ExprError("unknown identifier '" + name + "'", start);
    if (!eat('(')) throw ExprError("function '" + name + "' needs '('", pos_);
    auto n = std::make_unique<Node>(Node{op});
    n->lhs = parse_expr();
    if (!eat(')')) throw ExprError("missing ')'", pos_);
    return n;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace exprdetail

/// Parsed kernel expression; evaluation gets the point and its ambient norm.
class KernelExpr {
 public:
  explicit KernelExpr(std::string source) : source_(std::move(source)) {
    exprdetail::Parser p(source_);
    root_ = std::shared_ptr<exprdetail::Node>(p.parse().release());
  }

  double operator()(std::span<const double> x, double norm_x) const { return exprdetail::eval(*root_, x, norm_x); }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::shared_ptr<exprdetail::Node> root_;
};

}  // namespace czcurve
