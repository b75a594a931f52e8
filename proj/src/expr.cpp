#include "nettransport/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

namespace nettransport {

enum class Op { Constant, Time, Position, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Sqrt, Abs, Min, Max };

struct Expr::Node {
  Op op;
  double value = 0.0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr, double value = 0.0) {
  return std::make_shared<const Expr::Node>(Expr::Node{op, value, std::move(lhs), std::move(rhs)});
}

struct FunctionInfo {
  std::string_view name;
  Op op;
  int arity;
};

constexpr FunctionInfo kFunctions[] = {
    {"sin", Op::Sin, 1},  {"cos", Op::Cos, 1}, {"exp", Op::Exp, 1}, {"sqrt", Op::Sqrt, 1},
    {"abs", Op::Abs, 1},  {"min", Op::Min, 2}, {"max", Op::Max, 2},
};

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse_all() {
    NodePtr n = sum();
    skip_space();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr sum() {
    NodePtr n = product();
    for (;;) {
      if (accept('+')) n = make(Op::Add, n, product());
      else if (accept('-')) n = make(Op::Sub, n, product());
      else return n;
    }
  }

  NodePtr product() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) n = make(Op::Mul, n, unary());
      else if (accept('/')) n = make(Op::Div, n, unary());
      else return n;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Op::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    if (accept('(')) {
      NodePtr n = sum();
      expect(')');
      return n;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        pos_ = look;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    const std::string text(src_.substr(start, pos_ - start));
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size()) {
      pos_ = start;
      fail("malformed number '" + text + "'");
    }
    return make(Op::Constant, nullptr, nullptr, v);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name == "t") return make(Op::Time);
    if (name == "x") return make(Op::Position);
    for (const auto& f : kFunctions) {
      if (f.name != name) continue;
      expect('(');
      std::vector<NodePtr> args;
      if (!accept(')')) {
        do args.push_back(sum());
        while (accept(','));
        expect(')');
      }
      if (static_cast<int>(args.size()) != f.arity) {
        pos_ = start;
        fail("function '" + std::string(name) + "' takes " + std::to_string(f.arity) + " argument(s), got " +
             std::to_string(args.size()));
      }
      return make(f.op, args[0], f.arity == 2 ? args[1] : nullptr);
    }
    pos_ = start;
    fail("unknown identifier '" + std::string(name) + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

double evaluate(const Expr::Node& n, double t, double x) {
  switch (n.op) {
    case Op::Constant: return n.value;
    case Op::Time: return t;
    case Op::Position: return x;
    case Op::Add: return evaluate(*n.lhs, t, x) + evaluate(*n.rhs, t, x);
    case Op::Sub: return evaluate(*n.lhs, t, x) - evaluate(*n.rhs, t, x);
    case Op::Mul: return evaluate(*n.lhs, t, x) * evaluate(*n.rhs, t, x);
    case Op::Div: {
      const double num = evaluate(*n.lhs, t, x);
      const double den = evaluate(*n.rhs, t, x);
      if (den == 0.0) throw EvalError("division by zero");
      return num / den;
    }
    case Op::Pow: {
      const double b = evaluate(*n.lhs, t, x);
      const double e = evaluate(*n.rhs, t, x);
      if (b == 0.0 && e < 0.0) throw EvalError("division by zero in power");
      const double r = std::pow(b, e);
      if (std::isnan(r) && !std::isnan(b) && !std::isnan(e)) throw EvalError("non-real power");
      return r;
    }
    case Op::Neg: return -evaluate(*n.lhs, t, x);
    case Op::Sin: return std::sin(evaluate(*n.lhs, t, x));
    case Op::Cos: return std::cos(evaluate(*n.lhs, t, x));
    case Op::Exp: return std::exp(evaluate(*n.lhs, t, x));
    case Op::Sqrt: {
      const double a = evaluate(*n.lhs, t, x);
      if (a < 0.0) throw EvalError("sqrt of negative number");
      return std::sqrt(a);
    }
    case Op::Abs: return std::abs(evaluate(*n.lhs, t, x));
    case Op::Min: return std::min(evaluate(*n.lhs, t, x), evaluate(*n.rhs, t, x));
    case Op::Max: return std::max(evaluate(*n.lhs, t, x), evaluate(*n.rhs, t, x));
  }
  return 0.0;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  return v < 0.0 || (v == 0.0 && std::signbit(v)) ? "(" + s + ")" : s;
}

std::string print(const Expr::Node& n) {
  auto bin = [&](const char* op) { return "(" + print(*n.lhs) + " " + op + " " + print(*n.rhs) + ")"; };
  auto call = [&](const char* f) {
    return std::string(f) + "(" + print(*n.lhs) + (n.rhs ? ", " + print(*n.rhs) : "") + ")";
  };
  switch (n.op) {
    case Op::Constant: return format_number(n.value);
    case Op::Time: return "t";
    case Op::Position: return "x";
    case Op::Add: return bin("+");
    case Op::Sub: return bin("-");
    case Op::Mul: return bin("*");
    case Op::Div: return bin("/");
    case Op::Pow: return bin("^");
    case Op::Neg: return "(-" + print(*n.lhs) + ")";
    case Op::Sin: return call("sin");
    case Op::Cos: return call("cos");
    case Op::Exp: return call("exp");
    case Op::Sqrt: return call("sqrt");
    case Op::Abs: return call("abs");
    case Op::Min: return call("min");
    case Op::Max: return call("max");
  }
  return {};
}

bool reads(const Expr::Node& n, Op variable) {
  if (n.op == variable) return true;
  return (n.lhs && reads(*n.lhs, variable)) || (n.rhs && reads(*n.rhs, variable));
}

}  // namespace

Expr::Expr() : root_(make(Op::Constant)) {}

Expr Expr::constant(double v) { return Expr(make(Op::Constant, nullptr, nullptr, v)); }
Expr Expr::time() { return Expr(make(Op::Time)); }
Expr Expr::position() { return Expr(make(Op::Position)); }

double Expr::operator()(double t, double x) const { return evaluate(*root_, t, x); }

std::string Expr::to_string() const { return print(*root_); }

bool Expr::depends_on_position() const { return reads(*root_, Op::Position); }
bool Expr::depends_on_time() const { return reads(*root_, Op::Time); }

Expr parse(std::string_view source) { return Expr(Parser(source).parse_all()); }

double eval(const Expr& e, double t, double x) { return e(t, x); }

Expr operator+(const Expr& a, const Expr& b) { return Expr(make(Op::Add, a.tree(), b.tree())); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(make(Op::Sub, a.tree(), b.tree())); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(make(Op::Mul, a.tree(), b.tree())); }
Expr operator-(const Expr& a) { return Expr(make(Op::Neg, a.tree())); }
Expr operator*(double s, const Expr& a) { return Expr::constant(s) * a; }
Expr max(const Expr& a, const Expr& b) { return Expr(make(Op::Max, a.tree(), b.tree())); }
Expr positive_part(const Expr& e) { return max(e, Expr::constant(0.0)); }
Expr negative_part(const Expr& e) { return max(-e, Expr::constant(0.0)); }

}  // namespace nettransport
