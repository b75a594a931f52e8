#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nettransport {

struct ParseError : std::invalid_argument {
  ParseError(const std::string& what, std::size_t offset)
      : std::invalid_argument(what + " at offset " + std::to_string(offset)), offset(offset) {}
  std::size_t offset;
};

/// sqrt of a negative number, division by zero, or a non-real power.
struct EvalError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Immutable scalar expression of (t, x).
///
/// Grammar, loosest binding first:
///   sum     := product (('+' | '-') product)*
///   product := unary (('*' | '/') unary)*
///   unary   := ('-' | '+') unary | power
///   power   := primary ('^' unary)?          (right associative)
///   primary := number | 't' | 'x' | func '(' args ')' | '(' sum ')'
/// with func one of sin cos exp sqrt abs (one argument) and min max (two).
/// Copies share the same tree.
class Expr {
 public:
  struct Node;

  Expr();  // the constant 0
  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

  static Expr constant(double v);
  static Expr time();
  static Expr position();

  double operator()(double t, double x) const;

  /// Fully parenthesized source that parses back to the same tree values.
  std::string to_string() const;

  /// Whether the tree reads x (resp. t) anywhere.
  bool depends_on_position() const;
  bool depends_on_time() const;

  const Node& root() const { return *root_; }
  const std::shared_ptr<const Node>& tree() const { return root_; }

 private:
  std::shared_ptr<const Node> root_;
};

Expr parse(std::string_view source);

double eval(const Expr& e, double t, double x);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(double s, const Expr& a);
Expr max(const Expr& a, const Expr& b);
/// max(e, 0)
Expr positive_part(const Expr& e);
/// max(-e, 0)
Expr negative_part(const Expr& e);

}  // namespace nettransport
