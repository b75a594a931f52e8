#include <doctest.h>

#include <cmath>

#include "nettransport/expr.hpp"

using namespace nettransport;

TEST_SUITE("exprs") {
  TEST_CASE("precedence and associativity") {
    CHECK(parse("1 + 2*3")(0, 0) == 7.0);
    CHECK(parse("2^3^2")(0, 0) == 512.0);
    CHECK(parse("-2^2")(0, 0) == -4.0);
    CHECK(parse("(1 - 2) - 3")(0, 0) == -4.0);
    CHECK(parse("8/4/2")(0, 0) == 1.0);
    CHECK(parse("2*t - 1")(0.75, 0) == doctest::Approx(0.5));
    CHECK(parse("x*(1 - x)")(0, 0.5) == 0.25);
  }

  TEST_CASE("functions") {
    CHECK(parse("sin(0) + cos(0)")(0, 0) == 1.0);
    CHECK(parse("exp(t)")(1, 0) == doctest::Approx(std::exp(1.0)));
    CHECK(parse("sqrt(abs(-4))")(0, 0) == 2.0);
    CHECK(parse("min(x, t) + max(x, t)")(2, 3) == 5.0);
  }

  TEST_CASE("parse errors carry offsets") {
    CHECK_THROWS_AS(parse("1 +"), ParseError);
    CHECK_THROWS_AS(parse("foo(1)"), ParseError);
    CHECK_THROWS_AS(parse("sin(1, 2)"), ParseError);
    CHECK_THROWS_AS(parse("min(1)"), ParseError);
    CHECK_THROWS_AS(parse("(1 + 2"), ParseError);
    try {
      parse("1 + $");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.offset == 4);
    }
  }

  TEST_CASE("evaluation errors") {
    CHECK_THROWS_AS(parse("1/x")(0, 0), EvalError);
    CHECK_THROWS_AS(parse("sqrt(x)")(0, -1), EvalError);
    CHECK_THROWS_AS(parse("x^0.5")(0, -1), EvalError);
    CHECK_THROWS_AS(parse("0^(-1)")(0, 0), EvalError);
  }

  TEST_CASE("printing round-trips values") {
    for (const char* src : {"2*t - 1", "-x^2 + 3", "sin(3*x)*cos(t) - 0.1", "max(x - 0.5, 0)", "1e-3*x/(1 + t)"}) {
      const Expr e = parse(src);
      const Expr back = parse(e.to_string());
      for (double t : {0.0, 0.3, 1.0})
        for (double x : {0.1, 0.5, 0.9}) CHECK(back(t, x) == e(t, x));
    }
  }

  TEST_CASE("dependency queries and algebra") {
    CHECK_FALSE(parse("2*t")(0.5, 7) != 1.0);
    CHECK_FALSE(parse("2*t").depends_on_position());
    CHECK(parse("2*t").depends_on_time());
    CHECK(parse("x + 0*t").depends_on_position());
    const Expr e = parse("sin(6*x)");
    CHECK((positive_part(e) - negative_part(e))(0, 0.4) == e(0, 0.4));
    CHECK((2.0 * Expr::time() + Expr::constant(1.0))(3, 0) == 7.0);
  }
}
