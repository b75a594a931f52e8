#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "nettransport/bounds.hpp"
#include "nettransport/solver.hpp"

using namespace nettransport;

TEST_SUITE("bounds") {
  TEST_CASE("space-independent velocity has a flat upper envelope") {
    const Scenario sc = testing::single_edge("2*t - 1", "x", "2*t", 50);
    const Discretization grid = discretize(sc);
    const BoundEnvelope env = build_envelope(sc, sc.cells, grid.time).with_extremes(2.0, std::nullopt);
    CHECK(env.alpha.cwiseAbs().maxCoeff() == 0.0);
    CHECK(env.f_plus.cwiseAbs().maxCoeff() == 0.0);
    for (Index n = 0; n < grid.time.levels(); ++n) CHECK(env.upper(n) == 2.0);
  }

  TEST_CASE("expanding velocity drives the lower envelope") {
    Scenario sc = testing::single_edge("x", "1", "1", 20);
    sc.fields[0].u_x = Expr::constant(1.0);
    const Discretization grid{EdgeGrid{sc.cells}, TimeGrid{1.0, 100}};
    const BoundEnvelope env = build_envelope(sc, sc.cells, grid.time).with_extremes(1.0, 1.0);
    CHECK(env.alpha.cwiseAbs().maxCoeff() == 0.0);
    CHECK((env.zeta.array() == 1.0).all());
    CHECK(env.lower(100) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  }

  TEST_CASE("c = -1 grows the upper envelope like exp(t)") {
    const Scenario sc = testing::single_edge("1", "1", "1", 20, 0.5, "-1");
    const Discretization grid{EdgeGrid{sc.cells}, TimeGrid{1.0, 100}};
    const BoundEnvelope env = build_envelope(sc, sc.cells, grid.time).with_extremes(1.0, std::nullopt);
    CHECK((env.alpha.array() == 1.0).all());
    CHECK(env.upper(50) == doctest::Approx(std::exp(0.5)).epsilon(1e-12));
    CHECK(env.upper(100) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
  }

  TEST_CASE("envelope quadrature converges at first order") {
    // Reaction growing in time: A(t) = t^2 / 2 exactly, the left rule lags by t dt / 2.
    const Scenario sc = testing::single_edge("1", "1", "1", 10, 0.5, "-t");
    double previous = 0.0;
    for (Index steps : {50, 100, 200}) {
      const BoundEnvelope env = build_envelope(sc, sc.cells, TimeGrid{1.0, steps});
      const double err = std::abs(env.alpha_integral(steps) - 0.5);
      if (previous > 0.0) CHECK(previous / err == doctest::Approx(2.0).epsilon(0.05));
      previous = err;
    }
  }

  TEST_CASE("envelope invariants") {
    const Scenario sc = testing::single_edge("1 + 0.5*x", "1", "1", 20, 0.5, "sin(5*t)", "1 + x");
    const BoundEnvelope env = build_envelope(sc, sc.cells, TimeGrid{1.0, 80});
    CHECK(env.alpha_integral(0) == 0.0);
    CHECK(env.zeta_integral(0) == 0.0);
    CHECK(env.f_plus(0, 0) == 0.0);
    for (Index n = 1; n <= 80; ++n) {
      CHECK(env.alpha_integral(n) >= env.alpha_integral(n - 1));
      CHECK(env.zeta_integral(n) >= env.zeta_integral(n - 1));
      CHECK(env.f_plus(n, 0) >= env.f_plus(n - 1, 0));
      CHECK(env.upper(n) >= env.upper(n - 1));
    }
  }

  TEST_CASE("unbounded growth rate is refused") {
    Scenario sc = testing::single_edge("1", "1", "1", 4);
    sc.fields[0].c = parse("1/(x - 0.125)");
    CHECK_THROWS_AS(build_envelope(sc, sc.cells, TimeGrid{1.0, 4}), std::domain_error);
  }

  TEST_CASE("solution checks") {
    const Scenario zero = testing::single_edge("1", "0", "0", 20);
    const SolutionField z = solve_coupled(zero);
    const BoundViolations vz = check_solution_bounds(z, scenario_envelope(zero, z.grid));
    CHECK(vz.upper <= 0.0);
    CHECK_FALSE(vz.lower);

    const Scenario flat = testing::single_edge("1", "3", "3", 20);
    const SolutionField f = solve_coupled(flat);
    const BoundEnvelope env = scenario_envelope(flat, f.grid);
    REQUIRE(env.rho_min);
    const BoundViolations vf = check_solution_bounds(f, env);
    CHECK(vf.upper <= 0.0);
    CHECK(*vf.lower <= 0.0);
  }
}
