#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "nettransport/solver.hpp"

using namespace nettransport;

namespace {

double sup_distance(const SolutionField& a, const SolutionField& b) {
  double d = 0.0;
  for (std::size_t e = 0; e < a.density.size(); ++e) d = std::max(d, (a.density[e] - b.density[e]).cwiseAbs().maxCoeff());
  return d;
}

Scenario loop_scenario(const std::string& rho1, const std::string& rho2, double cfl = 1.0) {
  Scenario sc;
  sc.network = testing::loop_network();
  sc.fields = {{Expr::constant(1), Expr::constant(0), Expr::constant(0), Expr::constant(0), parse(rho1)},
               {Expr::constant(1), Expr::constant(0), Expr::constant(0), Expr::constant(0), parse(rho2)}};
  sc.cells = {16, 16};
  sc.horizon = 3.0;
  sc.cfl = cfl;
  return sc;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("grid respects the CFL number") {
    const Scenario sc = testing::single_edge("2*t - 1", "x", "2*t", 100);
    const Discretization d = discretize(sc);
    CHECK(d.time.steps == 200);
    CHECK(d.time.dt() <= 0.5 * 0.01 / 1.0);
  }

  TEST_CASE("constant states are preserved") {
    const Scenario sc = testing::single_edge("1", "3", "3", 10);
    const Discretization d = discretize(sc);
    const EdgeState s0 = initial_state(sc, d.space);
    BoundaryVector inflow(2);
    inflow << 3.0, 0.0;
    const EdgeState s1 = step_upwind(sc, d, s0, 0, inflow);
    CHECK((s1[0].array() == 3.0).all());

    const Scenario still = testing::single_edge("0", "x", "0", 10);
    const Discretization ds = discretize(still);
    const EdgeState a = initial_state(still, ds.space);
    CHECK((step_upwind(still, ds, a, 0, BoundaryVector::Zero(2))[0] - a[0]).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("reaction term damps by 1 - dt") {
    const Scenario sc = testing::single_edge("1", "1", "1", 10, 0.5, "1");
    const Discretization d = discretize(sc);
    const EdgeState s1 = step_upwind(sc, d, initial_state(sc, d.space), 0, BoundaryVector::Constant(2, 1.0));
    CHECK(s1[0](5) == doctest::Approx(1.0 - d.time.dt()).epsilon(1e-15));
  }

  TEST_CASE("CFL violations abort") {
    const Scenario sc = testing::single_edge("1", "1", "1", 10);
    Discretization d = discretize(sc);
    d.time.steps /= 4;
    CHECK_THROWS_AS(step_upwind(sc, d, initial_state(sc, d.space), 0, BoundaryVector::Ones(2)), CflViolation);
  }

  TEST_CASE("inflow fills a single edge in unit time") {
    const SolutionField sol = solve_coupled(testing::single_edge("1", "0", "5", 50, 1.0));
    const Eigen::RowVectorXd last = sol.density[0].row(sol.levels() - 1);
    CHECK((last.array() - 5.0).abs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("loop circulates a constant") {
    const SolutionField sol = solve_coupled(loop_scenario("1", "1", 0.5));
    for (const auto& d : sol.density) CHECK((d.array() == 1.0).all());
  }

  TEST_CASE("traces at inflow endpoints are the coupling values") {
    const Scenario sc = testing::shipped("y_graph");
    const SolutionField sol = solve_coupled(sc);
    const CouplingOperator h = sc.make_coupling();
    for (Index n = 0; n < sol.levels(); n += 7) {
      const BoundaryVector flux = sol.trace.flux.row(n).transpose();
      const BoundaryVector gamma = sol.trace.gamma.row(n).transpose();
      const BoundaryVector in = h.apply(gamma, flux, sol.grid.time.time(n));
      for (Index bp = 0; bp < flux.size(); ++bp)
        if (flux(bp) < 0.0) CHECK(gamma(bp) == in(bp));
    }
  }

  TEST_CASE("Picard with zero coupling converges at once") {
    Scenario sc = testing::single_edge("1", "x", "1 + t", 20);
    sc.coupling = CouplingMode::ZeroG;
    const PicardResult pr = solve_picard(sc);
    CHECK(pr.iterations == 1);
    CHECK(sup_distance(pr.solution, solve_coupled(sc)) == 0.0);
  }

  TEST_CASE("Picard on a tree converges within its depth") {
    const PicardResult pr = solve_picard(testing::shipped("y_graph"));
    CHECK(pr.iterations <= 2);
  }

  TEST_CASE("Picard iterate j agrees with the coupled solve before t = j") {
    const Scenario sc = loop_scenario("1 + 0.5*sin(3*x)", "1 + x*x");
    const PicardResult pr = solve_picard(sc, 1e-10, 100, true);
    const SolutionField direct = solve_coupled(sc);
    REQUIRE(pr.iterates.size() >= 3);
    for (std::size_t j = 0; j < pr.iterates.size(); ++j)
      for (Index n = 0; n < direct.levels() && direct.grid.time.time(n) < static_cast<double>(j); ++n)
        for (std::size_t e = 0; e < 2; ++e)
          CHECK((pr.iterates[j].density[e].row(n) - direct.density[e].row(n)).cwiseAbs().maxCoeff() <= 1e-10);
    for (std::size_t k = 1; k < pr.inflow_history.size(); ++k)
      CHECK((pr.inflow_history[k].array() >= pr.inflow_history[k - 1].array()).all());
  }

  TEST_CASE("Picard error reporting") {
    CHECK_THROWS_AS(solve_picard(loop_scenario("1", "1"), 1e-10, 1), IterationLimitReached);
    CHECK_THROWS_AS(solve_picard(testing::single_edge("1", "x - 1", "1", 10)), std::invalid_argument);
    CHECK_THROWS_AS(solve_picard(testing::single_edge("1", "x", "1", 10, 0.5, "0", "-1")), std::invalid_argument);
  }

  TEST_CASE("weak residual telescopes for constants") {
    const Scenario sc = testing::single_edge("1", "2", "2", 20);
    const SolutionField sol = solve_coupled(sc);
    const auto phi = default_test_functions(sc);
    CHECK(weak_residual(sc, sol, phi, 0.0, 1.0) <= 1e-10);
    CHECK(weak_residual(sc, sol, {Expr::constant(0)}, 0.0, 1.0) == 0.0);
    CHECK(renormalization_residual(sc, sol, Renormalization::square(), phi, 0.0, 1.0) <= 1e-10);
  }

  TEST_CASE("renormalization catalogue") {
    const Scenario sc = testing::shipped("positive_lower");
    const SolutionField sol = solve_coupled(sc);
    const auto phi = default_test_functions(sc);
    CHECK(renormalization_residual(sc, sol, Renormalization::abs(), phi, 0.0, 1.0) ==
          doctest::Approx(weak_residual(sc, sol, phi, 0.0, 1.0)).epsilon(1e-12));
    // The solution never exceeds 1, so beta = (s - 1)^+ vanishes identically.
    CHECK(renormalization_residual(sc, sol, Renormalization::plus_shift(1.0), phi, 0.0, 1.0) <= 1e-12);
    CHECK(Renormalization::from_tag("plus-shift:0.5").shift() == 0.5);
    CHECK(Renormalization::from_tag("plus-shift(2)").shift() == 2.0);
    CHECK_THROWS_AS(Renormalization::from_tag("cube"), std::invalid_argument);
    CHECK_THROWS_AS(Renormalization::from_tag("plus-shift:abc"), std::invalid_argument);
  }

  TEST_CASE("stability study") {
    const Scenario sc = testing::shipped("stability");
    const auto zero = stability_study(sc, Expr::constant(1), Expr::constant(0), {0.0, 0.0}, 1.0);
    CHECK(zero[0].distance == 0.0);
    CHECK(zero[1].distance == 0.0);
    const auto rows = stability_study(sc, Expr::constant(1), Expr::constant(0), {1.0, 0.5, 0.25}, 1.0);
    CHECK(rows[1].distance < rows[0].distance);
    CHECK(rows[2].distance < rows[1].distance);
  }

  TEST_CASE("stability refuses perturbations that unbalance nodes") {
    const Scenario sc = testing::shipped("y_graph");
    CHECK_THROWS_AS(stability_study(sc, parse("x"), Expr::constant(1), {0.1}, 1.0), EnergyConditionViolation);
  }

  TEST_CASE("loop with a mass-conserving perturbation converges") {
    const auto rows =
        stability_study(loop_scenario("1 + 0.5*sin(3*x)", "1", 0.5), Expr::constant(1), Expr::constant(0),
                        {0.4, 0.2, 0.1}, 1.0);
    CHECK(rows[2].distance < rows[0].distance);
  }

  TEST_CASE("edge order does not matter") {
    CHECK(uniqueness_probe(testing::shipped("y_graph")) == 0.0);
    CHECK(uniqueness_probe(testing::shipped("loop")) == 0.0);
  }

  TEST_CASE("signed source splitting") {
    const Scenario pos = testing::single_edge("1", "1", "1", 40, 0.5, "0", "1 + x");
    const SplitResult sp = split_signed_source(pos);
    CHECK(sup_distance(sp.combined, solve_coupled(pos)) == 0.0);

    const Scenario neg = testing::single_edge("1", "0", "0", 40, 0.5, "0", "-(1 + x)");
    const Scenario flipped = testing::single_edge("1", "0", "0", 40, 0.5, "0", "1 + x");
    const SplitResult sn = split_signed_source(neg);
    const SolutionField ref = solve_coupled(flipped);
    for (std::size_t e = 0; e < ref.density.size(); ++e)
      CHECK((sn.combined.density[e] + ref.density[e]).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("mass and lp distance") {
    const SolutionField a = solve_coupled(testing::single_edge("1", "2", "2", 10));
    const SolutionField b = solve_coupled(testing::single_edge("1", "1", "1", 10));
    CHECK(a.mass(0) == doctest::Approx(2.0));
    CHECK(lp_distance(a, b, 3, 1.0) == doctest::Approx(1.0));
    CHECK(lp_distance(a, b, 3, 2.0) == doctest::Approx(1.0));
    CHECK(lp_distance(a, b, 3, INFINITY) == 1.0);
    CHECK(a.stacked(0).size() == 10);
  }
}
