// Acceptance suite: one pass/fail line per criterion.
//
//   acceptance            run all twelve
//   acceptance 7          run criterion 7 only
//
// Exit status is nonzero when any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "nettransport/bounds.hpp"
#include "nettransport/oracle.hpp"
#include "nettransport/solver.hpp"

using namespace nettransport;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double sup_distance(const SolutionField& a, const SolutionField& b) {
  double d = 0.0;
  for (std::size_t e = 0; e < a.density.size(); ++e) d = std::max(d, (a.density[e] - b.density[e]).cwiseAbs().maxCoeff());
  return d;
}

Eigen::MatrixXd flux_table(const Scenario& sc, const TimeGrid& grid) {
  Eigen::MatrixXd f(grid.levels(), sc.network->num_boundary_points());
  for (Index n = 0; n < grid.levels(); ++n) f.row(n) = boundary_flux(sc, grid.time(n)).transpose();
  return f;
}

CharacteristicSolution intro_oracle() { return {parse("2*t - 1"), parse("x"), parse("2*t"), parse("2*t"), 1.0}; }

// 1. Observed order of the upwind scheme against the exact intro solution.
Outcome intro_convergence() {
  const auto start = std::chrono::steady_clock::now();
  const Scenario base = testing::shipped("intro");
  std::vector<double> errors;
  for (Index factor : {1, 2, 4}) errors.push_back(l1_error(solve_coupled(base.refined(factor)), intro_oracle(), 1.0));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool ok = seconds < 10.0;
  std::string d = "L1 errors";
  for (double e : errors) d += fmt(" %.4e", e);
  d += "; orders";
  for (std::size_t k = 1; k < errors.size(); ++k) {
    const double order = std::log2(errors[k - 1] / errors[k]);
    ok = ok && order >= 0.7 && order <= 1.2;
    d += fmt(" %.3f", order);
  }
  d += fmt("; %.2f s", seconds);
  return {ok, d};
}

// 2. Oracle and closed form at the two worked points.
Outcome closed_form_points() {
  const Expr rho0 = parse("x"), rho_in = parse("2*t");
  const double expected[2] = {0.2875, 1.3};
  const double xs[2] = {0.1, 0.04};
  bool ok = true;
  std::string d;
  for (int k = 0; k < 2; ++k) {
    const FormulaComparison c = verify_intro_formula(0.75, xs[k], rho0, rho_in);
    const double worst = std::max({std::abs(c.tracer - expected[k]), std::abs(c.closed_form - expected[k]),
                                   std::abs(c.tracer - c.closed_form)});
    ok = ok && !c.skipped && worst <= 1e-10;
    d += fmt("(0.75, %g)", xs[k]) + fmt(" tracer %.12g", c.tracer) + fmt(" closed %.12g; ", c.closed_form);
  }
  return {ok, d};
}

// 3. Inner-node flux imbalance per step on the solved Y-graph and loop.
Outcome node_mass_balance() {
  double worst = 0.0;
  for (const char* name : {"y_graph", "loop"}) {
    const Scenario sc = testing::shipped(name);
    const SolutionField sol = solve_coupled(sc);
    const Eigen::MatrixXd& s = sc.network->inner_selector();
    for (Index n = 0; n < sol.levels(); ++n) {
      const Eigen::VectorXd fg = sol.trace.flux.row(n).cwiseProduct(sol.trace.gamma.row(n)).transpose();
      const Eigen::VectorXd net = s * fg;
      const Eigen::VectorXd scale = s * fg.cwiseAbs();
      for (Index i = 0; i < net.size(); ++i) worst = std::max(worst, std::abs(net(i)) / std::max(1.0, scale(i)));
    }
  }
  return {worst <= 1e-12, fmt("max relative imbalance %.3e", worst)};
}

// 4. Contraction on seeded random traces, and equality where it must hold.
Outcome contraction() {
  const Scenario sc = testing::shipped("y_graph");
  const Discretization grid = discretize(sc);
  const CouplingOperator h = sc.make_coupling();
  const Eigen::MatrixXd flux = flux_table(sc, grid.time);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> signed_dist(-1.0, 1.0), unit(0.0, 1.0);
  double excess = -INFINITY, gap = 0.0;
  for (int k = 0; k < 100; ++k) {
    BoundaryTrace tr{grid.time, Eigen::MatrixXd(flux.rows(), flux.cols()), flux};
    for (Index j = 0; j < tr.gamma.size(); ++j) tr.gamma(j) = signed_dist(rng);
    const ContractionNorms c = check_contraction(h, tr, sc.horizon);
    excess = std::max(excess, c.lhs - c.rhs);
    for (Index j = 0; j < tr.gamma.size(); ++j) tr.gamma(j) = unit(rng);
    const ContractionNorms e = check_contraction(h, tr, sc.horizon);
    gap = std::max(gap, std::abs(e.lhs - e.rhs_inner));
  }
  return {excess <= 1e-12 && gap <= 1e-12,
          fmt("max lhs - rhs %.3e", excess) + fmt("; equality gap on inner-node outflow %.3e", gap)};
}

// 5. Adjoint identity on seeded random pairs.
Outcome adjoint() {
  const Scenario sc = testing::shipped("y_graph");
  const Discretization grid = discretize(sc);
  const Eigen::MatrixXd flux = flux_table(sc, grid.time);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::uniform_int_distribution<Index> level(0, flux.rows() - 1);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const BoundaryVector f = flux.row(level(rng)).transpose();
    BoundaryVector rho(f.size()), dual(f.size());
    for (Index j = 0; j < f.size(); ++j) {
      rho(j) = dist(rng);
      dual(j) = dist(rng);
    }
    const double lhs = dual.dot(negative_part(f).cwiseProduct(apply_gu(*sc.network, rho, f)));
    const double rhs = apply_gu_adjoint(*sc.network, dual, f).dot(positive_part(f).cwiseProduct(rho));
    worst = std::max(worst, std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)}));
  }
  return {worst <= 1e-12, fmt("max relative discrepancy %.3e", worst)};
}

// 6. Larger inflow data give cellwise larger solutions.
Outcome comparison() {
  long long violations = 0;
  for (const char* name : {"y_graph", "intro", "positive_lower"}) {
    const Scenario low = testing::shipped(name);
    Scenario high = low;
    for (auto& g : high.outer_data) g = g + parse("0.5 + 0.5*sin(5*t)^2");
    const SolutionField a = solve_coupled(low);
    const SolutionField b = solve_coupled(high, SolveOptions{a.grid, {}});
    for (std::size_t e = 0; e < a.density.size(); ++e) violations += (b.density[e].array() < a.density[e].array()).count();
    violations += (b.trace.gamma.array() < a.trace.gamma.array()).count();
  }
  return {violations == 0, "violations " + std::to_string(violations)};
}

// 7. Max principle and exponential envelopes.
Outcome bounds() {
  bool ok = true;
  std::string d;
  for (const char* name : {"intro", "y_graph"}) {
    const Scenario sc = testing::shipped(name);
    const SolutionField sol = solve_coupled(sc);
    const CouplingOperator h = sc.make_coupling();
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : initial_state(sc, sol.grid.space)) {
      lo = std::min(lo, s.minCoeff());
      hi = std::max(hi, s.maxCoeff());
    }
    for (Index n = 0; n < sol.levels(); ++n) {
      const BoundaryVector flux = sol.trace.flux.row(n).transpose();
      const BoundaryVector in = h.inflow_data(sol.grid.time.time(n), flux);
      for (Index bp = 0; bp < flux.size(); ++bp)
        if (flux(bp) < 0.0 && !sc.network->is_inner(sc.network->boundary_point(bp).node)) {
          lo = std::min(lo, in(bp));
          hi = std::max(hi, in(bp));
        }
    }
    long long out = 0;
    for (const auto& m : sol.density) out += ((m.array() < lo) || (m.array() > hi)).count();
    out += ((sol.trace.gamma.array() < lo) || (sol.trace.gamma.array() > hi)).count();
    ok = ok && out == 0;
    d += std::string(name) + fmt(" range [%g, ", lo) + fmt("%g]", hi) + " outside " + std::to_string(out) + "; ";
  }

  const Scenario grow = testing::shipped("c_minus_one");
  const SolutionField gs = solve_coupled(grow);
  const BoundEnvelope genv = scenario_envelope(grow, gs.grid);
  double up = -INFINITY;
  for (Index n = 0; n < gs.levels(); ++n)
    up = std::max(up, gs.density[0].row(n).maxCoeff() - genv.rho_max * std::exp(gs.grid.time.time(n)));
  ok = ok && up <= 1e-10;
  d += fmt("c=-1: rho_max %g, ", genv.rho_max) + fmt("max(rho - rho_max e^t) %.3e; ", up);

  const Scenario pos = testing::shipped("positive_lower");
  const SolutionField ps = solve_coupled(pos);
  const BoundEnvelope penv = scenario_envelope(pos, ps.grid);
  if (!penv.rho_min) return {false, d + "positive data: no rho_min"};
  const BoundViolations v = check_solution_bounds(ps, penv);
  ok = ok && v.lower && *v.lower <= 1e-10;
  d += fmt("lower envelope violation %.3e", v.lower.value_or(INFINITY));
  return {ok, d};
}

// 8. Picard construction on the loop.
Outcome picard() {
  const Scenario sc = testing::shipped("loop");
  PicardResult pr;
  try {
    pr = solve_picard(sc, 1e-10, 100, true);
  } catch (const std::exception& e) {
    return {false, e.what()};
  }
  bool monotone = true;
  for (std::size_t k = 1; k < pr.inflow_history.size(); ++k)
    monotone = monotone && (pr.inflow_history[k].array() >= pr.inflow_history[k - 1].array()).all();
  const SolutionField direct = solve_coupled(sc);
  const double final_gap = sup_distance(pr.solution, direct);
  double early_gap = 0.0;
  for (std::size_t j = 0; j < pr.iterates.size(); ++j)
    for (Index n = 0; n < direct.levels() && direct.grid.time.time(n) < static_cast<double>(j); ++n)
      for (std::size_t e = 0; e < direct.density.size(); ++e)
        early_gap = std::max(early_gap, (pr.iterates[j].density[e].row(n) - direct.density[e].row(n)).cwiseAbs().maxCoeff());
  return {monotone && final_gap <= 1e-10 && early_gap <= 1e-10,
          std::to_string(pr.iterations) + " iterations, monotone " + (monotone ? "yes" : "no") +
              fmt(", final sup gap %.3e", final_gap) + fmt(", gap before t = j %.3e", early_gap)};
}

// 9. Residual halving under refinement on the intro example.
Outcome residuals() {
  const Scenario base = testing::shipped("intro");
  std::vector<Scenario> levels = {base, base.refined(2), base.refined(4)};
  std::vector<SolutionField> sols;
  for (const auto& s : levels) sols.push_back(solve_coupled(s));
  const auto phi = default_test_functions(base);
  bool ok = true;
  std::string d;
  auto study = [&](const std::string& label, const std::function<double(std::size_t)>& r) {
    d += label + ":";
    double prev = r(0);
    d += fmt(" %.3e", prev);
    for (std::size_t k = 1; k < levels.size(); ++k) {
      const double cur = r(k);
      const double ratio = cur / prev;
      ok = ok && std::abs(ratio - 0.5) <= 0.125;
      d += fmt(" %.3e", cur) + fmt(" (x%.3f)", ratio);
      prev = cur;
    }
    d += "; ";
  };
  study("weak", [&](std::size_t k) { return weak_residual(levels[k], sols[k], phi, 0.0, 1.0); });
  for (const char* tag : {"abs", "square"}) {
    const Renormalization beta = Renormalization::from_tag(tag);
    study(tag, [&](std::size_t k) { return renormalization_residual(levels[k], sols[k], beta, phi, 0.0, 1.0); });
  }
  return {ok, d};
}

// 10. Stability under u = 1 + 2^-k.
Outcome stability() {
  const Scenario sc = testing::shipped("stability");
  const auto rows = stability_study(sc, Expr::constant(1.0), Expr::constant(0.0), {1.0, 0.5, 0.25, 0.125}, 1.0);
  bool ok = rows[3].distance < rows[0].distance / 4.0;
  std::string d = "D_k";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    d += fmt(" %.4e", rows[k].distance);
    if (k > 0) ok = ok && rows[k].distance < rows[k - 1].distance;
  }
  return {ok, d};
}

// 11. Determinism across edge orders and repeated runs.
Outcome determinism() {
  double worst = 0.0;
  bool identical = true;
  for (const char* name : {"y_graph", "loop", "intro", "single_edge", "c_minus_one", "positive_lower", "stability",
                           "signed_source"}) {
    const std::string path = testing::scenario_path(name);
    std::ifstream in(path);
    std::stringstream text;
    text << in.rdbuf();
    const Scenario sc = parse_scenario(text.str());
    worst = std::max(worst, uniqueness_probe(sc));
    std::string outputs[2];
    for (int run = 0; run < 2; ++run) {
      const auto dir = std::filesystem::temp_directory_path() / ("nettransport_det_" + std::string(name) + std::to_string(run));
      std::filesystem::remove_all(dir);
      const SolutionField sol = solve_coupled(parse_scenario(text.str()));
      write_results({sc, sol, text.str(), scenario_envelope(sc, sol.grid)}, dir);
      for (const char* f : {"snapshots.csv", "traces.csv", "diagnostics.csv", "envelope.csv", "manifest.json"}) {
        std::ifstream csv(dir / f, std::ios::binary);
        std::stringstream s;
        s << csv.rdbuf();
        outputs[run] += s.str();
      }
    }
    identical = identical && outputs[0] == outputs[1];
  }
  return {worst == 0.0 && identical,
          fmt("max edge-order distance %g", worst) + (identical ? ", outputs byte-identical" : ", outputs differ")};
}

// 12. Sign-changing source: split and recombine.
Outcome splitting() {
  const Scenario sc = testing::shipped("signed_source");
  const SplitResult sp = split_signed_source(sc);
  const double gap = sup_distance(sp.combined, solve_coupled(sc));
  return {gap <= 1e-12, fmt("sup gap %.3e", gap) + fmt(", hat_rho_min %g", sp.hat_rho_min)};
}

struct Criterion {
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"intro example convergence order", intro_convergence},
    {"closed-form point checks", closed_form_points},
    {"node mass balance", node_mass_balance},
    {"contraction", contraction},
    {"adjoint identity", adjoint},
    {"comparison principle", comparison},
    {"max principle and envelopes", bounds},
    {"Picard construction", picard},
    {"weak and renormalization residuals", residuals},
    {"stability", stability},
    {"determinism", determinism},
    {"signed source splitting", splitting},
};

}  // namespace

int main(int argc, char** argv) {
  int first = 1, last = 12;
  if (argc > 1) {
    first = last = std::atoi(argv[1]);
    if (first < 1 || first > 12) {
      std::fprintf(stderr, "criterion must be 1..12\n");
      return 2;
    }
  }
  bool all = true;
  for (int k = first; k <= last; ++k) {
    Outcome o;
    try {
      o = kCriteria[k - 1].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %2d %s: %s | %s\n", k, o.pass ? "PASS" : "FAIL", kCriteria[k - 1].name, o.detail.c_str());
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
