#include "nettransport/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "nettransport/bounds.hpp"
#include "nettransport/io.hpp"
#include "nettransport/solver.hpp"

namespace nettransport {

namespace {

constexpr double kRelTol = 1e-12;
constexpr double kBoundTol = 1e-10;
constexpr double kPicardTol = 1e-10;
constexpr double kResidualFloor = 1e-10;

CheckResult make(const std::string& name, const std::string& ref, double measured, double tol, bool ok,
                 std::string detail = {}) {
  return {name, ref, measured, tol, ok ? CheckStatus::Pass : CheckStatus::Fail, std::move(detail)};
}

CheckResult skipped(const std::string& name, const std::string& ref, CheckStatus why, std::string detail) {
  return {name, ref, 0.0, 0.0, why, std::move(detail)};
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Index rows, Index cols, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Shared state for the checks of one run.
struct Context {
  const Scenario& scenario;
  const VerifyConfig& config;
  Discretization grid;
  CouplingOperator coupling;
  Eigen::MatrixXd fluxes;
  SolutionField solution;
};

BoundaryTrace random_trace(const Context& ctx, std::mt19937_64& rng, double lo, double hi) {
  return {ctx.grid.time, random_matrix(rng, ctx.fluxes.rows(), ctx.fluxes.cols(), lo, hi), ctx.fluxes};
}

bool all_nodes_fed(const Context& ctx) {
  for (Index n = 0; n < ctx.fluxes.rows(); ++n) {
    const Eigen::VectorXd m = assemble_m(ctx.coupling.network(), ctx.fluxes.row(n).transpose());
    if (m.size() && !(m.array() > 0.0).all()) return false;
  }
  return true;
}

CheckResult check_energy(const Context& ctx) {
  const Eigen::VectorXd r = check_energy_condition(*ctx.scenario.network, ctx.fluxes);
  const double measured = r.size() ? r.maxCoeff() : 0.0;
  const double tol = kRelTol * std::max(1.0, max_abs(ctx.fluxes));
  return make("energy_condition", "flux balance at inner nodes", measured, tol, measured <= tol);
}

CheckResult check_contraction_axiom(const Context& ctx, bool energy_ok) {
  std::mt19937_64 rng(ctx.config.seed);
  double worst = 0.0;
  for (int k = 0; k < ctx.config.random_samples; ++k) {
    const ContractionNorms c = check_contraction(ctx.coupling, random_trace(ctx, rng, -1.0, 1.0), ctx.grid.time.horizon);
    worst = std::max(worst, (c.lhs - c.rhs) / std::max(1.0, c.rhs));
  }
  std::string detail = "inequality on signed traces";
  double measured = worst;
  bool ok = worst <= kRelTol;
  if (energy_ok && ctx.coupling.mode() == CouplingMode::Mixing && all_nodes_fed(ctx)) {
    double gap = 0.0;
    for (int k = 0; k < ctx.config.random_samples; ++k) {
      const ContractionNorms c = check_contraction(ctx.coupling, random_trace(ctx, rng, 0.0, 1.0), ctx.grid.time.horizon);
      gap = std::max(gap, std::abs(c.lhs - c.rhs_inner) / std::max(1.0, c.rhs_inner));
    }
    measured = std::max(measured, gap);
    ok = ok && gap <= kRelTol;
    detail += "; equality on nonnegative traces";
  }
  return make("contraction", "operator norm of G at most one", measured, kRelTol, ok, detail);
}

CheckResult check_causality_axiom(const Context& ctx) {
  std::mt19937_64 rng(ctx.config.seed + 1);
  const BoundaryTrace trace = random_trace(ctx, rng, -1.0, 1.0);
  const double causal = check_causality(ctx.coupling, trace, 0.5 * ctx.grid.time.horizon);
  const double multiplier =
      check_time_multiplier(ctx.coupling, trace, parse("2 + sin(7*t)")) / std::max(1.0, max_abs(trace.gamma));
  const double measured = std::max(causal, multiplier);
  return make("causality", "G acts pointwise in time", measured, kRelTol, causal == 0.0 && multiplier <= kRelTol,
              "truncation must agree exactly; time multipliers to rounding");
}

CheckResult check_positivity(const Context& ctx) {
  std::mt19937_64 rng(ctx.config.seed + 2);
  double worst = 0.0;
  for (int k = 0; k < ctx.config.random_samples; ++k) {
    const Eigen::MatrixXd g = ctx.coupling.apply_g(random_trace(ctx, rng, 0.0, 1.0));
    if (g.size()) worst = std::max(worst, -g.minCoeff());
  }
  return make("positivity", "G maps nonnegative traces to nonnegative values", worst, 0.0, worst <= 0.0);
}

CheckResult check_sub_distributivity(const Context& ctx) {
  std::mt19937_64 rng(ctx.config.seed + 3);
  double worst = 0.0;
  for (int k = 0; k < ctx.config.random_samples; ++k) {
    const BoundaryTrace trace = random_trace(ctx, rng, -1.0, 1.0);
    BoundaryTrace plus = trace, minus = trace;
    plus.gamma = positive_part(trace.gamma);
    minus.gamma = negative_part(trace.gamma);
    const Eigen::MatrixXd g = ctx.coupling.apply_g(trace);
    const Eigen::MatrixXd gp = ctx.coupling.apply_g(plus);
    const Eigen::MatrixXd gm = ctx.coupling.apply_g(minus);
    if (g.size()) {
      worst = std::max(worst, (positive_part(g) - gp).maxCoeff());
      worst = std::max(worst, (negative_part(g) - gm).maxCoeff());
    }
  }
  return make("sub_distributivity", "positive and negative parts commute with G up to order", worst, kRelTol,
              worst <= kRelTol);
}

CheckResult check_adjoint(const Context& ctx) {
  std::mt19937_64 rng(ctx.config.seed + 4);
  const Network& net = ctx.coupling.network();
  double worst = 0.0;
  for (int k = 0; k < ctx.config.random_samples; ++k) {
    const Index n = std::uniform_int_distribution<Index>(0, ctx.fluxes.rows() - 1)(rng);
    const BoundaryVector flux = ctx.fluxes.row(n).transpose();
    const BoundaryVector rho = random_matrix(rng, flux.size(), 1, -1.0, 1.0);
    const BoundaryVector dual = random_matrix(rng, flux.size(), 1, -1.0, 1.0);
    const double lhs = dual.dot(negative_part(flux).cwiseProduct(apply_gu(net, rho, flux)));
    const double rhs = apply_gu_adjoint(net, dual, flux).dot(positive_part(flux).cwiseProduct(rho));
    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return make("adjoint_identity", "adjoint mixing operator", worst, kRelTol, worst <= kRelTol);
}

CheckResult check_node_mass(const Context& ctx) {
  const Network& net = ctx.coupling.network();
  const Eigen::MatrixXd& s = net.inner_selector();
  double worst = 0.0;
  for (Index n = 0; n < ctx.solution.levels(); ++n) {
    const BoundaryVector flux = ctx.fluxes.row(n).transpose();
    const BoundaryVector gamma = ctx.solution.trace.gamma.row(n).transpose();
    const BoundaryVector h = ctx.coupling.apply(gamma, flux, ctx.grid.time.time(n));
    const Eigen::VectorXd in = s * negative_part(flux).cwiseProduct(h);
    const Eigen::VectorXd out = s * positive_part(flux).cwiseProduct(gamma);
    for (Index i = 0; i < in.size(); ++i)
      worst = std::max(worst, std::abs(in(i) - out(i)) / std::max({1.0, std::abs(in(i)), std::abs(out(i))}));
  }
  return make("node_mass_balance", "mass conserved at inner nodes", worst, kRelTol, worst <= kRelTol);
}

CheckResult check_conservation(const Context& ctx) {
  const MassDiagnostics d = mass_diagnostics(ctx.scenario, ctx.solution);
  const double scale = std::max(1.0, d.mass.cwiseAbs().maxCoeff());
  const double measured = d.residual.cwiseAbs().maxCoeff() / scale;
  return make("discrete_conservation", "mass changes only through outer nodes and sources", measured, kRelTol,
              measured <= kRelTol);
}

CheckResult check_comparison(const Context& ctx) {
  Scenario upper = ctx.scenario;
  if (upper.outer_data.empty()) {
    for (auto& f : upper.fields) f.rho0 = f.rho0 + Expr::constant(1.0);
  } else {
    for (auto& g : upper.outer_data) g = g + Expr::constant(1.0) + parse("sin(3*t)^2");
  }
  SolveOptions opts;
  opts.grid = ctx.grid;
  const SolutionField high = solve_coupled(upper, opts);
  double count = 0.0;
  for (std::size_t e = 0; e < high.density.size(); ++e)
    count += static_cast<double>((high.density[e].array() < ctx.solution.density[e].array()).count());
  count += static_cast<double>((high.trace.gamma.array() < ctx.solution.trace.gamma.array()).count());
  return make("comparison_principle", "larger data give larger solutions", count, 0.0, count == 0.0,
              "measured = number of cells or traces out of order");
}

std::optional<std::string> picard_precondition(const Context& ctx) {
  for (const auto& s : initial_state(ctx.scenario, ctx.grid.space))
    if ((s.array() < 0.0).any()) return "initial data not nonnegative";
  for (Index n = 0; n < ctx.grid.time.levels(); ++n) {
    const double t = ctx.grid.time.time(n);
    if ((ctx.coupling.outer_values(t).array() < 0.0).any()) return "outer data not nonnegative";
    for (Index e = 0; e < ctx.scenario.network->num_edges(); ++e) {
      const Eigen::VectorXd xc = ctx.grid.space.centers(e);
      for (Index i = 0; i < xc.size(); ++i)
        if (ctx.scenario.fields[static_cast<std::size_t>(e)].f(t, xc(i)) < 0.0) return "source not nonnegative";
    }
  }
  return std::nullopt;
}

CheckResult check_picard(const Context& ctx) {
  const std::string name = "picard_monotone_agreement";
  const std::string ref = "monotone fixed-point construction";
  if (auto why = picard_precondition(ctx)) return skipped(name, ref, CheckStatus::NotApplicable, *why);
  SolveOptions opts;
  opts.grid = ctx.grid;
  try {
    const PicardResult pr =
        solve_picard(ctx.scenario, kPicardTol, std::max<Index>(100, ctx.grid.time.steps + 2), false, opts);
    double diff = 0.0;
    for (std::size_t e = 0; e < pr.solution.density.size(); ++e)
      diff = std::max(diff, max_abs(pr.solution.density[e] - ctx.solution.density[e]));
    const double scale = std::max(1.0, max_abs(ctx.solution.trace.gamma));
    return make(name, ref, diff, kPicardTol * scale, diff <= kPicardTol * scale,
                std::to_string(pr.iterations) + " iterations, monotone");
  } catch (const NonMonotoneIterate& e) {
    return make(name, ref, 1.0, 0.0, false, e.what());
  } catch (const IterationLimitReached& e) {
    return make(name, ref, 1.0, 0.0, false, e.what());
  }
}

CheckResult check_bounds(const Context& ctx) {
  const BoundEnvelope env = scenario_envelope(ctx.scenario, ctx.grid);
  BoundEnvelope used = env;
  std::string detail = "upper envelope";
  bool source_nonnegative = true;
  for (Index n = 0; n < ctx.grid.time.levels() && source_nonnegative; ++n)
    for (Index e = 0; e < ctx.scenario.network->num_edges() && source_nonnegative; ++e) {
      const Eigen::VectorXd xc = ctx.grid.space.centers(e);
      for (Index i = 0; i < xc.size(); ++i)
        if (ctx.scenario.fields[static_cast<std::size_t>(e)].f(ctx.grid.time.time(n), xc(i)) < 0.0) {
          source_nonnegative = false;
          break;
        }
    }
  if (!source_nonnegative) used.rho_min.reset();
  if (used.rho_min) detail += " and lower envelope";
  // The upper envelope applies to nonnegative solutions.
  bool nonnegative_data = source_nonnegative;
  for (const auto& s : initial_state(ctx.scenario, ctx.grid.space)) nonnegative_data &= (s.array() >= 0.0).all();
  for (Index n = 0; n < ctx.grid.time.levels(); ++n)
    nonnegative_data &= (ctx.coupling.outer_values(ctx.grid.time.time(n)).array() >= 0.0).all();
  if (!nonnegative_data)
    return skipped("bound_envelopes", "exponential a priori bounds", CheckStatus::NotApplicable,
                   "data or source take negative values");
  const BoundViolations v = check_solution_bounds(ctx.solution, used);
  const double measured = std::max(v.upper, v.lower.value_or(0.0));
  const double tol = kBoundTol * std::max(1.0, used.rho_max);
  return make("bound_envelopes", "exponential a priori bounds", measured, tol, measured <= tol, detail);
}

// Residual on the base grid and on the grid refined by two; the ratio should
// be about one half for a first-order quadrature of the identity.
CheckResult refinement_check(const Context& ctx, const std::string& name, const std::string& ref,
                             const std::function<double(const Scenario&, const SolutionField&)>& residual) {
  const Scenario fine = ctx.scenario.refined(2);
  const SolutionField fine_sol = solve_coupled(fine);
  const double coarse_r = residual(ctx.scenario, ctx.solution);
  const double fine_r = residual(fine, fine_sol);
  if (coarse_r <= kResidualFloor && fine_r <= kResidualFloor)
    return make(name, ref, fine_r, kResidualFloor, true, "both residuals at rounding level");
  const double ratio = fine_r / coarse_r;
  char detail[96];
  std::snprintf(detail, sizeof detail, "residuals %.3e -> %.3e", coarse_r, fine_r);
  return make(name, ref, ratio, 0.125, std::abs(ratio - 0.5) <= 0.125, detail);
}

CheckResult check_weak(const Context& ctx) {
  return refinement_check(ctx, "weak_residual_refinement", "weak formulation with traces",
                          [](const Scenario& sc, const SolutionField& sol) {
                            return weak_residual(sc, sol, default_test_functions(sc), 0.0, sc.horizon);
                          });
}

CheckResult check_renormalization(const Context& ctx) {
  CheckResult worst;
  bool first = true;
  for (const char* tag : {"abs", "square"}) {
    const Renormalization beta = Renormalization::from_tag(tag);
    CheckResult r = refinement_check(ctx, "renormalization_residual_refinement", "renormalization property",
                                     [&beta](const Scenario& sc, const SolutionField& sol) {
                                       return renormalization_residual(sc, sol, beta, default_test_functions(sc), 0.0,
                                                                       sc.horizon);
                                     });
    r.detail = std::string(tag) + ": " + r.detail;
    if (first || (r.status == CheckStatus::Fail && worst.status != CheckStatus::Fail)) worst = r;
    else if (r.status == worst.status) worst.detail += "; " + r.detail;
    first = false;
  }
  return worst;
}

CheckResult check_uniqueness(const Context& ctx) {
  const double d = uniqueness_probe(ctx.scenario);
  return make("uniqueness_probe", "at most one solution", d, 0.0, d == 0.0, "edge order reversed");
}

CheckResult check_linearity(const Context& ctx) {
  Scenario other = ctx.scenario;
  for (auto& f : other.fields) {
    f.rho0 = parse("1 + cos(2*x)");
    f.f = parse("x*t");
  }
  for (auto& g : other.outer_data) g = parse("1 + t");
  constexpr double a = 2.0, b = -0.5;
  Scenario combo = ctx.scenario;
  for (std::size_t e = 0; e < combo.fields.size(); ++e) {
    combo.fields[e].rho0 = a * ctx.scenario.fields[e].rho0 + b * other.fields[e].rho0;
    combo.fields[e].f = a * ctx.scenario.fields[e].f + b * other.fields[e].f;
  }
  for (std::size_t k = 0; k < combo.outer_data.size(); ++k)
    combo.outer_data[k] = a * ctx.scenario.outer_data[k] + b * other.outer_data[k];
  SolveOptions opts;
  opts.grid = ctx.grid;
  const SolutionField s2 = solve_coupled(other, opts);
  const SolutionField sc = solve_coupled(combo, opts);
  double worst = 0.0, scale = 1.0;
  for (std::size_t e = 0; e < sc.density.size(); ++e) {
    worst = std::max(worst, max_abs(sc.density[e] - (a * ctx.solution.density[e] + b * s2.density[e])));
    scale = std::max(scale, max_abs(sc.density[e]));
  }
  const double measured = worst / scale;
  return make("linearity", "solution map is linear in the data", measured, kRelTol, measured <= kRelTol);
}

}  // namespace

const char* to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::SkippedDependency: return "skipped (dependency failed)";
    case CheckStatus::NotApplicable: return "not applicable";
  }
  return "?";
}

bool CheckReport::passed() const {
  return std::none_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
}

const CheckResult& CheckReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("no check named '" + name + "'");
}

nlohmann::json CheckReport::to_json() const {
  nlohmann::json doc;
  doc["verdict"] = passed() ? "pass" : "fail";
  doc["checks"] = nlohmann::json::array();
  for (const auto& c : checks)
    doc["checks"].push_back({{"name", c.name},
                             {"reference", c.reference},
                             {"measured", c.measured},
                             {"tolerance", c.tolerance},
                             {"status", to_string(c.status)},
                             {"detail", c.detail}});
  return doc;
}

std::string CheckReport::to_table() const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-36s %-28s %12s %12s  %s\n", "check", "status", "measured", "tolerance", "detail");
  os << line;
  for (const auto& c : checks) {
    std::snprintf(line, sizeof line, "%-36s %-28s %12.4e %12.4e  ", c.name.c_str(), to_string(c.status), c.measured,
                  c.tolerance);
    os << line << c.detail << "\n";
  }
  os << "verdict: " << (passed() ? "pass" : "fail") << "\n";
  return os.str();
}

const std::vector<std::string>& check_catalogue() {
  static const std::vector<std::string> names = {
      "energy_condition",     "contraction",          "causality",
      "positivity",           "sub_distributivity",   "adjoint_identity",
      "node_mass_balance",    "discrete_conservation", "comparison_principle",
      "picard_monotone_agreement", "bound_envelopes", "weak_residual_refinement",
      "renormalization_residual_refinement", "uniqueness_probe", "linearity"};
  return names;
}

CheckReport run_all(const Scenario& scenario, const VerifyConfig& config) {
  const Discretization grid = discretize(scenario);
  Eigen::MatrixXd fluxes(grid.time.levels(), scenario.network->num_boundary_points());
  for (Index n = 0; n < grid.time.levels(); ++n) fluxes.row(n) = boundary_flux(scenario, grid.time.time(n)).transpose();
  SolveOptions opts;
  opts.grid = grid;
  Context ctx{scenario, config, grid, scenario.make_coupling(), fluxes, solve_coupled(scenario, opts)};

  CheckReport report;
  const CheckResult energy = check_energy(ctx);
  const bool energy_ok = energy.status == CheckStatus::Pass;
  report.checks.push_back(energy);
  report.checks.push_back(check_contraction_axiom(ctx, energy_ok));
  report.checks.push_back(check_causality_axiom(ctx));
  report.checks.push_back(check_positivity(ctx));
  report.checks.push_back(check_sub_distributivity(ctx));
  report.checks.push_back(check_adjoint(ctx));
  if (energy_ok) {
    report.checks.push_back(check_node_mass(ctx));
    report.checks.push_back(check_conservation(ctx));
  } else {
    report.checks.push_back(skipped("node_mass_balance", "mass conserved at inner nodes",
                                    CheckStatus::SkippedDependency, "energy_condition failed"));
    report.checks.push_back(skipped("discrete_conservation", "mass changes only through outer nodes and sources",
                                    CheckStatus::SkippedDependency, "energy_condition failed"));
  }
  report.checks.push_back(check_comparison(ctx));
  report.checks.push_back(check_picard(ctx));
  report.checks.push_back(check_bounds(ctx));
  report.checks.push_back(check_weak(ctx));
  report.checks.push_back(check_renormalization(ctx));
  report.checks.push_back(check_uniqueness(ctx));
  report.checks.push_back(check_linearity(ctx));
  return report;
}

}  // namespace nettransport
