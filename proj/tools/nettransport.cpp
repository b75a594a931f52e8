// Command line front end: simulate, picard, verify, convergence, stability.
// Exit codes: 0 success, 1 invariant violation, 2 input error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nettransport/bounds.hpp"
#include "nettransport/io.hpp"
#include "nettransport/oracle.hpp"
#include "nettransport/solver.hpp"
#include "nettransport/verify.hpp"

using namespace nettransport;

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kInputError = 2;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_simulate(const std::string& file, const std::string& out, bool envelope, const std::vector<double>& snaps,
                 bool snaps_given) {
  const std::string text = slurp(file);
  Scenario sc = parse_scenario(text);
  if (snaps_given) {
    sc.snapshots = snaps;
    try {
      validate(sc);
    } catch (const std::invalid_argument& e) {
      throw InputError(std::string("--snapshots: ") + e.what());
    }
  }
  const SolutionField sol = solve_coupled(sc);
  std::optional<BoundEnvelope> env;
  if (envelope) env = scenario_envelope(sc, sol.grid);
  write_results({sc, sol, text, env, "simulate"}, out);
  std::printf("wrote %s (%lld steps, dt = %s)\n", out.c_str(), static_cast<long long>(sol.grid.time.steps),
              format_number(sol.grid.time.dt()).c_str());
  return kOk;
}

int run_picard(const std::string& file, double tol, long long max_iter, const std::string& out) {
  const std::string text = slurp(file);
  const Scenario sc = parse_scenario(text);
  if (!(tol > 0.0)) throw InputError("--tol: must be positive");
  if (max_iter < 1) throw InputError("--max-iter: must be at least 1");
  PicardResult pr;
  try {
    pr = solve_picard(sc, tol, static_cast<Index>(max_iter));
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  const SolutionField direct = solve_coupled(sc, SolveOptions{pr.solution.grid, {}});
  double diff = 0.0;
  for (std::size_t e = 0; e < direct.density.size(); ++e)
    diff = std::max(diff, (direct.density[e] - pr.solution.density[e]).cwiseAbs().maxCoeff());
  std::printf("iterations %lld\n", static_cast<long long>(pr.iterations));
  std::printf("last inflow change %s\n",
              format_number((pr.inflow_history.back() - pr.inflow_history[pr.inflow_history.size() - 2])
                                .cwiseAbs()
                                .maxCoeff())
                  .c_str());
  std::printf("sup distance to explicit coupling %s\n", format_number(diff).c_str());
  if (!out.empty()) write_results({sc, pr.solution, text, std::nullopt, "picard"}, out);
  return kOk;
}

int run_verify(const std::string& file, const std::string& json_out, unsigned long long seed) {
  const Scenario sc = parse_scenario(slurp(file));
  VerifyConfig cfg;
  cfg.seed = seed;
  const CheckReport report = run_all(sc, cfg);
  std::cout << report.to_table();
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    if (!out) throw InputError("cannot write '" + json_out + "'");
    out << report.to_json().dump(2) << "\n";
  }
  return report.passed() ? kOk : kViolation;
}

int run_convergence(const std::string& file, int levels) {
  const Scenario sc = parse_scenario(slurp(file));
  if (levels < 1) throw InputError("--levels: must be at least 1");
  const Network& net = *sc.network;
  if (net.num_edges() != 1) throw InputError("convergence: the exact solution needs a single-edge network");
  const EdgeFields& f = sc.fields.front();
  if (f.u.depends_on_position()) throw InputError("convergence: u must not depend on x");
  auto node_data = [&](Index v) {
    const Index pos = net.outer_position(v);
    return sc.outer_data[static_cast<std::size_t>(pos)];
  };
  const CharacteristicSolution oracle{f.u, f.rho0, node_data(net.edge(0).init), node_data(net.edge(0).ter),
                                      sc.horizon};
  std::printf("%-6s %-8s %-24s %s\n", "level", "cells", "l1_error", "order");
  double previous = 0.0;
  for (int k = 0; k <= levels; ++k) {
    const Scenario s = sc.refined(Index{1} << k);
    const double err = l1_error(solve_coupled(s), oracle, s.horizon);
    std::string order = "-";
    if (k > 0) order = format_number(std::log2(previous / err));
    std::printf("%-6d %-8lld %-24s %s\n", k, static_cast<long long>(s.cells.front()), format_number(err).c_str(),
                order.c_str());
    previous = err;
  }
  return kOk;
}

int run_stability(const std::string& file, const std::string& perturb, const std::string& perturb_x,
                  const std::vector<double>& deltas, double p) {
  const Scenario sc = parse_scenario(slurp(file));
  Expr g, g_x;
  try {
    g = parse(perturb);
  } catch (const ParseError& e) {
    throw InputError(std::string("--perturb: ") + e.what());
  }
  try {
    g_x = parse(perturb_x);
  } catch (const ParseError& e) {
    throw InputError(std::string("--perturb-x: ") + e.what());
  }
  if (deltas.empty()) throw InputError("--deltas: at least one value required");
  if (std::isnan(p)) p = sc.p_norms.front();
  if (!(p >= 1.0)) throw InputError("--p: must be >= 1");
  const auto rows = stability_study(sc, g, g_x, deltas, p);
  std::printf("%-24s %s\n", "delta", "distance");
  for (const auto& r : rows) std::printf("%-24s %s\n", format_number(r.delta).c_str(), format_number(r.distance).c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear transport on directed networks with coupled node conditions"};
  app.require_subcommand(1);

  std::string file, out, json_out, perturb, perturb_x = "0";
  bool envelope = false;
  std::vector<double> snapshots, deltas;
  double tol = 1e-10, p = std::nan("");
  long long max_iter = 100;
  int levels = 2;
  unsigned long long seed = VerifyConfig{}.seed;

  auto* sim = app.add_subcommand("simulate", "solve with explicit node coupling and write CSV results");
  sim->add_option("file", file, "scenario JSON")->required();
  sim->add_option("--out", out, "output directory")->required();
  sim->add_flag("--envelope", envelope, "also write envelope.csv");
  auto* snap_opt = sim->add_option("--snapshots", snapshots, "snapshot times")->delimiter(',');

  auto* pic = app.add_subcommand("picard", "fixed-point construction of the coupled solution");
  pic->add_option("file", file, "scenario JSON")->required();
  pic->add_option("--tol", tol, "stop when the inflow iterates change by at most this")->capture_default_str();
  pic->add_option("--max-iter", max_iter, "iteration limit")->capture_default_str();
  pic->add_option("--out", out, "optional output directory for the converged solution");

  auto* ver = app.add_subcommand("verify", "run the invariant catalogue");
  ver->add_option("file", file, "scenario JSON")->required();
  ver->add_option("--json", json_out, "write the machine-readable report here");
  ver->add_option("--seed", seed, "seed of the random trace sets")->capture_default_str();

  auto* conv = app.add_subcommand("convergence", "L1 errors against the exact characteristic solution");
  conv->add_option("file", file, "single-edge scenario JSON")->required();
  conv->add_option("--levels", levels, "number of halvings of dx")->capture_default_str();

  auto* stab = app.add_subcommand("stability", "distance to the unperturbed solution for u + delta g");
  stab->add_option("file", file, "scenario JSON")->required();
  stab->add_option("--perturb", perturb, "perturbation g(t, x)")->required();
  stab->add_option("--perturb-x", perturb_x, "x-derivative of g")->capture_default_str();
  stab->add_option("--deltas", deltas, "perturbation sizes")->delimiter(',')->required();
  stab->add_option("--p", p, "L^p exponent (default: first sim.p_norms entry)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*sim) return run_simulate(file, out, envelope, snapshots, snap_opt->count() > 0);
    if (*pic) return run_picard(file, tol, max_iter, out);
    if (*ver) return run_verify(file, json_out, seed);
    if (*conv) return run_convergence(file, levels);
    if (*stab) return run_stability(file, perturb, perturb_x, deltas, p);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const CflViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kViolation;
  } catch (const NonFiniteState& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kViolation;
  } catch (const EnergyConditionViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kViolation;
  } catch (const NonMonotoneIterate& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kViolation;
  } catch (const IterationLimitReached& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return kViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
