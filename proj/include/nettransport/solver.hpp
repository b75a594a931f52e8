#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nettransport/boundary.hpp"
#include "nettransport/scenario.hpp"

namespace nettransport {

struct CflViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFiniteState : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EnergyConditionViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EdgeGrid {
  std::vector<Index> cells;

  double dx(Index e) const { return 1.0 / static_cast<double>(cells[static_cast<std::size_t>(e)]); }
  Eigen::VectorXd centers(Index e) const;
};

struct Discretization {
  EdgeGrid space;
  TimeGrid time;
};

/// Largest |u| over all faces, sampled on a fine probe grid of [0, T].
double probe_max_speed(const Scenario& scenario, const EdgeGrid& space);

/// dt = T / ceil(T / (cfl * min dx / max_speed)). The default max_speed comes
/// from probe_max_speed.
Discretization discretize(const Scenario& scenario, std::optional<double> max_speed = std::nullopt);

/// Cell values per edge.
using EdgeState = std::vector<Eigen::VectorXd>;

/// 3-point Gauss cell averages of rho0.
EdgeState initial_state(const Scenario& scenario, const EdgeGrid& space);

/// nu * u at every boundary point.
BoundaryVector boundary_flux(const Scenario& scenario, double t);

/// Discrete trace: the adjacent cell value at every endpoint, replaced by the
/// supplied inflow value where the flux enters.
BoundaryVector discrete_trace(const EdgeState& state, const BoundaryVector& flux, const BoundaryVector& inflow);

/// One explicit upwind step from level `level`:
///   rho_i <- a rho_i + lam u_{i-1/2}^+ rho_{i-1} + lam u_{i+1/2}^- rho_{i+1} + dt f_i
/// with a = 1 - lam (u_{i+1/2}^+ + u_{i-1/2}^-) - dt c_i and rho_{-1}, rho_N the
/// inflow values. Every coefficient is nonnegative under the CFL condition,
/// which keeps the update monotone in floating point. Throws CflViolation when
/// the step breaks the CFL bound or a diagonal coefficient goes negative.
EdgeState step_upwind(const Scenario& scenario, const Discretization& grid, const EdgeState& state, Index level,
                      const BoundaryVector& inflow, const std::vector<Index>& edge_order = {});

struct SolutionField {
  Discretization grid;
  std::vector<Eigen::MatrixXd> density;  // per edge: levels x cells
  BoundaryTrace trace;
  std::vector<Index> snapshot_levels;

  Index levels() const { return grid.time.levels(); }
  double mass(Index level) const;
  /// Edge-major concatenation of all cell values at a level.
  Eigen::VectorXd stacked(Index level) const;
};

/// Supplies inflow values at a level from the current discrete outflow trace.
using InflowRule =
    std::function<BoundaryVector(Index level, double t, const BoundaryVector& outflow, const BoundaryVector& flux)>;

struct SolveOptions {
  std::optional<Discretization> grid;
  std::vector<Index> edge_order;  // empty: natural order
};

SolutionField solve_with_inflow(const Scenario& scenario, const InflowRule& rule, const SolveOptions& options = {});

/// Explicit coupling: inflow at level n is H evaluated on the level-n traces.
SolutionField solve_coupled(const Scenario& scenario, const SolveOptions& options = {});

struct NonMonotoneIterate : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IterationLimitReached : std::runtime_error {
  IterationLimitReached(const std::string& what, Index iterations) : std::runtime_error(what), iterations(iterations) {}
  Index iterations;
};

struct PicardResult {
  SolutionField solution;
  Index iterations = 0;
  /// Inflow tables rho_in,1 .. rho_in,k+1 (levels x boundary points).
  std::vector<Eigen::MatrixXd> inflow_history;
  /// Solutions of every iterate when requested.
  std::vector<SolutionField> iterates;
};

/// Fixed-point construction: start from a zero trace, solve the uncoupled
/// problem with inflow H(previous trace), repeat. Stops after k solves once
/// max |H(trace_k) - rho_in,k| <= tol. Requires f, rho0 and outer data to be
/// nonnegative on the grid samples (std::invalid_argument otherwise); throws
/// NonMonotoneIterate if an inflow table ever decreases and
/// IterationLimitReached after max_iter solves.
PicardResult solve_picard(const Scenario& scenario, double tol = 1e-10, Index max_iter = 100,
                          bool keep_iterates = false, const SolveOptions& options = {});

/// Discrete form of the weak trace identity on [t0, t1] with a test function
/// per edge. Time derivatives are forward differences and space derivatives
/// face differences, so constant states telescope exactly. Returns |residual|.
double weak_residual(const Scenario& scenario, const SolutionField& solution, const std::vector<Expr>& phi, double t0,
                     double t1);

class Renormalization {
 public:
  enum class Kind { Abs, Square, PlusShift };

  static Renormalization abs() { return Renormalization(Kind::Abs, 0.0); }
  static Renormalization square() { return Renormalization(Kind::Square, 0.0); }
  static Renormalization plus_shift(double s0) { return Renormalization(Kind::PlusShift, s0); }
  /// "abs", "square" or "plus-shift:<s0>"; throws std::invalid_argument.
  static Renormalization from_tag(std::string_view tag);

  double value(double s) const;
  double slope(double s) const;
  Kind kind() const { return kind_; }
  double shift() const { return shift_; }

 private:
  Renormalization(Kind kind, double shift) : kind_(kind), shift_(shift) {}
  Kind kind_;
  double shift_;
};

/// Discrete renormalized identity for beta(rho), same quadrature as
/// weak_residual plus the div(u) (beta'(rho) rho - beta(rho)) term.
double renormalization_residual(const Scenario& scenario, const SolutionField& solution, const Renormalization& beta,
                                const std::vector<Expr>& phi, double t0, double t1);

/// x (1 - x) t on every edge.
std::vector<Expr> default_test_functions(const Scenario& scenario);

struct StabilityRow {
  double delta = 0.0;
  double distance = 0.0;
};

/// For each delta solves with u + delta g (and u_x + delta g_x) on the time
/// grid shared by the whole family and reports the largest discrete L^p
/// distance to the unperturbed solution over the snapshot levels (all levels
/// when the scenario lists none). Throws EnergyConditionViolation when a
/// perturbed velocity breaks flux balance at an inner node.
std::vector<StabilityRow> stability_study(const Scenario& base, const Expr& g, const Expr& g_x,
                                          const std::vector<double>& deltas, double p);

/// L1 distance (cells and all levels) between runs with natural and reversed
/// edge order.
double uniqueness_probe(const Scenario& scenario);

struct SplitResult {
  SolutionField combined;
  SolutionField positive;  // f^+ with the original data
  SolutionField negative;  // f^- with zero data and G-only coupling
  double hat_rho_min = 0.0;
};

/// Splits a sign-changing source into f^+ and f^- subproblems and recombines
/// rho = rho1 - rho2. Throws std::invalid_argument when no candidate
/// hat_rho_min satisfies G(F_- + hat_rho_min) <= F_- + hat_rho_min.
SplitResult split_signed_source(const Scenario& scenario);

/// (sum over edges and cells of |a - b|^p dx)^(1/p) at one level; p = inf
/// gives the sup norm.
double lp_distance(const SolutionField& a, const SolutionField& b, Index level, double p);

}  // namespace nettransport
