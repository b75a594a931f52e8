#include "nettransport/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nettransport/scenario.hpp"
#include "nettransport/solver.hpp"

namespace nettransport {

double BoundEnvelope::decay(Index level) const { return std::exp(-alpha_integral(level)); }

double BoundEnvelope::growth(Index level) const { return std::exp(zeta_integral(level)); }

double BoundEnvelope::upper(Index level, Index edge) const {
  return (rho_max + f_plus(level, edge)) * std::exp(alpha_integral(level));
}

double BoundEnvelope::upper(Index level) const {
  double best = 0.0;
  for (Index e = 0; e < f_plus.cols(); ++e) best = std::max(best, upper(level, e));
  return best;
}

double BoundEnvelope::lower(Index level) const {
  if (!rho_min) throw std::logic_error("envelope has no lower bound");
  return *rho_min * std::exp(-zeta_integral(level));
}

BoundEnvelope BoundEnvelope::with_extremes(double max, std::optional<double> min) const {
  BoundEnvelope out = *this;
  out.rho_max = max;
  out.rho_min = min;
  return out;
}

BoundEnvelope build_envelope(const Scenario& scenario, const std::vector<Index>& cells, const TimeGrid& grid) {
  const Index edges = static_cast<Index>(scenario.fields.size());
  if (static_cast<Index>(cells.size()) != edges) throw std::invalid_argument("one cell count per edge required");
  const Index levels = grid.levels();

  BoundEnvelope env;
  env.grid = grid;
  env.alpha = Eigen::VectorXd::Zero(levels);
  env.zeta = Eigen::VectorXd::Zero(levels);
  Eigen::MatrixXd sup_f_plus = Eigen::MatrixXd::Zero(levels, edges);
  Eigen::MatrixXd sup_f_minus = Eigen::MatrixXd::Zero(levels, edges);

  for (Index e = 0; e < edges; ++e) {
    const EdgeFields& fields = scenario.fields[static_cast<std::size_t>(e)];
    const Index n_cells = cells[static_cast<std::size_t>(e)];
    std::vector<double> xs{0.0, 1.0};
    for (Index i = 0; i < n_cells; ++i) xs.push_back((static_cast<double>(i) + 0.5) / static_cast<double>(n_cells));
    for (Index n = 0; n < levels; ++n) {
      const double t = grid.time(n);
      for (double x : xs) {
        const double growth = fields.u_x(t, x) + fields.c(t, x);
        if (!std::isfinite(growth))
          throw std::domain_error("u_x + c is not finite on edge '" + scenario.network->edge(e).id + "'");
        env.alpha(n) = std::max(env.alpha(n), negative_part(growth));
        env.zeta(n) = std::max(env.zeta(n), positive_part(growth));
        const double f = fields.f(t, x);
        sup_f_plus(n, e) = std::max(sup_f_plus(n, e), positive_part(f));
        sup_f_minus(n, e) = std::max(sup_f_minus(n, e), negative_part(f));
      }
    }
  }

  // Left-endpoint cumulative sums: the value at level n integrates [0, t_n).
  env.alpha_integral = Eigen::VectorXd::Zero(levels);
  env.zeta_integral = Eigen::VectorXd::Zero(levels);
  env.f_plus = Eigen::MatrixXd::Zero(levels, edges);
  env.f_minus = Eigen::MatrixXd::Zero(levels, edges);
  for (Index n = 1; n < levels; ++n) {
    const double dt = grid.time(n) - grid.time(n - 1);
    env.alpha_integral(n) = env.alpha_integral(n - 1) + dt * env.alpha(n - 1);
    env.zeta_integral(n) = env.zeta_integral(n - 1) + dt * env.zeta(n - 1);
    const double weight = dt * std::exp(-env.alpha_integral(n - 1));
    env.f_plus.row(n) = env.f_plus.row(n - 1) + weight * sup_f_plus.row(n - 1);
    env.f_minus.row(n) = env.f_minus.row(n - 1) + weight * sup_f_minus.row(n - 1);
  }
  return env;
}

BoundEnvelope scenario_envelope(const Scenario& scenario, const Discretization& grid) {
  const BoundEnvelope env = build_envelope(scenario, grid.space.cells, grid.time);
  const CouplingOperator coupling = scenario.make_coupling();
  Eigen::MatrixXd fluxes(grid.time.levels(), scenario.network->num_boundary_points());
  for (Index n = 0; n < grid.time.levels(); ++n) fluxes.row(n) = boundary_flux(scenario, grid.time.time(n)).transpose();
  const EdgeState rho0 = initial_state(scenario, grid.space);
  Index total = 0;
  for (const auto& v : rho0) total += v.size();
  Eigen::VectorXd samples(total);
  Index offset = 0;
  for (const auto& v : rho0) {
    samples.segment(offset, v.size()) = v;
    offset += v.size();
  }
  RhoExtremes ext;
  try {
    ext = compute_rho_extremes(coupling, fluxes, samples, env, true);
  } catch (const std::invalid_argument&) {
    ext = compute_rho_extremes(coupling, fluxes, samples, env, false);
  }
  return env.with_extremes(ext.rho_max, ext.rho_min);
}

BoundViolations check_solution_bounds(const SolutionField& solution, const BoundEnvelope& envelope) {
  if (solution.levels() != envelope.grid.levels()) throw std::invalid_argument("solution and envelope grids differ");
  BoundViolations v;
  if (envelope.rho_min) v.lower = 0.0;
  for (Index n = 0; n < solution.levels(); ++n) {
    const double low = envelope.rho_min ? envelope.lower(n) : 0.0;
    for (std::size_t e = 0; e < solution.density.size(); ++e) {
      const auto edge = static_cast<Index>(e);
      const double high = envelope.upper(n, edge);
      const auto row = solution.density[e].row(n);
      const double start = solution.trace.gamma(n, Network::boundary_index(edge, Endpoint::Start));
      const double end = solution.trace.gamma(n, Network::boundary_index(edge, Endpoint::End));
      const double top = std::max({row.maxCoeff(), start, end});
      const double bottom = std::min({row.minCoeff(), start, end});
      v.upper = std::max(v.upper, top - high);
      if (v.lower) v.lower = std::max(*v.lower, low - bottom);
    }
  }
  return v;
}

}  // namespace nettransport
