#include "nettransport/scenario.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace nettransport {

CouplingOperator Scenario::make_coupling() const {
  WeightMatrix w = weights ? WeightMatrix(*weights) : WeightMatrix::identity(network->num_edges());
  return CouplingOperator(network, outer_data, coupling, std::move(w));
}

Scenario Scenario::refined(Index factor) const {
  if (factor < 1) throw std::invalid_argument("refinement factor must be positive");
  Scenario s = *this;
  for (auto& n : s.cells) n *= factor;
  return s;
}

void validate(const Scenario& scenario) {
  if (!scenario.network) throw std::invalid_argument("scenario has no network");
  const auto edges = static_cast<std::size_t>(scenario.network->num_edges());
  if (scenario.fields.size() != edges) throw std::invalid_argument("fields: expected one entry per edge");
  if (scenario.cells.size() != edges) throw std::invalid_argument("cells: expected one entry per edge");
  for (Index n : scenario.cells)
    if (n < 1) throw std::invalid_argument("cells: must be a positive integer");
  if (static_cast<Index>(scenario.outer_data.size()) != scenario.network->num_outer())
    throw std::invalid_argument("boundary: expected one expression per outer node");
  if (!(scenario.horizon > 0.0) || !std::isfinite(scenario.horizon))
    throw std::invalid_argument("sim.T: must be positive");
  if (!(scenario.cfl > 0.0 && scenario.cfl <= 1.0)) throw std::invalid_argument("sim.cfl: must lie in (0, 1]");
  for (double p : scenario.p_norms)
    if (!(p >= 1.0)) throw std::invalid_argument("sim.p_norms: entries must be >= 1");
  for (double t : scenario.snapshots)
    if (!(t >= 0.0 && t <= scenario.horizon)) throw std::invalid_argument("sim.snapshots: times must lie in [0, T]");
  if (scenario.weights) {
    if (static_cast<std::size_t>(scenario.weights->size()) != edges)
      throw std::invalid_argument("sim.weights: expected one entry per edge");
    if ((scenario.weights->array() <= 0.0).any()) throw std::invalid_argument("sim.weights: entries must be positive");
  }
}

DerivativeAudit audit_velocity_derivative(const Scenario& scenario, std::uint64_t seed, Index samples_per_edge) {
  constexpr double h = 1e-6;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DerivativeAudit audit;
  for (std::size_t e = 0; e < scenario.fields.size(); ++e) {
    const EdgeFields& f = scenario.fields[e];
    for (Index k = 0; k < samples_per_edge; ++k) {
      const double t = scenario.horizon * unit(rng);
      const double x = h + (1.0 - 2.0 * h) * unit(rng);
      const double fd = (f.u(t, x + h) - f.u(t, x - h)) / (2.0 * h);
      const double fd_half = (f.u(t, x + 0.5 * h) - f.u(t, x - 0.5 * h)) / h;
      const double scale = std::max(1.0, std::abs(fd));
      if (std::abs(fd - fd_half) > 1e-5 * scale) {
        ++audit.samples_skipped;
        continue;
      }
      const double rel = std::abs(f.u_x(t, x) - fd) / scale;
      ++audit.samples_checked;
      if (rel > audit.worst_relative_error) {
        audit.worst_relative_error = rel;
        audit.worst_edge = static_cast<Index>(e);
      }
    }
  }
  return audit;
}

}  // namespace nettransport
