#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "nettransport/boundary.hpp"
#include "nettransport/expr.hpp"
#include "nettransport/graph.hpp"

namespace nettransport {

/// Per-edge data of rho_t + (u rho)_x + c rho = f, with u_x supplied
/// explicitly rather than derived.
struct EdgeFields {
  Expr u;
  Expr u_x;
  Expr c;
  Expr f;
  Expr rho0;
};

struct Scenario {
  std::shared_ptr<const Network> network;
  std::vector<EdgeFields> fields;  // one per edge
  std::vector<Expr> outer_data;    // one per outer node, outer_nodes() order
  std::vector<Index> cells;        // one per edge
  double horizon = 1.0;
  double cfl = 0.5;
  CouplingMode coupling = CouplingMode::Mixing;
  std::optional<Eigen::VectorXd> weights;
  std::vector<double> snapshots;
  std::vector<double> p_norms{1.0};

  CouplingOperator make_coupling() const;
  /// Same scenario with every edge refined by an integer factor.
  Scenario refined(Index factor) const;
};

/// Throws std::invalid_argument naming the offending part when sizes,
/// horizon or CFL number are inconsistent.
void validate(const Scenario& scenario);

struct DerivativeAudit {
  double worst_relative_error = 0.0;
  Index samples_checked = 0;
  Index samples_skipped = 0;  // rejected as non-smooth (kinks of abs/min/max)
  Index worst_edge = -1;
};

/// Compares each edge's u_x expression to central differences of u at seeded
/// random points of (0, T) x (0, 1).
DerivativeAudit audit_velocity_derivative(const Scenario& scenario, std::uint64_t seed, Index samples_per_edge = 64);

}  // namespace nettransport
