#pragma once

#include <optional>

#include <Eigen/Dense>

#include "nettransport/boundary.hpp"

namespace nettransport {

struct Scenario;
struct SolutionField;
struct Discretization;

/// Exponential a priori envelopes tabulated on a time grid.
///
/// alpha and zeta are the sup over all edges of (u_x + c)^- and (u_x + c)^+;
/// A and Z are their left-endpoint cumulative integrals. f_plus and f_minus
/// hold, per level and edge, the integral of exp(-A) times the sup of f^+
/// (resp. f^-). The scalar bounds are filled in by with_extremes().
struct BoundEnvelope {
  TimeGrid grid;
  Eigen::VectorXd alpha;
  Eigen::VectorXd zeta;
  Eigen::VectorXd alpha_integral;
  Eigen::VectorXd zeta_integral;
  Eigen::MatrixXd f_plus;
  Eigen::MatrixXd f_minus;
  double rho_max = 0.0;
  std::optional<double> rho_min;

  /// r(t) = exp(-A(t))
  double decay(Index level) const;
  /// rbar(t) = exp(Z(t))
  double growth(Index level) const;
  /// (rho_max + F_+(t)) exp(A(t)) on edge e.
  double upper(Index level, Index edge) const;
  /// rho_min exp(-Z(t)); requires rho_min.
  double lower(Index level) const;
  /// Upper envelope maximized over edges.
  double upper(Index level) const;

  BoundEnvelope with_extremes(double max, std::optional<double> min) const;
};

/// Tabulates the envelope. Spatial sup-norms are sampled at the cell centers
/// and both endpoints of every edge. Throws std::domain_error if zeta is not
/// finite at some sample.
BoundEnvelope build_envelope(const Scenario& scenario, const std::vector<Index>& cells, const TimeGrid& grid);

/// Envelope with rho_max and, when the data are strictly positive, rho_min
/// filled in from compute_rho_extremes.
BoundEnvelope scenario_envelope(const Scenario& scenario, const Discretization& grid);

struct BoundViolations {
  double upper = 0.0;
  std::optional<double> lower;
};

/// Largest amount by which cell values or boundary traces leave the envelope.
/// The lower violation is reported only when the envelope carries rho_min.
BoundViolations check_solution_bounds(const SolutionField& solution, const BoundEnvelope& envelope);

}  // namespace nettransport
