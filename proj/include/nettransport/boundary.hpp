#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "nettransport/expr.hpp"
#include "nettransport/graph.hpp"

namespace nettransport {

/// Values at the 2n boundary points, laid out by Network::boundary_index.
using BoundaryVector = Eigen::VectorXd;

/// Uniform time grid 0 = t_0 < ... < t_steps = horizon.
struct TimeGrid {
  double horizon = 0.0;
  Index steps = 0;

  double dt() const { return horizon / static_cast<double>(steps); }
  Index levels() const { return steps + 1; }
  double time(Index n) const { return n == steps ? horizon : static_cast<double>(n) * dt(); }
  /// Grid level closest to t (clamped to the grid).
  Index nearest_level(double t) const;
};

/// Boundary trace and signed flux nu*u at every boundary point and grid level.
/// Rows are time levels, columns boundary points.
struct BoundaryTrace {
  TimeGrid grid;
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd flux;
};

/// Positive diagonal weights, one per edge.
class WeightMatrix {
 public:
  explicit WeightMatrix(Eigen::VectorXd diagonal);
  static WeightMatrix identity(Index edges) { return WeightMatrix(Eigen::VectorXd::Ones(edges)); }

  const Eigen::VectorXd& diagonal() const { return diagonal_; }
  /// Weight of the edge owning each boundary point.
  BoundaryVector per_boundary_point() const;

 private:
  Eigen::VectorXd diagonal_;
};

enum class CouplingMode { Mixing, ZeroG };

/// Affine node map H(rho) = rho_in + G(rho).
///
/// rho_in places the prescribed outer-node data on the inflow endpoints of
/// outer nodes. In Mixing mode G is the perfect-mixing operator G_u; in ZeroG
/// mode G vanishes and inner-node inflow values are zero.
class CouplingOperator {
 public:
  CouplingOperator(std::shared_ptr<const Network> network, std::vector<Expr> outer_data, CouplingMode mode,
                   WeightMatrix weights);

  const Network& network() const { return *network_; }
  const std::shared_ptr<const Network>& network_ptr() const { return network_; }
  CouplingMode mode() const { return mode_; }
  const WeightMatrix& weights() const { return weights_; }
  /// Prescribed data, one expression of t per outer node in outer_nodes() order.
  const std::vector<Expr>& outer_data() const { return outer_data_; }

  Eigen::VectorXd outer_values(double t) const;
  BoundaryVector inflow_data(double t, const BoundaryVector& flux) const;
  BoundaryVector apply_g(const BoundaryVector& trace, const BoundaryVector& flux) const;
  BoundaryVector apply(const BoundaryVector& trace, const BoundaryVector& flux, double t) const;

  /// G applied level by level to a whole trace history.
  Eigen::MatrixXd apply_g(const BoundaryTrace& trace) const;

 private:
  std::shared_ptr<const Network> network_;
  std::vector<Expr> outer_data_;
  CouplingMode mode_;
  WeightMatrix weights_;
};

/// 1 where the flux enters the edge (nu*u < 0), else 0.
BoundaryVector inflow_indicator(const BoundaryVector& flux);

/// Diagonal of M = (nu B_inner)^- diag((nu u)^-) (nu B_inner^T)^-, one entry
/// per inner node. Throws std::logic_error if the full product has a nonzero
/// off-diagonal entry.
Eigen::VectorXd assemble_m(const Network& network, const BoundaryVector& flux);

/// Moore-Penrose pseudoinverse of a nonnegative diagonal: reciprocal above
/// 1e-14 * max entry, zero otherwise.
Eigen::VectorXd pseudo_inverse(const Eigen::VectorXd& diagonal);

/// Perfect mixing: each inflow endpoint of an inner node receives the
/// (nu u)^+ weighted mean of the outflow traces at that node. Zero elsewhere,
/// and zero at nodes where nothing flows in.
BoundaryVector apply_gu(const Network& network, const BoundaryVector& trace, const BoundaryVector& flux);

/// Pre-adjoint of apply_gu, evaluated at outflow endpoints of inner nodes.
BoundaryVector apply_gu_adjoint(const Network& network, const BoundaryVector& dual, const BoundaryVector& flux);

BoundaryVector apply_h(const CouplingOperator& coupling, const BoundaryVector& trace, const BoundaryVector& flux,
                       double t);

/// Per inner node, max over levels of |sum of nu*u over the node's endpoints|.
Eigen::VectorXd check_energy_condition(const Network& network, const Eigen::MatrixXd& flux_series);

struct ContractionNorms {
  double lhs = 0.0;        // int |G rho|^T W (nu u)^-
  double rhs = 0.0;        // int |rho|^T W (nu u)^+
  double rhs_inner = 0.0;  // rhs restricted to endpoints owned by inner nodes
};

/// Weighted L1 boundary norms over levels with t_n < horizon (left-endpoint rule).
ContractionNorms check_contraction(const CouplingOperator& coupling, const BoundaryTrace& trace, double horizon);

/// max |chi G(chi rho) - chi G(rho)| over levels t_n <= cutoff, chi the
/// indicator of [0, cutoff].
double check_causality(const CouplingOperator& coupling, const BoundaryTrace& trace, double cutoff);

/// max |G(g rho) - g G(rho)| for a bounded multiplier g(t).
double check_time_multiplier(const CouplingOperator& coupling, const BoundaryTrace& trace, const Expr& g);

struct BoundEnvelope;

struct RhoExtremes {
  double rho_max = 0.0;
  /// min over inflow samples of rho_max - LHS of the upper-bound condition
  /// (and of rho_max - rho0); nonnegative when the condition holds.
  double upper_slack = 0.0;
  std::optional<double> rho_min;
  std::optional<double> lower_slack;
};

/// Scalar bounds for the mixing operator, verified by substitution into the
/// upper and lower bound conditions on the envelope's grid. rho0_samples
/// collects initial values over all edges. Throws std::invalid_argument when
/// the lower bound is requested with nonpositive data.
RhoExtremes compute_rho_extremes(const CouplingOperator& coupling, const Eigen::MatrixXd& flux_series,
                                 const Eigen::VectorXd& rho0_samples, const BoundEnvelope& envelope,
                                 bool want_lower);

}  // namespace nettransport
