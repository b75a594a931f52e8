#include "nettransport/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nettransport/bounds.hpp"

namespace nettransport {

Index TimeGrid::nearest_level(double t) const {
  if (steps == 0) return 0;
  const double n = std::round(t / dt());
  return std::clamp(static_cast<Index>(n), Index{0}, steps);
}

WeightMatrix::WeightMatrix(Eigen::VectorXd diagonal) : diagonal_(std::move(diagonal)) {
  if ((diagonal_.array() <= 0.0).any() || !diagonal_.allFinite())
    throw std::invalid_argument("weight matrix entries must be positive and finite");
}

BoundaryVector WeightMatrix::per_boundary_point() const {
  BoundaryVector w(2 * diagonal_.size());
  for (Index e = 0; e < diagonal_.size(); ++e) w.segment(2 * e, 2).setConstant(diagonal_(e));
  return w;
}

CouplingOperator::CouplingOperator(std::shared_ptr<const Network> network, std::vector<Expr> outer_data,
                                   CouplingMode mode, WeightMatrix weights)
    : network_(std::move(network)), outer_data_(std::move(outer_data)), mode_(mode), weights_(std::move(weights)) {
  if (static_cast<Index>(outer_data_.size()) != network_->num_outer())
    throw std::invalid_argument("coupling needs one data expression per outer node");
  if (weights_.diagonal().size() != network_->num_edges())
    throw std::invalid_argument("coupling needs one weight per edge");
}

Eigen::VectorXd CouplingOperator::outer_values(double t) const {
  Eigen::VectorXd v(network_->num_outer());
  for (Index i = 0; i < v.size(); ++i) v(i) = outer_data_[static_cast<std::size_t>(i)](t, 0.0);
  return v;
}

BoundaryVector CouplingOperator::inflow_data(double t, const BoundaryVector& flux) const {
  const BoundaryVector spread = network_->outer_selector().transpose() * outer_values(t);
  return (flux.array() < 0.0).select(spread, 0.0);
}

BoundaryVector CouplingOperator::apply_g(const BoundaryVector& trace, const BoundaryVector& flux) const {
  if (mode_ == CouplingMode::ZeroG) return BoundaryVector::Zero(trace.size());
  return apply_gu(*network_, trace, flux);
}

BoundaryVector CouplingOperator::apply(const BoundaryVector& trace, const BoundaryVector& flux, double t) const {
  // Outer and inner inflow endpoints are disjoint, so the sum only places
  // each part; no endpoint receives two contributions.
  return inflow_data(t, flux) + apply_g(trace, flux);
}

Eigen::MatrixXd CouplingOperator::apply_g(const BoundaryTrace& trace) const {
  Eigen::MatrixXd out(trace.gamma.rows(), trace.gamma.cols());
  for (Index n = 0; n < trace.gamma.rows(); ++n)
    out.row(n) = apply_g(BoundaryVector(trace.gamma.row(n).transpose()), BoundaryVector(trace.flux.row(n).transpose()))
                     .transpose();
  return out;
}

BoundaryVector inflow_indicator(const BoundaryVector& flux) {
  return (flux.array() < 0.0).select(BoundaryVector::Ones(flux.size()), 0.0);
}

Eigen::VectorXd assemble_m(const Network& network, const BoundaryVector& flux) {
  const Eigen::MatrixXd& s = network.inner_selector();
  const Eigen::MatrixXd m = s * negative_part(flux).asDiagonal() * s.transpose();
  Eigen::MatrixXd off = m;
  off.diagonal().setZero();
  if ((off.array() != 0.0).any()) throw std::logic_error("node matrix M is not diagonal");
  return m.diagonal();
}

Eigen::VectorXd pseudo_inverse(const Eigen::VectorXd& diagonal) {
  if (diagonal.size() == 0) return diagonal;
  const double threshold = 1e-14 * diagonal.maxCoeff();
  return diagonal.unaryExpr([threshold](double m) { return m > threshold && m > 0.0 ? 1.0 / m : 0.0; });
}

BoundaryVector apply_gu(const Network& network, const BoundaryVector& trace, const BoundaryVector& flux) {
  const Eigen::MatrixXd& s = network.inner_selector();
  const Eigen::VectorXd m_inv = pseudo_inverse(assemble_m(network, flux));
  const Eigen::VectorXd outgoing = s * positive_part(flux).cwiseProduct(trace);
  const BoundaryVector mixed = s.transpose() * m_inv.cwiseProduct(outgoing);
  return (flux.array() < 0.0).select(mixed, 0.0);
}

BoundaryVector apply_gu_adjoint(const Network& network, const BoundaryVector& dual, const BoundaryVector& flux) {
  const Eigen::MatrixXd& s = network.inner_selector();
  const Eigen::VectorXd m_inv = pseudo_inverse(assemble_m(network, flux));
  const Eigen::VectorXd incoming = s * negative_part(flux).cwiseProduct(dual);
  const BoundaryVector mixed = s.transpose() * m_inv.cwiseProduct(incoming);
  return (flux.array() > 0.0).select(mixed, 0.0);
}

BoundaryVector apply_h(const CouplingOperator& coupling, const BoundaryVector& trace, const BoundaryVector& flux,
                       double t) {
  return coupling.apply(trace, flux, t);
}

Eigen::VectorXd check_energy_condition(const Network& network, const Eigen::MatrixXd& flux_series) {
  Eigen::VectorXd residual = Eigen::VectorXd::Zero(network.num_inner());
  for (Index n = 0; n < flux_series.rows(); ++n)
    residual = residual.cwiseMax((network.inner_selector() * flux_series.row(n).transpose()).cwiseAbs());
  return residual;
}

ContractionNorms check_contraction(const CouplingOperator& coupling, const BoundaryTrace& trace, double horizon) {
  const BoundaryVector w = coupling.weights().per_boundary_point();
  const Eigen::MatrixXd g = coupling.apply_g(trace);
  const Eigen::RowVectorXd inner_owned = coupling.network().inner_selector().colwise().sum();
  const double dt = trace.grid.dt();
  ContractionNorms norms;
  for (Index n = 0; n < trace.grid.steps && trace.grid.time(n) < horizon; ++n) {
    const Eigen::RowVectorXd flux = trace.flux.row(n);
    const Eigen::RowVectorXd rho_out = trace.gamma.row(n).cwiseAbs().cwiseProduct(w.transpose()).cwiseProduct(
        positive_part(flux));
    norms.lhs += dt * g.row(n).cwiseAbs().cwiseProduct(w.transpose()).cwiseProduct(negative_part(flux)).sum();
    norms.rhs += dt * rho_out.sum();
    norms.rhs_inner += dt * rho_out.cwiseProduct(inner_owned).sum();
  }
  return norms;
}

double check_causality(const CouplingOperator& coupling, const BoundaryTrace& trace, double cutoff) {
  BoundaryTrace truncated = trace;
  for (Index n = 0; n < trace.grid.levels(); ++n)
    if (trace.grid.time(n) > cutoff) truncated.gamma.row(n).setZero();
  const Eigen::MatrixXd full = coupling.apply_g(trace);
  const Eigen::MatrixXd cut = coupling.apply_g(truncated);
  double worst = 0.0;
  for (Index n = 0; n < trace.grid.levels() && trace.grid.time(n) <= cutoff; ++n)
    worst = std::max(worst, (full.row(n) - cut.row(n)).cwiseAbs().maxCoeff());
  return worst;
}

double check_time_multiplier(const CouplingOperator& coupling, const BoundaryTrace& trace, const Expr& g) {
  BoundaryTrace scaled = trace;
  Eigen::VectorXd factor(trace.grid.levels());
  for (Index n = 0; n < factor.size(); ++n) factor(n) = g(trace.grid.time(n), 0.0);
  scaled.gamma = factor.asDiagonal() * trace.gamma;
  const Eigen::MatrixXd lhs = coupling.apply_g(scaled);
  const Eigen::MatrixXd rhs = factor.asDiagonal() * coupling.apply_g(trace);
  return lhs.size() == 0 ? 0.0 : (lhs - rhs).cwiseAbs().maxCoeff();
}

RhoExtremes compute_rho_extremes(const CouplingOperator& coupling, const Eigen::MatrixXd& flux_series,
                                 const Eigen::VectorXd& rho0_samples, const BoundEnvelope& envelope,
                                 bool want_lower) {
  const Network& net = coupling.network();
  const TimeGrid& grid = envelope.grid;
  if (flux_series.rows() != grid.levels()) throw std::invalid_argument("flux series does not match envelope grid");

  RhoExtremes ext;
  double outer_max = 0.0;
  double outer_min = std::numeric_limits<double>::infinity();
  // Outer data matter only where they enter an edge.
  for (Index n = 0; n < grid.levels(); ++n) {
    const BoundaryVector spread = net.outer_selector().transpose() * coupling.outer_values(grid.time(n));
    for (Index bp = 0; bp < spread.size(); ++bp) {
      if (!(flux_series(n, bp) < 0.0) || net.is_inner(net.boundary_point(bp).node)) continue;
      outer_max = std::max(outer_max, std::abs(spread(bp) * envelope.decay(n)));
      outer_min = std::min(outer_min, spread(bp) * envelope.growth(n));
    }
  }
  ext.rho_max = std::max(outer_max, rho0_samples.size() ? rho0_samples.cwiseAbs().maxCoeff() : 0.0);

  if (want_lower) {
    const double rho0_min = rho0_samples.size() ? rho0_samples.minCoeff() : std::numeric_limits<double>::infinity();
    const double candidate = std::min(rho0_min, outer_min);
    if (!(candidate > 0.0) || !std::isfinite(candidate))
      throw std::invalid_argument("lower bound needs strictly positive initial and outer data");
    ext.rho_min = candidate;
  }

  // Substitute the scalars back into the bound conditions at every inflow
  // sample; a negative slack means the condition fails.
  const BoundaryVector ones = BoundaryVector::Ones(net.num_boundary_points());
  ext.upper_slack = ext.rho_max - (rho0_samples.size() ? rho0_samples.maxCoeff() : 0.0);
  std::optional<double> lower_slack;
  if (ext.rho_min) lower_slack = (rho0_samples.size() ? rho0_samples.minCoeff() : *ext.rho_min) - *ext.rho_min;
  for (Index n = 0; n < grid.levels(); ++n) {
    const BoundaryVector flux = flux_series.row(n).transpose();
    const BoundaryVector rho_in = coupling.inflow_data(grid.time(n), flux);
    BoundaryVector f_plus(net.num_boundary_points());
    for (Index e = 0; e < net.num_edges(); ++e) f_plus.segment(2 * e, 2).setConstant(envelope.f_plus(n, e));
    const BoundaryVector upper_lhs = rho_in * envelope.decay(n) - f_plus + coupling.apply_g(f_plus, flux) +
                                     coupling.apply_g(BoundaryVector(ext.rho_max * ones), flux);
    for (Index bp = 0; bp < flux.size(); ++bp) {
      if (!(flux(bp) < 0.0)) continue;
      ext.upper_slack = std::min(ext.upper_slack, ext.rho_max - upper_lhs(bp));
    }
    if (ext.rho_min) {
      const BoundaryVector lower_lhs =
          rho_in * envelope.growth(n) + coupling.apply_g(BoundaryVector(*ext.rho_min * ones), flux);
      for (Index bp = 0; bp < flux.size(); ++bp) {
        if (!(flux(bp) < 0.0)) continue;
        lower_slack = std::min(*lower_slack, lower_lhs(bp) - *ext.rho_min);
      }
    }
  }
  ext.lower_slack = lower_slack;
  return ext;
}

}  // namespace nettransport
