#include "nettransport/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "nettransport/bounds.hpp"

namespace nettransport {

namespace {

// Gauss-Legendre nodes and weights on [-1, 1].
constexpr double kGaussNode = 0.7745966692414834;
constexpr double kGaussOuter = 5.0 / 9.0;
constexpr double kGaussCenter = 8.0 / 9.0;

std::vector<Index> resolve_order(const std::vector<Index>& order, Index edges) {
  if (order.empty()) {
    std::vector<Index> natural(static_cast<std::size_t>(edges));
    std::iota(natural.begin(), natural.end(), Index{0});
    return natural;
  }
  std::vector<Index> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (Index e = 0; e < edges; ++e)
    if (static_cast<Index>(sorted.size()) != edges || sorted[static_cast<std::size_t>(e)] != e)
      throw std::invalid_argument("edge order must be a permutation of the edges");
  return order;
}

Eigen::MatrixXd flux_series(const Scenario& scenario, const TimeGrid& grid) {
  Eigen::MatrixXd out(grid.levels(), scenario.network->num_boundary_points());
  for (Index n = 0; n < grid.levels(); ++n) out.row(n) = boundary_flux(scenario, grid.time(n)).transpose();
  return out;
}

SolveOptions with_grid(const SolveOptions& options, const Discretization& grid) {
  SolveOptions o = options;
  o.grid = grid;
  return o;
}

}  // namespace

Eigen::VectorXd EdgeGrid::centers(Index e) const {
  const Index n = cells[static_cast<std::size_t>(e)];
  return (Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)).array() + 0.5) * dx(e);
}

double probe_max_speed(const Scenario& scenario, const EdgeGrid& space) {
  constexpr Index kProbeIntervals = 1000;
  double speed = 0.0;
  for (Index k = 0; k <= kProbeIntervals; ++k) {
    const double t = scenario.horizon * static_cast<double>(k) / static_cast<double>(kProbeIntervals);
    for (std::size_t e = 0; e < scenario.fields.size(); ++e) {
      const Index n = space.cells[e];
      for (Index j = 0; j <= n; ++j)
        speed = std::max(speed, std::abs(scenario.fields[e].u(t, static_cast<double>(j) / static_cast<double>(n))));
    }
  }
  return speed;
}

Discretization discretize(const Scenario& scenario, std::optional<double> max_speed) {
  validate(scenario);
  Discretization d;
  d.space.cells = scenario.cells;
  const double speed = max_speed ? *max_speed : probe_max_speed(scenario, d.space);
  double min_dx = std::numeric_limits<double>::infinity();
  for (Index e = 0; e < static_cast<Index>(d.space.cells.size()); ++e) min_dx = std::min(min_dx, d.space.dx(e));
  const double dt_bound = speed > 0.0 ? scenario.cfl * min_dx / speed : min_dx;
  d.time.horizon = scenario.horizon;
  d.time.steps = std::max<Index>(1, static_cast<Index>(std::ceil(scenario.horizon / dt_bound - 1e-9)));
  return d;
}

EdgeState initial_state(const Scenario& scenario, const EdgeGrid& space) {
  EdgeState state;
  state.reserve(scenario.fields.size());
  for (Index e = 0; e < static_cast<Index>(scenario.fields.size()); ++e) {
    const Expr& rho0 = scenario.fields[static_cast<std::size_t>(e)].rho0;
    const double half = 0.5 * space.dx(e);
    const Eigen::VectorXd xc = space.centers(e);
    Eigen::VectorXd v(xc.size());
    for (Index i = 0; i < xc.size(); ++i)
      v(i) = 0.5 * (kGaussOuter * rho0(0.0, xc(i) - kGaussNode * half) + kGaussCenter * rho0(0.0, xc(i)) +
                    kGaussOuter * rho0(0.0, xc(i) + kGaussNode * half));
    state.push_back(std::move(v));
  }
  return state;
}

BoundaryVector boundary_flux(const Scenario& scenario, double t) {
  const Index edges = scenario.network->num_edges();
  BoundaryVector flux(2 * edges);
  for (Index e = 0; e < edges; ++e) {
    const Expr& u = scenario.fields[static_cast<std::size_t>(e)].u;
    flux(Network::boundary_index(e, Endpoint::Start)) = outer_normal(Endpoint::Start) * u(t, 0.0);
    flux(Network::boundary_index(e, Endpoint::End)) = outer_normal(Endpoint::End) * u(t, 1.0);
  }
  return flux;
}

BoundaryVector discrete_trace(const EdgeState& state, const BoundaryVector& flux, const BoundaryVector& inflow) {
  BoundaryVector gamma(flux.size());
  for (std::size_t e = 0; e < state.size(); ++e) {
    const auto start = Network::boundary_index(static_cast<Index>(e), Endpoint::Start);
    const auto end = Network::boundary_index(static_cast<Index>(e), Endpoint::End);
    gamma(start) = flux(start) < 0.0 ? inflow(start) : state[e](0);
    gamma(end) = flux(end) < 0.0 ? inflow(end) : state[e](state[e].size() - 1);
  }
  return gamma;
}

EdgeState step_upwind(const Scenario& scenario, const Discretization& grid, const EdgeState& state, Index level,
                      const BoundaryVector& inflow, const std::vector<Index>& edge_order) {
  const double t = grid.time.time(level);
  const double t_next = grid.time.time(level + 1);
  const double dt = grid.time.dt();
  const auto order = resolve_order(edge_order, scenario.network->num_edges());
  EdgeState next(state.size());
  for (Index e : order) {
    const auto ei = static_cast<std::size_t>(e);
    const EdgeFields& fields = scenario.fields[ei];
    const Eigen::VectorXd& rho = state[ei];
    const Index n = rho.size();
    const double dx = grid.space.dx(e);
    const double lam = dt / dx;

    Eigen::VectorXd face_u(n + 1);
    double speed = 0.0;
    for (Index j = 0; j <= n; ++j) {
      const double xf = static_cast<double>(j) / static_cast<double>(n);
      face_u(j) = fields.u(t, xf);
      speed = std::max({speed, std::abs(face_u(j)), std::abs(fields.u(t_next, xf))});
    }
    if (speed * dt > scenario.cfl * dx * (1.0 + 1e-12))
      throw CflViolation("CFL bound exceeded on edge '" + scenario.network->edge(e).id + "' at t = " +
                         std::to_string(t) + ": |u| dt / dx = " + std::to_string(speed * lam));

    const double inflow_start = inflow(Network::boundary_index(e, Endpoint::Start));
    const double inflow_end = inflow(Network::boundary_index(e, Endpoint::End));
    const Eigen::VectorXd xc = grid.space.centers(e);
    Eigen::VectorXd out(n);
    for (Index i = 0; i < n; ++i) {
      const double c = fields.c(t, xc(i));
      const double f = fields.f(t, xc(i));
      const double from_left = lam * positive_part(face_u(i));
      const double from_right = lam * negative_part(face_u(i + 1));
      const double keep = 1.0 - lam * (positive_part(face_u(i + 1)) + negative_part(face_u(i))) - dt * c;
      if (keep < 0.0)
        throw CflViolation("negative diagonal coefficient on edge '" + scenario.network->edge(e).id +
                           "' (time step too large for the velocity divergence or reaction term)");
      const double left = i == 0 ? inflow_start : rho(i - 1);
      const double right = i == n - 1 ? inflow_end : rho(i + 1);
      out(i) = keep * rho(i) + from_left * left + from_right * right + dt * f;
    }
    if (!out.allFinite())
      throw NonFiniteState("non-finite state on edge '" + scenario.network->edge(e).id + "' at t = " +
                           std::to_string(t_next));
    next[ei] = std::move(out);
  }
  return next;
}

double SolutionField::mass(Index level) const {
  double m = 0.0;
  for (std::size_t e = 0; e < density.size(); ++e)
    m += density[e].row(level).sum() * grid.space.dx(static_cast<Index>(e));
  return m;
}

Eigen::VectorXd SolutionField::stacked(Index level) const {
  Index total = 0;
  for (const auto& d : density) total += d.cols();
  Eigen::VectorXd v(total);
  Index offset = 0;
  for (const auto& d : density) {
    v.segment(offset, d.cols()) = d.row(level).transpose();
    offset += d.cols();
  }
  return v;
}

SolutionField solve_with_inflow(const Scenario& scenario, const InflowRule& rule, const SolveOptions& options) {
  SolutionField sol;
  sol.grid = options.grid ? *options.grid : discretize(scenario);
  const TimeGrid& time = sol.grid.time;
  const Index edges = scenario.network->num_edges();
  const Index points = scenario.network->num_boundary_points();

  EdgeState state = initial_state(scenario, sol.grid.space);
  sol.density.reserve(state.size());
  for (const auto& s : state) sol.density.emplace_back(time.levels(), s.size());
  sol.trace.grid = time;
  sol.trace.gamma.resize(time.levels(), points);
  sol.trace.flux.resize(time.levels(), points);

  const BoundaryVector no_inflow = BoundaryVector::Zero(points);
  for (Index n = 0; n < time.levels(); ++n) {
    const double t = time.time(n);
    const BoundaryVector flux = boundary_flux(scenario, t);
    const BoundaryVector outflow = discrete_trace(state, flux, no_inflow);
    const BoundaryVector inflow = rule(n, t, outflow, flux);
    for (Index e = 0; e < edges; ++e) sol.density[static_cast<std::size_t>(e)].row(n) = state[static_cast<std::size_t>(e)].transpose();
    sol.trace.gamma.row(n) = discrete_trace(state, flux, inflow).transpose();
    sol.trace.flux.row(n) = flux.transpose();
    if (n < time.steps) state = step_upwind(scenario, sol.grid, state, n, inflow, options.edge_order);
  }
  for (double ts : scenario.snapshots) sol.snapshot_levels.push_back(time.nearest_level(ts));
  return sol;
}

SolutionField solve_coupled(const Scenario& scenario, const SolveOptions& options) {
  const CouplingOperator coupling = scenario.make_coupling();
  return solve_with_inflow(
      scenario,
      [&coupling](Index, double t, const BoundaryVector& outflow, const BoundaryVector& flux) {
        return coupling.apply(outflow, flux, t);
      },
      options);
}

PicardResult solve_picard(const Scenario& scenario, double tol, Index max_iter, bool keep_iterates,
                          const SolveOptions& options) {
  const Discretization grid = options.grid ? *options.grid : discretize(scenario);
  const SolveOptions opts = with_grid(options, grid);
  const TimeGrid& time = grid.time;
  const CouplingOperator coupling = scenario.make_coupling();

  // Positivity of the data is what makes the iterates monotone.
  for (const auto& s : initial_state(scenario, grid.space))
    if ((s.array() < 0.0).any()) throw std::invalid_argument("Picard iteration needs rho0 >= 0");
  for (Index n = 0; n < time.levels(); ++n) {
    const double t = time.time(n);
    if ((coupling.outer_values(t).array() < 0.0).any())
      throw std::invalid_argument("Picard iteration needs nonnegative outer data");
    for (Index e = 0; e < scenario.network->num_edges(); ++e) {
      const Eigen::VectorXd xc = grid.space.centers(e);
      for (Index i = 0; i < xc.size(); ++i)
        if (scenario.fields[static_cast<std::size_t>(e)].f(t, xc(i)) < 0.0)
          throw std::invalid_argument("Picard iteration needs f >= 0");
    }
  }

  const Eigen::MatrixXd fluxes = flux_series(scenario, time);
  auto inflow_table = [&](const Eigen::MatrixXd& gamma) {
    Eigen::MatrixXd table(time.levels(), fluxes.cols());
    for (Index n = 0; n < time.levels(); ++n)
      table.row(n) = coupling.apply(gamma.row(n).transpose(), fluxes.row(n).transpose(), time.time(n)).transpose();
    return table;
  };

  PicardResult result;
  Eigen::MatrixXd inflow = inflow_table(Eigen::MatrixXd::Zero(time.levels(), fluxes.cols()));
  result.inflow_history.push_back(inflow);
  for (Index k = 1; k <= max_iter; ++k) {
    SolutionField sol = solve_with_inflow(
        scenario,
        [&inflow](Index n, double, const BoundaryVector&, const BoundaryVector&) {
          return BoundaryVector(inflow.row(n).transpose());
        },
        opts);
    Eigen::MatrixXd next = inflow_table(sol.trace.gamma);
    if ((next.array() < inflow.array()).any())
      throw NonMonotoneIterate("inflow iterate " + std::to_string(k + 1) + " decreased somewhere");
    result.inflow_history.push_back(next);
    const double change = (next - inflow).cwiseAbs().maxCoeff();
    if (keep_iterates) result.iterates.push_back(sol);
    if (change <= tol) {
      result.solution = std::move(sol);
      result.iterations = k;
      return result;
    }
    inflow = std::move(next);
  }
  throw IterationLimitReached("Picard iteration did not reach tolerance within " + std::to_string(max_iter) +
                                  " iterations",
                              max_iter);
}

// ---- residuals ------------------------------------------------------------

namespace {

struct ResidualTerms {
  const Scenario& scenario;
  const SolutionField& solution;
  const std::vector<Expr>& phi;
};

template <typename Value, typename Slope>
double residual_sum(const ResidualTerms& in, double t0, double t1, Value beta, Slope slope, bool divergence_term) {
  const Scenario& sc = in.scenario;
  const SolutionField& sol = in.solution;
  const TimeGrid& time = sol.grid.time;
  if (in.phi.size() != sc.fields.size()) throw std::invalid_argument("one test function per edge required");
  const Index n0 = time.nearest_level(t0);
  const Index n1 = time.nearest_level(t1);
  double r = 0.0;
  for (Index e = 0; e < sc.network->num_edges(); ++e) {
    const auto ei = static_cast<std::size_t>(e);
    const EdgeFields& f = sc.fields[ei];
    const Expr& phi = in.phi[ei];
    const double dx = sol.grid.space.dx(e);
    const Eigen::VectorXd xc = sol.grid.space.centers(e);
    const Eigen::MatrixXd& rho = sol.density[ei];
    const Index cells = xc.size();
    for (Index n = n0; n < n1; ++n) {
      const double t = time.time(n);
      const double dt = time.dt();
      for (Index i = 0; i < cells; ++i) {
        const double x = xc(i);
        const double s = rho(n, i);
        const double b = beta(s);
        const double db = slope(s);
        const double phi_now = phi(t, x);
        const double dphi_t = phi(time.time(n + 1), x) - phi_now;
        const double dphi_x = phi(t, x + 0.5 * dx) - phi(t, x - 0.5 * dx);
        r += b * dphi_t * dx + dt * b * f.u(t, x) * dphi_x;
        r -= dt * dx * db * (s * f.c(t, x) - f.f(t, x)) * phi_now;
        if (divergence_term) r -= dt * dx * phi_now * f.u_x(t, x) * (db * s - b);
      }
      for (Endpoint w : {Endpoint::Start, Endpoint::End}) {
        const Index bp = Network::boundary_index(e, w);
        const double xw = w == Endpoint::Start ? 0.0 : 1.0;
        r -= dt * beta(sol.trace.gamma(n, bp)) * sol.trace.flux(n, bp) * phi(t, xw);
      }
    }
    for (Index i = 0; i < cells; ++i) {
      r += beta(rho(n0, i)) * phi(time.time(n0), xc(i)) * dx;
      r -= beta(rho(n1, i)) * phi(time.time(n1), xc(i)) * dx;
    }
  }
  return std::abs(r);
}

}  // namespace

double weak_residual(const Scenario& scenario, const SolutionField& solution, const std::vector<Expr>& phi, double t0,
                     double t1) {
  return residual_sum({scenario, solution, phi}, t0, t1, [](double s) { return s; }, [](double) { return 1.0; },
                      false);
}

Renormalization Renormalization::from_tag(std::string_view tag) {
  if (tag == "abs") return abs();
  if (tag == "square") return square();
  constexpr std::string_view prefix = "plus-shift";
  if (tag.substr(0, prefix.size()) == prefix && tag.size() > prefix.size() + 1) {
    std::string rest(tag.substr(prefix.size() + 1));
    if (tag[prefix.size()] == '(' && rest.back() == ')') rest.pop_back();
    else if (tag[prefix.size()] != ':') throw std::invalid_argument("unknown renormalization '" + std::string(tag) + "'");
    std::size_t used = 0;
    double s0 = 0.0;
    try {
      s0 = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != rest.size() || rest.empty())
      throw std::invalid_argument("bad plus-shift value in '" + std::string(tag) + "'");
    return plus_shift(s0);
  }
  throw std::invalid_argument("unknown renormalization '" + std::string(tag) + "'");
}

double Renormalization::value(double s) const {
  switch (kind_) {
    case Kind::Abs: return std::abs(s);
    case Kind::Square: return s * s;
    case Kind::PlusShift: return positive_part(s - shift_);
  }
  return 0.0;
}

double Renormalization::slope(double s) const {
  switch (kind_) {
    case Kind::Abs: return s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
    case Kind::Square: return 2.0 * s;
    case Kind::PlusShift: return s > shift_ ? 1.0 : 0.0;
  }
  return 0.0;
}

double renormalization_residual(const Scenario& scenario, const SolutionField& solution, const Renormalization& beta,
                                const std::vector<Expr>& phi, double t0, double t1) {
  return residual_sum({scenario, solution, phi}, t0, t1, [&](double s) { return beta.value(s); },
                      [&](double s) { return beta.slope(s); }, true);
}

std::vector<Expr> default_test_functions(const Scenario& scenario) {
  const Expr x = Expr::position();
  const Expr phi = x * (Expr::constant(1.0) - x) * Expr::time();
  return std::vector<Expr>(scenario.fields.size(), phi);
}

// ---- studies ----------------------------------------------------------------

double lp_distance(const SolutionField& a, const SolutionField& b, Index level, double p) {
  double acc = 0.0;
  for (std::size_t e = 0; e < a.density.size(); ++e) {
    const Eigen::ArrayXd diff = (a.density[e].row(level) - b.density[e].row(level)).array().abs();
    if (std::isinf(p)) acc = std::max(acc, diff.size() ? diff.maxCoeff() : 0.0);
    else acc += diff.pow(p).sum() * a.grid.space.dx(static_cast<Index>(e));
  }
  return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
}

std::vector<StabilityRow> stability_study(const Scenario& base, const Expr& g, const Expr& g_x,
                                          const std::vector<double>& deltas, double p) {
  std::vector<Scenario> family;
  for (double delta : deltas) {
    Scenario s = base;
    for (auto& f : s.fields) {
      f.u = f.u + delta * g;
      f.u_x = f.u_x + delta * g_x;
    }
    family.push_back(std::move(s));
  }

  EdgeGrid space{base.cells};
  double speed = probe_max_speed(base, space);
  for (const auto& s : family) speed = std::max(speed, probe_max_speed(s, space));
  const Discretization grid = discretize(base, speed);

  for (std::size_t k = 0; k < family.size(); ++k) {
    const Eigen::MatrixXd fluxes = flux_series(family[k], grid.time);
    const Eigen::VectorXd residual = check_energy_condition(*base.network, fluxes);
    const double scale = std::max(1.0, fluxes.size() ? fluxes.cwiseAbs().maxCoeff() : 0.0);
    if (residual.size() && residual.maxCoeff() > 1e-12 * scale)
      throw EnergyConditionViolation("perturbation delta = " + std::to_string(deltas[k]) +
                                     " breaks flux balance at an inner node");
  }

  SolveOptions opts;
  opts.grid = grid;
  const SolutionField reference = solve_coupled(base, opts);
  std::vector<Index> levels = reference.snapshot_levels;
  if (levels.empty()) {
    levels.resize(static_cast<std::size_t>(reference.levels()));
    std::iota(levels.begin(), levels.end(), Index{0});
  }

  std::vector<StabilityRow> rows;
  for (std::size_t k = 0; k < family.size(); ++k) {
    const SolutionField perturbed = solve_coupled(family[k], opts);
    double worst = 0.0;
    for (Index n : levels) worst = std::max(worst, lp_distance(perturbed, reference, n, p));
    rows.push_back({deltas[k], worst});
  }
  return rows;
}

double uniqueness_probe(const Scenario& scenario) {
  SolveOptions forward;
  forward.grid = discretize(scenario);
  SolveOptions backward = forward;
  backward.edge_order.resize(static_cast<std::size_t>(scenario.network->num_edges()));
  std::iota(backward.edge_order.rbegin(), backward.edge_order.rend(), Index{0});
  const SolutionField a = solve_coupled(scenario, forward);
  const SolutionField b = solve_coupled(scenario, backward);
  double distance = 0.0;
  for (Index n = 0; n < a.levels(); ++n) distance += lp_distance(a, b, n, 1.0);
  distance += (a.trace.gamma - b.trace.gamma).cwiseAbs().sum();
  return distance;
}

SplitResult split_signed_source(const Scenario& scenario) {
  const Discretization grid = discretize(scenario);
  const Network& net = *scenario.network;

  // Remark condition: some constant vector hat_rho >= 0 with
  // G(F_- + hat_rho) <= F_- + hat_rho at every inflow sample.
  const BoundEnvelope envelope = build_envelope(scenario, scenario.cells, grid.time);
  const CouplingOperator coupling = scenario.make_coupling();
  const Eigen::MatrixXd fluxes = flux_series(scenario, grid.time);
  auto admissible = [&](const Eigen::VectorXd& hat) {
    for (Index n = 0; n < grid.time.levels(); ++n) {
      BoundaryVector level(net.num_boundary_points());
      for (Index e = 0; e < net.num_edges(); ++e) level.segment(2 * e, 2).setConstant(envelope.f_minus(n, e) + hat(e));
      const BoundaryVector flux = fluxes.row(n).transpose();
      const BoundaryVector mixed = coupling.apply_g(level, flux);
      const double scale = std::max(1.0, level.cwiseAbs().maxCoeff());
      for (Index bp = 0; bp < level.size(); ++bp)
        if (flux(bp) < 0.0 && mixed(bp) > level(bp) + 1e-12 * scale) return false;
    }
    return true;
  };
  const double top = envelope.f_minus.size() ? envelope.f_minus.maxCoeff() : 0.0;
  const Eigen::VectorXd final_f = envelope.f_minus.row(grid.time.steps).transpose();
  const std::vector<Eigen::VectorXd> candidates = {
      Eigen::VectorXd::Zero(net.num_edges()),
      Eigen::VectorXd::Constant(net.num_edges(), top),
      (Eigen::VectorXd::Constant(net.num_edges(), top) - final_f).eval(),
  };
  const Eigen::VectorXd* chosen = nullptr;
  for (const auto& c : candidates)
    if (admissible(c)) {
      chosen = &c;
      break;
    }
  if (!chosen) throw std::invalid_argument("no hat_rho_min candidate satisfies the splitting condition");

  Scenario positive = scenario;
  Scenario negative = scenario;
  for (std::size_t e = 0; e < scenario.fields.size(); ++e) {
    positive.fields[e].f = positive_part(scenario.fields[e].f);
    negative.fields[e].f = negative_part(scenario.fields[e].f);
    negative.fields[e].rho0 = Expr::constant(0.0);
  }
  std::fill(negative.outer_data.begin(), negative.outer_data.end(), Expr::constant(0.0));

  SolveOptions opts;
  opts.grid = grid;
  SplitResult result{solve_coupled(positive, opts), solve_coupled(positive, opts), solve_coupled(negative, opts),
                     chosen->size() ? chosen->maxCoeff() : 0.0};
  for (std::size_t e = 0; e < result.combined.density.size(); ++e)
    result.combined.density[e] = result.positive.density[e] - result.negative.density[e];
  result.combined.trace.gamma = result.positive.trace.gamma - result.negative.trace.gamma;
  return result;
}

}  // namespace nettransport
