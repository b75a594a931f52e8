#pragma once

#include <stdexcept>
#include <vector>

#include "nettransport/expr.hpp"

namespace nettransport {

struct SolutionField;

/// Thrown when a backward characteristic reaches the boundary tangentially
/// (u = 0 there), so neither the initial nor the inflow datum applies.
struct IndeterminateFoot : std::domain_error {
  using std::domain_error::domain_error;
};

/// Exact solution of rho_t + (u(t) rho)_x = 0 on (0, 1) with inflow data at
/// both ends. The velocity must not depend on x.
struct CharacteristicSolution {
  Expr velocity;
  Expr rho0;
  Expr inflow_start;
  Expr inflow_end;
  double horizon = 1.0;

  /// X(t) = int_0^t u, adaptive Gauss-Kronrod to 1e-12.
  double displacement(double t) const;
};

/// Value at (t, x) by backward tracing of the characteristic through x.
/// Throws std::invalid_argument when the velocity depends on x and
/// IndeterminateFoot on a tangential exit.
double eval_characteristics(const CharacteristicSolution& sol, double t, double x);

/// Same as eval_characteristics for many x at one t, sharing the work.
std::vector<double> eval_characteristics(const CharacteristicSolution& sol, double t, const std::vector<double>& xs);

/// The closed form of rho_t + ((2t - 1) rho)_x = 0 on the half line x > 0:
/// rho0(x - t(t - 1)) if t < 1/2 or x >= (t - 1/2)^2, otherwise
/// rho_in(1/2 + sqrt((t - 1/2)^2 - x)).
double intro_closed_form(double t, double x, const Expr& rho0, const Expr& rho_in);

struct FormulaComparison {
  double tracer = 0.0;
  double closed_form = 0.0;
  bool skipped = false;
  const char* reason = "";
};

/// Evaluates the general tracer (u = 2t - 1, inflow rho_in at both ends) and
/// the closed form at one point. Points within 1e-8 of the discontinuity
/// curve x = (t - 1/2)^2, and points whose characteristic leaves through
/// x = 1 (the closed form knows only the half line), are skipped.
FormulaComparison verify_intro_formula(double t, double x, const Expr& rho0, const Expr& rho_in);

/// sum over cells of |rho_cell - Gauss cell average of the oracle| dx on the
/// first edge, at the grid level nearest to t.
double l1_error(const SolutionField& solution, const CharacteristicSolution& oracle, double t);

}  // namespace nettransport
