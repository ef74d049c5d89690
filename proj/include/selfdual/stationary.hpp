#pragma once

#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "selfdual/asd.hpp"
#include "selfdual/convex.hpp"
#include "selfdual/expression.hpp"
#include "selfdual/mesh.hpp"
#include "selfdual/operators.hpp"
#include "selfdual/optimize.hpp"

namespace selfdual {

enum class Variant { PureTransport, ViscousTransport };

const char* variant_name(Variant v);

/// Data of a transport problem on a grid.
///
/// PureTransport: phi(u) = sum w [ (alpha/p) e^{(2-p)tau}|u|^p + (beta/2) u^2 + f u ]
///   with beta = a.grad tau + (div a + a0)/2; I = phi + phi*(Au) + |b1 u|^2/2 + |b2 u|^2/2.
/// ViscousTransport: phi(u) = (1/p) sum_c w_c |grad u|^p
///   + sum w [ (alpha/m)|u|^m + (div a + a0)/4 u^2 + f u ] on u = 0 at the boundary;
///   I = phi + phi*(Au).
struct StationaryProblem {
  Grid grid;
  VectorFieldSpec a;
  Expression a0 = Expression::constant(0.0);
  Expression f = Expression::constant(0.0);
  Expression tau = Expression::constant(0.0);
  double p = 2.0;
  double m = 2.0;
  double alpha = 1.0;
  Variant variant = Variant::PureTransport;
};

struct Certificate {
  double I_total = 0.0;
  double fenchel_gap = 0.0;
  double inflow_trace_sq = 0.0;  // |b1 u|^2; zero for the viscous variant
  double pde_residual_linf = 0.0;
  double trace_condition_linf = 0.0;  // max |v| on Sigma+ (or the Dirichlet boundary)
  int iterations = 0;
  bool converged = false;
};

/// The assembled functional I with its w-gradient.
class StationaryFunctional {
 public:
  StationaryFunctional(const StationaryProblem& problem);
  /// I built directly from an operator and a potential, with tau = 0. The
  /// boundary terms are included for PureTransport only.
  StationaryFunctional(Grid grid, SkewOperator op, FieldFunctional phi, Variant variant);

  Variant variant() const { return variant_; }
  const Grid& grid() const { return grid_; }
  const SkewOperator& op() const { return op_; }
  const FieldFunctional& phi() const { return phi_; }
  const Vec& tau() const { return tau_; }
  /// Coefficient of u^2/2 in phi at each node.
  const Vec& beta() const { return beta_; }
  int size() const { return grid_.size(); }

  double value(const Vec& u) const;
  Vec grad(const Vec& u) const;
  /// Euclidean form for the optimizer. The Hessian is sparse for pointwise
  /// potentials and carries dense conjugate blocks otherwise (up to 600 nodes).
  Objective objective() const;

  Certificate certify(const Vec& u) const;
  /// e^{-tau}(A u - grad phi(u)) at free nodes.
  Vec pde_residual(const Vec& u) const;

 private:
  Variant variant_;
  Grid grid_;
  SkewOperator op_;
  FieldFunctional phi_;
  Vec tau_;
  Vec beta_;
  Vec trace_;  // plus + minus weights
};

/// Builds I after checking a.grad tau + (div a + a0)/2 >= 0 at every node
/// (strictly > 0 when p < 2); the viscous variant checks (div a + a0)/2 >= 0.
/// Throws PreconditionError naming the worst node.
StationaryFunctional assemble_I(const StationaryProblem& problem);

struct StationaryResult {
  Vec u;  // minimizer in the u variable
  Vec v;  // e^{-tau} u
  Certificate certificate;
  std::vector<double> history;
  double grad_norm = 0.0;
  std::string stop_reason;
};

struct StationaryOptions {
  double tol = 1e-10;
  int max_iter = 500;
  double grad_tol = 0.0;
  Vec initial;  // starting iterate; empty means u = 0
};

/// Minimizes I from opts.initial (default u = 0). Throws SolveError carrying the best I and gradient
/// norm when the budget runs out or the line search fails above tol.
StationaryResult solve_stationary(const StationaryFunctional& I, const StationaryOptions& opts);
StationaryResult solve_stationary(const StationaryProblem& problem, const StationaryOptions& opts);

struct ResolventPoint {
  Vec x;
  double minimum = 0.0;  // L(X(p), p) + <X(p), p>_w
};

/// X(p) = argmin_x L(x, p) + <x, p>_w.
ResolventPoint resolvent_map_X(const Lagrangian& L, const Vec& p, double tol = 1e-10);

}  // namespace selfdual
