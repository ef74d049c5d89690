#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "selfdual/convex.hpp"
#include "selfdual/expression.hpp"
#include "selfdual/mesh.hpp"
#include "selfdual/operators.hpp"
#include "selfdual/optimize.hpp"

namespace selfdual {

enum class EvolutionVariant { Diffusive, PureTransport };
enum class Scheme { Spacetime, Prox };

const char* variant_name(EvolutionVariant v);
const char* scheme_name(Scheme s);

/// -u_t + a.grad u = -Delta_p u + (a0/2) u + omega u,  u = 0 on the boundary   (Diffusive)
/// -u_t + a.grad u = (a0/2) u + alpha u|u|^{p-2} + omega u,  u = u0 on Sigma+   (PureTransport)
/// with u(0) = u0.
struct EvolutionProblem {
  Grid grid;
  VectorFieldSpec a;
  Expression a0 = Expression::constant(0.0);
  Expression initial = Expression::constant(0.0);
  double p = 2.0;
  double alpha = 1.0;
  double omega = 0.0;
  double T = 1.0;
  int steps = 1;
  EvolutionVariant variant = EvolutionVariant::Diffusive;
};

/// Spatial part in the form -u' + A u in d phi(u) + omega_lin u, after the
/// K-shift: phi gains (div a + a0 + K) u^2 / 4 with K chosen so that
/// div a + a0 + K >= 1 at every node, and omega_lin = omega - K/2.
class EvolutionModel {
 public:
  explicit EvolutionModel(const EvolutionProblem& problem);

  EvolutionVariant variant() const { return variant_; }
  const Grid& grid() const { return grid_; }
  const SkewOperator& op() const { return op_; }
  const FieldFunctional& phi() const { return phi_; }
  double K() const { return K_; }
  double omega() const { return omega_; }          // as configured
  double omega_linear() const { return omega_ - 0.5 * K_; }
  /// Smallest quadratic coefficient of phi after the K-shift, >= 1/2.
  double modulus() const { return modulus_; }
  int size() const { return grid_.size(); }
  bool boundary_terms() const { return variant_ == EvolutionVariant::PureTransport; }

  /// Throws PreconditionError for non-finite data or, in the Diffusive
  /// variant, a nonzero value on the Dirichlet boundary.
  void check_initial(const Vec& u0) const;

 private:
  EvolutionVariant variant_;
  Grid grid_;
  SkewOperator op_;
  FieldFunctional phi_;
  double K_ = 0.0;
  double omega_ = 0.0;
  double modulus_ = 0.0;
};

/// psi(x) = phi(x + x0) + |x|_w^2/2 - <x, A x0>_w + omega <x, x0>_w, so that
/// d psi(x) = d phi(x + x0) + x - A x0 + omega x0.
FieldFunctional shift_potential(const FieldFunctional& phi, const Vec& x0, const SpMat& A, double omega);

struct Trajectory {
  std::vector<Vec> u;  // u[k] at t = k dt; u[0] is the initial field
  double dt = 0.0;
  double omega = 0.0;
  Scheme scheme = Scheme::Prox;
  int steps() const { return static_cast<int>(u.size()) - 1; }
};

struct EvolutionOptions {
  double tol = 1e-10;  // spacetime: target value; prox: split as tol/N per step
  int max_iter = 200;
};

struct SpacetimeResult {
  Trajectory trajectory;
  double I_total = 0.0;
  double fenchel_part = 0.0;    // sum of weighted Fenchel gaps, >= 0
  double trace_part = 0.0;      // sum dt |b1 x_k|^2
  double initial_part = 0.0;    // |x_0|^2 of the free initial slice
  double x0_norm = 0.0;         // |x_0|_w
  int iterations = 0;
  bool converged = false;
};

/// The discrete spacetime functional over X = (x_0, ..., x_N), stacked slice
/// by slice. Holds a reference to the model.
class SpacetimeFunctional {
 public:
  SpacetimeFunctional(const EvolutionModel& model, const Vec& u0, double T, int N);

  int steps() const { return N_; }
  double dt() const { return dt_; }
  Eigen::Index unknowns() const { return static_cast<Eigen::Index>(N_ + 1) * n_; }
  const FieldFunctional& psi() const { return psi_; }

  /// Value and Euclidean gradient (fixed nodes masked).
  double value(const Vec& X, Vec* grad = nullptr) const;
  /// Block-tridiagonal Hessian; empty when a conjugate Hessian is singular
  /// or the slices are too large for dense conjugate blocks.
  SpMat hessian(const Vec& X) const;
  Objective objective() const;

  /// Fills the value parts of r and its trajectory from a minimizer X.
  void finish(const Vec& X, SpacetimeResult& r) const;

 private:
  Eigen::VectorBlock<const Vec> slice(const Vec& X, int k) const {
    return X.segment(static_cast<Eigen::Index>(k) * n_, n_);
  }
  Vec y_of(const Vec& X, int k) const;
  Vec conjugate_point(const Vec& X, int k, double* value) const;

  const EvolutionModel& model_;
  Vec u0_;
  int N_, n_;
  double dt_;
  FieldFunctional psi_;
  Vec trace_;
  std::vector<double> s_, c_;
  mutable std::vector<Vec> warm_;  // inner conjugate maximizers, one per slice
};

/// Joint minimization over x_0..x_N of
///   sum_k dt e^{2w t_k} [psi(e^{-w t_k} x_k) + psi*(e^{-w t_k}(A x_k - (x_k - x_{k-1})/dt))]
///   + sum_k |x_k - x_{k-1}|_w^2/2 + (transport) sum_k dt (|b1 x_k|^2 + |b2 x_k|^2)/2
///   + |x_0|_w^2/2 + |x_N|_w^2/2,
/// where w = omega_lin - 1 and psi is the potential shifted by u0. Its value is
/// fenchel_part + initial_part + trace_part, so the minimum is 0 exactly when
/// the backward-Euler relation holds on every slice.
SpacetimeResult solve_spacetime(const EvolutionModel& model, const Vec& u0, double T, int N,
                                const EvolutionOptions& opts);

struct ProxResult {
  Trajectory trajectory;
  std::vector<double> step_certificates;  // I of each stationary step solve
  double max_step_certificate = 0.0;
};

/// N stationary solves of Av in d phi~(v) with
/// phi~(v) = psi(v) + (1/(2dt) + w/2)|v|_w^2 - <v_k/dt, v>_w. Throws
/// SolveError naming the step on failure.
ProxResult solve_prox_stepping(const EvolutionModel& model, const Vec& u0, double T, int N,
                               const EvolutionOptions& opts);

Trajectory solve_evolution(const EvolutionModel& model, const Vec& u0, double T, int N, Scheme scheme,
                           const EvolutionOptions& opts);

struct SemigroupReport {
  std::vector<double> ratios;      // |d_{k+1}|_w / |d_k|_w for d = u(x0) - u(x1)
  double ratio_bound = 0.0;        // e^{-omega dt/2}
  double max_ratio = 0.0;
  double splitting_defect = 0.0;   // |T_{T} x0 - T_{T/2} T_{T/2} x0|_w
  double local_error = 0.0;        // |one step of dt - two steps of dt/2|_w from x0
  double lipschitz_constant = 0.0; // max_k |u_{k+1} - u_k| / |u_1 - u_0|
};

/// Needs N even for the splitting run.
SemigroupReport semigroup_report(const EvolutionModel& model, const Vec& x0, const Vec& x1, double T, int N,
                                 Scheme scheme, const EvolutionOptions& opts);

/// max_k |(u_{k+1} - u_k)/dt|_w / |(u_1 - u_0)/dt|_w.
double lipschitz_in_time(const Trajectory& traj, const Vec& w);

}  // namespace selfdual
