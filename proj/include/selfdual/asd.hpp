#pragma once

#include <memory>
#include <optional>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "selfdual/convex.hpp"
#include "selfdual/operators.hpp"

namespace selfdual {

/// Convex L(x, p) on X x X with X = R^n under <.,.>_w.
///
///   Basic            phi(x) + phi*(-p)
///   BrokenSign       phi(x) + phi*(p)          (not ASD unless phi is even)
///   ComposedBoundary phi(x) + phi*(-(Ax + p)) + |b1 x|^2/2 + |b2 x|^2/2
///   ComposedAntisym  phi(x) + phi*(Ax - p)
///   Regularized      Moreau_lambda(phi)(x) + phi*(-p) + (lambda/2)|p|_w^2
class Lagrangian {
 public:
  enum class Kind { Basic, BrokenSign, ComposedBoundary, ComposedAntisym, Regularized };

  Kind kind() const { return kind_; }
  int size() const { return phi_->size(); }
  const Vec& weights() const { return phi_->weights(); }
  const FieldFunctional& phi() const { return *phi_; }
  double lambda() const { return lambda_; }

  double operator()(const Vec& x, const Vec& p) const;
  /// Partial w-gradients; need phi* differentiable at the relevant point.
  Vec grad_x(const Vec& x, const Vec& p) const;
  Vec grad_p(const Vec& x, const Vec& p) const;

 private:
  friend Lagrangian make_basic(FieldFunctional phi);
  friend Lagrangian make_broken_sign(FieldFunctional phi);
  friend Lagrangian compose_skew_boundary(const Lagrangian& L0, const SkewOperator& op);
  friend Lagrangian compose_antisym(FieldFunctional phi, SpMat A);
  friend Lagrangian regularize(const Lagrangian& L0, double lambda);

  Vec inner_argument(const Vec& x, const Vec& p) const;

  Kind kind_ = Kind::Basic;
  std::shared_ptr<const FieldFunctional> phi_;
  SpMat A_;                 // composed kinds
  Vec plus_, minus_;        // boundary trace weights
  double lambda_ = 0.0;     // Regularized
};

Lagrangian make_basic(FieldFunctional phi);
/// Negative control with the sign of p flipped.
Lagrangian make_broken_sign(FieldFunctional phi);
/// L0 must be Basic.
Lagrangian compose_skew_boundary(const Lagrangian& L0, const SkewOperator& op);
/// A should satisfy W A + A^T W = 0.
Lagrangian compose_antisym(FieldFunctional phi, SpMat A);
/// L0 must be Basic, or ComposedAntisym with A = 0.
Lagrangian regularize(const Lagrangian& L0, double lambda);

/// argmin_z L0(z, p) + |x - z|_w^2 / (2 lambda) = prox_{lambda phi}(x).
Vec resolvent_J(const Lagrangian& L0, double lambda, const Vec& x, const Vec& p);

struct AsdVerifyOptions {
  double radius = 4.0;        // sampling box [-radius, radius]^(2n)
  int samples = 101;          // per axis
  double probe_radius = 1.0;  // probes (p, x) in [-probe_radius, probe_radius]^(2n)
  int probe_samples = 3;      // per axis
};

struct AsdVerifyResult {
  double max_residual = 0.0;
  long long evaluations = 0;
};

/// Brute-force conjugate on the sampled box and max over probes of
/// |L*(p, x) - L(-x, -p)|. Throws ConfigError unless n_dofs == L.size() <= 3.
AsdVerifyResult asd_verify(const Lagrangian& L, int n_dofs, const AsdVerifyOptions& opts);

}  // namespace selfdual
