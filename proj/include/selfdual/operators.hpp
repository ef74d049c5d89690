#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "selfdual/convex.hpp"
#include "selfdual/mesh.hpp"

namespace selfdual {

/// SBP first derivative: central interior, one-sided closures. With the
/// trapezoid mass W, W D + D^T W = diag(-1, 0, ..., 0, 1).
SpMat sbp_derivative_1d(int n, double h);

/// One SBP derivative per axis, acting on grid node vectors.
std::vector<SpMat> sbp_derivatives(const Grid& grid);

/// Transport operator with its trace pair. For the split form assembled by
/// build_transport, W A + A^T W = B+ - B- holds to roundoff.
struct SkewOperator {
  Vec w;
  SpMat A;
  Eigen::MatrixXd a;  // vector field, one row per axis
  Vec divergence;     // discrete div a from the same stencils as A
  SigmaDecomposition sigma;
  Vec plus;   // per-node weights on Sigma+
  Vec minus;  // per-node weights on Sigma-

  int size() const { return static_cast<int>(w.size()); }
  Vec apply(const Vec& u) const { return A * u; }
  /// W^-1 A^T W v.
  Vec adjoint_w(const Vec& v) const;
  /// <b1 u, b1 v> and <b2 u, b2 v>.
  double trace_plus(const Vec& u, const Vec& v) const;
  double trace_minus(const Vec& u, const Vec& v) const;
};

/// A = (1/2) sum_k (diag(a_k) D_k + D_k diag(a_k)), which acts as
/// a.grad u + (1/2)(div a) u. With inconsistent_divergence the non-split form
/// diag(a_k) D_k + (1/2) diag(div a) is used instead, div a taken with forward
/// differences; this breaks the exact identity and exists as a negative control.
SkewOperator build_transport(const Grid& grid, const Eigen::MatrixXd& a, bool inconsistent_divergence = false);
SkewOperator build_transport(const Grid& grid, const VectorFieldSpec& a, bool inconsistent_divergence = false);

/// |<v,Au>_w + <u,Av>_w - <b1u,b1v> + <b2u,b2v>|.
double green_residual(const SkewOperator& op, const Vec& u, const Vec& v);

/// Cellwise gradient: forward differences per 1-D cell (one component), or
/// P1 gradients on the two triangles of each 2-D rectangle (two components).
GradientEnergy grid_gradient_energy(const Grid& grid, double p);

struct DirichletPLaplacian {
  Vec w;
  GradientEnergy energy;
  std::vector<char> fixed;  // boundary nodes
};

DirichletPLaplacian build_plaplacian(const Grid& grid, double p);

/// W^-1 times the Euclidean gradient of the energy, zero on fixed nodes.
Vec plap_subgrad(const DirichletPLaplacian& op, const Vec& u);

/// One "row col value" triple per line, zero-based, full precision.
void write_coo(std::ostream& os, const SpMat& M);

}  // namespace selfdual
