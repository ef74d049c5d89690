#include "selfdual/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <tuple>

#include "selfdual/errors.hpp"

namespace selfdual {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SpMat identity(int n) {
  SpMat I(n, n);
  I.setIdentity();
  return I;
}

SpMat kron(const SpMat& A, const SpMat& B) {
  Triplets t;
  t.reserve(A.nonZeros() * B.nonZeros());
  for (int ka = 0; ka < A.outerSize(); ++ka)
    for (SpMat::InnerIterator ia(A, ka); ia; ++ia)
      for (int kb = 0; kb < B.outerSize(); ++kb)
        for (SpMat::InnerIterator ib(B, kb); ib; ++ib)
          t.emplace_back(ia.row() * B.rows() + ib.row(), ia.col() * B.cols() + ib.col(), ia.value() * ib.value());
  SpMat K(A.rows() * B.rows(), A.cols() * B.cols());
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

SpMat forward_difference_1d(int n, double h) {
  Triplets t;
  for (int i = 0; i + 1 < n; ++i) {
    t.emplace_back(i, i, -1.0 / h);
    t.emplace_back(i, i + 1, 1.0 / h);
  }
  t.emplace_back(n - 1, n - 2, -1.0 / h);
  t.emplace_back(n - 1, n - 1, 1.0 / h);
  SpMat D(n, n);
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

std::vector<SpMat> lift(const Grid& grid, SpMat (*make)(int, double)) {
  const int nx = grid.count(0);
  if (grid.dim() == 1) return {make(nx, grid.spacing(0))};
  const int ny = grid.count(1);
  return {kron(identity(ny), make(nx, grid.spacing(0))), kron(make(ny, grid.spacing(1)), identity(nx))};
}

SpMat diag(const Vec& d) {
  SpMat M(d.size(), d.size());
  Triplets t;
  for (Eigen::Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
  M.setFromTriplets(t.begin(), t.end());
  return M;
}

}  // namespace

SpMat sbp_derivative_1d(int n, double h) {
  if (n < 2) throw ConfigError("derivative needs at least 2 nodes");
  Triplets t;
  t.emplace_back(0, 0, -1.0 / h);
  t.emplace_back(0, 1, 1.0 / h);
  for (int i = 1; i + 1 < n; ++i) {
    t.emplace_back(i, i - 1, -0.5 / h);
    t.emplace_back(i, i + 1, 0.5 / h);
  }
  t.emplace_back(n - 1, n - 2, -1.0 / h);
  t.emplace_back(n - 1, n - 1, 1.0 / h);
  SpMat D(n, n);
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

std::vector<SpMat> sbp_derivatives(const Grid& grid) { return lift(grid, sbp_derivative_1d); }

Vec SkewOperator::adjoint_w(const Vec& v) const {
  return (A.transpose() * w.cwiseProduct(v)).cwiseQuotient(w);
}

double SkewOperator::trace_plus(const Vec& u, const Vec& v) const { return weighted_dot(plus, u, v); }
double SkewOperator::trace_minus(const Vec& u, const Vec& v) const { return weighted_dot(minus, u, v); }

SkewOperator build_transport(const Grid& grid, const Eigen::MatrixXd& a, bool inconsistent_divergence) {
  if (a.rows() != grid.dim() || a.cols() != grid.size())
    throw ConfigError("vector field dimension does not match the grid");
  SkewOperator op;
  op.w = grid.weights();
  op.a = a;
  const std::vector<SpMat> D = sbp_derivatives(grid);
  const int n = grid.size();
  op.A.resize(n, n);
  op.divergence = Vec::Zero(n);
  for (int k = 0; k < grid.dim(); ++k) {
    const Vec ak = a.row(k).transpose();
    const SpMat Dk = D[k];
    op.divergence += Dk * ak;
    if (inconsistent_divergence)
      op.A += diag(ak) * Dk;
    else
      op.A += 0.5 * (diag(ak) * Dk + Dk * diag(ak));
  }
  if (inconsistent_divergence) {
    const std::vector<SpMat> F = lift(grid, forward_difference_1d);
    Vec div = Vec::Zero(n);
    for (int k = 0; k < grid.dim(); ++k) div += F[k] * Vec(a.row(k).transpose());
    op.A += 0.5 * diag(div);
  }
  op.A.prune(0.0);
  op.A.makeCompressed();
  op.sigma = sigma_decompose(grid, a);
  op.plus = op.sigma.plus_weights(n);
  op.minus = op.sigma.minus_weights(n);
  return op;
}

SkewOperator build_transport(const Grid& grid, const VectorFieldSpec& a, bool inconsistent_divergence) {
  return build_transport(grid, a.evaluate(grid), inconsistent_divergence);
}

double green_residual(const SkewOperator& op, const Vec& u, const Vec& v) {
  const double lhs = weighted_dot(op.w, v, op.apply(u)) + weighted_dot(op.w, u, op.apply(v));
  return std::abs(lhs - op.trace_plus(u, v) + op.trace_minus(u, v));
}

GradientEnergy grid_gradient_energy(const Grid& grid, double p) {
  GradientEnergy e;
  e.p = p;
  Triplets t;
  const int nx = grid.count(0);
  const double hx = grid.spacing(0);
  if (grid.dim() == 1) {
    e.block = 1;
    for (int c = 0; c + 1 < nx; ++c) {
      t.emplace_back(c, c, -1.0 / hx);
      t.emplace_back(c, c + 1, 1.0 / hx);
    }
    e.G.resize(nx - 1, nx);
    e.cell_weights = Vec::Constant(nx - 1, hx);
  } else {
    e.block = 2;
    const int ny = grid.count(1);
    const double hy = grid.spacing(1);
    int row = 0;
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i + 1 < nx; ++i) {
        const int n00 = grid.index(i, j), n10 = grid.index(i + 1, j);
        const int n01 = grid.index(i, j + 1), n11 = grid.index(i + 1, j + 1);
        // Lower-left triangle (n00, n10, n01).
        t.emplace_back(row, n00, -1.0 / hx);
        t.emplace_back(row, n10, 1.0 / hx);
        t.emplace_back(row + 1, n00, -1.0 / hy);
        t.emplace_back(row + 1, n01, 1.0 / hy);
        // Upper-right triangle (n11, n01, n10).
        t.emplace_back(row + 2, n01, -1.0 / hx);
        t.emplace_back(row + 2, n11, 1.0 / hx);
        t.emplace_back(row + 3, n10, -1.0 / hy);
        t.emplace_back(row + 3, n11, 1.0 / hy);
        row += 4;
      }
    e.G.resize(row, grid.size());
    e.cell_weights = Vec::Constant(row / 2, 0.5 * hx * hy);
  }
  e.G.setFromTriplets(t.begin(), t.end());
  return e;
}

DirichletPLaplacian build_plaplacian(const Grid& grid, double p) {
  if (p < 2.0) throw ConfigError("p-Laplacian exponent must be at least 2");
  return {grid.weights(), grid_gradient_energy(grid, p), grid.boundary_nodes()};
}

Vec plap_subgrad(const DirichletPLaplacian& op, const Vec& u) {
  Vec g = op.energy.euclid_grad(u).cwiseQuotient(op.w);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (op.fixed[i]) g[i] = 0.0;
  return g;
}

void write_coo(std::ostream& os, const SpMat& M) {
  std::vector<std::tuple<int, int, double>> entries;
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it) entries.emplace_back(it.row(), it.col(), it.value());
  std::sort(entries.begin(), entries.end());
  char buf[64];
  for (const auto& [r, c, v] : entries) {
    std::snprintf(buf, sizeof buf, "%d %d %.17g\n", r, c, v);
    os << buf;
  }
}

}  // namespace selfdual
