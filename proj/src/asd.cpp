#include "selfdual/asd.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "selfdual/errors.hpp"

namespace selfdual {

namespace {

Vec adjoint_w(const SpMat& A, const Vec& w, const Vec& v) { return (A.transpose() * w.cwiseProduct(v)).cwiseQuotient(w); }

}  // namespace

Vec Lagrangian::inner_argument(const Vec& x, const Vec& p) const {
  switch (kind_) {
    case Kind::Basic:
    case Kind::Regularized: return -p;
    case Kind::BrokenSign: return p;
    case Kind::ComposedBoundary: return -(A_ * x + p);
    case Kind::ComposedAntisym: return A_ * x - p;
  }
  return p;
}

double Lagrangian::operator()(const Vec& x, const Vec& p) const {
  if (x.size() != size() || p.size() != size()) throw ConfigError("Lagrangian argument size mismatch");
  const Vec y = inner_argument(x, p);
  double v = phi_->conjugate(y);
  if (kind_ == Kind::Regularized) {
    v += moreau_envelope(*phi_, lambda_, x).value + 0.5 * lambda_ * weighted_dot(weights(), p, p);
  } else {
    v += phi_->value(x);
  }
  if (kind_ == Kind::ComposedBoundary) v += 0.5 * (weighted_dot(plus_, x, x) + weighted_dot(minus_, x, x));
  return v;
}

Vec Lagrangian::grad_x(const Vec& x, const Vec& p) const {
  const Vec& w = weights();
  switch (kind_) {
    case Kind::Basic:
    case Kind::BrokenSign: return phi_->grad(x);
    case Kind::Regularized: return (x - resolvent_J(*this, lambda_, x, p)) / lambda_;
    case Kind::ComposedBoundary: {
      const Vec z = phi_->conjugate_grad(inner_argument(x, p));
      return phi_->grad(x) - adjoint_w(A_, w, z) + (plus_ + minus_).cwiseProduct(x).cwiseQuotient(w);
    }
    case Kind::ComposedAntisym: return phi_->grad(x) + adjoint_w(A_, w, phi_->conjugate_grad(inner_argument(x, p)));
  }
  return {};
}

Vec Lagrangian::grad_p(const Vec& x, const Vec& p) const {
  const Vec z = phi_->conjugate_grad(inner_argument(x, p));
  switch (kind_) {
    case Kind::BrokenSign: return z;
    case Kind::Regularized: return -z + lambda_ * p;
    default: return -z;
  }
}

Lagrangian make_basic(FieldFunctional phi) {
  Lagrangian L;
  L.kind_ = Lagrangian::Kind::Basic;
  L.phi_ = std::make_shared<const FieldFunctional>(std::move(phi));
  return L;
}

Lagrangian make_broken_sign(FieldFunctional phi) {
  Lagrangian L = make_basic(std::move(phi));
  L.kind_ = Lagrangian::Kind::BrokenSign;
  return L;
}

Lagrangian compose_skew_boundary(const Lagrangian& L0, const SkewOperator& op) {
  if (L0.kind() != Lagrangian::Kind::Basic) throw ConfigError("boundary composition needs a basic Lagrangian");
  if (op.size() != L0.size()) throw ConfigError("operator size does not match the Lagrangian");
  Lagrangian L = L0;
  L.kind_ = Lagrangian::Kind::ComposedBoundary;
  L.A_ = op.A;
  L.plus_ = op.plus;
  L.minus_ = op.minus;
  return L;
}

Lagrangian compose_antisym(FieldFunctional phi, SpMat A) {
  if (A.rows() != phi.size() || A.cols() != phi.size()) throw ConfigError("operator size does not match phi");
  Lagrangian L = make_basic(std::move(phi));
  L.kind_ = Lagrangian::Kind::ComposedAntisym;
  L.A_ = std::move(A);
  return L;
}

Lagrangian regularize(const Lagrangian& L0, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("regularization parameter must be positive");
  const bool antisym_zero = L0.kind() == Lagrangian::Kind::ComposedAntisym && L0.A_.nonZeros() == 0;
  if (L0.kind() != Lagrangian::Kind::Basic && !antisym_zero)
    throw ConfigError("regularization is available for basic Lagrangians only");
  Lagrangian L = L0;
  L.kind_ = Lagrangian::Kind::Regularized;
  L.A_ = SpMat();
  L.lambda_ = lambda;
  return L;
}

Vec resolvent_J(const Lagrangian& L0, double lambda, const Vec& x, const Vec& /*p*/) {
  // For the admissible kernels, z -> L0(z, p) is phi(z) plus a term free of z.
  switch (L0.kind()) {
    case Lagrangian::Kind::Basic:
    case Lagrangian::Kind::Regularized: return moreau_envelope(L0.phi(), lambda, x).prox;
    default: throw ConfigError("resolvent is available for basic Lagrangians only");
  }
}

AsdVerifyResult asd_verify(const Lagrangian& L, int n_dofs, const AsdVerifyOptions& opts) {
  if (n_dofs != L.size()) throw ConfigError("dof count does not match the Lagrangian");
  if (n_dofs < 1 || n_dofs > 3)
    throw ConfigError("brute-force verification supports 1 to 3 dofs, got " + std::to_string(n_dofs));
  if (opts.samples < 2 || opts.probe_samples < 1) throw ConfigError("sample counts are too small");
  const int n = n_dofs;
  const int dim = 2 * n;
  const Vec& w = L.weights();

  auto axis = [](double r, int m, int k) { return m == 1 ? 0.0 : -r + 2.0 * r * k / (m - 1); };

  // Probe columns (p, x); scores are <p, x'>_w + <x, p'>_w.
  long long nprobe = 1;
  for (int d = 0; d < dim; ++d) nprobe *= opts.probe_samples;
  Eigen::MatrixXd probes(dim, nprobe);
  for (long long k = 0; k < nprobe; ++k) {
    long long r = k;
    for (int d = 0; d < dim; ++d) {
      probes(d, k) = axis(opts.probe_radius, opts.probe_samples, static_cast<int>(r % opts.probe_samples));
      r /= opts.probe_samples;
    }
  }
  Eigen::MatrixXd weighted = probes;
  for (int d = 0; d < dim; ++d) weighted.row(d) *= w[d % n];

  Eigen::VectorXd best = Eigen::VectorXd::Constant(nprobe, -std::numeric_limits<double>::infinity());
  long long total = 1;
  for (int d = 0; d < dim; ++d) total *= opts.samples;

  // Sample z = (x', p'); probe layout (p, x) pairs p with x' and x with p'.
  Vec xs(n), ps(n), z(dim), scores(nprobe);
  std::vector<int> idx(dim, 0);
  for (long long s = 0; s < total; ++s) {
    for (int d = 0; d < n; ++d) xs[d] = axis(opts.radius, opts.samples, idx[d]);
    for (int d = 0; d < n; ++d) ps[d] = axis(opts.radius, opts.samples, idx[n + d]);
    const double val = L(xs, ps);
    z << xs, ps;
    scores.noalias() = weighted.transpose() * z;
    scores.array() -= val;
    best = best.cwiseMax(scores);
    for (int d = 0; d < dim; ++d) {
      if (++idx[d] < opts.samples) break;
      idx[d] = 0;
    }
  }

  AsdVerifyResult r;
  r.evaluations = total;
  for (long long k = 0; k < nprobe; ++k) {
    const Vec p = probes.col(k).head(n);
    const Vec x = probes.col(k).tail(n);
    r.max_residual = std::max(r.max_residual, std::abs(best[k] - L(-x, -p)));
  }
  return r;
}

}  // namespace selfdual
