#include "selfdual/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/SparseCholesky>

#include "selfdual/errors.hpp"

namespace selfdual {

namespace {

constexpr double kHessCap = 1e12;
constexpr double kEps = std::numeric_limits<double>::epsilon();

double signed_pow(double r, double e) { return std::copysign(std::pow(std::abs(r), e), r); }

}  // namespace

Potential Potential::power(double alpha, double p) {
  Potential g;
  g.alpha = alpha;
  g.p = p;
  return g;
}

Potential Potential::quadratic(double beta) {
  Potential g;
  g.beta = beta;
  return g;
}

Potential Potential::linear(double f) {
  Potential g;
  g.f = f;
  return g;
}

bool Potential::superlinear() const { return beta > 0.0 || (alpha > 0.0 && p > 1.0); }

Potential operator+(const Potential& a, const Potential& b) {
  Potential s = a;
  if (b.alpha != 0.0) {
    if (a.alpha != 0.0 && (a.p != b.p || a.shift != b.shift))
      throw ConfigError("cannot sum power terms with different exponents or shifts");
    s.alpha += b.alpha;
    s.p = b.p;
    s.shift = b.shift;
  }
  s.beta += b.beta;
  s.f += b.f;
  s.c += b.c;
  return s;
}

double potential_eval(const Potential& g, double u) {
  double v = 0.5 * g.beta * u * u + g.f * u + g.c;
  if (g.alpha != 0.0) v += g.alpha / g.p * std::pow(std::abs(u + g.shift), g.p);
  return v;
}

double potential_grad(const Potential& g, double u) {
  double d = g.beta * u + g.f;
  if (g.alpha != 0.0) d += g.alpha * signed_pow(u + g.shift, g.p - 1.0);
  return d;
}

double potential_hess(const Potential& g, double u) {
  double h = g.beta;
  if (g.alpha != 0.0) {
    if (g.p == 2.0) return h + g.alpha;
    const double r = std::abs(u + g.shift);
    if (g.p < 2.0 && r == 0.0) return kHessCap;
    h += g.alpha * (g.p - 1.0) * std::pow(r, g.p - 2.0);
  }
  return std::min(h, kHessCap);
}

double potential_solve(const Potential& g, double k, double y) {
  const double b = g.beta + k;
  const double t = y - g.f;
  if (!std::isfinite(y)) throw SolveError("non-finite argument in potential root solve");
  if (g.alpha == 0.0) {
    if (!(b > 0.0)) throw SolveError("potential is not superlinear; conjugate is not finite");
    return t / b;
  }
  if (g.p == 2.0) return (t - g.alpha * g.shift) / (g.alpha + b);
  if (b == 0.0) return -g.shift + signed_pow(t / g.alpha, 1.0 / (g.p - 1.0));

  auto h = [&](double u) { return g.alpha * signed_pow(u + g.shift, g.p - 1.0) + b * u - t; };
  auto dh = [&](double u) { return potential_hess(g, u) - g.beta + b; };

  // Start from the root of the dominant piece.
  double x = t / b;
  double lo = x, hi = x;
  double step = 1.0 + std::abs(x);
  while (h(lo) > 0.0) {
    hi = lo;
    lo -= step;
    step *= 2.0;
  }
  step = 1.0 + std::abs(x);
  while (h(hi) < 0.0) {
    lo = hi;
    hi += step;
    step *= 2.0;
  }

  // Safeguarded Newton: bisect when the Newton point leaves the bracket or
  // does not halve the previous step.
  const double scale = 1.0 + std::abs(t);
  x = std::clamp(x, lo, hi);
  double hx = h(x);
  double prev_step = hi - lo;
  for (int it = 0; it < 200; ++it) {
    if (hx == 0.0) return x;
    if (hx < 0.0)
      lo = x;
    else
      hi = x;
    if (std::abs(hx) <= 4.0 * kEps * scale || hi - lo <= 4.0 * kEps * std::max(std::abs(lo), std::abs(hi)))
      break;
    double next = x - hx / dh(x);
    if (!(next > lo && next < hi) || 2.0 * std::abs(next - x) > std::abs(prev_step)) next = 0.5 * (lo + hi);
    prev_step = next - x;
    x = next;
    hx = h(x);
  }
  // A bracket at machine resolution is as good as the root gets; the residual
  // is then limited by cancellation among its terms.
  const double terms = scale + std::abs(b * x) + g.alpha * std::pow(std::abs(x + g.shift), g.p - 1.0);
  const bool collapsed = hi - lo <= 4.0 * kEps * std::max(std::abs(lo), std::abs(hi));
  if (!collapsed && std::abs(hx) > 1e-12 * terms) {
    std::ostringstream os;
    os.precision(17);
    os << "potential root solve did not converge; bracket [" << lo << ", " << hi << "], residual " << hx;
    throw SolveError(os.str());
  }
  return x;
}

double potential_conjugate_grad(const Potential& g, double y) {
  if (!g.superlinear()) throw SolveError("potential is not superlinear; conjugate is not finite");
  return potential_solve(g, 0.0, y);
}

double potential_conjugate(const Potential& g, double y) {
  const double u = potential_conjugate_grad(g, y);
  return u * y - potential_eval(g, u);
}

double potential_conjugate_hess(const Potential& g, double y) {
  const double h = potential_hess(g, potential_conjugate_grad(g, y));
  return h > 1.0 / kHessCap ? 1.0 / h : kHessCap;
}

double potential_prox(const Potential& g, double lambda, double z) {
  if (!(lambda > 0.0)) throw ConfigError("prox parameter must be positive");
  return potential_solve(g, 1.0 / lambda, z / lambda);
}

// ---------------------------------------------------------------------------

namespace {

Vec shifted(const GradientEnergy& e, const Vec& u) { return e.shift.size() ? Vec(u + e.shift) : u; }

}  // namespace

double GradientEnergy::value(const Vec& u) const {
  const Vec z = G * shifted(*this, u);
  double s = 0.0;
  for (Eigen::Index c = 0; c < cell_weights.size(); ++c) {
    const double r = z.segment(c * block, block).norm();
    s += cell_weights[c] * std::pow(r, p);
  }
  return s / p;
}

Vec GradientEnergy::euclid_grad(const Vec& u) const {
  Vec z = G * shifted(*this, u);
  for (Eigen::Index c = 0; c < cell_weights.size(); ++c) {
    auto seg = z.segment(c * block, block);
    const double r = seg.norm();
    const double s = p == 2.0 ? 1.0 : (r > 0.0 ? std::pow(r, p - 2.0) : 0.0);
    seg *= cell_weights[c] * s;
  }
  return G.transpose() * z;
}

SpMat GradientEnergy::euclid_hess(const Vec& u) const {
  const Vec z = G * shifted(*this, u);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(cell_weights.size() * block * block);
  for (Eigen::Index c = 0; c < cell_weights.size(); ++c) {
    const Vec zc = z.segment(c * block, block);
    const double r = zc.norm();
    const double wc = cell_weights[c];
    const double s = p == 2.0 ? 1.0 : (r > 0.0 ? std::pow(r, p - 2.0) : 0.0);
    for (int a = 0; a < block; ++a)
      for (int b = 0; b < block; ++b) {
        double v = (a == b) ? s : 0.0;
        if (p != 2.0 && r > 0.0) v += (p - 2.0) * s * zc[a] * zc[b] / (r * r);
        if (v != 0.0) t.emplace_back(c * block + a, c * block + b, wc * v);
      }
  }
  SpMat M(G.rows(), G.rows());
  M.setFromTriplets(t.begin(), t.end());
  return SpMat(G.transpose() * M * G);
}

// ---------------------------------------------------------------------------

FieldFunctional::FieldFunctional(Vec weights, std::vector<Potential> potentials)
    : w_(std::move(weights)), g_(std::move(potentials)) {
  if (static_cast<Eigen::Index>(g_.size()) != w_.size())
    throw ConfigError("one potential per node is required");
}

FieldFunctional& FieldFunctional::set_gradient_energy(GradientEnergy e) {
  if (e.G.cols() != w_.size()) throw ConfigError("gradient operator does not match the node count");
  if (e.p < 2.0) throw ConfigError("gradient energy exponent must be at least 2");
  grad_ = std::move(e);
  return *this;
}

FieldFunctional& FieldFunctional::set_fixed(std::vector<char> fixed) {
  if (!fixed.empty() && static_cast<Eigen::Index>(fixed.size()) != w_.size())
    throw ConfigError("mask size does not match the node count");
  fixed_ = std::move(fixed);
  return *this;
}

FieldFunctional& FieldFunctional::set_epsilon(double eps) {
  if (eps < 0.0) throw ConfigError("strong convexity modulus must be nonnegative");
  eps_ = eps;
  return *this;
}

Potential FieldFunctional::node(int i) const {
  Potential g = g_[i];
  g.beta += eps_;
  return g;
}

Vec FieldFunctional::masked(const Vec& u) const {
  Vec r = u;
  if (!fixed_.empty())
    for (int i = 0; i < size(); ++i)
      if (fixed_[i]) r[i] = 0.0;
  return r;
}

double FieldFunctional::value(const Vec& u) const {
  if (u.size() != w_.size()) throw ConfigError("field size does not match the functional");
  double s = 0.0;
  for (int i = 0; i < size(); ++i) {
    if (is_fixed(i) && u[i] != 0.0) return std::numeric_limits<double>::infinity();
    s += w_[i] * potential_eval(node(i), u[i]);
  }
  if (grad_) s += grad_->value(u);
  return s;
}

Vec FieldFunctional::grad(const Vec& u) const {
  if (u.size() != w_.size()) throw ConfigError("field size does not match the functional");
  Vec d(size());
  for (int i = 0; i < size(); ++i) d[i] = potential_grad(node(i), u[i]);
  if (grad_) d += grad_->euclid_grad(u).cwiseQuotient(w_);
  return masked(d);
}

SpMat FieldFunctional::euclid_hess(const Vec& u) const {
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < size(); ++i) t.emplace_back(i, i, w_[i] * potential_hess(node(i), u[i]));
  SpMat H(size(), size());
  H.setFromTriplets(t.begin(), t.end());
  if (grad_) H += grad_->euclid_hess(u);
  if (!fixed_.empty()) {
    H.prune([&](Eigen::Index r, Eigen::Index c, double) { return !fixed_[r] && !fixed_[c]; });
    for (int i = 0; i < size(); ++i)
      if (fixed_[i]) H.coeffRef(i, i) = 1.0;
  }
  H.makeCompressed();
  return H;
}

SpMat FieldFunctional::conjugate_euclid_hess(const Vec& z) const {
  const int n = size();
  SpMat C(n, n);
  if (pointwise()) {
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < n; ++i) {
      if (is_fixed(i)) continue;
      const double h = potential_hess(node(i), z[i]);
      if (!(h > 0.0)) return SpMat();
      t.emplace_back(i, i, w_[i] / h);
    }
    C.setFromTriplets(t.begin(), t.end());
    return C;
  }
  const Eigen::MatrixXd H(euclid_hess(z));
  Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  const Vec D = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || !(D.minCoeff() > 1e-14 * D.cwiseAbs().maxCoeff())) return SpMat();
  Eigen::MatrixXd Hinv = ldlt.solve(Eigen::MatrixXd::Identity(n, n));
  for (int i = 0; i < n; ++i) {
    if (!is_fixed(i)) continue;
    Hinv.row(i).setZero();
    Hinv.col(i).setZero();
  }
  const Eigen::MatrixXd dense = w_.asDiagonal() * Hinv * w_.asDiagonal();
  return dense.sparseView();
}

Vec FieldFunctional::solve_shifted(double k, const Vec& y, const Vec* warm) const {
  if (y.size() != w_.size()) throw ConfigError("field size does not match the functional");
  if (pointwise()) {
    Vec u(size());
    for (int i = 0; i < size(); ++i) u[i] = is_fixed(i) ? 0.0 : potential_solve(node(i), k, y[i]);
    return u;
  }

  // Damped Newton on F(u) = phi(u) + (k/2)|u|_w^2 - <y,u>_w over free nodes.
  auto F = [&](const Vec& u) { return value(u) + 0.5 * k * weighted_dot(w_, u, u) - weighted_dot(w_, y, u); };
  Vec u = warm && warm->size() == y.size() ? masked(*warm) : Vec::Zero(size());
  double Fu = F(u);
  Eigen::SimplicialLDLT<SpMat> ldlt;
  double decrement = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    const Vec gE = masked(Vec(w_.cwiseProduct(grad(u) + k * u - y)));
    SpMat H = euclid_hess(u);
    for (int i = 0; i < size(); ++i)
      if (!is_fixed(i)) H.coeffRef(i, i) += k * w_[i];
    ldlt.compute(H);
    double mu = 0.0;
    while (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
      mu = mu == 0.0 ? 1e-12 * (1.0 + H.diagonal().cwiseAbs().maxCoeff()) : mu * 10.0;
      SpMat Hm = H;
      for (int i = 0; i < size(); ++i) Hm.coeffRef(i, i) += mu;
      ldlt.compute(Hm);
      if (mu > 1e6) throw SolveError("inner Newton Hessian is singular");
    }
    const Vec d = masked(Vec(-ldlt.solve(gE)));
    decrement = -gE.dot(d);
    const double S = 1.0 + std::abs(Fu) + (w_.array() * y.array().abs() * u.array().abs()).sum();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (decrement <= 1e-26 * S || dmax <= 1e-15 * (1.0 + u.cwiseAbs().maxCoeff())) return u + d;
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vec trial = u + step * d;
      const double Ft = F(trial);
      if (Ft <= Fu - 1e-4 * step * decrement) {
        u = trial;
        Fu = Ft;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // F is at its roundoff floor; inside the quadratic region the full
      // step is still an improvement in u.
      if (decrement > 1e-10 * S) break;
      u += d;
      Fu = F(u);
    }
  }
  const double S = 1.0 + std::abs(Fu) + (w_.array() * y.array().abs() * u.array().abs()).sum();
  if (decrement <= 1e-16 * S) return u;
  std::ostringstream os;
  os.precision(6);
  os << "inner conjugate solve did not converge; achieved gap estimate " << 0.5 * decrement;
  throw SolveError(os.str());
}

double FieldFunctional::conjugate(const Vec& v, Vec* argmax, const Vec* warm) const {
  if (v.size() != w_.size()) throw ConfigError("field size does not match the functional");
  if (pointwise()) {
    double s = 0.0;
    Vec u(size());
    for (int i = 0; i < size(); ++i) {
      if (is_fixed(i)) {
        u[i] = 0.0;
        s -= w_[i] * potential_eval(node(i), 0.0);
      } else {
        u[i] = potential_conjugate_grad(node(i), v[i]);
        s += w_[i] * (u[i] * v[i] - potential_eval(node(i), u[i]));
      }
    }
    if (argmax) *argmax = std::move(u);
    return s;
  }
  Vec u = solve_shifted(0.0, v, warm);
  const double s = weighted_dot(w_, v, u) - value(u);
  if (argmax) *argmax = std::move(u);
  return s;
}

Vec FieldFunctional::conjugate_grad(const Vec& v, const Vec* warm) const {
  Vec u;
  conjugate(v, &u, warm);
  return u;
}

double functional_eval(const FieldFunctional& phi, const Vec& u) { return phi.value(u); }
Vec functional_grad(const FieldFunctional& phi, const Vec& u) { return phi.grad(u); }
double functional_conjugate(const FieldFunctional& phi, const Vec& v) { return phi.conjugate(v); }

MoreauResult moreau_envelope(const FieldFunctional& phi, double lambda, const Vec& x) {
  if (!(lambda > 0.0)) throw ConfigError("Moreau parameter must be positive");
  Vec prox = phi.solve_shifted(1.0 / lambda, x / lambda);
  const Vec d = x - prox;
  const double v = phi.value(prox) + weighted_dot(phi.weights(), d, d) / (2.0 * lambda);
  return {v, std::move(prox)};
}

double fenchel_gap(const FieldFunctional& phi, const Vec& u, const Vec& v) {
  return phi.value(u) + phi.conjugate(v) - weighted_dot(phi.weights(), u, v);
}

double lipschitz_subgrad_check(const FieldFunctional& dual_side, double eps,
                               const std::vector<std::pair<Vec, Vec>>& samples) {
  double worst = 0.0;
  const Vec& w = dual_side.weights();
  for (const auto& [x1, x2] : samples) {
    const double dx = weighted_norm(w, x1 - x2);
    if (dx == 0.0) continue;
    const Vec d = dual_side.conjugate_grad(x1) - dual_side.conjugate_grad(x2);
    worst = std::max(worst, eps * weighted_norm(w, d) / dx);
  }
  return worst;
}

double weighted_dot(const Vec& w, const Vec& a, const Vec& b) { return (w.array() * a.array() * b.array()).sum(); }

double weighted_norm(const Vec& w, const Vec& a) { return std::sqrt(weighted_dot(w, a, a)); }

}  // namespace selfdual
