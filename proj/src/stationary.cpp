#include "selfdual/stationary.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "selfdual/errors.hpp"

namespace selfdual {

namespace {

std::string node_label(const Grid& g, int i) {
  char buf[160];
  if (g.dim() == 1)
    std::snprintf(buf, sizeof buf, "node %d (x = %.6g)", i, g.coord(i, 0));
  else
    std::snprintf(buf, sizeof buf, "node %d (x = %.6g, y = %.6g)", i, g.coord(i, 0), g.coord(i, 1));
  return buf;
}

// Smallest entry over the nodes not excluded by mask.
int worst_node(const Vec& v, const std::vector<char>& skip) {
  int worst = -1;
  for (int i = 0; i < v.size(); ++i) {
    if (!skip.empty() && skip[i]) continue;
    if (worst < 0 || v[i] < v[worst]) worst = i;
  }
  return worst;
}

}  // namespace

const char* variant_name(Variant v) {
  return v == Variant::PureTransport ? "pure_transport" : "viscous_transport";
}

StationaryFunctional::StationaryFunctional(const StationaryProblem& pr) : variant_(pr.variant), grid_(pr.grid) {
  if (static_cast<int>(pr.a.components.size()) != grid_.dim())
    throw ConfigError("vector field needs one component per axis");
  if (!(pr.p > 1.0)) throw ConfigError("exponent p must be > 1");
  if (!(pr.m > 1.0)) throw ConfigError("exponent m must be > 1");
  if (!(pr.alpha >= 0.0)) throw ConfigError("alpha must be >= 0");

  const int n = grid_.size();
  op_ = build_transport(grid_, pr.a);
  const Vec a0 = pr.a0.evaluate(grid_);
  const Vec f = pr.f.evaluate(grid_);
  tau_ = pr.tau.evaluate(grid_);
  trace_ = op_.plus + op_.minus;

  std::vector<Potential> g(n);
  if (variant_ == Variant::PureTransport) {
    const auto D = sbp_derivatives(grid_);
    Vec a_grad_tau = Vec::Zero(n);
    for (int k = 0; k < grid_.dim(); ++k) a_grad_tau += op_.a.row(k).transpose().cwiseProduct(D[k] * tau_);
    beta_ = a_grad_tau + 0.5 * (op_.divergence + a0);

    const int worst = worst_node(beta_, {});
    if (pr.p >= 2.0 && beta_[worst] < -1e-12) {
      char buf[96];
      std::snprintf(buf, sizeof buf, ": a.grad tau + (div a + a0)/2 = %.6g < 0", beta_[worst]);
      throw PreconditionError("semi-positivity fails at " + node_label(grid_, worst) + buf);
    }
    if (pr.p < 2.0 && !(beta_[worst] > 0.0)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, ": a.grad tau + (div a + a0)/2 = %.6g is not > 0 (needed for p < 2)",
                    beta_[worst]);
      throw PreconditionError("strict semi-positivity fails at " + node_label(grid_, worst) + buf);
    }
    for (int i = 0; i < n; ++i) {
      g[i] = Potential::power(pr.alpha * std::exp((2.0 - pr.p) * tau_[i]), pr.p) +
             Potential::quadratic(std::max(beta_[i], 0.0)) + Potential::linear(f[i]);
      if (!g[i].superlinear())
        throw PreconditionError("potential is not superlinear at " + node_label(grid_, i) +
                                "; its conjugate is infinite");
    }
    phi_ = FieldFunctional(grid_.weights(), std::move(g));
  } else {
    if (tau_.cwiseAbs().maxCoeff() != 0.0) throw ConfigError("tau is only used by the pure transport variant");
    if (!(pr.p >= 2.0)) throw ConfigError("the viscous variant needs p >= 2");
    beta_ = 0.5 * (op_.divergence + a0);
    const auto boundary = grid_.boundary_nodes();
    const int worst = worst_node(beta_, boundary);
    if (worst >= 0 && beta_[worst] < -1e-12) {
      char buf[96];
      std::snprintf(buf, sizeof buf, ": (div a + a0)/2 = %.6g < 0", beta_[worst]);
      throw PreconditionError("coercivity fails at " + node_label(grid_, worst) + buf);
    }
    for (int i = 0; i < n; ++i)
      g[i] = Potential::power(pr.alpha, pr.m) + Potential::quadratic(std::max(beta_[i], 0.0)) +
             Potential::linear(f[i]);
    phi_ = FieldFunctional(grid_.weights(), std::move(g));
    phi_.set_gradient_energy(grid_gradient_energy(grid_, pr.p)).set_fixed(boundary);
    trace_.setZero();
  }
}

StationaryFunctional::StationaryFunctional(Grid grid, SkewOperator op, FieldFunctional phi, Variant variant)
    : variant_(variant), grid_(std::move(grid)), op_(std::move(op)), phi_(std::move(phi)) {
  tau_ = Vec::Zero(grid_.size());
  beta_ = Vec::Zero(grid_.size());
  trace_ = variant_ == Variant::PureTransport ? Vec(op_.plus + op_.minus) : Vec(Vec::Zero(grid_.size()));
}

double StationaryFunctional::value(const Vec& u) const {
  return phi_.value(u) + phi_.conjugate(op_.apply(u)) + 0.5 * u.dot(trace_.cwiseProduct(u));
}

Vec StationaryFunctional::grad(const Vec& u) const {
  const Vec g = phi_.grad(u) + op_.adjoint_w(phi_.conjugate_grad(op_.apply(u))) +
                trace_.cwiseProduct(u).cwiseQuotient(grid_.weights());
  return phi_.masked(g);
}

Objective StationaryFunctional::objective() const {
  Objective obj;
  obj.weights = grid_.weights();
  // The inner conjugate solve of the viscous variant is warm-started from the
  // previous maximizer.
  auto warm = std::make_shared<Vec>();
  obj.eval = [this, warm](const Vec& u, Vec* grad) {
    const Vec& w = grid_.weights();
    const Vec Au = op_.apply(u);
    Vec z;
    const double phiu = phi_.value(u);
    if (!std::isfinite(phiu)) return std::numeric_limits<double>::infinity();
    const double val = phiu + phi_.conjugate(Au, &z, warm->size() ? warm.get() : nullptr) +
                       0.5 * u.dot(trace_.cwiseProduct(u));
    if (!phi_.pointwise()) *warm = z;
    if (grad) {
      Vec g = w.cwiseProduct(phi_.grad(u)) + op_.A.transpose() * w.cwiseProduct(z) + trace_.cwiseProduct(u);
      *grad = phi_.masked(g);
    }
    return val;
  };
  obj.hessian = [this, warm](const Vec& u) -> SpMat {
    const Vec& w = grid_.weights();
    const Vec Au = op_.apply(u);
    SpMat C;
    if (phi_.pointwise()) {
      Vec dc(size());
      for (int i = 0; i < size(); ++i) dc[i] = w[i] * potential_conjugate_hess(phi_.node(i), Au[i]);
      C = SpMat(dc.asDiagonal());
    } else {
      if (size() > 600) return SpMat();
      Vec z;
      phi_.conjugate(Au, &z, warm->size() ? warm.get() : nullptr);
      C = phi_.conjugate_euclid_hess(z);
      if (C.rows() == 0) return C;
    }
    SpMat H = SpMat(op_.A.transpose()) * C * op_.A;
    H += phi_.euclid_hess(u);
    for (int i = 0; i < size(); ++i) H.coeffRef(i, i) += trace_[i];
    if (!phi_.fixed().empty()) {
      H.prune([&](Eigen::Index r, Eigen::Index c, double) { return !phi_.is_fixed(r) && !phi_.is_fixed(c); });
      for (int i = 0; i < size(); ++i)
        if (phi_.is_fixed(i)) H.coeffRef(i, i) = 1.0;
    }
    H.makeCompressed();
    return H;
  };
  return obj;
}

Vec StationaryFunctional::pde_residual(const Vec& u) const {
  const Vec r = op_.apply(u) - phi_.grad(u);
  return phi_.masked(r.cwiseProduct((-tau_).array().exp().matrix()));
}

Certificate StationaryFunctional::certify(const Vec& u) const {
  Certificate c;
  c.I_total = value(u);
  c.fenchel_gap = fenchel_gap(phi_, u, op_.apply(u));
  c.inflow_trace_sq = u.dot(op_.plus.cwiseProduct(u));
  if (variant_ == Variant::ViscousTransport) c.inflow_trace_sq = 0.0;
  c.pde_residual_linf = pde_residual(u).cwiseAbs().maxCoeff();
  const Vec v = u.cwiseProduct((-tau_).array().exp().matrix());
  double tr = 0.0;
  for (int i = 0; i < size(); ++i) {
    const bool on_trace = variant_ == Variant::PureTransport ? op_.plus[i] > 0.0 : phi_.is_fixed(i);
    if (on_trace) tr = std::max(tr, std::abs(v[i]));
  }
  c.trace_condition_linf = tr;
  return c;
}

StationaryFunctional assemble_I(const StationaryProblem& problem) { return StationaryFunctional(problem); }

StationaryResult solve_stationary(const StationaryFunctional& I, const StationaryOptions& opts) {
  MinimizeOptions mo;
  mo.tol = opts.tol;
  mo.max_iter = opts.max_iter;
  mo.grad_tol = opts.grad_tol;
  const MinimizeResult m =
      minimize(I.objective(), opts.initial.size() == I.size() ? opts.initial : Vec(Vec::Zero(I.size())), mo);
  if (!m.converged) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "stationary solve failed (%s): best I = %.6e, |grad I|_w = %.3e after %d iterations",
                  m.stop_reason.c_str(), m.value, m.grad_norm, m.iterations);
    throw SolveError(buf);
  }
  StationaryResult r;
  r.u = m.x;
  r.v = r.u.cwiseProduct((-I.tau()).array().exp().matrix());
  r.certificate = I.certify(r.u);
  r.certificate.iterations = m.iterations;
  r.certificate.converged = true;
  r.history = m.history;
  r.grad_norm = m.grad_norm;
  r.stop_reason = m.stop_reason;
  return r;
}

StationaryResult solve_stationary(const StationaryProblem& problem, const StationaryOptions& opts) {
  return solve_stationary(assemble_I(problem), opts);
}

ResolventPoint resolvent_map_X(const Lagrangian& L, const Vec& p, double tol) {
  const Vec& w = L.weights();
  const bool basic = L.kind() == Lagrangian::Kind::Basic;
  // For Basic(phi) the p-part phi*(-p) does not depend on x.
  const double offset = basic ? L.phi().conjugate(-p) : 0.0;
  Objective obj;
  obj.weights = w;
  obj.eval = [&](const Vec& x, Vec* grad) {
    if (grad) *grad = w.cwiseProduct(L.grad_x(x, p) + p);
    return (basic ? L.phi().value(x) + offset : L(x, p)) + weighted_dot(w, x, p);
  };
  if (basic) obj.hessian = [&](const Vec& x) { return L.phi().euclid_hess(x); };
  MinimizeOptions mo;
  mo.tol = tol;
  mo.grad_tol = 1e-12;
  mo.max_iter = 500;
  const MinimizeResult m = minimize(obj, Vec::Zero(L.size()), mo);
  if (!m.converged) throw SolveError("resolvent map solve failed: " + m.stop_reason);
  return {m.x, m.value};
}

}  // namespace selfdual
