#include "selfdual/evolution.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "selfdual/errors.hpp"
#include "selfdual/optimize.hpp"
#include "selfdual/stationary.hpp"

namespace selfdual {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void add_block(Triplets& t, const SpMat& B, int row0, int col0, double scale) {
  for (int c = 0; c < B.outerSize(); ++c)
    for (SpMat::InnerIterator it(B, c); it; ++it) t.emplace_back(row0 + it.row(), col0 + it.col(), scale * it.value());
}

void check_horizon(double T, int N) {
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("horizon T must be positive");
  if (N < 1) throw ConfigError("steps must be >= 1");
}

Variant stationary_variant(EvolutionVariant v) {
  return v == EvolutionVariant::PureTransport ? Variant::PureTransport : Variant::ViscousTransport;
}

}  // namespace

const char* variant_name(EvolutionVariant v) {
  return v == EvolutionVariant::Diffusive ? "diffusive" : "pure_transport";
}

const char* scheme_name(Scheme s) { return s == Scheme::Spacetime ? "spacetime" : "prox"; }

EvolutionModel::EvolutionModel(const EvolutionProblem& pr) : variant_(pr.variant), grid_(pr.grid), omega_(pr.omega) {
  if (static_cast<int>(pr.a.components.size()) != grid_.dim())
    throw ConfigError("vector field needs one component per axis");
  if (!std::isfinite(pr.omega)) throw ConfigError("omega must be finite");
  op_ = build_transport(grid_, pr.a);
  const Vec s = op_.divergence + pr.a0.evaluate(grid_);
  K_ = std::max(0.0, 1.0 - s.minCoeff());
  const Vec beta = 0.5 * (s.array() + K_).matrix();
  modulus_ = beta.minCoeff();

  std::vector<Potential> g(grid_.size());
  if (variant_ == EvolutionVariant::Diffusive) {
    if (!(pr.p >= 2.0)) throw ConfigError("the diffusive variant needs p >= 2");
    for (int i = 0; i < grid_.size(); ++i) g[i] = Potential::quadratic(beta[i]);
    phi_ = FieldFunctional(grid_.weights(), std::move(g));
    phi_.set_gradient_energy(grid_gradient_energy(grid_, pr.p)).set_fixed(grid_.boundary_nodes());
  } else {
    if (!(pr.p > 1.0)) throw ConfigError("exponent p must be > 1");
    if (!(pr.alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    for (int i = 0; i < grid_.size(); ++i) g[i] = Potential::power(pr.alpha, pr.p) + Potential::quadratic(beta[i]);
    phi_ = FieldFunctional(grid_.weights(), std::move(g));
  }
}

void EvolutionModel::check_initial(const Vec& u0) const {
  if (u0.size() != size()) throw ConfigError("initial field size does not match the grid");
  for (int i = 0; i < size(); ++i) {
    if (!std::isfinite(u0[i])) throw PreconditionError("initial field is not finite at node " + std::to_string(i));
    if (phi_.is_fixed(i) && u0[i] != 0.0) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "initial field is %.6g on Dirichlet boundary node %d; it must vanish there",
                    u0[i], i);
      throw PreconditionError(buf);
    }
  }
  const Vec g = phi_.grad(u0);
  if (!g.allFinite() || !std::isfinite(phi_.value(u0)))
    throw PreconditionError("subdifferential of the potential is empty at the initial field");
}

FieldFunctional shift_potential(const FieldFunctional& phi, const Vec& x0, const SpMat& A, double omega) {
  const int n = phi.size();
  if (x0.size() != n) throw ConfigError("shift field size does not match the functional");
  if (!std::isfinite(phi.value(x0))) throw PreconditionError("shift point lies outside the domain of the potential");
  const Vec Ax0 = A * x0;
  std::vector<Potential> g(n);
  for (int i = 0; i < n; ++i) {
    // node() folds in the epsilon term, which shifts like the rest.
    const Potential h = phi.node(i);
    Potential& s = g[i];
    s.alpha = h.alpha;
    s.p = h.p;
    s.shift = h.shift + x0[i];
    s.beta = h.beta + 1.0;
    s.f = h.f + h.beta * x0[i] - Ax0[i] + omega * x0[i];
    s.c = h.c + 0.5 * h.beta * x0[i] * x0[i] + h.f * x0[i];
  }
  FieldFunctional psi(phi.weights(), std::move(g));
  if (phi.gradient_energy()) {
    GradientEnergy e = *phi.gradient_energy();
    e.shift = e.shift.size() ? Vec(e.shift + x0) : x0;
    psi.set_gradient_energy(std::move(e));
  }
  if (!phi.fixed().empty()) psi.set_fixed(phi.fixed());
  return psi;
}

SpacetimeFunctional::SpacetimeFunctional(const EvolutionModel& model, const Vec& u0, double T, int N)
    : model_(model), u0_(u0), N_(N), n_(model.size()), dt_(T / N) {
  check_horizon(T, N);
  model.check_initial(u0);
  const double wl = model.omega_linear();
  const double wp = wl - 1.0;
  const SkewOperator& op = model.op();
  psi_ = shift_potential(model.phi(), u0, op.A, wl);
  trace_ = model.boundary_terms() ? Vec(op.plus + op.minus) : Vec(Vec::Zero(n_));
  s_.resize(N + 1);
  c_.resize(N + 1);
  for (int k = 0; k <= N; ++k) {
    s_[k] = std::exp(-wp * k * dt_);
    c_[k] = dt_ / (s_[k] * s_[k]);
  }
  warm_.resize(N + 1);
}

Vec SpacetimeFunctional::y_of(const Vec& X, int k) const {
  return model_.op().A * slice(X, k) - (slice(X, k) - slice(X, k - 1)) / dt_;
}

Vec SpacetimeFunctional::conjugate_point(const Vec& X, int k, double* value) const {
  Vec z;
  Vec& wk = warm_[k];
  const double b = psi_.conjugate(s_[k] * y_of(X, k), &z, wk.size() ? &wk : nullptr);
  if (!psi_.pointwise()) wk = z;
  if (value) *value = b;
  return z;
}

double SpacetimeFunctional::value(const Vec& X, Vec* grad) const {
  const Vec& w = model_.grid().weights();
  const SpMat& A = model_.op().A;
  double val = 0.0;
  if (grad) grad->setZero(X.size());
  for (int k = 1; k <= N_; ++k) {
    const Vec xk = slice(X, k);
    const double a = psi_.value(s_[k] * xk);
    if (!std::isfinite(a)) return std::numeric_limits<double>::infinity();
    double b;
    const Vec z = conjugate_point(X, k, &b);
    const Vec d = xk - slice(X, k - 1);
    val += c_[k] * (a + b) + 0.5 * d.dot(w.cwiseProduct(d)) + 0.5 * dt_ * xk.dot(trace_.cwiseProduct(xk));
    if (grad) {
      const Vec gy = c_[k] * s_[k] * w.cwiseProduct(z);
      grad->segment(static_cast<Eigen::Index>(k) * n_, n_) +=
          c_[k] * s_[k] * w.cwiseProduct(psi_.grad(s_[k] * xk)) + A.transpose() * gy - gy / dt_ +
          w.cwiseProduct(d) + dt_ * trace_.cwiseProduct(xk);
      grad->segment(static_cast<Eigen::Index>(k - 1) * n_, n_) += gy / dt_ - w.cwiseProduct(d);
    }
  }
  const Vec x0 = slice(X, 0), xN = slice(X, N_);
  val += 0.5 * x0.dot(w.cwiseProduct(x0)) + 0.5 * xN.dot(w.cwiseProduct(xN));
  if (grad) {
    grad->segment(0, n_) += w.cwiseProduct(x0);
    grad->segment(static_cast<Eigen::Index>(N_) * n_, n_) += w.cwiseProduct(xN);
    for (int k = 0; k <= N_; ++k) grad->segment(static_cast<Eigen::Index>(k) * n_, n_) = psi_.masked(slice(*grad, k));
  }
  return val;
}

SpMat SpacetimeFunctional::hessian(const Vec& X) const {
  if (!psi_.pointwise() && n_ > 200) return SpMat();
  const Vec& w = model_.grid().weights();
  Triplets t;
  SpMat I(n_, n_);
  I.setIdentity();
  const SpMat Wd = SpMat(w.asDiagonal());
  const SpMat M = model_.op().A - I / dt_;
  for (int k = 1; k <= N_; ++k) {
    const SpMat C = psi_.conjugate_euclid_hess(conjugate_point(X, k, nullptr));
    if (C.rows() == 0) return SpMat();
    const double cs2 = c_[k] * s_[k] * s_[k];
    const int rk = k * n_, rp = (k - 1) * n_;
    add_block(t, psi_.euclid_hess(s_[k] * slice(X, k)), rk, rk, cs2);
    add_block(t, SpMat(M.transpose() * C * M), rk, rk, cs2);
    add_block(t, SpMat(M.transpose() * C), rk, rp, cs2 / dt_);
    add_block(t, SpMat(C * M), rp, rk, cs2 / dt_);
    add_block(t, C, rp, rp, cs2 / (dt_ * dt_));
    add_block(t, Wd, rk, rk, 1.0);
    add_block(t, Wd, rp, rp, 1.0);
    add_block(t, Wd, rk, rp, -1.0);
    add_block(t, Wd, rp, rk, -1.0);
    for (int i = 0; i < n_; ++i)
      if (trace_[i] != 0.0) t.emplace_back(rk + i, rk + i, dt_ * trace_[i]);
  }
  add_block(t, Wd, 0, 0, 1.0);
  add_block(t, Wd, N_ * n_, N_ * n_, 1.0);
  SpMat H(unknowns(), unknowns());
  H.setFromTriplets(t.begin(), t.end());
  if (!psi_.fixed().empty()) {
    auto fixed = [&](Eigen::Index r) { return psi_.is_fixed(static_cast<int>(r % n_)); };
    H.prune([&](Eigen::Index r, Eigen::Index c, double) { return !fixed(r) && !fixed(c); });
    for (Eigen::Index r = 0; r < unknowns(); ++r)
      if (fixed(r)) H.coeffRef(r, r) = 1.0;
  }
  H.makeCompressed();
  return H;
}

Objective SpacetimeFunctional::objective() const {
  Objective obj;
  obj.weights = model_.grid().weights().replicate(N_ + 1, 1);
  obj.eval = [this](const Vec& X, Vec* grad) { return value(X, grad); };
  obj.hessian = [this](const Vec& X) { return hessian(X); };
  return obj;
}

void SpacetimeFunctional::finish(const Vec& X, SpacetimeResult& r) const {
  const Vec& w = model_.grid().weights();
  r.I_total = value(X);
  const Vec x0 = slice(X, 0);
  r.initial_part = x0.dot(w.cwiseProduct(x0));
  r.x0_norm = std::sqrt(r.initial_part);
  r.fenchel_part = 0.0;
  r.trace_part = 0.0;
  for (int k = 1; k <= N_; ++k) {
    const Vec xk = slice(X, k);
    r.fenchel_part += c_[k] * fenchel_gap(psi_, s_[k] * xk, s_[k] * y_of(X, k));
    if (model_.boundary_terms()) r.trace_part += dt_ * xk.dot(model_.op().plus.cwiseProduct(xk));
  }
  Trajectory& tr = r.trajectory;
  tr.u.clear();
  tr.dt = dt_;
  tr.omega = model_.omega();
  tr.scheme = Scheme::Spacetime;
  tr.u.push_back(u0_);
  for (int k = 1; k <= N_; ++k) tr.u.push_back(s_[k] * slice(X, k) + u0_);
}

SpacetimeResult solve_spacetime(const EvolutionModel& model, const Vec& u0, double T, int N,
                                const EvolutionOptions& opts) {
  const SpacetimeFunctional F(model, u0, T, N);
  MinimizeOptions mo;
  mo.tol = opts.tol;
  mo.max_iter = opts.max_iter;
  const MinimizeResult m = minimize(F.objective(), Vec::Zero(F.unknowns()), mo);
  if (!m.converged) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "spacetime solve failed (%s): best value %.6e, |grad|_w = %.3e after %d iterations",
                  m.stop_reason.c_str(), m.value, m.grad_norm, m.iterations);
    throw SolveError(buf);
  }
  SpacetimeResult r;
  F.finish(m.x, r);
  r.iterations = m.iterations;
  r.converged = true;
  return r;
}

ProxResult solve_prox_stepping(const EvolutionModel& model, const Vec& u0, double T, int N,
                               const EvolutionOptions& opts) {
  check_horizon(T, N);
  model.check_initial(u0);
  const int n = model.size();
  const double dt = T / N;
  const double wl = model.omega_linear();
  const double wp = wl - 1.0;
  // psi is (1 + modulus)-uniformly convex, so phi~ stays strictly convex while
  // 1/dt + wp + 1 + modulus > 0, i.e. 1/dt + omega > 0 before the K-shift when
  // phi has no curvature of its own.
  if (!(1.0 / dt + wp + 1.0 + model.modulus() > 0.0)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "time step %.6g too large for omega = %.6g: the step functional is not convex", dt,
                  model.omega());
    throw PreconditionError(buf);
  }
  const FieldFunctional psi = shift_potential(model.phi(), u0, model.op().A, wl);

  ProxResult r;
  Trajectory& tr = r.trajectory;
  tr.dt = dt;
  tr.omega = model.omega();
  tr.scheme = Scheme::Prox;
  tr.u.push_back(u0);

  StationaryOptions so;
  so.tol = opts.tol / N;
  so.max_iter = opts.max_iter;
  Vec v = Vec::Zero(n);
  for (int k = 0; k < N; ++k) {
    FieldFunctional step = psi;
    for (int i = 0; i < n; ++i) {
      Potential& g = step.potentials()[i];
      g.beta += 1.0 / dt + wp;
      g.f -= v[i] / dt;
    }
    const StationaryFunctional I(model.grid(), model.op(), std::move(step), stationary_variant(model.variant()));
    so.initial = v;
    StationaryResult sr;
    try {
      sr = solve_stationary(I, so);
    } catch (const SolveError& e) {
      throw SolveError("prox step " + std::to_string(k + 1) + " of " + std::to_string(N) + ": " + e.what());
    }
    v = sr.u;
    r.step_certificates.push_back(sr.certificate.I_total);
    r.max_step_certificate = std::max(r.max_step_certificate, sr.certificate.I_total);
    tr.u.push_back(v + u0);
  }
  return r;
}

Trajectory solve_evolution(const EvolutionModel& model, const Vec& u0, double T, int N, Scheme scheme,
                           const EvolutionOptions& opts) {
  if (scheme == Scheme::Spacetime) return solve_spacetime(model, u0, T, N, opts).trajectory;
  return solve_prox_stepping(model, u0, T, N, opts).trajectory;
}

double lipschitz_in_time(const Trajectory& traj, const Vec& w) {
  if (traj.steps() < 1) return 0.0;
  const double first = weighted_norm(w, traj.u[1] - traj.u[0]);
  double worst = 0.0;
  for (int k = 0; k < traj.steps(); ++k) worst = std::max(worst, weighted_norm(w, traj.u[k + 1] - traj.u[k]));
  if (first == 0.0) return worst == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return worst / first;
}

SemigroupReport semigroup_report(const EvolutionModel& model, const Vec& x0, const Vec& x1, double T, int N,
                                 Scheme scheme, const EvolutionOptions& opts) {
  if (N < 2 || N % 2 != 0) throw ConfigError("semigroup report needs an even number of steps");
  const Vec& w = model.grid().weights();
  SemigroupReport r;
  const Trajectory a = solve_evolution(model, x0, T, N, scheme, opts);
  const Trajectory b = solve_evolution(model, x1, T, N, scheme, opts);
  r.ratio_bound = std::exp(-model.omega() * a.dt / 2.0);
  for (int k = 0; k < N; ++k) {
    const double d0 = weighted_norm(w, a.u[k] - b.u[k]);
    const double d1 = weighted_norm(w, a.u[k + 1] - b.u[k + 1]);
    r.ratios.push_back(d0 > 0.0 ? d1 / d0 : 0.0);
    r.max_ratio = std::max(r.max_ratio, r.ratios.back());
  }
  const Trajectory first = solve_evolution(model, x0, T / 2, N / 2, scheme, opts);
  const Trajectory second = solve_evolution(model, first.u.back(), T / 2, N / 2, scheme, opts);
  r.splitting_defect = weighted_norm(w, second.u.back() - a.u.back());
  const Trajectory one = solve_evolution(model, x0, a.dt, 1, scheme, opts);
  const Trajectory two = solve_evolution(model, x0, a.dt, 2, scheme, opts);
  r.local_error = weighted_norm(w, one.u.back() - two.u.back());
  r.lipschitz_constant = lipschitz_in_time(a, w);
  return r;
}

}  // namespace selfdual
