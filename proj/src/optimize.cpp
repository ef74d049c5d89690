#include "selfdual/optimize.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/SparseCholesky>

namespace selfdual {

namespace {

struct State {
  Vec x;
  double f;
  Vec g;
};

double wnorm(const Vec& g, const Vec& w) {
  // |W^-1 g|_w for a Euclidean gradient g.
  return std::sqrt((g.array().square() / w.array()).sum());
}

Vec newton_direction(const SpMat& H, const Vec& g, const Vec& w) {
  Eigen::SimplicialLDLT<SpMat> ldlt(H);
  double mu = 0.0;
  const double scale = 1.0 + H.diagonal().cwiseAbs().maxCoeff();
  while (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) {
    mu = mu == 0.0 ? 1e-14 * scale : mu * 10.0;
    SpMat Hm = H;
    for (Eigen::Index i = 0; i < Hm.rows(); ++i) Hm.coeffRef(i, i) += mu * w[i] / w.maxCoeff();
    ldlt.compute(Hm);
    if (mu > scale) return Vec();
  }
  return -ldlt.solve(g);
}

}  // namespace

MinimizeResult minimize(const Objective& obj, Vec x0, const MinimizeOptions& opts) {
  const Vec w = obj.weights.size() ? obj.weights : Vec::Ones(x0.size());
  const bool newton = opts.use_hessian && static_cast<bool>(obj.hessian);
  MinimizeResult r;

  State s{std::move(x0), 0.0, Vec()};
  s.f = obj.eval(s.x, &s.g);
  r.history.push_back(s.f);
  std::deque<Vec> S, Y;
  std::deque<double> rho;
  double gn = wnorm(s.g, w);

  auto done = [&](double f, double gnorm) {
    return f <= opts.tol && (opts.grad_tol <= 0.0 || gnorm <= opts.grad_tol);
  };

  int it = 0;
  for (; it < opts.max_iter; ++it) {
    if (!std::isfinite(s.f)) {
      r.stop_reason = "non-finite objective";
      break;
    }
    if (done(s.f, gn)) {
      r.converged = true;
      r.stop_reason = "objective below tolerance";
      break;
    }
    if (r.history.size() > 10) {
      const double old = r.history[r.history.size() - 11];
      if (old - s.f <= 1e-12 * std::max(std::abs(s.f), std::numeric_limits<double>::min())) {
        r.converged = s.f <= opts.tol || gn <= std::sqrt(opts.tol);
        r.stop_reason = r.converged ? "stalled at the roundoff floor" : "stalled";
        break;
      }
    }

    Vec d;
    if (newton) {
      // An empty Hessian means "not available here"; fall back to L-BFGS.
      const SpMat H = obj.hessian(s.x);
      if (H.rows() == s.x.size()) d = newton_direction(H, s.g, w);
    }
    if (d.size() == 0) {
      // Two-loop recursion with initial inverse Hessian gamma W^-1.
      Vec q = s.g;
      std::vector<double> alpha(S.size());
      for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
        alpha[i] = rho[i] * S[i].dot(q);
        q -= alpha[i] * Y[i];
      }
      double gamma;
      if (!S.empty()) {
        const Vec& y = Y.back();
        gamma = S.back().dot(y) / (y.array().square() / w.array()).sum();
      } else {
        gamma = 1.0 / std::max(gn, 1e-300);
      }
      q = gamma * q.cwiseQuotient(w);
      for (std::size_t i = 0; i < S.size(); ++i) {
        const double beta = rho[i] * Y[i].dot(q);
        q += S[i] * (alpha[i] - beta);
      }
      d = -q;
    }
    double slope = s.g.dot(d);
    if (!(slope < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      d = -s.g.cwiseQuotient(w) / std::max(gn, 1e-300);
      slope = s.g.dot(d);
      if (!(slope < 0.0)) {
        r.converged = s.f <= opts.tol || gn <= std::sqrt(opts.tol);
        r.stop_reason = "zero gradient";
        break;
      }
    }

    double step = 1.0;
    State t;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      t.x = s.x + step * d;
      t.f = obj.eval(t.x, &t.g);
      if (std::isfinite(t.f) && t.f <= s.f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // At the roundoff floor, accept a full step that does not increase f
      // but reduces the gradient.
      t.x = s.x + d;
      t.f = obj.eval(t.x, &t.g);
      if (std::isfinite(t.f) && t.f <= s.f && wnorm(t.g, w) < gn) {
        accepted = true;
      } else {
        r.converged = s.f <= opts.tol || gn <= std::sqrt(opts.tol);
        r.stop_reason = "line search failed";
        break;
      }
    }

    Vec sk = t.x - s.x;
    Vec yk = t.g - s.g;
    const double sy = sk.dot(yk);
    if (sy > 1e-300 && sy > 1e-14 * sk.norm() * yk.norm()) {
      S.push_back(std::move(sk));
      Y.push_back(std::move(yk));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opts.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    s = std::move(t);
    gn = wnorm(s.g, w);
    r.history.push_back(s.f);
  }
  if (it == opts.max_iter) r.stop_reason = "iteration budget exhausted";
  r.iterations = it;
  r.value = s.f;
  r.grad_norm = gn;
  r.x = std::move(s.x);
  return r;
}

}  // namespace selfdual
