#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace selfdual::testing {

using Vec = Eigen::VectorXd;

inline Vec random_field(std::mt19937_64& rng, int n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

/// Central differences of f, divided by the weights: the w-gradient.
inline Vec fd_weighted_grad(const std::function<double(const Vec&)>& f, const Vec& u, const Vec& w,
                            double h = 1e-6) {
  Vec g(u.size());
  Vec x = u;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double hi = h * (1.0 + std::abs(u[i]));
    x[i] = u[i] + hi;
    const double fp = f(x);
    x[i] = u[i] - hi;
    const double fm = f(x);
    x[i] = u[i];
    g[i] = (fp - fm) / (2.0 * hi) / w[i];
  }
  return g;
}

/// |a - b| / max(|a|, |b|), with both norms Euclidean.
inline double relative_error(const Vec& a, const Vec& b) {
  const double s = std::max(a.norm(), b.norm());
  return s == 0.0 ? 0.0 : (a - b).norm() / s;
}

}  // namespace selfdual::testing
