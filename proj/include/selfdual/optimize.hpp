#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace selfdual {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

/// Smooth convex objective on R^n. Gradients and Hessians are Euclidean;
/// `weights` defines the w-metric in which gradient norms are reported.
struct Objective {
  std::function<double(const Vec& x, Vec* grad)> eval;
  std::function<SpMat(const Vec& x)> hessian;  // optional; may return an empty matrix
  Vec weights;
};

struct MinimizeOptions {
  double tol = 1e-10;       // target objective value (the known minimum is 0)
  int max_iter = 5000;
  double grad_tol = 0.0;    // if > 0, also require |grad|_w <= grad_tol
  int memory = 12;
  bool use_hessian = true;  // damped Newton when a Hessian is supplied
};

struct MinimizeResult {
  Vec x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  std::vector<double> history;  // objective after each accepted step, non-increasing
};

/// Damped Newton when a Hessian is available, weighted-metric L-BFGS
/// otherwise; Armijo backtracking in both. Stops when f <= tol (and the
/// gradient test, if requested), or when the relative decrease over 10
/// iterations is below 1e-12; a stall counts as converged if f <= tol or
/// |grad|_w <= sqrt(tol).
MinimizeResult minimize(const Objective& obj, Vec x0, const MinimizeOptions& opts);

}  // namespace selfdual
