#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace selfdual {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

/// g(u) = (alpha/p)|u + shift|^p + (beta/2)u^2 + f*u + c
///
/// Sums of Power, Quadratic and Linear kinds collapse into this form as long
/// as at most one power exponent is involved.
struct Potential {
  double alpha = 0.0;
  double p = 2.0;
  double shift = 0.0;
  double beta = 0.0;
  double f = 0.0;
  double c = 0.0;

  static Potential power(double alpha, double p);
  static Potential quadratic(double beta);
  static Potential linear(double f);

  /// True when g is strictly convex and superlinear, so g* is finite everywhere.
  bool superlinear() const;
};

/// Throws ConfigError when both operands carry different power terms.
Potential operator+(const Potential& a, const Potential& b);

double potential_eval(const Potential& g, double u);
double potential_grad(const Potential& g, double u);
/// Second derivative, capped where the power term is singular (1 < p < 2).
double potential_hess(const Potential& g, double u);

/// Unique root of g'(u) + k*u = y (k >= 0). Closed form where available,
/// otherwise bracketed Newton with bisection fallback. Throws SolveError
/// carrying the bracket after 200 iterations.
double potential_solve(const Potential& g, double k, double y);

double potential_conjugate(const Potential& g, double y);
double potential_conjugate_grad(const Potential& g, double y);
double potential_conjugate_hess(const Potential& g, double y);
double potential_prox(const Potential& g, double lambda, double z);

/// (1/p) sum_c w_c |(G (u + shift))_c|^p, where each cell owns `block`
/// consecutive rows of G (its gradient components).
struct GradientEnergy {
  double p = 2.0;
  int block = 1;
  SpMat G;
  Vec cell_weights;
  Vec shift;  // empty means zero

  double value(const Vec& u) const;
  /// Euclidean gradient (not divided by weights).
  Vec euclid_grad(const Vec& u) const;
  SpMat euclid_hess(const Vec& u) const;
};

/// phi(u) = sum_i w_i g_i(u_i) + gradient energy + (eps/2)|u|_w^2, restricted
/// to the free nodes; phi = +inf if a fixed node is nonzero.
///
/// All gradients are taken in <u,v>_w = sum_i w_i u_i v_i.
class FieldFunctional {
 public:
  FieldFunctional() = default;
  FieldFunctional(Vec weights, std::vector<Potential> potentials);

  FieldFunctional& set_gradient_energy(GradientEnergy e);
  FieldFunctional& set_fixed(std::vector<char> fixed);
  FieldFunctional& set_epsilon(double eps);

  int size() const { return static_cast<int>(w_.size()); }
  const Vec& weights() const { return w_; }
  const std::vector<Potential>& potentials() const { return g_; }
  std::vector<Potential>& potentials() { return g_; }
  const std::optional<GradientEnergy>& gradient_energy() const { return grad_; }
  const std::vector<char>& fixed() const { return fixed_; }
  double epsilon() const { return eps_; }
  bool pointwise() const { return !grad_.has_value(); }
  bool is_fixed(int i) const { return !fixed_.empty() && fixed_[i]; }
  /// Node potential including the eps term.
  Potential node(int i) const;

  /// Zeroes fixed entries.
  Vec masked(const Vec& u) const;

  double value(const Vec& u) const;
  Vec grad(const Vec& u) const;
  /// Euclidean Hessian on the free nodes; fixed rows/cols are identity.
  SpMat euclid_hess(const Vec& u) const;

  /// phi*(v) = sup_u <v,u>_w - phi(u). Pointwise case is nodewise; otherwise an
  /// inner Newton solve, warm-started from *warm when given.
  double conjugate(const Vec& v, Vec* argmax = nullptr, const Vec* warm = nullptr) const;
  /// The maximizer of the conjugate sup, i.e. the w-gradient of phi*.
  Vec conjugate_grad(const Vec& v, const Vec* warm = nullptr) const;

  /// Euclidean Hessian of phi* at the point whose conjugate maximizer is z:
  /// W H(z)^-1 W on free nodes, zero on fixed ones. Dense for non-pointwise
  /// functionals; returns an empty matrix where H(z) is singular.
  SpMat conjugate_euclid_hess(const Vec& z) const;
  /// Minimizer of phi(u) + (k/2)|u|_w^2 - <y,u>_w (k >= 0).
  Vec solve_shifted(double k, const Vec& y, const Vec* warm = nullptr) const;

 private:
  Vec w_;
  std::vector<Potential> g_;
  std::optional<GradientEnergy> grad_;
  std::vector<char> fixed_;
  double eps_ = 0.0;
};

double functional_eval(const FieldFunctional& phi, const Vec& u);
Vec functional_grad(const FieldFunctional& phi, const Vec& u);
double functional_conjugate(const FieldFunctional& phi, const Vec& v);

struct MoreauResult {
  double value;
  Vec prox;
};
MoreauResult moreau_envelope(const FieldFunctional& phi, double lambda, const Vec& x);

/// phi(u) + phi*(v) - <u,v>_w.
double fenchel_gap(const FieldFunctional& phi, const Vec& u, const Vec& v);

/// For F = dual_side (uniformly convex with modulus eps), the subgradient of
/// phi = F* is grad F*. Returns max over pairs of eps |dphi(x1) - dphi(x2)|_w / |x1 - x2|_w.
double lipschitz_subgrad_check(const FieldFunctional& dual_side, double eps,
                               const std::vector<std::pair<Vec, Vec>>& samples);

double weighted_dot(const Vec& w, const Vec& a, const Vec& b);
double weighted_norm(const Vec& w, const Vec& a);

}  // namespace selfdual
