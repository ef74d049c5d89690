#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "selfdual/convex.hpp"
#include "selfdual/errors.hpp"
#include "selfdual/mesh.hpp"
#include "selfdual/operators.hpp"
#include "support.hpp"

using namespace selfdual;
using namespace selfdual::testing;

namespace {

std::vector<Potential> sample_potentials() {
  Potential shifted = Potential::power(0.7, 3.0) + Potential::quadratic(0.5) + Potential::linear(-0.3);
  shifted.shift = 0.4;
  return {Potential::power(1.0, 2.0),
          Potential::power(1.0, 3.0),
          Potential::power(2.0, 1.5),
          Potential::power(1.0, 4.0) + Potential::linear(1.0),
          Potential::power(1.3, 1.5) + Potential::quadratic(0.8) + Potential::linear(0.25),
          Potential::quadratic(2.0) + Potential::linear(-1.0),
          shifted};
}

Grid line(int n) { return build_grid(1, {Interval{0.0, 1.0}, Interval{}}, {n, 1}); }

// Maximizes a concave 1-D function by golden-section search on [lo, hi].
double golden_max(const std::function<double(double)>& f, double lo, double hi) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 200; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return f(0.5 * (a + b));
}

}  // namespace

TEST_CASE("potential evaluation examples") {
  const Potential q = Potential::power(1.0, 2.0);
  CHECK(potential_eval(q, 3.0) == doctest::Approx(4.5));
  CHECK(potential_grad(q, 3.0) == doctest::Approx(3.0));
  const Potential c = Potential::power(1.0, 3.0);
  CHECK(potential_eval(c, 2.0) == doctest::Approx(8.0 / 3.0));
  CHECK(potential_grad(c, 2.0) == doctest::Approx(4.0));
  const Potential ql = q + Potential::linear(1.0);
  CHECK(potential_eval(ql, 2.0) == doctest::Approx(4.0));
  CHECK(potential_grad(ql, 2.0) == doctest::Approx(3.0));
}

TEST_CASE("conjugate examples") {
  CHECK(potential_conjugate(Potential::power(1.0, 2.0), 3.0) == doctest::Approx(4.5));
  CHECK(potential_conjugate(Potential::power(1.0, 3.0), 8.0) ==
        doctest::Approx(2.0 / 3.0 * std::pow(8.0, 1.5)).epsilon(1e-13));
  CHECK(potential_conjugate(Potential::power(1.0, 2.0) + Potential::linear(1.0), 3.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(potential_conjugate(Potential::linear(1.0), 0.0), SolveError);
  CHECK_THROWS_AS(Potential::power(1.0, 2.0) + Potential::power(1.0, 3.0), ConfigError);
}

TEST_CASE("prox examples") {
  CHECK(potential_prox(Potential::quadratic(1.0), 1.0, 4.0) == doctest::Approx(2.0));
  CHECK(potential_prox(Potential::power(1.0, 4.0), 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(potential_prox(Potential::linear(1.0), 2.0, 5.0) == doctest::Approx(3.0));
}

TEST_CASE("convexity by second differences") {
  for (const Potential& g : sample_potentials())
    for (double u = -3.0; u <= 3.0; u += 0.37)
      for (double h : {1e-3, 0.1, 1.0})
        CHECK(potential_eval(g, u - h) - 2.0 * potential_eval(g, u) + potential_eval(g, u + h) >= -1e-12);
}

TEST_CASE("Fenchel-Young on a 100x100 box, equality at y = g'(u)") {
  for (const Potential& g : sample_potentials()) {
    double worst = 0.0;
    for (int a = 0; a < 100; ++a)
      for (int b = 0; b < 100; ++b) {
        const double u = -3.0 + 6.0 * a / 99.0;
        const double y = -5.0 + 10.0 * b / 99.0;
        worst = std::min(worst, potential_eval(g, u) + potential_conjugate(g, y) - u * y);
      }
    CHECK(worst >= -1e-10);
    for (double u = -2.5; u <= 2.5; u += 0.1) {
      const double y = potential_grad(g, u);
      const double gap = potential_eval(g, u) + potential_conjugate(g, y) - u * y;
      CHECK(std::abs(gap) <= 1e-9 * (1.0 + std::abs(u * y)));
    }
  }
}

TEST_CASE("biconjugate equals g") {
  // g**(u) = sup_y u y - g*(y), maximized by golden section.
  for (const Potential& g : sample_potentials())
    for (double u : {-1.7, -0.3, 0.0, 0.45, 2.2}) {
      const double gss = golden_max([&](double y) { return u * y - potential_conjugate(g, y); }, -60.0, 60.0);
      CHECK(gss == doctest::Approx(potential_eval(g, u)).epsilon(1e-9));
    }
}

TEST_CASE("prox optimality and nodewise solve") {
  for (const Potential& g : sample_potentials())
    for (double lambda : {0.01, 0.5, 3.0})
      for (double z = -4.0; z <= 4.0; z += 0.5) {
        const double x = potential_prox(g, lambda, z);
        CHECK(std::abs(potential_grad(g, x) + (x - z) / lambda) <= 1e-10 * (1.0 + std::abs(z) / lambda));
      }
}

TEST_CASE("field functional examples") {
  const Grid g = line(11);
  FieldFunctional phi(g.weights(), std::vector<Potential>(g.size(), Potential::power(1.0, 2.0)));
  CHECK(phi.value(Vec::Ones(g.size())) == doctest::Approx(0.5));
  CHECK(phi.value(Vec::Zero(g.size())) == 0.0);
  CHECK(phi.conjugate(Vec::Ones(g.size())) == doctest::Approx(0.5));

  std::mt19937_64 rng(1);
  std::vector<Potential> pots;
  for (int i = 0; i < g.size(); ++i) pots.push_back(sample_potentials()[i % 7]);
  FieldFunctional mixed(g.weights(), pots);
  const Vec v = random_field(rng, g.size(), -2.0, 2.0);
  double expect = 0.0;
  for (int i = 0; i < g.size(); ++i) expect += g.weights()[i] * potential_conjugate(pots[i], v[i]);
  CHECK(mixed.conjugate(v) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("gradient energy converges to the analytic Dirichlet integral") {
  // (1/2) int_0^1 (1 - 2x)^2 dx = 1/6; midpoint slopes make the error O(h^2).
  double prev = 0.0;
  for (int n : {17, 33, 65, 129}) {
    const Grid g = line(n);
    const GradientEnergy e = grid_gradient_energy(g, 2.0);
    Vec u(g.size());
    for (int i = 0; i < g.size(); ++i) u[i] = g.coord(i, 0) * (1.0 - g.coord(i, 0));
    const double err = std::abs(e.value(u) - 1.0 / 6.0);
    const double h = g.spacing(0);
    CHECK(err <= h * h);
    if (prev > 0.0) CHECK(prev / err > 3.5);
    prev = err;
  }
}

TEST_CASE("functional gradients match finite differences") {
  std::mt19937_64 rng(7);
  const Grid g1 = line(17);
  const Grid g2 = build_grid(2, {Interval{0.0, 1.0}, Interval{0.0, 2.0}}, {6, 7});
  for (const Grid* g : {&g1, &g2})
    for (double p : {2.0, 3.0, 4.5}) {
      std::vector<Potential> pots;
      for (int i = 0; i < g->size(); ++i) pots.push_back(sample_potentials()[(i * 3) % 7]);
      FieldFunctional phi(g->weights(), pots);
      GradientEnergy e = grid_gradient_energy(*g, p);
      e.shift = random_field(rng, g->size(), -0.2, 0.2);
      phi.set_gradient_energy(e).set_fixed(g->boundary_nodes()).set_epsilon(0.3);
      for (int trial = 0; trial < 20; ++trial) {
        const Vec u = phi.masked(random_field(rng, g->size(), -1.5, 1.5));
        const Vec an = phi.grad(u);
        // Differentiate along free coordinates only.
        Vec fd = fd_weighted_grad([&](const Vec& x) { return phi.value(phi.masked(x)); }, u, g->weights());
        fd = phi.masked(fd);
        CHECK(relative_error(an, fd) <= 1e-6);
      }
    }
}

TEST_CASE("fixed nodes make the functional infinite") {
  const Grid g = line(5);
  FieldFunctional phi(g.weights(), std::vector<Potential>(5, Potential::power(1.0, 2.0)));
  phi.set_fixed(g.boundary_nodes());
  Vec u = Vec::Zero(5);
  u[0] = 1e-3;
  CHECK(std::isinf(phi.value(u)));
}

TEST_CASE("gradient-term conjugate matches exhaustive search on three nodes") {
  const Vec w = Vec::Constant(3, 0.5);
  std::vector<Potential> pots{Potential::power(1.0, 3.0) + Potential::quadratic(0.5),
                              Potential::quadratic(1.0) + Potential::linear(0.2),
                              Potential::power(0.5, 4.0) + Potential::quadratic(0.3)};
  FieldFunctional phi(w, pots);
  GradientEnergy e;
  e.p = 3.0;
  e.block = 1;
  e.G.resize(2, 3);
  e.G.insert(0, 0) = -1.0;
  e.G.insert(0, 1) = 1.0;
  e.G.insert(1, 1) = -1.0;
  e.G.insert(1, 2) = 1.0;
  e.cell_weights = Vec::Constant(2, 0.7);
  phi.set_gradient_energy(e);

  const Vec v(Vec::Map(std::vector<double>{0.8, -0.4, 0.3}.data(), 3));
  auto obj = [&](const Vec& u) { return weighted_dot(w, v, u) - phi.value(u); };

  // Grid search on a box, then repeated zoom around the best point.
  Vec best = Vec::Zero(3), centre = Vec::Zero(3);
  double best_val = obj(best), radius = 2.0;
  for (int round = 0; round < 8; ++round) {
    const int m = round == 0 ? 81 : 21;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c) {
          Vec u(3);
          u << centre[0] + radius * (2.0 * a / (m - 1) - 1.0), centre[1] + radius * (2.0 * b / (m - 1) - 1.0),
              centre[2] + radius * (2.0 * c / (m - 1) - 1.0);
          const double val = obj(u);
          if (val > best_val) {
            best_val = val;
            best = u;
          }
        }
    centre = best;
    radius *= round == 0 ? 0.1 : 0.25;
  }
  Vec argmax;
  const double conj = phi.conjugate(v, &argmax);
  CHECK(std::abs(conj - best_val) <= 1e-4);
  CHECK((argmax - best).norm() <= 1e-3);
}

TEST_CASE("Moreau envelope") {
  const Grid g = line(9);
  std::mt19937_64 rng(3);
  FieldFunctional half(g.weights(), std::vector<Potential>(g.size(), Potential::power(1.0, 2.0)));
  const Vec x = random_field(rng, g.size(), -3.0, 3.0);
  const MoreauResult m = moreau_envelope(half, 1.0, x);
  CHECK(m.value == doctest::Approx(weighted_dot(g.weights(), x, x) / 4.0).epsilon(1e-14));
  CHECK((m.prox - x / 2.0).cwiseAbs().maxCoeff() <= 1e-14);

  std::vector<Potential> pots;
  for (int i = 0; i < g.size(); ++i) pots.push_back(sample_potentials()[i % 7]);
  FieldFunctional phi(g.weights(), pots);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec z = random_field(rng, g.size(), -2.0, 2.0);
    double prev = -1e300;
    for (double lambda : {1.0, 0.3, 0.1, 0.03, 0.01}) {
      const MoreauResult r = moreau_envelope(phi, lambda, z);
      for (int i = 0; i < g.size(); ++i) CHECK(std::abs(r.prox[i] - potential_prox(pots[i], lambda, z[i])) <= 1e-12);
      CHECK(r.value >= prev - 1e-14);
      CHECK(r.value <= phi.value(z) + 1e-14);
      prev = r.value;
      // d/dx envelope = (x - prox)/lambda.
      const Vec fd = fd_weighted_grad([&](const Vec& y) { return moreau_envelope(phi, lambda, y).value; }, z,
                                      g.weights());
      CHECK(relative_error(fd, (z - r.prox) / lambda) <= 1e-6);
    }
  }
}

TEST_CASE("Moreau envelope through the inner solve") {
  const Grid g = line(12);
  std::mt19937_64 rng(5);
  FieldFunctional phi(g.weights(), std::vector<Potential>(g.size(), Potential::power(1.0, 3.0)));
  phi.set_gradient_energy(grid_gradient_energy(g, 2.0)).set_fixed(g.boundary_nodes());
  const Vec x = phi.masked(random_field(rng, g.size()));
  const double lambda = 0.2;
  const MoreauResult r = moreau_envelope(phi, lambda, x);
  // Optimality: grad phi(prox) + (prox - x)/lambda = 0 on free nodes.
  CHECK(phi.masked(phi.grad(r.prox) + (r.prox - x) / lambda).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("Fenchel gap") {
  const Grid g = line(21);
  FieldFunctional half(g.weights(), std::vector<Potential>(g.size(), Potential::power(1.0, 2.0)));
  std::mt19937_64 rng(11);
  const Vec u = random_field(rng, g.size());
  CHECK(std::abs(fenchel_gap(half, u, u)) <= 1e-15);
  CHECK(fenchel_gap(half, Vec::Ones(g.size()), Vec::Zero(g.size())) == doctest::Approx(0.5));

  std::vector<Potential> pots;
  for (int i = 0; i < g.size(); ++i) pots.push_back(sample_potentials()[i % 7]);
  FieldFunctional phi(g.weights(), pots);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t)
    worst = std::min(worst, fenchel_gap(phi, random_field(rng, g.size(), -2, 2), random_field(rng, g.size(), -4, 4)));
  CHECK(worst >= -1e-10);
  const Vec v = phi.grad(u);
  CHECK(std::abs(fenchel_gap(phi, u, v)) <= 1e-12);
}

TEST_CASE("Lipschitz subgradient check") {
  const Grid g = line(15);
  std::mt19937_64 rng(13);
  std::vector<std::pair<Vec, Vec>> pairs;
  for (int i = 0; i < 50; ++i) pairs.emplace_back(random_field(rng, g.size(), -3, 3), random_field(rng, g.size(), -3, 3));

  // F = (1/2)|.|^2 gives phi = F* = (1/2)|.|^2.
  FieldFunctional half(g.weights(), std::vector<Potential>(g.size(), Potential::power(1.0, 2.0)));
  CHECK(lipschitz_subgrad_check(half, 1.0, pairs) == doctest::Approx(1.0).epsilon(1e-14));
  // G = 0, eps = 2: dphi(x) = x / 2.
  FieldFunctional zero(g.weights(), std::vector<Potential>(g.size(), Potential{}));
  zero.set_epsilon(2.0);
  CHECK(lipschitz_subgrad_check(zero, 2.0, pairs) == doctest::Approx(1.0).epsilon(1e-14));
  // Smooth composite G with a gradient term.
  std::vector<Potential> pots;
  for (int i = 0; i < g.size(); ++i) pots.push_back(Potential::power(0.5 + 0.1 * i, 4.0) + Potential::linear(0.1 * i));
  FieldFunctional comp(g.weights(), pots);
  comp.set_gradient_energy(grid_gradient_energy(g, 3.0)).set_epsilon(0.7);
  CHECK(lipschitz_subgrad_check(comp, 0.7, pairs) <= 1.0001);
}
