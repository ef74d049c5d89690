#include "selfdual/mesh.hpp"

#include <cmath>
#include <string>

#include "selfdual/errors.hpp"

namespace selfdual {

Grid::Grid(int dim, std::array<Interval, 2> extents, std::array<int, 2> counts)
    : dim_(dim), extents_(extents), counts_(counts) {
  if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
  if (dim == 1) {
    counts_[1] = 1;
    extents_[1] = {0.0, 0.0};
  }
  for (int k = 0; k < dim; ++k) {
    if (counts_[k] < 2)
      throw ConfigError("grid axis " + std::to_string(k) + " needs at least 2 nodes");
    const double len = extents_[k].hi - extents_[k].lo;
    if (!(len > 0.0) || !std::isfinite(len))
      throw ConfigError("grid axis " + std::to_string(k) + " has a degenerate extent");
    h_[k] = len / (counts_[k] - 1);
  }

  const Vec wx = axis_weights(0);
  const Vec wy = dim == 2 ? axis_weights(1) : Vec::Ones(1);
  weights_.resize(static_cast<Eigen::Index>(counts_[0]) * counts_[1]);
  for (int j = 0; j < counts_[1]; ++j)
    for (int i = 0; i < counts_[0]; ++i) weights_[index(i, j)] = wx[i] * wy[j];

  const int nx = counts_[0];
  if (dim == 1) {
    facets_.push_back({0, {-1.0, 0.0}, 1.0});
    facets_.push_back({nx - 1, {1.0, 0.0}, 1.0});
    return;
  }
  const int ny = counts_[1];
  for (int j = 0; j < ny; ++j) {
    facets_.push_back({index(0, j), {-1.0, 0.0}, wy[j]});
    facets_.push_back({index(nx - 1, j), {1.0, 0.0}, wy[j]});
  }
  for (int i = 0; i < nx; ++i) {
    facets_.push_back({index(i, 0), {0.0, -1.0}, wx[i]});
    facets_.push_back({index(i, ny - 1), {0.0, 1.0}, wx[i]});
  }
}

Vec Grid::axis_weights(int axis) const {
  Vec w = Vec::Constant(counts_[axis], h_[axis]);
  w[0] *= 0.5;
  w[counts_[axis] - 1] *= 0.5;
  return w;
}

double Grid::coord(int node, int axis) const {
  const int i = axis == 0 ? node % counts_[0] : node / counts_[0];
  if (axis >= dim_) return 0.0;
  // Last node is placed exactly on the upper end.
  if (i == counts_[axis] - 1) return extents_[axis].hi;
  return extents_[axis].lo + i * h_[axis];
}

Eigen::Vector2d Grid::point(int node) const { return {coord(node, 0), coord(node, 1)}; }

double Grid::measure() const {
  double m = extents_[0].hi - extents_[0].lo;
  if (dim_ == 2) m *= extents_[1].hi - extents_[1].lo;
  return m;
}

std::vector<char> Grid::boundary_nodes() const {
  std::vector<char> b(size(), 0);
  for (const Facet& f : facets_) b[f.node] = 1;
  return b;
}

Grid build_grid(int dim, std::array<Interval, 2> extents, std::array<int, 2> counts) {
  return Grid(dim, extents, counts);
}

Eigen::MatrixXd VectorFieldSpec::evaluate(const Grid& grid) const {
  if (static_cast<int>(components.size()) != grid.dim())
    throw ConfigError("vector field has " + std::to_string(components.size()) +
                      " components on a " + std::to_string(grid.dim()) + "-D grid");
  Eigen::MatrixXd a(grid.dim(), grid.size());
  for (int k = 0; k < grid.dim(); ++k) a.row(k) = components[k].evaluate(grid).transpose();
  return a;
}

Vec SigmaDecomposition::plus_weights(int nodes) const {
  Vec w = Vec::Zero(nodes);
  for (const SigmaFacet& f : facets)
    if (f.outflow) w[f.node] += f.weight;
  return w;
}

Vec SigmaDecomposition::minus_weights(int nodes) const {
  Vec w = Vec::Zero(nodes);
  for (const SigmaFacet& f : facets)
    if (!f.outflow) w[f.node] += f.weight;
  return w;
}

SigmaDecomposition sigma_decompose(const Grid& grid, const Eigen::MatrixXd& a) {
  if (a.rows() != grid.dim() || a.cols() != grid.size())
    throw ConfigError("vector field shape does not match the grid");
  SigmaDecomposition s;
  s.facets.reserve(grid.facets().size());
  for (const Facet& f : grid.facets()) {
    double flux = 0.0;
    for (int k = 0; k < grid.dim(); ++k) flux += a(k, f.node) * f.normal[k];
    s.facets.push_back({f.node, flux, std::abs(flux) * f.dsigma, flux >= 0.0});
  }
  return s;
}

}  // namespace selfdual
