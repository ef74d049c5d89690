#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "selfdual/expression.hpp"

namespace selfdual {

using Vec = Eigen::VectorXd;

/// Boundary facet attached to a node. Corner nodes of a 2-D box carry two.
struct Facet {
  int node;
  Eigen::Vector2d normal;  // outward unit normal; second entry is 0 in 1-D
  double dsigma;           // surface weight (1 for the two endpoints in 1-D)
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Tensor-product box with trapezoid quadrature. Node index is i + nx*j.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, std::array<Interval, 2> extents, std::array<int, 2> counts);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(weights_.size()); }
  int count(int axis) const { return counts_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  const Interval& extent(int axis) const { return extents_[axis]; }
  double coord(int node, int axis) const;
  Eigen::Vector2d point(int node) const;
  int index(int i, int j = 0) const { return i + counts_[0] * j; }

  const Vec& weights() const { return weights_; }
  const std::vector<Facet>& facets() const { return facets_; }
  double measure() const;
  /// True for nodes on the box boundary.
  std::vector<char> boundary_nodes() const;

  /// Trapezoid weights of one axis.
  Vec axis_weights(int axis) const;

 private:
  int dim_ = 1;
  std::array<Interval, 2> extents_{};
  std::array<int, 2> counts_{1, 1};
  std::array<double, 2> h_{0.0, 0.0};
  Vec weights_;
  std::vector<Facet> facets_;
};

/// Throws ConfigError for counts < 2 or degenerate extents.
Grid build_grid(int dim, std::array<Interval, 2> extents, std::array<int, 2> counts);

/// One expression per component; evaluated at nodes.
struct VectorFieldSpec {
  std::vector<Expression> components;

  /// dim x nodes matrix of component values.
  Eigen::MatrixXd evaluate(const Grid& grid) const;
};

struct SigmaFacet {
  int node;
  double flux;    // a.n at the node
  double weight;  // |a.n| dsigma
  bool outflow;   // true on Sigma+ (a.n >= 0)
};

/// Partition of boundary facets into Sigma+ = {a.n >= 0} and Sigma- = {a.n < 0}.
struct SigmaDecomposition {
  std::vector<SigmaFacet> facets;

  /// Per-node accumulated weights on Sigma+ and Sigma-.
  Vec plus_weights(int nodes) const;
  Vec minus_weights(int nodes) const;
};

/// a has one row per axis and one column per node.
SigmaDecomposition sigma_decompose(const Grid& grid, const Eigen::MatrixXd& a);

}  // namespace selfdual
