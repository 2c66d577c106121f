#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

namespace nscrit {

/// Points and weights on the reference triangle {(x, y): x, y >= 0, x + y <= 1}.
struct QuadratureRule {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;
  int exactness_degree = 0;

  int size() const { return static_cast<int>(points.size()); }
};

/// Collapsed Gauss-Legendre rule integrating all polynomials of total degree
/// <= exactness_degree exactly; all points strictly interior, all weights
/// positive. Valid range is [1, 20]. Rules are built once and cached.
const QuadratureRule& quadrature(int exactness_degree);

/// Values and reference gradients of a basis at a set of points.
struct Tabulation {
  Eigen::MatrixXd values;  // points x functions
  Eigen::MatrixXd dx;      // d/dxi
  Eigen::MatrixXd dy;      // d/deta
};

/**
 * Continuous Lagrange basis of degree 1..4 on the reference triangle.
 *
 * Node order: the three vertices, then the k-1 nodes of each edge (local edge
 * i runs from vertex (i+1)%3 to vertex (i+2)%3), then interior nodes.
 */
class LagrangeBasis {
 public:
  explicit LagrangeBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  /// Barycentric multi-index (sums to degree) of each node.
  const std::vector<std::array<int, 3>>& multi_indices() const { return nodes_; }
  Eigen::Vector2d node_point(int i) const;

  void eval(const Eigen::Vector2d& x, Eigen::Ref<Eigen::VectorXd> values,
            Eigen::Ref<Eigen::VectorXd> dx, Eigen::Ref<Eigen::VectorXd> dy) const;
  Tabulation tabulate(const std::vector<Eigen::Vector2d>& points) const;

 private:
  int degree_;
  std::vector<std::array<int, 3>> nodes_;
};

/// Values and gradients of the degree-k Lagrange basis at a reference point.
struct LagrangeValues {
  Eigen::VectorXd values;
  Eigen::Matrix<double, Eigen::Dynamic, 2> gradients;
};
LagrangeValues lagrange_eval(int k, const Eigen::Vector2d& x);

/**
 * Discontinuous basis of P_degree: monomials in reference coordinates,
 * orthonormalised in L2 of the reference triangle. On an affine cell the
 * local mass matrix is |det J| times the identity, and only function 0 (a
 * constant) has nonzero mean.
 */
class PressureBasis {
 public:
  explicit PressureBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(exponents_.size()); }

  void eval(const Eigen::Vector2d& x, Eigen::Ref<Eigen::VectorXd> values) const;
  Eigen::MatrixXd tabulate(const std::vector<Eigen::Vector2d>& points) const;
  /// Integral over the reference triangle of each function.
  const Eigen::VectorXd& reference_means() const { return means_; }

 private:
  int degree_;
  std::vector<std::array<int, 2>> exponents_;
  Eigen::MatrixXd coefficients_;  // row i: function i in the monomial basis
  Eigen::VectorXd means_;
};

inline int lagrange_dimension(int k) { return (k + 1) * (k + 2) / 2; }

}  // namespace nscrit
