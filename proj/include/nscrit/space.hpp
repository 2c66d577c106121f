#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "nscrit/element.hpp"
#include "nscrit/mesh.hpp"

namespace nscrit {

enum class SpaceKind { Velocity, Pressure };

/// A vertex owned by a single cell whose two edges both lie on the boundary.
/// Every zero-trace velocity has vanishing divergence there.
struct SingularCorner {
  int vertex;
  int cell;
};

/**
 * Global finite element space on a mesh.
 *
 * Velocity: continuous vector P_k. Scalar node s carries components
 * (s, num_scalar_dofs() + s); boundary nodes are Dirichlet.
 * Pressure: discontinuous P_{k-1} with the orthonormal `PressureBasis`;
 * cell c owns DOFs [c * local_size, (c + 1) * local_size).
 */
class FESpace {
 public:
  SpaceKind kind() const { return kind_; }
  int degree() const { return degree_; }
  const MeshPtr& mesh() const { return mesh_; }

  int num_dofs() const { return num_dofs_; }
  int local_size() const { return local_size_; }
  /// Scalar node count (velocity) or num_dofs (pressure).
  int num_scalar_dofs() const { return num_scalar_; }

  /// Local-to-global scalar map for cell c.
  const std::vector<int>& cell_dofs(int c) const { return cell_dofs_[c]; }

  // velocity only
  const LagrangeBasis& lagrange() const { return *lagrange_; }
  const std::vector<Point>& scalar_nodes() const { return nodes_; }
  const std::vector<int>& dirichlet_dofs() const { return dirichlet_; }
  /// Free (non-Dirichlet) index of a global DOF, -1 if constrained.
  const std::vector<int>& free_index() const { return free_index_; }
  const std::vector<int>& free_dofs() const { return free_dofs_; }
  int num_free_dofs() const { return static_cast<int>(free_dofs_.size()); }

  // pressure only
  const PressureBasis& pressure_basis() const { return *pressure_; }
  /// m with m.p = integral of p over the domain.
  const Eigen::VectorXd& mean_vector() const { return mean_; }
  /// Diagonal of the (diagonal) pressure mass matrix.
  const Eigen::VectorXd& mass_diagonal() const { return mass_diag_; }
  const std::vector<SingularCorner>& singular_corners() const { return corners_; }
  /// Columns: mean vector, then one point-evaluation functional per singular
  /// corner. These span M_Q times the kernel of B^T.
  const Eigen::MatrixXd& constraint_vectors() const { return constraints_; }

 private:
  friend std::shared_ptr<const FESpace> build_velocity_space(const MeshPtr&, int);
  friend std::shared_ptr<const FESpace> build_pressure_space(const MeshPtr&, int);
  FESpace() = default;

  SpaceKind kind_ = SpaceKind::Velocity;
  int degree_ = 0;
  MeshPtr mesh_;
  int num_dofs_ = 0;
  int num_scalar_ = 0;
  int local_size_ = 0;
  std::vector<std::vector<int>> cell_dofs_;

  std::shared_ptr<const LagrangeBasis> lagrange_;
  std::vector<Point> nodes_;
  std::vector<int> dirichlet_;
  std::vector<int> free_index_;
  std::vector<int> free_dofs_;

  std::shared_ptr<const PressureBasis> pressure_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd mass_diag_;
  std::vector<SingularCorner> corners_;
  Eigen::MatrixXd constraints_;
};

using SpacePtr = std::shared_ptr<const FESpace>;

/// Continuous vector P_k, k in {2, 3, 4}; k < 4 requires an Alfeld mesh.
SpacePtr build_velocity_space(const MeshPtr& mesh, int k);

/// Discontinuous P_degree with zero-mean bookkeeping.
SpacePtr build_pressure_space(const MeshPtr& mesh, int degree);

/// Vertices where the incident edges lie on at most two lines, excluding the
/// single-cell corners handled by `SingularCorner`. Non-empty means the
/// Scott-Vogelius pair is not supported on this mesh.
std::vector<int> unsupported_singular_vertices(const Mesh& mesh);

using VectorField = std::function<Eigen::Vector2d(const Point&)>;
using ScalarField = std::function<double(const Point&)>;
/// Gradient rows are components: G(i, j) = d u_i / d x_j.
using GradientField = std::function<Eigen::Matrix2d(const Point&)>;

/// Coefficient vector bound to a space.
struct FEFunction {
  SpacePtr space;
  Eigen::VectorXd coefficients;

  FEFunction() = default;
  explicit FEFunction(SpacePtr s)
      : space(std::move(s)), coefficients(Eigen::VectorXd::Zero(space->num_dofs())) {}
  FEFunction(SpacePtr s, Eigen::VectorXd c) : space(std::move(s)), coefficients(std::move(c)) {}
};

/// Nodal interpolant. Boundary values are kept, so the result need not lie in
/// the zero-trace space.
FEFunction interpolate(const SpacePtr& velocity, const VectorField& field);

/// Velocity DOF vector from free coefficients (Dirichlet entries zero).
FEFunction from_free(const SpacePtr& velocity, const Eigen::VectorXd& free);
Eigen::VectorXd to_free(const FEFunction& f);

/// Value at x: two components for velocity, one for pressure.
Eigen::VectorXd evaluate(const FEFunction& f, const Point& x);
Eigen::Vector2d evaluate_velocity(const FEFunction& f, const Point& x);

/// Value and gradient of a velocity restricted to cell c at reference point ref.
void evaluate_in_cell(const FEFunction& f, int cell, const Eigen::Vector2d& ref,
                      Eigen::Vector2d& value, Eigen::Matrix2d& gradient);

}  // namespace nscrit
