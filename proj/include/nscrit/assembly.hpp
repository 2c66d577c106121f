#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "nscrit/space.hpp"

namespace nscrit {

/// Compressed row storage; column indices sorted and unique per row.
using CsrMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Default assembly exactness for velocity degree k: covers the trilinear
/// convection integrand of degree 3k on affine cells.
inline int assembly_exactness(int k) { return 3 * k; }

/// M_ij = (phi_i, phi_j) over the full vector DOF set.
CsrMatrix assemble_mass(const FESpace& velocity);

/// K_ij = (grad phi_i, grad phi_j); constants are in the kernel.
CsrMatrix assemble_stiffness(const FESpace& velocity);

/// B_ij = (q_i, div phi_j), pressure rows by velocity columns.
CsrMatrix assemble_divergence(const FESpace& velocity, const FESpace& pressure);

/// N(w)_ij = ((w . grad) phi_j, phi_i). The sparsity pattern is that of the
/// mass matrix regardless of w, so factorisations can reuse their analysis.
CsrMatrix assemble_convection(const FESpace& velocity, const FEFunction& w);

/// b_i = quadrature of (f, phi_i) with the given rule. Throws numeric-data on a
/// non-finite sample.
Eigen::VectorXd assemble_load(const FESpace& velocity, const VectorField& f,
                              const QuadratureRule& rule);

/// b_i = quadrature of (grad v, grad phi_i) for an analytic gradient.
Eigen::VectorXd assemble_gradient_load(const FESpace& velocity, const GradientField& grad_v,
                                       const QuadratureRule& rule);

/// Rows and columns kept where the maps are >= 0, renumbered by the maps.
CsrMatrix restrict_matrix(const CsrMatrix& a, const std::vector<int>& row_map, int rows,
                          const std::vector<int>& col_map, int cols);

/// Identity map of length n, used for the unrestricted pressure side.
std::vector<int> identity_map(int n);

/**
 * Time-independent operators of a velocity/pressure pair, with Dirichlet
 * rows and columns already eliminated from the velocity side.
 */
struct Discretization {
  SpacePtr velocity;
  SpacePtr pressure;
  CsrMatrix mass_full;
  CsrMatrix stiffness_full;
  CsrMatrix mass;       // free x free
  CsrMatrix stiffness;  // free x free
  CsrMatrix divergence; // pressure x free
  Eigen::MatrixXd constraints;

  int num_free() const { return velocity->num_free_dofs(); }
  int num_pressure() const { return pressure->num_dofs(); }

  /// ||v||_{L2}^2 and ||grad v||^2 of a free coefficient vector.
  double l2_squared(const Eigen::VectorXd& free) const { return free.dot(mass * free); }
  double h1_squared(const Eigen::VectorXd& free) const { return free.dot(stiffness * free); }
  /// ||div v||_{L2}: exact because div V_h lies in Q_h and the pressure mass is diagonal.
  double divergence_norm(const Eigen::VectorXd& free) const;
  /// Convection restricted to the free DOFs.
  CsrMatrix convection(const FEFunction& w) const;
};

Discretization build_discretization(const SpacePtr& velocity, const SpacePtr& pressure);

}  // namespace nscrit
