#pragma once

#include "nscrit/assembly.hpp"
#include "nscrit/saddle_solver.hpp"

namespace nscrit {

struct ProjectionResult {
  FEFunction u;
  FEFunction multiplier;  // eta_h in Q_h
  ResidualReport report;
};

/// L2-orthogonal projection onto the divergence-free subspace X_h:
///   (u0 - u_h, v) - (eta, div v) = 0,  (div u_h, q) = 0.
ProjectionResult l2_project_divfree(const VectorField& data, const Discretization& disc,
                                    const QuadratureRule& rule, const SolverOptions& options = {});
ProjectionResult l2_project_divfree(const FEFunction& data, const Discretization& disc,
                                    const SolverOptions& options = {});
/// Same, with the load vector (u0, phi_i) over all velocity DOFs precomputed.
ProjectionResult l2_project_load(const Eigen::VectorXd& load_full, const Discretization& disc,
                                 const SolverOptions& options = {});

/// Stokes-Ritz projection: (grad(v - R v), grad w) = 0 for all w in X_h.
ProjectionResult stokes_ritz_project(const GradientField& grad_v, const Discretization& disc,
                                     const QuadratureRule& rule, const SolverOptions& options = {});
ProjectionResult stokes_ritz_project(const FEFunction& v, const Discretization& disc,
                                     const SolverOptions& options = {});

/// Discrete Stokes operator: z in X_h with (z, v) = -(grad phi, grad v) on X_h.
ProjectionResult apply_discrete_stokes(const FEFunction& phi, const Discretization& disc,
                                       const SolverOptions& options = {});

}  // namespace nscrit
