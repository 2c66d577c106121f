#include "nscrit/projections.hpp"

#include <algorithm>
#include <cmath>

#include "nscrit/error.hpp"

namespace nscrit {

namespace {

Eigen::VectorXd restrict_vector(const Eigen::VectorXd& full, const FESpace& velocity) {
  const auto& dofs = velocity.free_dofs();
  Eigen::VectorXd out(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) out[static_cast<Eigen::Index>(i)] = full[dofs[i]];
  return out;
}

ProjectionResult solve_projection(const CsrMatrix& block, const Eigen::VectorXd& rhs_free,
                                  const Discretization& disc, const SolverOptions& options) {
  SaddleSystem system{block, disc.divergence, rhs_free, Eigen::VectorXd::Zero(disc.num_pressure()),
                      disc.constraints};
  const SaddleSolution sol = solve(system, options);
  return {from_free(disc.velocity, sol.u), FEFunction(disc.pressure, sol.p), sol.report};
}

void require_same_space(const FEFunction& f, const Discretization& disc) {
  if (f.space != disc.velocity)
    throw Error(ErrorKind::InvalidArgument, "function does not belong to the velocity space");
}

}  // namespace

ProjectionResult l2_project_load(const Eigen::VectorXd& load_full, const Discretization& disc,
                                 const SolverOptions& options) {
  return solve_projection(disc.mass, restrict_vector(load_full, *disc.velocity), disc, options);
}

ProjectionResult l2_project_divfree(const VectorField& data, const Discretization& disc,
                                    const QuadratureRule& rule, const SolverOptions& options) {
  return l2_project_load(assemble_load(*disc.velocity, data, rule), disc, options);
}

ProjectionResult l2_project_divfree(const FEFunction& data, const Discretization& disc,
                                    const SolverOptions& options) {
  require_same_space(data, disc);
  return l2_project_load(disc.mass_full * data.coefficients, disc, options);
}

ProjectionResult stokes_ritz_project(const GradientField& grad_v, const Discretization& disc,
                                     const QuadratureRule& rule, const SolverOptions& options) {
  const Eigen::VectorXd load = assemble_gradient_load(*disc.velocity, grad_v, rule);
  return solve_projection(disc.stiffness, restrict_vector(load, *disc.velocity), disc, options);
}

ProjectionResult stokes_ritz_project(const FEFunction& v, const Discretization& disc,
                                     const SolverOptions& options) {
  require_same_space(v, disc);
  const Eigen::VectorXd load = disc.stiffness_full * v.coefficients;
  return solve_projection(disc.stiffness, restrict_vector(load, *disc.velocity), disc, options);
}

ProjectionResult apply_discrete_stokes(const FEFunction& phi, const Discretization& disc,
                                       const SolverOptions& options) {
  require_same_space(phi, disc);
  const Eigen::VectorXd free = to_free(phi);
  if (disc.divergence_norm(free) > 1e-9 * std::sqrt(std::max(disc.h1_squared(free), 0.0)))
    throw Error(ErrorKind::InvalidState, "discrete Stokes operator needs a divergence-free argument");
  const Eigen::VectorXd load = -(disc.stiffness_full * phi.coefficients);
  return solve_projection(disc.mass, restrict_vector(load, *disc.velocity), disc, options);
}

}  // namespace nscrit
