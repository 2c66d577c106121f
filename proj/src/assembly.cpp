#include "nscrit/assembly.hpp"

#include <algorithm>
#include <cmath>

#include "nscrit/error.hpp"

namespace nscrit {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

/// Physical gradients of the scalar basis on one cell at the rule points.
void physical_gradients(const Tabulation& tab, const AffineMap& map, Eigen::MatrixXd& gx,
                        Eigen::MatrixXd& gy) {
  const Eigen::Matrix2d& it = map.inverse_transpose;
  gx = it(0, 0) * tab.dx + it(0, 1) * tab.dy;
  gy = it(1, 0) * tab.dx + it(1, 1) * tab.dy;
}

Eigen::VectorXd rule_weights(const QuadratureRule& rule) {
  return Eigen::Map<const Eigen::VectorXd>(rule.weights.data(), rule.size());
}

/// Blocked products are not bitwise symmetric; averaging with the transpose is.
void symmetrize(Eigen::MatrixXd& m) {
  const Eigen::MatrixXd t = m.transpose();
  m = 0.5 * (m + t);
}

/// Adds a scalar local matrix to both diagonal component blocks.
void scatter_vector_block(const FESpace& space, const std::vector<int>& dofs,
                          const Eigen::MatrixXd& local, Triplets& out) {
  const int ns = space.num_scalar_dofs();
  const int n = static_cast<int>(dofs.size());
  for (int comp = 0; comp < 2; ++comp)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        out.emplace_back(comp * ns + dofs[a], comp * ns + dofs[b], local(a, b));
}

CsrMatrix from_triplets(int rows, int cols, const Triplets& triplets) {
  CsrMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace

CsrMatrix assemble_mass(const FESpace& velocity) {
  const Mesh& mesh = *velocity.mesh();
  const QuadratureRule& rule = quadrature(assembly_exactness(velocity.degree()));
  const Tabulation tab = velocity.lagrange().tabulate(rule.points);
  const Eigen::VectorXd w = rule_weights(rule);
  Triplets triplets;
  triplets.reserve(2 * static_cast<std::size_t>(mesh.num_cells()) * velocity.local_size() *
                   velocity.local_size());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double det = std::abs(affine_map(mesh, c).det);
    Eigen::MatrixXd local = tab.values.transpose() * (det * w).asDiagonal() * tab.values;
    symmetrize(local);
    scatter_vector_block(velocity, velocity.cell_dofs(c), local, triplets);
  }
  return from_triplets(velocity.num_dofs(), velocity.num_dofs(), triplets);
}

CsrMatrix assemble_stiffness(const FESpace& velocity) {
  const Mesh& mesh = *velocity.mesh();
  const QuadratureRule& rule = quadrature(assembly_exactness(velocity.degree()));
  const Tabulation tab = velocity.lagrange().tabulate(rule.points);
  const Eigen::VectorXd w = rule_weights(rule);
  Triplets triplets;
  triplets.reserve(2 * static_cast<std::size_t>(mesh.num_cells()) * velocity.local_size() *
                   velocity.local_size());
  Eigen::MatrixXd gx, gy;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const AffineMap map = affine_map(mesh, c);
    physical_gradients(tab, map, gx, gy);
    const auto weights = (std::abs(map.det) * w).asDiagonal();
    Eigen::MatrixXd local = gx.transpose() * weights * gx + gy.transpose() * weights * gy;
    symmetrize(local);
    scatter_vector_block(velocity, velocity.cell_dofs(c), local, triplets);
  }
  return from_triplets(velocity.num_dofs(), velocity.num_dofs(), triplets);
}

CsrMatrix assemble_divergence(const FESpace& velocity, const FESpace& pressure) {
  if (velocity.mesh() != pressure.mesh())
    throw Error(ErrorKind::IncompatibleMesh, "velocity and pressure live on different meshes");
  const Mesh& mesh = *velocity.mesh();
  const QuadratureRule& rule = quadrature(assembly_exactness(velocity.degree()));
  const Tabulation tab = velocity.lagrange().tabulate(rule.points);
  const Eigen::MatrixXd qtab = pressure.pressure_basis().tabulate(rule.points);
  const Eigen::VectorXd w = rule_weights(rule);
  const int ns = velocity.num_scalar_dofs();
  const int nq = pressure.local_size();
  Triplets triplets;
  triplets.reserve(2 * static_cast<std::size_t>(mesh.num_cells()) * nq * velocity.local_size());
  Eigen::MatrixXd gx, gy;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const AffineMap map = affine_map(mesh, c);
    physical_gradients(tab, map, gx, gy);
    const auto weights = (std::abs(map.det) * w).asDiagonal();
    const Eigen::MatrixXd bx = qtab.transpose() * weights * gx;
    const Eigen::MatrixXd by = qtab.transpose() * weights * gy;
    const auto& vdofs = velocity.cell_dofs(c);
    const auto& pdofs = pressure.cell_dofs(c);
    for (int i = 0; i < nq; ++i)
      for (int b = 0; b < velocity.local_size(); ++b) {
        triplets.emplace_back(pdofs[i], vdofs[b], bx(i, b));
        triplets.emplace_back(pdofs[i], ns + vdofs[b], by(i, b));
      }
  }
  return from_triplets(pressure.num_dofs(), velocity.num_dofs(), triplets);
}

CsrMatrix assemble_convection(const FESpace& velocity, const FEFunction& w) {
  const FESpace& wspace = *w.space;
  if (wspace.kind() != SpaceKind::Velocity || wspace.mesh() != velocity.mesh())
    throw Error(ErrorKind::IncompatibleMesh, "convecting field must be a velocity on the same mesh");
  const Mesh& mesh = *velocity.mesh();
  const int exactness = std::min(
      20, std::max(assembly_exactness(velocity.degree()), 2 * velocity.degree() + wspace.degree() - 1));
  const QuadratureRule& rule = quadrature(exactness);
  const Tabulation tab = velocity.lagrange().tabulate(rule.points);
  const Tabulation wtab = wspace.lagrange().tabulate(rule.points);
  const Eigen::VectorXd weights = rule_weights(rule);
  const int nsw = wspace.num_scalar_dofs();
  Triplets triplets;
  triplets.reserve(2 * static_cast<std::size_t>(mesh.num_cells()) * velocity.local_size() *
                   velocity.local_size());
  Eigen::MatrixXd gx, gy;
  Eigen::VectorXd wx(wspace.local_size()), wy(wspace.local_size());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const AffineMap map = affine_map(mesh, c);
    physical_gradients(tab, map, gx, gy);
    const auto& wdofs = wspace.cell_dofs(c);
    for (int i = 0; i < wspace.local_size(); ++i) {
      wx[i] = w.coefficients[wdofs[i]];
      wy[i] = w.coefficients[nsw + wdofs[i]];
    }
    const Eigen::VectorXd wq_x = wtab.values * wx;
    const Eigen::VectorXd wq_y = wtab.values * wy;
    const Eigen::VectorXd scale = std::abs(map.det) * weights;
    const Eigen::MatrixXd transport =
        (scale.cwiseProduct(wq_x)).asDiagonal() * gx + (scale.cwiseProduct(wq_y)).asDiagonal() * gy;
    const Eigen::MatrixXd local = tab.values.transpose() * transport;
    scatter_vector_block(velocity, velocity.cell_dofs(c), local, triplets);
  }
  return from_triplets(velocity.num_dofs(), velocity.num_dofs(), triplets);
}

Eigen::VectorXd assemble_load(const FESpace& velocity, const VectorField& f,
                              const QuadratureRule& rule) {
  const Mesh& mesh = *velocity.mesh();
  const Tabulation tab = velocity.lagrange().tabulate(rule.points);
  const int ns = velocity.num_scalar_dofs();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(velocity.num_dofs());
  Eigen::VectorXd fx(rule.size()), fy(rule.size());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const AffineMap map = affine_map(mesh, c);
    const double det = std::abs(map.det);
    for (int q = 0; q < rule.size(); ++q) {
      const Eigen::Vector2d value = f(map.map(rule.points[q]));
      if (!std::isfinite(value.x()) || !std::isfinite(value.y()))
        throw Error(ErrorKind::NumericData,
                    "non-finite data sample in cell " + std::to_string(c));
      fx[q] = value.x() * rule.weights[q] * det;
      fy[q] = value.y() * rule.weights[q] * det;
    }
    const Eigen::VectorXd bx = tab.values.transpose() * fx;
    const Eigen::VectorXd by = tab.values.transpose() * fy;
    const auto& dofs = velocity.cell_dofs(c);
    for (std::size_t a = 0; a < dofs.size(); ++a) {
      b[dofs[a]] += bx[static_cast<Eigen::Index>(a)];
      b[ns + dofs[a]] += by[static_cast<Eigen::Index>(a)];
    }
  }
  return b;
}

Eigen::VectorXd assemble_gradient_load(const FESpace& velocity, const GradientField& grad_v,
                                       const QuadratureRule& rule) {
  const Mesh& mesh = *velocity.mesh();
  const Tabulation tab = velocity.lagrange().tabulate(rule.points);
  const int ns = velocity.num_scalar_dofs();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(velocity.num_dofs());
  Eigen::MatrixXd gx, gy;
  Eigen::VectorXd g00(rule.size()), g01(rule.size()), g10(rule.size()), g11(rule.size());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const AffineMap map = affine_map(mesh, c);
    physical_gradients(tab, map, gx, gy);
    const double det = std::abs(map.det);
    for (int q = 0; q < rule.size(); ++q) {
      const Eigen::Matrix2d g = grad_v(map.map(rule.points[q])) * (rule.weights[q] * det);
      if (!g.allFinite())
        throw Error(ErrorKind::NumericData, "non-finite gradient sample in cell " + std::to_string(c));
      g00[q] = g(0, 0);
      g01[q] = g(0, 1);
      g10[q] = g(1, 0);
      g11[q] = g(1, 1);
    }
    const Eigen::VectorXd bx = gx.transpose() * g00 + gy.transpose() * g01;
    const Eigen::VectorXd by = gx.transpose() * g10 + gy.transpose() * g11;
    const auto& dofs = velocity.cell_dofs(c);
    for (std::size_t a = 0; a < dofs.size(); ++a) {
      b[dofs[a]] += bx[static_cast<Eigen::Index>(a)];
      b[ns + dofs[a]] += by[static_cast<Eigen::Index>(a)];
    }
  }
  return b;
}

CsrMatrix restrict_matrix(const CsrMatrix& a, const std::vector<int>& row_map, int rows,
                          const std::vector<int>& col_map, int cols) {
  Triplets triplets;
  triplets.reserve(a.nonZeros());
  for (int r = 0; r < a.outerSize(); ++r) {
    const int rr = row_map[r];
    if (rr < 0) continue;
    for (CsrMatrix::InnerIterator it(a, r); it; ++it) {
      const int cc = col_map[it.col()];
      if (cc >= 0) triplets.emplace_back(rr, cc, it.value());
    }
  }
  return from_triplets(rows, cols, triplets);
}

std::vector<int> identity_map(int n) {
  std::vector<int> map(n);
  for (int i = 0; i < n; ++i) map[i] = i;
  return map;
}

double Discretization::divergence_norm(const Eigen::VectorXd& free) const {
  const Eigen::VectorXd bu = divergence * free;
  return std::sqrt(bu.cwiseProduct(bu).cwiseQuotient(pressure->mass_diagonal()).sum());
}

CsrMatrix Discretization::convection(const FEFunction& w) const {
  const auto& map = velocity->free_index();
  return restrict_matrix(assemble_convection(*velocity, w), map, num_free(), map, num_free());
}

Discretization build_discretization(const SpacePtr& velocity, const SpacePtr& pressure) {
  if (pressure->degree() != velocity->degree() - 1)
    throw Error(ErrorKind::InvalidArgument, "pressure degree must be velocity degree - 1");
  Discretization d;
  d.velocity = velocity;
  d.pressure = pressure;
  d.mass_full = assemble_mass(*velocity);
  d.stiffness_full = assemble_stiffness(*velocity);
  const auto& map = velocity->free_index();
  const int nf = velocity->num_free_dofs();
  d.mass = restrict_matrix(d.mass_full, map, nf, map, nf);
  d.stiffness = restrict_matrix(d.stiffness_full, map, nf, map, nf);
  d.divergence = restrict_matrix(assemble_divergence(*velocity, *pressure),
                                 identity_map(pressure->num_dofs()), pressure->num_dofs(), map, nf);
  d.constraints = pressure->constraint_vectors();
  return d;
}

}  // namespace nscrit
