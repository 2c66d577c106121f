#include "nscrit/space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nscrit/error.hpp"

namespace nscrit {

namespace {

/// Number of distinct lines through vertex v spanned by its edges.
int count_lines(const Mesh& mesh, int v) {
  std::vector<double> angles;
  for (int c : mesh.vertex_cells()[v]) {
    for (int w : mesh.cell(c)) {
      if (w == v) continue;
      const Point d = mesh.vertex(w) - mesh.vertex(v);
      double a = std::atan2(d.y(), d.x());
      if (a < 0) a += std::numbers::pi;
      if (a >= std::numbers::pi - 1e-9) a -= std::numbers::pi;
      angles.push_back(a);
    }
  }
  std::sort(angles.begin(), angles.end());
  int lines = 0;
  for (std::size_t i = 0; i < angles.size(); ++i)
    if (i == 0 || angles[i] - angles[i - 1] > 1e-9) ++lines;
  return lines;
}

bool is_single_cell_corner(const Mesh& mesh, int v) {
  return mesh.vertex_on_boundary(v) && mesh.vertex_cells()[v].size() == 1;
}

}  // namespace

std::vector<int> unsupported_singular_vertices(const Mesh& mesh) {
  std::vector<int> out;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (count_lines(mesh, v) <= 2 && !is_single_cell_corner(mesh, v)) out.push_back(v);
  return out;
}

SpacePtr build_velocity_space(const MeshPtr& mesh, int k) {
  if (k < 2 || k > 4)
    throw Error(ErrorKind::InvalidArgument, "velocity degree must be 2, 3 or 4");
  if (k < 4 && !mesh->is_alfeld())
    throw Error(ErrorKind::UnstablePair,
                "Scott-Vogelius with k=" + std::to_string(k) + " needs an Alfeld-split mesh");
  if (const auto bad = unsupported_singular_vertices(*mesh); !bad.empty())
    throw Error(ErrorKind::UnstablePair,
                "mesh has a singular vertex (" + std::to_string(bad.front()) + ")");

  auto space = std::shared_ptr<FESpace>(new FESpace());
  space->kind_ = SpaceKind::Velocity;
  space->degree_ = k;
  space->mesh_ = mesh;
  space->lagrange_ = std::make_shared<const LagrangeBasis>(k);
  const LagrangeBasis& basis = *space->lagrange_;
  space->local_size_ = basis.size();

  const int nv = mesh->num_vertices();
  const int ne = mesh->num_edges();
  const int per_edge = k - 1;
  const int per_cell = (k - 1) * (k - 2) / 2;
  const int ns = nv + ne * per_edge + mesh->num_cells() * per_cell;
  space->num_scalar_ = ns;
  space->num_dofs_ = 2 * ns;
  space->nodes_.assign(ns, Point::Zero());

  space->cell_dofs_.resize(mesh->num_cells());
  for (int c = 0; c < mesh->num_cells(); ++c) {
    const auto& verts = mesh->cell(c);
    const auto& edges = mesh->cell_edges(c);
    const AffineMap map = affine_map(*mesh, c);
    auto& dofs = space->cell_dofs_[c];
    dofs.resize(basis.size());
    int local = 0;
    for (int i = 0; i < 3; ++i) dofs[local++] = verts[i];
    for (int e = 0; e < 3; ++e) {
      const int from = verts[(e + 1) % 3], to = verts[(e + 2) % 3];
      const int base = nv + edges[e] * per_edge;
      for (int j = 1; j <= per_edge; ++j)
        dofs[local++] = base + (from < to ? j - 1 : per_edge - j);
    }
    const int interior_base = nv + ne * per_edge + c * per_cell;
    for (int j = 0; j < per_cell; ++j) dofs[local++] = interior_base + j;
    for (int i = 0; i < basis.size(); ++i) space->nodes_[dofs[i]] = map.map(basis.node_point(i));
  }

  std::vector<bool> boundary(ns, false);
  for (int v = 0; v < nv; ++v) boundary[v] = mesh->vertex_on_boundary(v);
  for (int e = 0; e < ne; ++e)
    if (mesh->edge(e).on_boundary)
      for (int j = 0; j < per_edge; ++j) boundary[nv + e * per_edge + j] = true;

  space->free_index_.assign(space->num_dofs_, -1);
  for (int comp = 0; comp < 2; ++comp) {
    for (int s = 0; s < ns; ++s) {
      const int dof = comp * ns + s;
      if (boundary[s]) {
        space->dirichlet_.push_back(dof);
      } else {
        space->free_index_[dof] = static_cast<int>(space->free_dofs_.size());
        space->free_dofs_.push_back(dof);
      }
    }
  }
  return space;
}

SpacePtr build_pressure_space(const MeshPtr& mesh, int degree) {
  auto space = std::shared_ptr<FESpace>(new FESpace());
  space->kind_ = SpaceKind::Pressure;
  space->degree_ = degree;
  space->mesh_ = mesh;
  space->pressure_ = std::make_shared<const PressureBasis>(degree);
  const PressureBasis& basis = *space->pressure_;
  const int nloc = basis.size();
  const int nc = mesh->num_cells();
  space->local_size_ = nloc;
  space->num_dofs_ = nc * nloc;
  space->num_scalar_ = space->num_dofs_;
  space->cell_dofs_.resize(nc);
  space->mean_ = Eigen::VectorXd::Zero(space->num_dofs_);
  space->mass_diag_.resize(space->num_dofs_);
  for (int c = 0; c < nc; ++c) {
    const double det = std::abs(affine_map(*mesh, c).det);
    auto& dofs = space->cell_dofs_[c];
    for (int i = 0; i < nloc; ++i) {
      dofs.push_back(c * nloc + i);
      space->mean_[c * nloc + i] = det * basis.reference_means()[i];
      space->mass_diag_[c * nloc + i] = det;
    }
  }

  for (int v = 0; v < mesh->num_vertices(); ++v)
    if (is_single_cell_corner(*mesh, v))
      space->corners_.push_back({v, mesh->vertex_cells()[v].front()});

  space->constraints_ = Eigen::MatrixXd::Zero(space->num_dofs_, 1 + space->corners_.size());
  space->constraints_.col(0) = space->mean_;
  Eigen::VectorXd values(nloc);
  for (std::size_t i = 0; i < space->corners_.size(); ++i) {
    const auto& corner = space->corners_[i];
    const Eigen::Vector3d lambda = mesh->barycentric(corner.cell, mesh->vertex(corner.vertex));
    basis.eval(Eigen::Vector2d(lambda[1], lambda[2]), values);
    for (int j = 0; j < nloc; ++j) space->constraints_(corner.cell * nloc + j, 1 + i) = values[j];
  }
  return space;
}

FEFunction interpolate(const SpacePtr& velocity, const VectorField& field) {
  FEFunction f(velocity);
  const int ns = velocity->num_scalar_dofs();
  for (int s = 0; s < ns; ++s) {
    const Eigen::Vector2d value = field(velocity->scalar_nodes()[s]);
    f.coefficients[s] = value.x();
    f.coefficients[ns + s] = value.y();
  }
  return f;
}

FEFunction from_free(const SpacePtr& velocity, const Eigen::VectorXd& free) {
  FEFunction f(velocity);
  const auto& dofs = velocity->free_dofs();
  for (std::size_t i = 0; i < dofs.size(); ++i) f.coefficients[dofs[i]] = free[static_cast<Eigen::Index>(i)];
  return f;
}

Eigen::VectorXd to_free(const FEFunction& f) {
  const auto& dofs = f.space->free_dofs();
  Eigen::VectorXd out(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) out[static_cast<Eigen::Index>(i)] = f.coefficients[dofs[i]];
  return out;
}

void evaluate_in_cell(const FEFunction& f, int cell, const Eigen::Vector2d& ref,
                      Eigen::Vector2d& value, Eigen::Matrix2d& gradient) {
  const FESpace& space = *f.space;
  const LagrangeBasis& basis = space.lagrange();
  const int n = basis.size();
  Eigen::VectorXd v(n), gx(n), gy(n);
  basis.eval(ref, v, gx, gy);
  const AffineMap map = affine_map(*space.mesh(), cell);
  const auto& dofs = space.cell_dofs(cell);
  const int ns = space.num_scalar_dofs();
  value.setZero();
  Eigen::Matrix2d ref_grad = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    for (int comp = 0; comp < 2; ++comp) {
      const double coef = f.coefficients[comp * ns + dofs[i]];
      value[comp] += coef * v[i];
      ref_grad(comp, 0) += coef * gx[i];
      ref_grad(comp, 1) += coef * gy[i];
    }
  }
  // physical gradient: rows are components, grad = ref_grad * J^{-1}
  gradient = ref_grad * map.inverse_transpose.transpose();
}

Eigen::VectorXd evaluate(const FEFunction& f, const Point& x) {
  const FESpace& space = *f.space;
  const Location loc = space.mesh()->locate_point(x);
  const Eigen::Vector2d ref(loc.barycentric[1], loc.barycentric[2]);
  if (space.kind() == SpaceKind::Velocity) {
    Eigen::Vector2d value;
    Eigen::Matrix2d grad;
    evaluate_in_cell(f, loc.cell, ref, value, grad);
    return value;
  }
  const PressureBasis& basis = space.pressure_basis();
  Eigen::VectorXd values(basis.size());
  basis.eval(ref, values);
  const int base = loc.cell * basis.size();
  Eigen::VectorXd out(1);
  out[0] = values.dot(f.coefficients.segment(base, basis.size()));
  return out;
}

Eigen::Vector2d evaluate_velocity(const FEFunction& f, const Point& x) {
  if (f.space->kind() != SpaceKind::Velocity)
    throw Error(ErrorKind::InvalidArgument, "evaluate_velocity on a pressure function");
  return evaluate(f, x);
}

}  // namespace nscrit
