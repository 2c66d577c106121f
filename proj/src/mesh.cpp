#include "nscrit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "nscrit/error.hpp"

namespace nscrit {

namespace {

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

bool on_square_boundary(const Point& p) {
  constexpr double tol = Mesh::kTolerance;
  return std::abs(p.x()) < tol || std::abs(p.x() - 1.0) < tol || std::abs(p.y()) < tol ||
         std::abs(p.y() - 1.0) < tol;
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> cells, MeshOrigin origin,
           int structured_n, std::shared_ptr<const Mesh> parent, std::vector<int> parent_cell)
    : vertices_(std::move(vertices)),
      cells_(std::move(cells)),
      origin_(origin),
      structured_n_(structured_n),
      parent_(std::move(parent)),
      parent_cell_(std::move(parent_cell)) {
  if (cells_.empty()) throw Error(ErrorKind::InvalidArgument, "mesh without cells");
  if (parent_ && parent_cell_.size() != cells_.size())
    throw Error(ErrorKind::InvalidArgument, "parent map size does not match cell count");
  for (const auto& c : cells_)
    for (int v : c)
      if (v < 0 || v >= num_vertices())
        throw Error(ErrorKind::InvalidArgument, "cell references unknown vertex");
  build_edges();
  for (int c = 0; c < num_cells(); ++c) h_ = std::max(h_, cell_diameter(c));
  build_index();
}

void Mesh::build_edges() {
  std::unordered_map<std::uint64_t, int> lookup;
  lookup.reserve(cells_.size() * 2);
  cell_edges_.resize(cells_.size());
  for (int c = 0; c < num_cells(); ++c) {
    for (int i = 0; i < 3; ++i) {
      const int a = cells_[c][(i + 1) % 3];
      const int b = cells_[c][(i + 2) % 3];
      const auto [it, inserted] = lookup.try_emplace(edge_key(a, b), num_edges());
      if (inserted) {
        Edge e;
        e.vertices = {std::min(a, b), std::max(a, b)};
        e.cells = {c, -1};
        edges_.push_back(e);
      } else {
        Edge& e = edges_[it->second];
        if (e.cells[1] != -1)
          throw Error(ErrorKind::InvalidArgument, "edge shared by more than two cells");
        e.cells[1] = c;
      }
      cell_edges_[c][i] = it->second;
    }
  }
  vertex_boundary_.assign(vertices_.size(), false);
  for (auto& e : edges_) {
    e.on_boundary = e.cells[1] == -1;
    if (e.on_boundary) {
      vertex_boundary_[e.vertices[0]] = true;
      vertex_boundary_[e.vertices[1]] = true;
    }
  }
  vertex_cells_.assign(vertices_.size(), {});
  for (int c = 0; c < num_cells(); ++c)
    for (int v : cells_[c]) vertex_cells_[v].push_back(c);
}

void Mesh::build_index() {
  grid_size_ = std::max(1, static_cast<int>(std::ceil(std::sqrt(num_cells() / 2.0))));
  buckets_.assign(static_cast<std::size_t>(grid_size_) * grid_size_, {});
  const auto bucket = [this](double s) {
    return std::clamp(static_cast<int>(std::floor(s * grid_size_)), 0, grid_size_ - 1);
  };
  for (int c = 0; c < num_cells(); ++c) {
    Point lo = vertex(cells_[c][0]), hi = lo;
    for (int v : cells_[c]) {
      lo = lo.cwiseMin(vertex(v));
      hi = hi.cwiseMax(vertex(v));
    }
    const int i0 = bucket(lo.x() - kTolerance), i1 = bucket(hi.x() + kTolerance);
    const int j0 = bucket(lo.y() - kTolerance), j1 = bucket(hi.y() + kTolerance);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) buckets_[j * grid_size_ + i].push_back(c);
  }
}

double Mesh::cell_area(int c) const {
  const auto& t = cells_[c];
  return signed_area(vertex(t[0]), vertex(t[1]), vertex(t[2]));
}

double Mesh::cell_diameter(int c) const {
  const auto& t = cells_[c];
  return std::max({(vertex(t[0]) - vertex(t[1])).norm(), (vertex(t[1]) - vertex(t[2])).norm(),
                   (vertex(t[2]) - vertex(t[0])).norm()});
}

Point Mesh::centroid(int c) const {
  const auto& t = cells_[c];
  return (vertex(t[0]) + vertex(t[1]) + vertex(t[2])) / 3.0;
}

Eigen::Vector3d Mesh::barycentric(int c, const Point& x) const {
  const auto& t = cells_[c];
  const Point& a = vertex(t[0]);
  Eigen::Matrix2d jac;
  jac.col(0) = vertex(t[1]) - a;
  jac.col(1) = vertex(t[2]) - a;
  const Eigen::Vector2d ref = jac.inverse() * (x - a);
  return {1.0 - ref.x() - ref.y(), ref.x(), ref.y()};
}

Location Mesh::locate_point(const Point& x) const {
  if (!(x.x() >= -kTolerance && x.x() <= 1.0 + kTolerance && x.y() >= -kTolerance &&
        x.y() <= 1.0 + kTolerance)) {
    std::ostringstream msg;
    msg << "(" << x.x() << ", " << x.y() << ") is not in the unit square";
    throw Error(ErrorKind::PointOutsideDomain, msg.str());
  }
  const auto bucket = [this](double s) {
    return std::clamp(static_cast<int>(std::floor(s * grid_size_)), 0, grid_size_ - 1);
  };
  for (int c : buckets_[bucket(x.y()) * grid_size_ + bucket(x.x())]) {
    const Eigen::Vector3d lambda = barycentric(c, x);
    if (lambda.minCoeff() >= -kTolerance) return {c, lambda};
  }
  throw Error(ErrorKind::PointOutsideDomain, "no cell contains the point");
}

std::vector<int> Mesh::cells_overlapping(const Point& lo, const Point& hi) const {
  const auto bucket = [this](double s) {
    return std::clamp(static_cast<int>(std::floor(s * grid_size_)), 0, grid_size_ - 1);
  };
  std::vector<int> out;
  for (int j = bucket(lo.y()); j <= bucket(hi.y()); ++j)
    for (int i = bucket(lo.x()); i <= bucket(hi.x()); ++i)
      for (int c : buckets_[j * grid_size_ + i]) {
        Point clo = vertex(cells_[c][0]), chi = clo;
        for (int v : cells_[c]) {
          clo = clo.cwiseMin(vertex(v));
          chi = chi.cwiseMax(vertex(v));
        }
        if (clo.x() <= hi.x() + kTolerance && chi.x() >= lo.x() - kTolerance &&
            clo.y() <= hi.y() + kTolerance && chi.y() >= lo.y() - kTolerance)
          out.push_back(c);
      }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void Mesh::write_text(std::ostream& out) const {
  const auto precision = out.precision(17);
  for (const auto& v : vertices_) out << "v " << v.x() << ' ' << v.y() << '\n';
  for (const auto& c : cells_) out << "c " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  out.precision(precision);
}

AffineMap affine_map(const Mesh& mesh, int cell) {
  const auto& t = mesh.cell(cell);
  AffineMap m;
  m.origin = mesh.vertex(t[0]);
  m.jacobian.col(0) = mesh.vertex(t[1]) - m.origin;
  m.jacobian.col(1) = mesh.vertex(t[2]) - m.origin;
  m.det = m.jacobian.determinant();
  m.inverse_transpose = m.jacobian.inverse().transpose();
  return m;
}

MeshPtr build_structured_mesh(int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "structured mesh needs n >= 1");
  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  std::vector<std::array<int, 3>> cells;
  cells.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = j * (n + 1) + i, v10 = v00 + 1, v01 = v00 + n + 1, v11 = v01 + 1;
      cells.push_back({v00, v10, v11});
      cells.push_back({v00, v11, v01});
    }
  }
  return std::make_shared<const Mesh>(std::move(vertices), std::move(cells),
                                      MeshOrigin::Structured, n);
}

MeshPtr refine_uniform(const MeshPtr& mesh) {
  std::vector<Point> vertices = mesh->vertices();
  const int nv = mesh->num_vertices();
  for (const auto& e : mesh->edges())
    vertices.push_back(0.5 * (mesh->vertex(e.vertices[0]) + mesh->vertex(e.vertices[1])));
  std::vector<std::array<int, 3>> cells;
  std::vector<int> parent;
  cells.reserve(4 * static_cast<std::size_t>(mesh->num_cells()));
  for (int c = 0; c < mesh->num_cells(); ++c) {
    const auto& t = mesh->cell(c);
    const auto& e = mesh->cell_edges(c);
    // midpoint opposite local vertex i
    const int m0 = nv + e[0], m1 = nv + e[1], m2 = nv + e[2];
    cells.push_back({t[0], m2, m1});
    cells.push_back({m2, t[1], m0});
    cells.push_back({m1, m0, t[2]});
    cells.push_back({m0, m1, m2});
    parent.insert(parent.end(), 4, c);
  }
  return std::make_shared<const Mesh>(std::move(vertices), std::move(cells),
                                      MeshOrigin::UniformRefinement, 2 * mesh->structured_n(),
                                      mesh, std::move(parent));
}

MeshPtr alfeld_split(const MeshPtr& mesh) {
  std::vector<Point> vertices = mesh->vertices();
  const int nv = mesh->num_vertices();
  std::vector<std::array<int, 3>> cells;
  std::vector<int> parent;
  cells.reserve(3 * static_cast<std::size_t>(mesh->num_cells()));
  for (int c = 0; c < mesh->num_cells(); ++c) {
    vertices.push_back(mesh->centroid(c));
    const auto& t = mesh->cell(c);
    const int g = nv + c;
    cells.push_back({t[0], t[1], g});
    cells.push_back({t[1], t[2], g});
    cells.push_back({t[2], t[0], g});
    parent.insert(parent.end(), 3, c);
  }
  return std::make_shared<const Mesh>(std::move(vertices), std::move(cells), MeshOrigin::Alfeld,
                                      mesh->structured_n(), mesh, std::move(parent));
}

MeshAudit audit_mesh(const Mesh& mesh) {
  MeshAudit audit;
  const auto fail = [&audit](const std::string& msg) {
    if (audit.ok) audit.message = msg;
    audit.ok = false;
  };
  constexpr double tol = Mesh::kTolerance;

  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double area = mesh.cell_area(c);
    if (!(area > 0.0)) fail("cell " + std::to_string(c) + " is not counterclockwise");
    audit.total_area += area;
  }
  if (std::abs(audit.total_area - 1.0) > 1e-13) fail("cell areas do not sum to 1");

  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edge(e);
    const Point& a = mesh.vertex(edge.vertices[0]);
    const Point& b = mesh.vertex(edge.vertices[1]);
    if (edge.on_boundary) {
      const bool on_side = (std::abs(a.x()) < tol && std::abs(b.x()) < tol) ||
                           (std::abs(a.x() - 1) < tol && std::abs(b.x() - 1) < tol) ||
                           (std::abs(a.y()) < tol && std::abs(b.y()) < tol) ||
                           (std::abs(a.y() - 1) < tol && std::abs(b.y() - 1) < tol);
      if (!on_side) fail("edge " + std::to_string(e) + " has one cell but is interior");
    } else {
      // the two opposite vertices must lie on opposite sides of the edge
      double side[2];
      for (int s = 0; s < 2; ++s) {
        const auto& t = mesh.cell(edge.cells[s]);
        int opposite = -1;
        for (int v : t)
          if (v != edge.vertices[0] && v != edge.vertices[1]) opposite = v;
        side[s] = signed_area(a, b, mesh.vertex(opposite));
      }
      if (!(side[0] * side[1] < 0.0)) fail("cells overlap across edge " + std::to_string(e));
    }
    // hanging vertices: nothing may sit strictly inside an edge
    const Point lo = a.cwiseMin(b), hi = a.cwiseMax(b);
    for (int c : mesh.cells_overlapping(lo, hi)) {
      for (int v : mesh.cell(c)) {
        if (v == edge.vertices[0] || v == edge.vertices[1]) continue;
        const Point& p = mesh.vertex(v);
        const double len = (b - a).norm();
        const double dist = std::abs(signed_area(a, b, p)) * 2.0 / len;
        const double s = (p - a).dot(b - a) / (len * len);
        if (dist < tol && s > tol && s < 1 - tol)
          fail("vertex " + std::to_string(v) + " hangs on edge " + std::to_string(e));
      }
    }
  }
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (mesh.vertex_on_boundary(v) != on_square_boundary(mesh.vertex(v)))
      fail("boundary flag of vertex " + std::to_string(v) + " is wrong");

  if (mesh.num_vertices() - mesh.num_edges() + mesh.num_cells() != 1)
    fail("Euler characteristic of a disk violated");

  if (const auto& parent = mesh.parent()) {
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const int p = mesh.parent_cell()[c];
      for (int v : mesh.cell(c))
        if (parent->barycentric(p, mesh.vertex(v)).minCoeff() < -tol)
          fail("child cell " + std::to_string(c) + " leaves its parent");
    }
  }
  return audit;
}

}  // namespace nscrit
