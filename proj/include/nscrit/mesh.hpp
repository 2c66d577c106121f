#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

namespace nscrit {

using Point = Eigen::Vector2d;

/// How a mesh was produced. Space construction uses it to decide whether a
/// low-order Scott-Vogelius pair is stable.
enum class MeshOrigin { Structured, UniformRefinement, Alfeld };

struct Edge {
  std::array<int, 2> vertices;       // sorted, vertices[0] < vertices[1]
  std::array<int, 2> cells{-1, -1};  // cells[1] == -1 on the boundary
  bool on_boundary = false;
};

struct Location {
  int cell = -1;
  Eigen::Vector3d barycentric = Eigen::Vector3d::Zero();
};

/**
 * Conforming triangulation of the unit square.
 *
 * Immutable after construction; meshes are shared through
 * `std::shared_ptr<const Mesh>` so that refinements can keep a handle on
 * their parent.
 */
class Mesh {
 public:
  static constexpr double kTolerance = 1e-12;

  Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> cells, MeshOrigin origin,
       int structured_n, std::shared_ptr<const Mesh> parent = nullptr,
       std::vector<int> parent_cell = {});

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const Point& vertex(int i) const { return vertices_[i]; }
  const std::vector<std::array<int, 3>>& cells() const { return cells_; }
  const std::array<int, 3>& cell(int c) const { return cells_[c]; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }

  /// Local edge i of a cell joins local vertices (i+1)%3 and (i+2)%3.
  const std::array<int, 3>& cell_edges(int c) const { return cell_edges_[c]; }

  bool vertex_on_boundary(int v) const { return vertex_boundary_[v]; }
  double cell_area(int c) const;
  double cell_diameter(int c) const;
  Point centroid(int c) const;

  /// Max cell diameter.
  double h() const { return h_; }
  MeshOrigin origin() const { return origin_; }
  bool is_alfeld() const { return origin_ == MeshOrigin::Alfeld; }
  /// Subdivisions per side of the structured mesh this one descends from.
  int structured_n() const { return structured_n_; }

  const std::shared_ptr<const Mesh>& parent() const { return parent_; }
  const std::vector<int>& parent_cell() const { return parent_cell_; }

  /// Cells incident to each vertex, ascending.
  const std::vector<std::vector<int>>& vertex_cells() const { return vertex_cells_; }

  /// Barycentric coordinates of x with respect to cell c.
  Eigen::Vector3d barycentric(int c, const Point& x) const;

  /// Cell containing x (lowest index on ties) with barycentrics.
  Location locate_point(const Point& x) const;

  /// Cells whose bounding box meets the box [lo, hi], ascending.
  std::vector<int> cells_overlapping(const Point& lo, const Point& hi) const;

  /// Plain-text dump: `v x y` per vertex, `c i j k` per cell.
  void write_text(std::ostream& out) const;

 private:
  void build_edges();
  void build_index();

  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> cells_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> cell_edges_;
  std::vector<bool> vertex_boundary_;
  std::vector<std::vector<int>> vertex_cells_;
  MeshOrigin origin_;
  int structured_n_;
  std::shared_ptr<const Mesh> parent_;
  std::vector<int> parent_cell_;
  double h_ = 0.0;

  // uniform bucket grid over [0,1]^2 for point location
  int grid_size_ = 1;
  std::vector<std::vector<int>> buckets_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Affine map from the reference triangle onto a cell.
struct AffineMap {
  Point origin;
  Eigen::Matrix2d jacobian;
  Eigen::Matrix2d inverse_transpose;
  double det = 0.0;

  Point map(const Eigen::Vector2d& ref) const { return origin + jacobian * ref; }
};

AffineMap affine_map(const Mesh& mesh, int cell);

/// n x n squares, each split along the lower-left to upper-right diagonal.
MeshPtr build_structured_mesh(int n);

/// Red refinement: every cell split into four through its edge midpoints.
MeshPtr refine_uniform(const MeshPtr& mesh);

/// Barycentric split: every cell replaced by three cells sharing its centroid.
MeshPtr alfeld_split(const MeshPtr& mesh);

/// Result of the exhaustive consistency audit; `message` lists the first failure.
struct MeshAudit {
  bool ok = true;
  std::string message;
  double total_area = 0.0;
};

/// Orientation, edge pairing, hanging-vertex, area and parent-containment checks.
MeshAudit audit_mesh(const Mesh& mesh);

}  // namespace nscrit
