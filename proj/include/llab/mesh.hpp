#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "llab/common.hpp"

namespace llab {

struct TriMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;  // counterclockwise
  std::vector<char> boundary;
  double radius = 0.0;
  double h = 0.0;

  // Geometry cache filled by finalize().
  std::vector<double> area;
  std::vector<std::array<Vec2, 3>> grad;  // gradients of the three hat functions

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_tris() const { return tris.size(); }
  Vec2 centroid(std::size_t t) const;
  void finalize();
};

using MeshPtr = std::shared_ptr<const TriMesh>;

struct RefinementSpec {
  Vec2 center{0.0, 0.0};
  int rings = 3;
  double ratio = 2.0;
};

// Boundary rings, hexagonal interior fill, Delaunay connectivity.
MeshPtr triangulate_disk(double radius, double target_h,
                         const std::optional<RefinementSpec>& refine = std::nullopt);

struct MeshReport {
  bool positive_areas = true;
  bool boundary_on_circle = true;
  bool connected = true;
  bool manifold_edges = true;
  double max_edge = 0.0;
  double min_area = 0.0;
  bool ok() const { return positive_areas && boundary_on_circle && connected && manifold_edges; }
};
MeshReport check_mesh(const TriMesh& m);

void write_mesh(const TriMesh& m, std::ostream& os);
MeshPtr read_mesh(std::istream& is, double radius, double h);

// Uniform-bucket point location.
class PointLocator {
 public:
  explicit PointLocator(MeshPtr mesh);
  // Returns triangle index and barycentric coordinates, or -1 when outside.
  int locate(const Vec2& p, std::array<double, 3>& bary) const;
  double interpolate(const Eigen::VectorXd& nodal, const Vec2& p, double outside = 0.0) const;
  const TriMesh& mesh() const { return *mesh_; }

 private:
  MeshPtr mesh_;
  double x0_ = 0, y0_ = 0, cell_ = 1;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

}  // namespace llab
