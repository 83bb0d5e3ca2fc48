#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "pace/common.hpp"

namespace pace {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Static scene geometry. Indices are validated on demand; labels, when
/// present, are one non-negative class id per vertex.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> vertex_labels;  // empty when unlabeled

  bool has_labels() const { return !vertex_labels.empty(); }

  /// Throws on out-of-range indices, degenerate triangles (area below
  /// 1e-12 m^2), or a label array whose length mismatches the vertices.
  void validate() const;

  Eigen::AlignedBox3d bounds() const;

  /// Content hash over vertices, triangles and labels; cache key material.
  std::uint64_t content_hash() const;
};

/// Axis-aligned scalar grid. Values live on lattice nodes at
/// origin + index * cell_size, stored x-fastest as float32.
struct SdfGrid {
  Vec3 origin = Vec3::Zero();
  double cell_size = 0.0;
  std::array<int, 3> dims = {0, 0, 0};
  std::vector<float> values;

  std::size_t cell_count() const {
    return std::size_t(dims[0]) * std::size_t(dims[1]) * std::size_t(dims[2]);
  }
  std::size_t index(int i, int j, int k) const {
    return std::size_t(i) + std::size_t(dims[0]) * (std::size_t(j) + std::size_t(dims[1]) * k);
  }
  float& at(int i, int j, int k) { return values[index(i, j, k)]; }
  float at(int i, int j, int k) const { return values[index(i, j, k)]; }
  Vec3 node_position(int i, int j, int k) const {
    return origin + cell_size * Vec3(i, j, k);
  }
  Vec3 max_corner() const {
    return origin + cell_size * Vec3(dims[0] - 1, dims[1] - 1, dims[2] - 1);
  }
};

struct SdfSample {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();
};

/// Per-semantic-class unsigned distance fields sharing one grid lattice.
struct ClassDistanceFields {
  std::vector<std::pair<int, SdfGrid>> fields;  // sorted by class id

  const SdfGrid* find(int class_id) const {
    for (const auto& [id, grid] : fields)
      if (id == class_id) return &grid;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Closest-point primitives
// ---------------------------------------------------------------------------

/// Feature owning the closest point of a point-triangle query.
enum class TriFeature : int {
  Face = 0,
  EdgeAB = 1,
  EdgeBC = 2,
  EdgeCA = 3,
  VertexA = 4,
  VertexB = 5,
  VertexC = 6,
};

struct TriClosest {
  Vec3 point = Vec3::Zero();
  double dist2 = 0.0;
  TriFeature feature = TriFeature::Face;
};

TriClosest closest_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// ---------------------------------------------------------------------------
// Signed distance queries
// ---------------------------------------------------------------------------

/// Angle-weighted pseudonormals per face/edge/vertex (Baerentzen-Aanaes).
struct Pseudonormals {
  std::vector<Vec3> face;                             // per triangle, normalized
  std::vector<std::pair<std::uint64_t, Vec3>> edges;  // key = packed (lo,hi) vertex ids, sorted
  std::vector<Vec3> vertex;                           // per vertex, angle-weighted

  static Pseudonormals build(const TriangleMesh& mesh);
  const Vec3* edge_normal(int v0, int v1) const;
};

/// True when every directed edge appears exactly once with its reverse also
/// present (closed, consistently oriented 2-manifold; disjoint unions count).
bool is_watertight(const TriangleMesh& mesh);

/// Generalized winding number via exact per-triangle solid angles.
double winding_number(const TriangleMesh& mesh, const Vec3& p);

/// Exact brute-force signed distance: O(triangles) scan, pseudonormal sign.
/// Test oracle and small-mesh fallback.
double point_mesh_distance(const TriangleMesh& mesh, const Vec3& p);
double point_mesh_distance(const TriangleMesh& mesh, const Pseudonormals& pn, const Vec3& p);

/// BVH-accelerated distance queries against a fixed mesh. Immutable after
/// construction, safe to share across threads.
class MeshDistanceQuery {
public:
  explicit MeshDistanceQuery(const TriangleMesh& mesh);
  ~MeshDistanceQuery();
  MeshDistanceQuery(MeshDistanceQuery&&) noexcept;
  MeshDistanceQuery& operator=(MeshDistanceQuery&&) noexcept;

  /// Unsigned closest distance plus the owning triangle and feature.
  struct Hit {
    double distance = 0.0;
    int triangle = -1;
    TriClosest closest;
  };
  Hit closest(const Vec3& p) const;

  /// Pseudonormal sign for watertight meshes, winding-number sign otherwise.
  double signed_distance(const Vec3& p) const;

  bool watertight() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Nearest-neighbor queries over a point set (class distance fields).
class PointKdTree {
public:
  explicit PointKdTree(std::vector<Vec3> points);

  /// Returns (squared distance, point index); the set must be non-empty.
  std::pair<double, int> nearest(const Vec3& p) const;

  std::size_t size() const { return points_.size(); }

private:
  struct Node {
    int axis = 0;
    int point = -1;
    int left = -1;
    int right = -1;
  };
  int build(int begin, int end, int depth);
  void search(int node, const Vec3& p, double& best_d2, int& best_idx) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// ---------------------------------------------------------------------------
// SDF construction and sampling
// ---------------------------------------------------------------------------

struct SdfBuildParams {
  double cell_size = 0.05;  // m
  double padding = 0.5;     // m, >= cell_size
  std::size_t max_cells = 64u * 1024u * 1024u;
  bool parallel = true;
};

/// Lattice covering the mesh bounds expanded by padding; values unset.
SdfGrid make_grid_spec(const TriangleMesh& mesh, const SdfBuildParams& params);

/// Signed distance on every lattice node. Sign from angle-weighted
/// pseudonormals when the mesh is watertight, generalized winding numbers
/// otherwise. Parallel per z-slab.
SdfGrid build_sdf(const TriangleMesh& mesh, const SdfBuildParams& params);
SdfGrid build_sdf(const TriangleMesh& mesh, double cell_size, double padding);

/// Trilinear value and analytic gradient. Points outside the lattice clamp to
/// the boundary and gain a linear outward penalty equal to the distance to
/// the grid box, which keeps objectives finite and pushes samples back in.
SdfSample sample_sdf(const SdfGrid& grid, const Vec3& point);

/// Value-only fast path with identical clamping semantics.
double sample_sdf_value(const SdfGrid& grid, const Vec3& point);

/// Unsigned distance-to-nearest-labeled-vertex field per class, on the same
/// lattice as grid_spec. Requires vertex labels.
ClassDistanceFields build_class_distance_fields(const TriangleMesh& mesh, const SdfGrid& grid_spec,
                                                bool parallel = true);

namespace reference {

/// Serial reference: every node evaluated with the O(triangles) exact scan.
/// Kept as the oracle the accelerated builder is tested against.
SdfGrid build_sdf_brute(const TriangleMesh& mesh, const SdfBuildParams& params);

}  // namespace reference

}  // namespace pace
