#include "pace/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pace/parallel.hpp"

namespace pace {

// ---------------------------------------------------------------------------
// TriangleMesh
// ---------------------------------------------------------------------------

void TriangleMesh::validate() const {
  check(!vertices.empty() && !triangles.empty(), "mesh: empty mesh");
  const int nv = int(vertices.size());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    for (int c = 0; c < 3; ++c)
      check(tri[c] >= 0 && tri[c] < nv, "mesh: triangle ", t, " references vertex ", tri[c],
            " outside [0, ", nv, ")");
    const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
    const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
    const double area = 0.5 * e1.cross(e2).norm();
    check(area > 1e-12, "mesh: triangle ", t, " is degenerate (area ", area, " m^2)");
  }
  if (has_labels()) {
    check(vertex_labels.size() == vertices.size(), "mesh: ", vertex_labels.size(),
          " labels for ", vertices.size(), " vertices");
    for (std::size_t v = 0; v < vertex_labels.size(); ++v)
      check(vertex_labels[v] >= 0, "mesh: negative label at vertex ", v);
  }
}

Eigen::AlignedBox3d TriangleMesh::bounds() const {
  Eigen::AlignedBox3d box;
  for (const Vec3& v : vertices) box.extend(v);
  return box;
}

std::uint64_t TriangleMesh::content_hash() const {
  std::uint64_t h = fnv1a(vertices.data(), vertices.size() * sizeof(Vec3));
  h = fnv1a(triangles.data(), triangles.size() * sizeof(std::array<int, 3>), h);
  if (!vertex_labels.empty())
    h = fnv1a(vertex_labels.data(), vertex_labels.size() * sizeof(int), h);
  return h;
}

// ---------------------------------------------------------------------------
// Closest point on triangle (Ericson, with feature classification)
// ---------------------------------------------------------------------------

TriClosest closest_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return {a, (p - a).squaredNorm(), TriFeature::VertexA};

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return {b, (p - b).squaredNorm(), TriFeature::VertexB};

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    const Vec3 q = a + v * ab;
    return {q, (p - q).squaredNorm(), TriFeature::EdgeAB};
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return {c, (p - c).squaredNorm(), TriFeature::VertexC};

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    const Vec3 q = a + w * ac;
    return {q, (p - q).squaredNorm(), TriFeature::EdgeCA};
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    const Vec3 q = b + w * (c - b);
    return {q, (p - q).squaredNorm(), TriFeature::EdgeBC};
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  const Vec3 q = a + ab * v + ac * w;
  return {q, (p - q).squaredNorm(), TriFeature::Face};
}

// ---------------------------------------------------------------------------
// Pseudonormals and sign machinery
// ---------------------------------------------------------------------------

static std::uint64_t edge_key(int v0, int v1) {
  const std::uint64_t lo = std::uint64_t(std::min(v0, v1));
  const std::uint64_t hi = std::uint64_t(std::max(v0, v1));
  return (lo << 32) | hi;
}

Pseudonormals Pseudonormals::build(const TriangleMesh& mesh) {
  Pseudonormals pn;
  pn.face.resize(mesh.triangles.size());
  pn.vertex.assign(mesh.vertices.size(), Vec3::Zero());
  pn.edges.reserve(mesh.triangles.size() * 3);

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    if (len > 0.0) n /= len;
    pn.face[t] = n;

    pn.edges.emplace_back(edge_key(tri[0], tri[1]), n);
    pn.edges.emplace_back(edge_key(tri[1], tri[2]), n);
    pn.edges.emplace_back(edge_key(tri[2], tri[0]), n);

    // Angle-weighted accumulation at each corner.
    const Vec3* v[3] = {&a, &b, &c};
    for (int k = 0; k < 3; ++k) {
      const Vec3 e1 = (*v[(k + 1) % 3] - *v[k]).normalized();
      const Vec3 e2 = (*v[(k + 2) % 3] - *v[k]).normalized();
      const double angle = std::acos(std::clamp(e1.dot(e2), -1.0, 1.0));
      pn.vertex[tri[k]] += angle * n;
    }
  }

  // Merge duplicate edge entries.
  std::sort(pn.edges.begin(), pn.edges.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < pn.edges.size();) {
    std::uint64_t key = pn.edges[i].first;
    Vec3 sum = Vec3::Zero();
    while (i < pn.edges.size() && pn.edges[i].first == key) sum += pn.edges[i++].second;
    pn.edges[out++] = {key, sum};
  }
  pn.edges.resize(out);
  return pn;
}

const Vec3* Pseudonormals::edge_normal(int v0, int v1) const {
  const std::uint64_t key = edge_key(v0, v1);
  auto it = std::lower_bound(edges.begin(), edges.end(), key,
                             [](const auto& e, std::uint64_t k) { return e.first < k; });
  if (it == edges.end() || it->first != key) return nullptr;
  return &it->second;
}

static Vec3 feature_normal(const Pseudonormals& pn, const std::array<int, 3>& tri, int t,
                           TriFeature feature) {
  switch (feature) {
    case TriFeature::Face:
      return pn.face[t];
    case TriFeature::EdgeAB: {
      const Vec3* n = pn.edge_normal(tri[0], tri[1]);
      return n ? *n : pn.face[t];
    }
    case TriFeature::EdgeBC: {
      const Vec3* n = pn.edge_normal(tri[1], tri[2]);
      return n ? *n : pn.face[t];
    }
    case TriFeature::EdgeCA: {
      const Vec3* n = pn.edge_normal(tri[2], tri[0]);
      return n ? *n : pn.face[t];
    }
    case TriFeature::VertexA:
      return pn.vertex[tri[0]];
    case TriFeature::VertexB:
      return pn.vertex[tri[1]];
    case TriFeature::VertexC:
      return pn.vertex[tri[2]];
  }
  return pn.face[t];
}

bool is_watertight(const TriangleMesh& mesh) {
  // Closed, consistently oriented 2-manifold: each directed edge appears
  // exactly once and its reverse exactly once.
  std::vector<std::uint64_t> directed;
  directed.reserve(mesh.triangles.size() * 3);
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const std::uint64_t from = std::uint64_t(tri[k]);
      const std::uint64_t to = std::uint64_t(tri[(k + 1) % 3]);
      directed.push_back((from << 32) | to);
    }
  }
  std::sort(directed.begin(), directed.end());
  if (std::adjacent_find(directed.begin(), directed.end()) != directed.end()) return false;
  for (std::uint64_t e : directed) {
    const std::uint64_t rev = (e << 32) | (e >> 32);
    if (!std::binary_search(directed.begin(), directed.end(), rev)) return false;
  }
  return true;
}

double winding_number(const TriangleMesh& mesh, const Vec3& p) {
  // Exact solid angles (van Oosterom-Strackee).
  double total = 0.0;
  for (const auto& tri : mesh.triangles) {
    const Vec3 a = mesh.vertices[tri[0]] - p;
    const Vec3 b = mesh.vertices[tri[1]] - p;
    const Vec3 c = mesh.vertices[tri[2]] - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * M_PI);
}

double point_mesh_distance(const TriangleMesh& mesh, const Pseudonormals& pn, const Vec3& p) {
  check(!mesh.triangles.empty(), "point_mesh_distance: empty mesh");
  double best_d2 = std::numeric_limits<double>::infinity();
  TriClosest best;
  int best_tri = -1;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const TriClosest c =
        closest_point_triangle(p, mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    if (c.dist2 < best_d2) {
      best_d2 = c.dist2;
      best = c;
      best_tri = int(t);
    }
  }
  const double dist = std::sqrt(best_d2);
  if (dist == 0.0) return 0.0;
  const Vec3 n = feature_normal(pn, mesh.triangles[best_tri], best_tri, best.feature);
  return n.dot(p - best.point) >= 0.0 ? dist : -dist;
}

double point_mesh_distance(const TriangleMesh& mesh, const Vec3& p) {
  const Pseudonormals pn = Pseudonormals::build(mesh);
  return point_mesh_distance(mesh, pn, p);
}

// ---------------------------------------------------------------------------
// BVH
// ---------------------------------------------------------------------------

struct MeshDistanceQuery::Impl {
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> tris;
  Pseudonormals pn;
  bool watertight = false;
  TriangleMesh mesh_copy;  // winding-number fallback needs the full soup

  struct Node {
    Vec3 lo, hi;
    int left = -1, right = -1;
    int begin = 0, count = 0;  // leaf range into order
  };
  std::vector<Node> nodes;
  std::vector<int> order;

  static double box_dist2(const Node& n, const Vec3& p) {
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double d = std::max({n.lo[k] - p[k], 0.0, p[k] - n.hi[k]});
      d2 += d * d;
    }
    return d2;
  }

  int build(int begin, int end, const std::vector<Vec3>& centroids) {
    Node node;
    node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    node.hi = -node.lo;
    for (int i = begin; i < end; ++i) {
      const auto& tri = tris[order[i]];
      for (int c = 0; c < 3; ++c) {
        node.lo = node.lo.cwiseMin(verts[tri[c]]);
        node.hi = node.hi.cwiseMax(verts[tri[c]]);
      }
    }
    const int idx = int(nodes.size());
    nodes.push_back(node);
    if (end - begin <= 4) {
      nodes[idx].begin = begin;
      nodes[idx].count = end - begin;
      return idx;
    }
    Vec3 clo = Vec3::Constant(std::numeric_limits<double>::infinity()), chi = -clo;
    for (int i = begin; i < end; ++i) {
      clo = clo.cwiseMin(centroids[order[i]]);
      chi = chi.cwiseMax(centroids[order[i]]);
    }
    int axis = 0;
    (chi - clo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                     [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });
    nodes[idx].left = build(begin, mid, centroids);
    nodes[idx].right = build(mid, end, centroids);
    return idx;
  }

  void nearest(int ni, const Vec3& p, double& best_d2, int& best_tri, TriClosest& best) const {
    const Node& n = nodes[ni];
    if (n.left < 0) {
      for (int i = n.begin; i < n.begin + n.count; ++i) {
        const int t = order[i];
        const auto& tri = tris[t];
        const TriClosest c = closest_point_triangle(p, verts[tri[0]], verts[tri[1]], verts[tri[2]]);
        if (c.dist2 < best_d2) {
          best_d2 = c.dist2;
          best_tri = t;
          best = c;
        }
      }
      return;
    }
    const double dl = box_dist2(nodes[n.left], p);
    const double dr = box_dist2(nodes[n.right], p);
    const int first = dl <= dr ? n.left : n.right;
    const int second = dl <= dr ? n.right : n.left;
    const double dfirst = std::min(dl, dr), dsecond = std::max(dl, dr);
    if (dfirst < best_d2) nearest(first, p, best_d2, best_tri, best);
    if (dsecond < best_d2) nearest(second, p, best_d2, best_tri, best);
  }
};

MeshDistanceQuery::MeshDistanceQuery(const TriangleMesh& mesh) : impl_(new Impl) {
  mesh.validate();
  impl_->verts = mesh.vertices;
  impl_->tris = mesh.triangles;
  impl_->pn = Pseudonormals::build(mesh);
  impl_->watertight = is_watertight(mesh);
  if (!impl_->watertight) {
    impl_->mesh_copy.vertices = mesh.vertices;
    impl_->mesh_copy.triangles = mesh.triangles;
  }
  impl_->order.resize(mesh.triangles.size());
  std::iota(impl_->order.begin(), impl_->order.end(), 0);
  std::vector<Vec3> centroids(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    centroids[t] = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
  }
  impl_->nodes.reserve(mesh.triangles.size() * 2);
  impl_->build(0, int(mesh.triangles.size()), centroids);
}

MeshDistanceQuery::~MeshDistanceQuery() = default;
MeshDistanceQuery::MeshDistanceQuery(MeshDistanceQuery&&) noexcept = default;
MeshDistanceQuery& MeshDistanceQuery::operator=(MeshDistanceQuery&&) noexcept = default;

MeshDistanceQuery::Hit MeshDistanceQuery::closest(const Vec3& p) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_tri = -1;
  TriClosest best;
  impl_->nearest(0, p, best_d2, best_tri, best);
  Hit hit;
  hit.distance = std::sqrt(best_d2);
  hit.triangle = best_tri;
  hit.closest = best;
  return hit;
}

double MeshDistanceQuery::signed_distance(const Vec3& p) const {
  const Hit hit = closest(p);
  if (hit.distance == 0.0) return 0.0;
  if (impl_->watertight) {
    const Vec3 n = feature_normal(impl_->pn, impl_->tris[hit.triangle], hit.triangle,
                                  hit.closest.feature);
    return n.dot(p - hit.closest.point) >= 0.0 ? hit.distance : -hit.distance;
  }
  return winding_number(impl_->mesh_copy, p) > 0.5 ? -hit.distance : hit.distance;
}

bool MeshDistanceQuery::watertight() const { return impl_->watertight; }

// ---------------------------------------------------------------------------
// PointKdTree
// ---------------------------------------------------------------------------

PointKdTree::PointKdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  check(!points_.empty(), "kdtree: empty point set");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(0, int(points_.size()), 0);
}

int PointKdTree::build(int begin, int end, int depth) {
  if (begin >= end) return -1;
  const int axis = depth % 3;
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  Node node;
  node.axis = axis;
  node.point = order_[mid];
  const int idx = int(nodes_.size());
  nodes_.push_back(node);
  nodes_[idx].left = build(begin, mid, depth + 1);
  nodes_[idx].right = build(mid + 1, end, depth + 1);
  return idx;
}

void PointKdTree::search(int ni, const Vec3& p, double& best_d2, int& best_idx) const {
  if (ni < 0) return;
  const Node& n = nodes_[ni];
  const double d2 = (points_[n.point] - p).squaredNorm();
  if (d2 < best_d2) {
    best_d2 = d2;
    best_idx = n.point;
  }
  const double delta = p[n.axis] - points_[n.point][n.axis];
  const int near = delta <= 0.0 ? n.left : n.right;
  const int far = delta <= 0.0 ? n.right : n.left;
  search(near, p, best_d2, best_idx);
  if (delta * delta < best_d2) search(far, p, best_d2, best_idx);
}

std::pair<double, int> PointKdTree::nearest(const Vec3& p) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_idx = -1;
  search(root_, p, best_d2, best_idx);
  return {best_d2, best_idx};
}

// ---------------------------------------------------------------------------
// SDF construction
// ---------------------------------------------------------------------------

SdfGrid make_grid_spec(const TriangleMesh& mesh, const SdfBuildParams& params) {
  check(!mesh.vertices.empty(), "build_sdf: empty mesh");
  check(params.cell_size > 0.0, "build_sdf: cell_size must be > 0, got ", params.cell_size);
  check(params.padding >= params.cell_size, "build_sdf: padding ", params.padding,
        " must be >= cell_size ", params.cell_size);
  const Eigen::AlignedBox3d box = mesh.bounds();
  SdfGrid grid;
  grid.cell_size = params.cell_size;
  grid.origin = box.min() - Vec3::Constant(params.padding);
  for (int k = 0; k < 3; ++k) {
    const double extent = box.diagonal()[k] + 2.0 * params.padding;
    grid.dims[k] = std::max(2, int(std::ceil(extent / params.cell_size)) + 1);
  }
  const std::size_t cells = grid.cell_count();
  check(cells <= params.max_cells, "build_sdf: grid ", grid.dims[0], "x", grid.dims[1], "x",
        grid.dims[2], " = ", cells, " cells exceeds the ", params.max_cells, "-cell limit");
  return grid;
}

SdfGrid build_sdf(const TriangleMesh& mesh, const SdfBuildParams& params) {
  mesh.validate();
  SdfGrid grid = make_grid_spec(mesh, params);
  grid.values.resize(grid.cell_count());
  const MeshDistanceQuery query(mesh);

  const int nx = grid.dims[0], ny = grid.dims[1], nz = grid.dims[2];
  parallel_for(
      std::size_t(nz),
      [&](std::size_t k) {
        for (int j = 0; j < ny; ++j)
          for (int i = 0; i < nx; ++i) {
            const Vec3 p = grid.node_position(i, j, int(k));
            grid.at(i, j, int(k)) = float(query.signed_distance(p));
          }
      },
      params.parallel);
  return grid;
}

SdfGrid build_sdf(const TriangleMesh& mesh, double cell_size, double padding) {
  SdfBuildParams params;
  params.cell_size = cell_size;
  params.padding = padding;
  return build_sdf(mesh, params);
}

namespace reference {

SdfGrid build_sdf_brute(const TriangleMesh& mesh, const SdfBuildParams& params) {
  mesh.validate();
  SdfGrid grid = make_grid_spec(mesh, params);
  grid.values.resize(grid.cell_count());
  const Pseudonormals pn = Pseudonormals::build(mesh);
  const bool watertight = is_watertight(mesh);
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i) {
        const Vec3 p = grid.node_position(i, j, k);
        double d = point_mesh_distance(mesh, pn, p);
        if (!watertight) {
          const double mag = std::abs(d);
          d = winding_number(mesh, p) > 0.5 ? -mag : mag;
        }
        grid.at(i, j, k) = float(d);
      }
  return grid;
}

}  // namespace reference

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace {

struct CellLookup {
  int i, j, k;         // base node
  double fx, fy, fz;   // fractions in [0, 1]
  Vec3 clamped;        // clamped sample point
  Vec3 outward;        // p - clamped (zero inside)
};

inline CellLookup locate(const SdfGrid& grid, const Vec3& p) {
  CellLookup c;
  const Vec3 lo = grid.origin;
  const Vec3 hi = grid.max_corner();
  c.clamped = p.cwiseMax(lo).cwiseMin(hi);
  c.outward = p - c.clamped;
  const Vec3 u = (c.clamped - lo) / grid.cell_size;
  auto base = [&](double ucoord, int dim) {
    int idx = int(std::floor(ucoord));
    return std::clamp(idx, 0, grid.dims[dim] - 2);
  };
  c.i = base(u[0], 0);
  c.j = base(u[1], 1);
  c.k = base(u[2], 2);
  c.fx = u[0] - c.i;
  c.fy = u[1] - c.j;
  c.fz = u[2] - c.k;
  return c;
}

}  // namespace

SdfSample sample_sdf(const SdfGrid& grid, const Vec3& point) {
  check(point.allFinite(), "sample_sdf: non-finite point");
  check(grid.dims[0] >= 2 && grid.dims[1] >= 2 && grid.dims[2] >= 2, "sample_sdf: grid too small");
  const CellLookup c = locate(grid, point);

  const double v000 = grid.at(c.i, c.j, c.k);
  const double v100 = grid.at(c.i + 1, c.j, c.k);
  const double v010 = grid.at(c.i, c.j + 1, c.k);
  const double v110 = grid.at(c.i + 1, c.j + 1, c.k);
  const double v001 = grid.at(c.i, c.j, c.k + 1);
  const double v101 = grid.at(c.i + 1, c.j, c.k + 1);
  const double v011 = grid.at(c.i, c.j + 1, c.k + 1);
  const double v111 = grid.at(c.i + 1, c.j + 1, c.k + 1);

  const double fx = c.fx, fy = c.fy, fz = c.fz;
  const double v00 = v000 * (1 - fx) + v100 * fx;
  const double v10 = v010 * (1 - fx) + v110 * fx;
  const double v01 = v001 * (1 - fx) + v101 * fx;
  const double v11 = v011 * (1 - fx) + v111 * fx;
  const double v0 = v00 * (1 - fy) + v10 * fy;
  const double v1 = v01 * (1 - fy) + v11 * fy;

  SdfSample s;
  s.value = v0 * (1 - fz) + v1 * fz;

  const double inv = 1.0 / grid.cell_size;
  const double dx0 = (v100 - v000) * (1 - fy) + (v110 - v010) * fy;
  const double dx1 = (v101 - v001) * (1 - fy) + (v111 - v011) * fy;
  s.gradient[0] = (dx0 * (1 - fz) + dx1 * fz) * inv;
  s.gradient[1] = ((v10 - v00) * (1 - fz) + (v11 - v01) * fz) * inv;
  s.gradient[2] = (v1 - v0) * inv;

  const double d_out = c.outward.norm();
  if (d_out > 0.0) {
    s.value += d_out;
    for (int a = 0; a < 3; ++a)
      if (c.outward[a] != 0.0) s.gradient[a] = c.outward[a] / d_out;
  }
  return s;
}

double sample_sdf_value(const SdfGrid& grid, const Vec3& point) {
  check(point.allFinite(), "sample_sdf: non-finite point");
  const CellLookup c = locate(grid, point);
  const double v000 = grid.at(c.i, c.j, c.k);
  const double v100 = grid.at(c.i + 1, c.j, c.k);
  const double v010 = grid.at(c.i, c.j + 1, c.k);
  const double v110 = grid.at(c.i + 1, c.j + 1, c.k);
  const double v001 = grid.at(c.i, c.j, c.k + 1);
  const double v101 = grid.at(c.i + 1, c.j, c.k + 1);
  const double v011 = grid.at(c.i, c.j + 1, c.k + 1);
  const double v111 = grid.at(c.i + 1, c.j + 1, c.k + 1);
  const double fx = c.fx, fy = c.fy, fz = c.fz;
  const double v0 = (v000 * (1 - fx) + v100 * fx) * (1 - fy) + (v010 * (1 - fx) + v110 * fx) * fy;
  const double v1 = (v001 * (1 - fx) + v101 * fx) * (1 - fy) + (v011 * (1 - fx) + v111 * fx) * fy;
  return v0 * (1 - fz) + v1 * fz + c.outward.norm();
}

// ---------------------------------------------------------------------------
// Class distance fields
// ---------------------------------------------------------------------------

ClassDistanceFields build_class_distance_fields(const TriangleMesh& mesh, const SdfGrid& grid_spec,
                                                bool parallel) {
  check(mesh.has_labels(),
        "class fields: mesh has no vertex labels; run with semantic terms disabled "
        "(geometric-only mode) or provide a label sidecar");
  check(mesh.vertex_labels.size() == mesh.vertices.size(), "class fields: label count mismatch");

  std::vector<int> ids = mesh.vertex_labels;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  ClassDistanceFields out;
  for (int id : ids) {
    std::vector<Vec3> pts;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
      if (mesh.vertex_labels[v] == id) pts.push_back(mesh.vertices[v]);
    const PointKdTree tree(std::move(pts));

    SdfGrid field;
    field.origin = grid_spec.origin;
    field.cell_size = grid_spec.cell_size;
    field.dims = grid_spec.dims;
    field.values.resize(field.cell_count());
    const int nx = field.dims[0], ny = field.dims[1], nz = field.dims[2];
    parallel_for(
        std::size_t(nz),
        [&](std::size_t k) {
          for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
              const Vec3 p = field.node_position(i, j, int(k));
              field.at(i, j, int(k)) = float(std::sqrt(tree.nearest(p).first));
            }
        },
        parallel);
    out.fields.emplace_back(id, std::move(field));
  }
  return out;
}

}  // namespace pace
