#pragma once

// Spatial acceleration: an AABB tree over triangles for closest-point and
// signed-distance queries, and a uniform hash grid for fixed-radius neighbor
// queries. Both are built once per pose and queried read-only.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "quaffure/math.hpp"

namespace quaffure {

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  Vec3 triangle_normal(int t) const {  // unit, outward by winding convention
    const auto& tri = triangles[t];
    const Vec3 e0 = vertices[tri[1]] - vertices[tri[0]];
    const Vec3 e1 = vertices[tri[2]] - vertices[tri[0]];
    return safe_normalized(e0.cross(e1), "triangle normal");
  }
};

// Closest point on a triangle (Ericson-style region classification).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

inline Vec3 barycentric_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 v0 = b - a, v1 = c - a, v2 = p - a;
  const double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
  const double d20 = v2.dot(v0), d21 = v2.dot(v1);
  const double denom = d00 * d11 - d01 * d01;
  if (std::abs(denom) < 1e-18) throw std::runtime_error("degenerate triangle in barycentric solve");
  const double v = (d11 * d20 - d01 * d21) / denom;
  const double w = (d00 * d21 - d01 * d20) / denom;
  return Vec3(1.0 - v - w, v, w);
}

inline Vec3 barycentric_on_triangle(const TriMesh& mesh, int triangle, const Vec3& p) {
  const auto& tri = mesh.triangles.at(triangle);
  return barycentric_on_triangle(p, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                 mesh.vertices[tri[2]]);
}

struct ClosestPointResult {
  Vec3 point = Vec3::Zero();
  int triangle = -1;
  double signed_distance = 0;  // (x - point) . triangle_normal
  double distance = 0;         // |x - point|
};

class TriangleBVH {
 public:
  TriangleBVH() = default;
  explicit TriangleBVH(const TriMesh& mesh, int leaf_size = 4) { build(mesh, leaf_size); }

  void build(const TriMesh& mesh, int leaf_size = 4) {
    if (mesh.triangles.empty()) throw std::invalid_argument("cannot build BVH over empty mesh");
    mesh_ = &mesh;
    leaf_size_ = std::max(1, leaf_size);
    normals_.resize(mesh.triangles.size());
    centroids_.resize(mesh.triangles.size());
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
      normals_[t] = mesh.triangle_normal(int(t));
      const auto& tri = mesh.triangles[t];
      centroids_[t] =
          (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
    }
    order_.resize(mesh.triangles.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.clear();
    nodes_.reserve(2 * mesh.triangles.size());
    build_node(0, int(order_.size()));
  }

  // Globally nearest surface point; equal distances resolve to the lowest
  // triangle index so results match a brute-force scan.
  ClosestPointResult closest_point(const Vec3& x) const {
    if (!mesh_) throw std::runtime_error("BVH not built");
    ClosestPointResult best;
    double best_d2 = std::numeric_limits<double>::infinity();
    query(0, x, best, best_d2);
    best.distance = std::sqrt(best_d2);
    best.signed_distance = (x - best.point).dot(normals_[best.triangle]);
    return best;
  }

  const Vec3& triangle_normal(int t) const { return normals_[t]; }

 private:
  struct Node {
    Vec3 lo, hi;
    int left = -1, right = -1;  // children, or
    int begin = 0, end = 0;     // triangle range for leaves
    bool leaf = false;
  };

  int build_node(int begin, int end) {
    const int idx = int(nodes_.size());
    nodes_.push_back({});
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (int i = begin; i < end; ++i) {
      const auto& tri = mesh_->triangles[order_[i]];
      for (int k = 0; k < 3; ++k) {
        lo = lo.cwiseMin(mesh_->vertices[tri[k]]);
        hi = hi.cwiseMax(mesh_->vertices[tri[k]]);
      }
    }
    nodes_[idx].lo = lo;
    nodes_[idx].hi = hi;
    if (end - begin <= leaf_size_) {
      nodes_[idx].leaf = true;
      nodes_[idx].begin = begin;
      nodes_[idx].end = end;
      // Keep leaves ordered so equal-distance ties resolve deterministically.
      std::sort(order_.begin() + begin, order_.begin() + end);
      return idx;
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) { return centroids_[a][axis] < centroids_[b][axis]; });
    const int l = build_node(begin, mid);
    const int r = build_node(mid, end);
    nodes_[idx].left = l;
    nodes_[idx].right = r;
    return idx;
  }

  double box_distance2(const Node& n, const Vec3& x) const {
    const Vec3 d = (n.lo - x).cwiseMax(0.0).cwiseMax(x - n.hi);
    return d.squaredNorm();
  }

  void query(int node, const Vec3& x, ClosestPointResult& best, double& best_d2) const {
    const Node& n = nodes_[node];
    if (box_distance2(n, x) > best_d2) return;
    if (n.leaf) {
      for (int i = n.begin; i < n.end; ++i) {
        const int t = order_[i];
        const auto& tri = mesh_->triangles[t];
        const Vec3 p = closest_point_on_triangle(x, mesh_->vertices[tri[0]],
                                                 mesh_->vertices[tri[1]], mesh_->vertices[tri[2]]);
        const double d2 = (x - p).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && t < best.triangle)) {
          best_d2 = d2;
          best.point = p;
          best.triangle = t;
        }
      }
      return;
    }
    const double dl = box_distance2(nodes_[n.left], x);
    const double dr = box_distance2(nodes_[n.right], x);
    // Near child first; on exact ties visit the left child first so the
    // lowest-index tie-break is reached deterministically.
    if (dl <= dr) {
      query(n.left, x, best, best_d2);
      if (dr <= best_d2) query(n.right, x, best, best_d2);
    } else {
      query(n.right, x, best, best_d2);
      if (dl <= best_d2) query(n.left, x, best, best_d2);
    }
  }

  const TriMesh* mesh_ = nullptr;
  int leaf_size_ = 4;
  std::vector<Node> nodes_;
  std::vector<int> order_;
  std::vector<Vec3> normals_;
  std::vector<Vec3> centroids_;
};

// Uniform grid over points with a fixed cell size; supports exact queries for
// all points within a radius no larger than the cell size (closed ball).
class HashGrid {
 public:
  HashGrid() = default;
  HashGrid(const std::vector<Vec3>& points, double cell_size) { build(points, cell_size); }

  void build(const std::vector<Vec3>& points, double cell_size) {
    if (!(cell_size > 0)) throw std::invalid_argument("grid cell size must be positive");
    points_ = &points;
    cell_ = cell_size;
    cells_.clear();
    for (size_t i = 0; i < points.size(); ++i) cells_[key_of(points[i])].push_back(int(i));
  }

  double cell_size() const { return cell_; }

  // Indices of all points with |x - p_i| <= radius, ascending.
  void neighbors(const Vec3& x, double radius, std::vector<int>& out) const {
    if (!points_) throw std::runtime_error("grid not built");
    if (radius > cell_ + 1e-12) throw std::invalid_argument("query radius exceeds grid cell size");
    out.clear();
    const double r2 = radius * radius;
    const std::array<std::int64_t, 3> c = key_of(x);
    for (std::int64_t dz = -1; dz <= 1; ++dz)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          const auto it = cells_.find({c[0] + dx, c[1] + dy, c[2] + dz});
          if (it == cells_.end()) continue;
          for (int i : it->second)
            if (((*points_)[i] - x).squaredNorm() <= r2) out.push_back(i);
        }
    std::sort(out.begin(), out.end());
  }

  std::vector<int> neighbors(const Vec3& x, double radius) const {
    std::vector<int> out;
    neighbors(x, radius, out);
    return out;
  }

 private:
  struct KeyHash {
    size_t operator()(const std::array<std::int64_t, 3>& k) const {
      std::uint64_t h = 1469598103934665603ull;
      for (std::int64_t v : k) {
        h ^= std::uint64_t(v);
        h *= 1099511628211ull;
      }
      return size_t(h);
    }
  };

  std::array<std::int64_t, 3> key_of(const Vec3& p) const {
    return {std::int64_t(std::floor(p.x() / cell_)), std::int64_t(std::floor(p.y() / cell_)),
            std::int64_t(std::floor(p.z() / cell_))};
  }

  const std::vector<Vec3>* points_ = nullptr;
  double cell_ = 1;
  std::unordered_map<std::array<std::int64_t, 3>, std::vector<int>, KeyHash> cells_;
};

}  // namespace quaffure
