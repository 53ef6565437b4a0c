#pragma once

// Groom data model: strands with rest data, the scalp texture layout that
// maps strand roots to texels, and encode/decode between strand vertex data
// and the dense T x T x N x 3 texture representation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "quaffure/math.hpp"

namespace quaffure {

struct ScalpAttachment {
  int triangle = -1;          // body triangle index, -1 while unattached
  Vec3 barycentric = Vec3(1, 0, 0);
};

struct Strand {
  std::vector<Vec3> positions;       // N vertices, root first (meters)
  std::vector<double> rest_lengths;  // N-1 segment rest lengths
  std::vector<Vec3> rest_directors;  // N-1 unit edge directions of the rest shape
  Vec2 root_uv = Vec2::Zero();       // in [0,1)^2
  ScalpAttachment attachment;

  int vertex_count() const { return static_cast<int>(positions.size()); }
  int edge_count() const { return std::max(0, vertex_count() - 1); }

  // Rebuilds rest_lengths and rest_directors from the current positions.
  void derive_rest_data() {
    const int ne = edge_count();
    rest_lengths.resize(ne);
    rest_directors.resize(ne);
    for (int e = 0; e < ne; ++e) {
      const Vec3 d = positions[e + 1] - positions[e];
      rest_lengths[e] = d.norm();
      if (rest_lengths[e] <= 0)
        throw std::invalid_argument("strand has a zero-length rest segment");
      rest_directors[e] = d / rest_lengths[e];
    }
  }
};

struct Groom {
  std::string name;
  std::vector<Strand> strands;
  std::vector<std::pair<int, int>> texel_of_strand;  // (row, col) per strand
  std::vector<double> rest_density;                  // per vertex, strand-major; may be empty

  int strand_count() const { return static_cast<int>(strands.size()); }
  int verts_per_strand() const { return strands.empty() ? 0 : strands[0].vertex_count(); }
  int total_vertices() const { return strand_count() * verts_per_strand(); }

  // Flattened strand-major positions: vertex v of strand s at 3*(s*N + v).
  VecX flatten_positions() const {
    const int n = verts_per_strand();
    VecX x(3 * total_vertices());
    for (int s = 0; s < strand_count(); ++s)
      for (int v = 0; v < n; ++v) x.segment<3>(3 * (s * n + v)) = strands[s].positions[v];
    return x;
  }

  void set_positions(const VecX& x) {
    const int n = verts_per_strand();
    if (x.size() != 3 * total_vertices())
      throw std::invalid_argument("position vector size does not match groom");
    for (int s = 0; s < strand_count(); ++s)
      for (int v = 0; v < n; ++v) strands[s].positions[v] = x.segment<3>(3 * (s * n + v));
  }

  void validate() const {
    const int n = verts_per_strand();
    if (!strands.empty() && n < 2) throw std::invalid_argument("strands need at least 2 vertices");
    for (const Strand& s : strands) {
      if (s.vertex_count() != n)
        throw std::invalid_argument("all strands of a groom must share the vertex count");
      if (static_cast<int>(s.rest_lengths.size()) != n - 1 ||
          static_cast<int>(s.rest_directors.size()) != n - 1)
        throw std::invalid_argument("strand rest data size mismatch");
      for (int e = 0; e < n - 1; ++e) {
        if (!(s.rest_lengths[e] > 0)) throw std::invalid_argument("rest length must be positive");
        if (std::abs(s.rest_directors[e].norm() - 1.0) > 1e-9)
          throw std::invalid_argument("rest director must be unit length");
      }
      if (s.root_uv.x() < 0 || s.root_uv.x() >= 1 || s.root_uv.y() < 0 || s.root_uv.y() >= 1)
        throw std::invalid_argument("root uv outside [0,1)^2");
      if (s.attachment.triangle >= 0) {
        const Vec3& b = s.attachment.barycentric;
        if (b.minCoeff() < -1e-12 || std::abs(b.sum() - 1.0) > 1e-9)
          throw std::invalid_argument("barycentric coordinates must be non-negative and sum to 1");
      }
      for (const Vec3& p : s.positions)
        if (!p.allFinite()) throw std::invalid_argument("non-finite strand position");
    }
    for (double r : rest_density)
      if (!(r >= 0) || !std::isfinite(r))
        throw std::invalid_argument("rest density entries must be finite and >= 0");
  }
};

struct TextureLayout {
  int resolution = 64;                    // T
  std::vector<int> occupancy;             // T*T entries, strand index or -1
  std::vector<std::pair<int, int>> texel_of_strand;

  int active_count() const { return static_cast<int>(texel_of_strand.size()); }
  int index(int row, int col) const { return row * resolution + col; }
  bool in_bounds(int row, int col) const {
    return row >= 0 && row < resolution && col >= 0 && col < resolution;
  }
};

// Dense T x T x N x 3 displacement field; inactive texels hold zeros.
struct DisplacementTexture {
  int resolution = 0;  // T
  int verts = 0;       // N
  std::vector<double> data;

  DisplacementTexture() = default;
  DisplacementTexture(int T, int N) : resolution(T), verts(N), data(size_t(T) * T * N * 3, 0.0) {}

  size_t offset(int row, int col, int v, int k) const {
    return ((size_t(row) * resolution + col) * verts + v) * 3 + k;
  }
  double& at(int row, int col, int v, int k) { return data[offset(row, col, v, k)]; }
  double at(int row, int col, int v, int k) const { return data[offset(row, col, v, k)]; }

  bool all_finite() const {
    for (double d : data)
      if (!std::isfinite(d)) return false;
    return true;
  }
};

namespace detail {

inline Vec2 texel_center(int row, int col, int T) {
  return Vec2((col + 0.5) / T, (row + 0.5) / T);
}

// Free texels of the ring at Chebyshev radius `ring` around (row0, col0),
// nearest to `uv` first; ties resolved by (row, col).
inline bool nearest_free_on_ring(const std::vector<int>& occ, int T, int row0, int col0, int ring,
                                 const Vec2& uv, int& out_row, int& out_col) {
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  auto consider = [&](int r, int c) {
    if (r < 0 || r >= T || c < 0 || c >= T) return;
    if (occ[r * T + c] != -1) return;
    const double d2 = (texel_center(r, c, T) - uv).squaredNorm();
    if (d2 < best - 1e-15 ||
        (std::abs(d2 - best) <= 1e-15 && (r < out_row || (r == out_row && c < out_col)))) {
      best = d2;
      out_row = r;
      out_col = c;
      found = true;
    }
  };
  for (int c = col0 - ring; c <= col0 + ring; ++c) {
    consider(row0 - ring, c);
    consider(row0 + ring, c);
  }
  for (int r = row0 - ring + 1; r <= row0 + ring - 1; ++r) {
    consider(r, col0 - ring);
    consider(r, col0 + ring);
  }
  return found;
}

}  // namespace detail

// Maps each root uv to texel floor(uv * T). When several strands land in one
// texel the root nearest the texel center keeps it and the rest move to the
// nearest free texel found by an expanding ring search. Deterministic.
inline TextureLayout assign_texels(const std::vector<Vec2>& root_uvs, int T) {
  const int n = static_cast<int>(root_uvs.size());
  if (T <= 0) throw std::invalid_argument("texture resolution must be positive");
  if (n > T * T) throw std::invalid_argument("more strands than texels");

  for (const Vec2& uv : root_uvs)
    if (uv.x() < 0 || uv.x() >= 1 || uv.y() < 0 || uv.y() >= 1)
      throw std::invalid_argument("root uv outside [0,1)^2");

  TextureLayout layout;
  layout.resolution = T;
  layout.occupancy.assign(size_t(T) * T, -1);
  layout.texel_of_strand.assign(n, {-1, -1});

  // Group strands by home texel; nearest-to-center wins, lower index on ties.
  std::map<std::pair<int, int>, std::vector<int>> homes;
  for (int s = 0; s < n; ++s) {
    const int col = std::min(int(std::floor(root_uvs[s].x() * T)), T - 1);
    const int row = std::min(int(std::floor(root_uvs[s].y() * T)), T - 1);
    homes[{row, col}].push_back(s);
  }

  std::vector<int> displaced;
  for (auto& [texel, members] : homes) {
    const Vec2 center = detail::texel_center(texel.first, texel.second, T);
    int winner = members[0];
    double best = (root_uvs[winner] - center).squaredNorm();
    for (int s : members) {
      const double d2 = (root_uvs[s] - center).squaredNorm();
      if (d2 < best - 1e-15) {
        best = d2;
        winner = s;
      }
    }
    layout.occupancy[layout.index(texel.first, texel.second)] = winner;
    layout.texel_of_strand[winner] = texel;
    for (int s : members)
      if (s != winner) displaced.push_back(s);
  }

  std::sort(displaced.begin(), displaced.end());
  for (int s : displaced) {
    const int col0 = std::min(int(std::floor(root_uvs[s].x() * T)), T - 1);
    const int row0 = std::min(int(std::floor(root_uvs[s].y() * T)), T - 1);
    int row = -1, col = -1;
    for (int ring = 1; ring < 2 * T; ++ring) {
      if (detail::nearest_free_on_ring(layout.occupancy, T, row0, col0, ring, root_uvs[s], row, col))
        break;
    }
    if (row < 0) throw std::runtime_error("texel reassignment failed to find a free texel");
    layout.occupancy[layout.index(row, col)] = s;
    layout.texel_of_strand[s] = {row, col};
  }
  return layout;
}

inline TextureLayout layout_for_groom(const Groom& groom, int T) {
  std::vector<Vec2> uvs;
  uvs.reserve(groom.strands.size());
  for (const Strand& s : groom.strands) uvs.push_back(s.root_uv);
  return assign_texels(uvs, T);
}

// Writes each assigned strand's N x 3 vertex block into its texel; every
// other texel stays zero.
inline DisplacementTexture texture_encode(const Groom& groom, const TextureLayout& layout) {
  const int n = groom.strand_count();
  if (static_cast<int>(layout.texel_of_strand.size()) != n)
    throw std::invalid_argument("layout strand count does not match groom");
  const int N = groom.verts_per_strand();
  DisplacementTexture tex(layout.resolution, N);
  std::vector<bool> used(layout.occupancy.size(), false);
  for (int s = 0; s < n; ++s) {
    const auto [row, col] = layout.texel_of_strand[s];
    if (!layout.in_bounds(row, col)) throw std::invalid_argument("texel outside layout bounds");
    const int idx = layout.index(row, col);
    if (used[idx]) throw std::invalid_argument("duplicate texel assignment");
    used[idx] = true;
    if (groom.strands[s].vertex_count() != N)
      throw std::invalid_argument("strand vertex count mismatch");
    for (int v = 0; v < N; ++v)
      for (int k = 0; k < 3; ++k) tex.at(row, col, v, k) = groom.strands[s].positions[v][k];
  }
  return tex;
}

// Returns one N x 3 vertex array per strand, in strand-index order.
inline std::vector<std::vector<Vec3>> texture_decode(const DisplacementTexture& tex,
                                                     const TextureLayout& layout) {
  if (tex.resolution != layout.resolution)
    throw std::invalid_argument("texture resolution does not match layout");
  std::vector<std::vector<Vec3>> out(layout.texel_of_strand.size());
  for (size_t s = 0; s < layout.texel_of_strand.size(); ++s) {
    const auto [row, col] = layout.texel_of_strand[s];
    if (!layout.in_bounds(row, col)) throw std::invalid_argument("texel outside layout bounds");
    std::vector<Vec3>& verts = out[s];
    verts.resize(tex.verts);
    for (int v = 0; v < tex.verts; ++v) {
      for (int k = 0; k < 3; ++k) {
        const double value = tex.at(row, col, v, k);
        if (!std::isfinite(value)) throw std::invalid_argument("non-finite value in active texel");
        verts[v][k] = value;
      }
    }
  }
  return out;
}

}  // namespace quaffure
