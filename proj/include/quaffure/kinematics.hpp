#pragma once

// Root-frame construction on the scalp, rigid transport of strands from the
// rest pose to a posed body, and composition of posed geometry with a learned
// displacement field.

#include <stdexcept>
#include <vector>

#include "quaffure/groom.hpp"
#include "quaffure/math.hpp"
#include "quaffure/spatial.hpp"

namespace quaffure {

// Orthonormal right-handed frame anchored on a scalp triangle.
struct RootFrame {
  Mat3 basis = Mat3::Identity();  // columns e1, e2, n
  Vec3 origin = Vec3::Zero();
};

inline RootFrame root_frame_on_triangle(const TriMesh& scalp, int triangle,
                                        const Vec3& barycentric) {
  const auto& tri = scalp.triangles.at(triangle);
  const Vec3 a = scalp.vertices[tri[0]];
  const Vec3 b = scalp.vertices[tri[1]];
  const Vec3 c = scalp.vertices[tri[2]];
  const Vec3 e0 = b - a, e1 = c - a;
  const Vec3 cross = e0.cross(e1);
  if (0.5 * cross.norm() < 1e-12)
    throw std::runtime_error("degenerate scalp triangle for root frame");
  RootFrame f;
  const Vec3 n = cross.normalized();
  const Vec3 t = e0.normalized();
  f.basis.col(0) = t;
  f.basis.col(1) = n.cross(t);
  f.basis.col(2) = n;
  f.origin = barycentric[0] * a + barycentric[1] * b + barycentric[2] * c;
  return f;
}

inline std::vector<RootFrame> build_root_frames(const Groom& groom, const TriMesh& scalp) {
  std::vector<RootFrame> frames;
  frames.reserve(groom.strands.size());
  for (const Strand& s : groom.strands) {
    if (s.attachment.triangle < 0)
      throw std::runtime_error("strand lacks a scalp attachment");
    frames.push_back(root_frame_on_triangle(scalp, s.attachment.triangle, s.attachment.barycentric));
  }
  return frames;
}

// Per-strand vertex coordinates expressed in the rest root frame.
struct RestEmbedding {
  std::vector<std::vector<Vec3>> local;  // [strand][vertex]
};

inline RestEmbedding embed_strands(const Groom& groom, const std::vector<RootFrame>& rest_frames) {
  if (rest_frames.size() != groom.strands.size())
    throw std::invalid_argument("one root frame per strand required");
  RestEmbedding emb;
  emb.local.resize(groom.strands.size());
  for (size_t s = 0; s < groom.strands.size(); ++s) {
    const RootFrame& f = rest_frames[s];
    emb.local[s].reserve(groom.strands[s].positions.size());
    for (const Vec3& x : groom.strands[s].positions)
      emb.local[s].push_back(f.basis.transpose() * (x - f.origin));
  }
  return emb;
}

// Rigid transport: every vertex follows its root frame. Returns flattened
// strand-major positions (3 * (strand * verts + vertex)).
inline VecX pose_groom(const Groom& groom, const RestEmbedding& embedding,
                       const std::vector<RootFrame>& posed_frames) {
  if (posed_frames.size() != groom.strands.size() ||
      embedding.local.size() != groom.strands.size())
    throw std::invalid_argument("embedding and frames must match strand count");
  const int n = groom.verts_per_strand();
  VecX x(3 * int(groom.strands.size()) * n);
  for (size_t s = 0; s < groom.strands.size(); ++s) {
    const RootFrame& f = posed_frames[s];
    for (int v = 0; v < n; ++v)
      x.segment<3>(3 * (int(s) * n + v)) = f.origin + f.basis * embedding.local[s][v];
  }
  return x;
}

// x_hair = x_posed + displacement, both laid out on the same texture.
inline DisplacementTexture compose_drape(const DisplacementTexture& x_posed,
                                         const DisplacementTexture& deformation,
                                         const TextureLayout& layout) {
  if (x_posed.resolution != deformation.resolution || x_posed.verts != deformation.verts ||
      x_posed.resolution != layout.resolution)
    throw std::invalid_argument("texture shapes must agree");
  DisplacementTexture out = x_posed;
  for (int r = 0; r < layout.resolution; ++r)
    for (int c = 0; c < layout.resolution; ++c) {
      if (layout.occupancy[r * layout.resolution + c] < 0) continue;
      for (int v = 0; v < x_posed.verts; ++v)
        for (int k = 0; k < 3; ++k)
          out.data[out.offset(r, c, v, k)] += deformation.data[deformation.offset(r, c, v, k)];
    }
  return out;
}

// Flattened fast path over active strands only.
inline VecX compose_drape(const VecX& x_posed, const VecX& deformation) {
  if (x_posed.size() != deformation.size())
    throw std::invalid_argument("position and displacement sizes must agree");
  return x_posed + deformation;
}

// Bind each strand root to the closest scalp point; overwrites attachments.
inline void attach_roots(Groom& groom, const TriMesh& scalp) {
  TriangleBVH bvh(scalp);
  for (Strand& s : groom.strands) {
    const ClosestPointResult hit = bvh.closest_point(s.positions.at(0));
    s.attachment.triangle = hit.triangle;
    s.attachment.barycentric = barycentric_on_triangle(scalp, hit.triangle, hit.point);
  }
}

// Unit edge directions of flattened strand-major positions, strand-major per
// edge; these act as the posed rest directors for the position-only energies.
inline std::vector<Vec3> edge_directors(const VecX& x, int n_strands, int verts_per_strand) {
  if (x.size() != 3 * Eigen::Index(n_strands) * verts_per_strand)
    throw std::invalid_argument("position vector size mismatch");
  std::vector<Vec3> dirs;
  dirs.reserve(size_t(n_strands) * (verts_per_strand - 1));
  for (int s = 0; s < n_strands; ++s)
    for (int v = 0; v + 1 < verts_per_strand; ++v) {
      const Vec3 a = x.segment<3>(3 * (s * verts_per_strand + v));
      const Vec3 b = x.segment<3>(3 * (s * verts_per_strand + v + 1));
      dirs.push_back(safe_normalized(b - a));
    }
  return dirs;
}

}  // namespace quaffure
