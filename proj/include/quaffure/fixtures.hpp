#pragma once

// Procedural assets: a small skinned test body (shoulders, neck, head; three
// joints, two blendshapes), synthetic grooms (straight, wavy, helical), the
// overlapping-bundle self-collision fixture, and pose sweeps. Everything is
// deterministic so tests and command-line runs see identical geometry.

#include <cmath>
#include <string>
#include <vector>

#include "quaffure/body.hpp"
#include "quaffure/groom.hpp"
#include "quaffure/kinematics.hpp"
#include "quaffure/math.hpp"

namespace quaffure {

// Axis-aligned ellipsoid as a UV sphere; per-vertex UV is (azimuth, 1-polar).
inline void append_uv_sphere(TriMesh& mesh, std::vector<Vec2>& uvs, const Vec3& center,
                             const Vec3& radii, int stacks, int slices) {
  const int base = int(mesh.vertices.size());
  for (int i = 0; i <= stacks; ++i) {
    const double theta = M_PI * i / stacks;
    for (int j = 0; j < slices; ++j) {
      const double phi = 2 * M_PI * j / slices;
      const Vec3 unit(std::sin(theta) * std::cos(phi), std::cos(theta),
                      std::sin(theta) * std::sin(phi));
      mesh.vertices.push_back(center + radii.cwiseProduct(unit));
      uvs.push_back(Vec2(phi / (2 * M_PI), 1.0 - theta / M_PI));
    }
  }
  auto at = [&](int i, int j) { return base + i * slices + (j % slices); };
  for (int i = 0; i < stacks; ++i)
    for (int j = 0; j < slices; ++j) {
      if (i > 0) mesh.triangles.push_back({at(i, j), at(i, j + 1), at(i + 1, j)});
      if (i + 1 < stacks) mesh.triangles.push_back({at(i, j + 1), at(i + 1, j + 1), at(i + 1, j)});
    }
}

struct FixtureBody {
  BodyModel body;
  std::vector<Vec2> uvs;        // per vertex
  int head_vertex_begin = 0;    // head sphere occupies [begin, end)
  int head_vertex_end = 0;
  Vec3 head_center = Vec3::Zero();
  double head_radius = 0;
};

// Shoulders + neck + head, each a scaled sphere; joints root -> neck -> head.
inline FixtureBody make_fixture_body() {
  FixtureBody fx;
  BodyModel& b = fx.body;
  append_uv_sphere(b.mesh, fx.uvs, Vec3(0, 1.42, 0), Vec3(0.22, 0.06, 0.09), 8, 16);
  const int shoulder_end = int(b.mesh.vertices.size());
  append_uv_sphere(b.mesh, fx.uvs, Vec3(0, 1.50, 0), Vec3(0.045, 0.085, 0.045), 8, 12);
  const int neck_end = int(b.mesh.vertices.size());
  fx.head_center = Vec3(0, 1.60, 0);
  fx.head_radius = 0.10;
  fx.head_vertex_begin = neck_end;
  append_uv_sphere(b.mesh, fx.uvs, fx.head_center, Vec3::Constant(fx.head_radius), 12, 24);
  fx.head_vertex_end = int(b.mesh.vertices.size());

  b.joints.push_back({"root", -1, Vec3(0, 1.40, 0), quat_identity()});
  b.joints.push_back({"neck", 0, Vec3(0, 0.08, 0), quat_identity()});
  b.joints.push_back({"head", 1, Vec3(0, 0.08, 0), quat_identity()});

  b.skin_weights.resize(b.mesh.vertices.size());
  for (int v = 0; v < shoulder_end; ++v) b.skin_weights[v] = {{0, 1.0}};
  for (int v = shoulder_end; v < neck_end; ++v) b.skin_weights[v] = {{1, 1.0}};
  for (int v = neck_end; v < fx.head_vertex_end; ++v) b.skin_weights[v] = {{2, 1.0}};

  std::vector<Vec3> head_size(b.mesh.vertices.size(), Vec3::Zero());
  for (int v = fx.head_vertex_begin; v < fx.head_vertex_end; ++v)
    head_size[v] = 0.02 * (b.mesh.vertices[v] - fx.head_center).normalized();
  std::vector<Vec3> shoulder_width(b.mesh.vertices.size(), Vec3::Zero());
  for (int v = 0; v < shoulder_end; ++v)
    shoulder_width[v] = Vec3(0.25 * (b.mesh.vertices[v].x() - 0.0), 0, 0);
  b.blendshapes.push_back(std::move(head_size));
  b.blendshapes.push_back(std::move(shoulder_width));
  b.validate();
  return fx;
}

inline ObjData fixture_body_obj(const FixtureBody& fx) {
  ObjData obj;
  obj.vertices = fx.body.mesh.vertices;
  obj.uvs = fx.uvs;
  obj.triangles = fx.body.mesh.triangles;
  obj.triangle_uvs.resize(obj.triangles.size());
  for (size_t t = 0; t < obj.triangles.size(); ++t)
    for (int k = 0; k < 3; ++k) obj.triangle_uvs[t][k] = obj.triangles[t][k];
  return obj;
}

// Deterministic golden-angle root layout on the upper head cap.
inline std::vector<std::pair<Vec3, Vec2>> scalp_roots(const FixtureBody& fx, int n,
                                                      double max_polar_deg = 55) {
  std::vector<std::pair<Vec3, Vec2>> roots;
  const double golden = (1 + std::sqrt(5.0)) / 2;
  const double cos_max = std::cos(max_polar_deg * M_PI / 180.0);
  for (int k = 0; k < n; ++k) {
    const double c = 1 - (1 - cos_max) * (k + 0.5) / n;  // cos(theta)
    const double theta = std::acos(c);
    const double phi = 2 * M_PI * std::fmod((k + 1) / golden, 1.0);
    const Vec3 unit(std::sin(theta) * std::cos(phi), std::cos(theta),
                    std::sin(theta) * std::sin(phi));
    const Vec3 pos = fx.head_center + fx.head_radius * unit;
    roots.push_back({pos, Vec2(phi / (2 * M_PI), 1.0 - theta / M_PI)});
  }
  return roots;
}

enum class StrandShape { straight, wavy, helical };

// Grows strands outward from the scalp along the head normal; wavy and
// helical shapes perturb the straight backbone with tangent offsets.
inline Groom make_scalp_groom(const FixtureBody& fx, int n_strands, int verts, double length,
                              StrandShape shape, const std::string& name,
                              double curl_radius = 0.012, double curl_turns = 3.0) {
  Groom groom;
  groom.name = name;
  const auto roots = scalp_roots(fx, n_strands);
  for (int s = 0; s < n_strands; ++s) {
    const auto& [root, uv] = roots[s];
    const Vec3 dir = (root - fx.head_center).normalized();
    const Vec3 t1 = orthogonal_unit(dir);
    const Vec3 t2 = dir.cross(t1);
    Strand strand;
    strand.root_uv = uv;
    for (int v = 0; v < verts; ++v) {
      const double t = double(v) / (verts - 1);
      Vec3 p = root + length * t * dir;
      if (shape == StrandShape::wavy) {
        p += 0.01 * std::sin(3 * M_PI * t) * t1;
      } else if (shape == StrandShape::helical) {
        const double a = 2 * M_PI * curl_turns * t;
        p += curl_radius * ((std::cos(a) - 1) * t1 + std::sin(a) * t2);
      }
      strand.positions.push_back(p);
    }
    strand.derive_rest_data();
    groom.strands.push_back(std::move(strand));
  }
  attach_roots(groom, fx.body.mesh);
  groom.validate();
  return groom;
}

// Free-standing strand with no scalp attachment; rest shape runs from the
// root along `direction`.
inline Groom make_single_strand(const Vec3& root, const Vec3& direction, double length,
                                int verts, const std::string& name = "strand") {
  Groom groom;
  groom.name = name;
  Strand strand;
  strand.root_uv = Vec2(0.5, 0.5);
  const Vec3 dir = direction.normalized();
  for (int v = 0; v < verts; ++v)
    strand.positions.push_back(root + length * double(v) / (verts - 1) * dir);
  strand.derive_rest_data();
  groom.strands.push_back(std::move(strand));
  groom.validate();
  return groom;
}

// Two bundles of vertical strands rooted apart; the paired start state drops
// bundle B onto bundle A so densities start far above rest.
struct OverlapFixture {
  Groom groom;     // rest: bundles separated
  VecX x_start;    // bundle B's free vertices shifted onto bundle A
};

inline OverlapFixture make_overlap_fixture(int strands_per_bundle, int verts, double length,
                                           double bundle_gap = 0.06,
                                           double strand_spacing = 0.002) {
  OverlapFixture fx;
  fx.groom.name = "overlap";
  const int side = std::max(1, int(std::ceil(std::sqrt(double(strands_per_bundle)))));
  auto add_bundle = [&](double cx) {
    for (int s = 0; s < strands_per_bundle; ++s) {
      const int gx = s % side, gz = s / side;
      Strand strand;
      strand.root_uv = Vec2(0.25 + cx, 0.25 + 0.001 * s);
      const Vec3 root(cx + gx * strand_spacing, 0.0, gz * strand_spacing);
      for (int v = 0; v < verts; ++v)
        strand.positions.push_back(root + Vec3(0, -length * v / (verts - 1), 0));
      strand.derive_rest_data();
      fx.groom.strands.push_back(std::move(strand));
    }
  };
  add_bundle(0.0);
  add_bundle(bundle_gap);
  fx.groom.validate();

  fx.x_start = fx.groom.flatten_positions();
  const int n = verts;
  for (int s = strands_per_bundle; s < 2 * strands_per_bundle; ++s) {
    // keep roots pinned apart; slide free vertices onto the first bundle with
    // a small deterministic skew so no two points coincide exactly
    const double skew = 1e-4 * (s - strands_per_bundle + 1);
    for (int v = 1; v < n; ++v)
      fx.x_start.segment<3>(3 * (s * n + v)) +=
          Vec3(-bundle_gap + skew, 0, 0.5 * strand_spacing);
  }
  return fx;
}

// Linear sweep of one joint's axis-angle component.
inline std::vector<PoseParams> make_joint_sweep(int pose_dim, int joint, int axis,
                                                double from_rad, double to_rad, int frames) {
  if (joint < 0 || 3 * joint + axis >= pose_dim)
    throw std::invalid_argument("sweep joint outside pose dimension");
  std::vector<PoseParams> out;
  for (int f = 0; f < frames; ++f) {
    PoseParams p = PoseParams::rest(pose_dim);
    const double t = frames == 1 ? 0.0 : double(f) / (frames - 1);
    p.joint_rotations[3 * joint + axis] = from_rad + t * (to_rad - from_rad);
    out.push_back(std::move(p));
  }
  return out;
}

// Random strand state helpers shared by gradient checks.
inline VecX random_positions(Rng& rng, int n_verts, double scale = 0.1) {
  VecX x(3 * n_verts);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = scale * rng.normal();
  return x;
}

inline VecX random_unit_quaternions(Rng& rng, int n) {
  VecX q(4 * n);
  for (int i = 0; i < n; ++i) {
    Vec4 v(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.segment<4>(4 * i) = v / v.norm();
  }
  return q;
}

}  // namespace quaffure
