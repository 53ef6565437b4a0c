#pragma once

// Scene assembly for a single (groom, shape, pose) drape: skins the body,
// rigidly transports the groom, derives posed directors and rest densities,
// and runs the selected equilibrium solver with strand roots pinned.

#include <memory>
#include <vector>

#include "quaffure/body.hpp"
#include "quaffure/kinematics.hpp"
#include "quaffure/potentials.hpp"
#include "quaffure/solvers.hpp"

namespace quaffure {

struct DrapeScene {
  Groom groom;  // rest groom with attachments and rest data
  std::unique_ptr<TriMesh> posed_body;
  std::unique_ptr<TriangleBVH> body_bvh;
  std::vector<RootFrame> frames_rest, frames_posed;
  RestEmbedding embedding;
  VecX x_posed;
  EnergyContext ctx;
  std::vector<uint8_t> pinned;  // one flag per vertex, roots pinned
};

inline DrapeScene build_scene(const Groom& groom, const BodyModel& body,
                              const ShapeParams& shape, const PoseParams& pose,
                              const MaterialParams& material, int threads = 1,
                              bool deterministic = true) {
  material.validate();
  DrapeScene scene;
  scene.groom = groom;
  scene.groom.validate();

  PosedBody posed = skin_body(body, shape, pose);
  scene.posed_body = std::make_unique<TriMesh>(std::move(posed.mesh));
  scene.body_bvh = std::make_unique<TriangleBVH>(*scene.posed_body);

  TriMesh rest_scalp = body.mesh;
  scene.frames_rest = build_root_frames(scene.groom, rest_scalp);
  scene.frames_posed = build_root_frames(scene.groom, *scene.posed_body);
  scene.embedding = embed_strands(scene.groom, scene.frames_rest);
  scene.x_posed = pose_groom(scene.groom, scene.embedding, scene.frames_posed);

  const int n_strands = int(scene.groom.strands.size());
  const int verts = scene.groom.verts_per_strand();
  scene.ctx.topo = {n_strands, verts};
  scene.ctx.rest_lengths.reserve(size_t(scene.ctx.topo.edge_count()));
  for (const Strand& s : scene.groom.strands)
    scene.ctx.rest_lengths.insert(scene.ctx.rest_lengths.end(), s.rest_lengths.begin(),
                                  s.rest_lengths.end());
  scene.ctx.rest_bend_lengths = bend_rest_lengths(scene.groom);
  scene.ctx.directors = edge_directors(scene.x_posed, n_strands, verts);
  scene.ctx.body = scene.posed_body.get();
  scene.ctx.body_bvh = scene.body_bvh.get();
  scene.ctx.rho_rest = scene.groom.rest_density.empty()
                           ? compute_rest_density(scene.groom, material.vertex_mass,
                                                  material.smoothing_length, threads)
                           : scene.groom.rest_density;
  scene.ctx.masses.assign(size_t(scene.ctx.topo.vertex_count()), material.vertex_mass);
  scene.ctx.material = material;
  scene.ctx.threads = threads;
  scene.ctx.deterministic = deterministic;

  scene.pinned.assign(size_t(scene.ctx.topo.vertex_count()), 0);
  for (int s = 0; s < n_strands; ++s) scene.pinned[scene.ctx.topo.vertex(s, 0)] = 1;

  if (material.elastic == ElasticStack::full_cosserat) {
    scene.ctx.rest_orientations.resize(4 * scene.ctx.topo.edge_count());
    for (int e = 0; e < scene.ctx.topo.edge_count(); ++e)
      scene.ctx.rest_orientations.segment<4>(4 * e) =
          quat_from_two_unit_vectors(Vec3(0, 0, 1), scene.ctx.directors[e]);
  }
  return scene;
}

// Scene with no body: the groom drapes in free space from its rest
// configuration, roots pinned where they are.
inline DrapeScene build_free_scene(const Groom& groom, const MaterialParams& material,
                                   int threads = 1, bool deterministic = true) {
  material.validate();
  DrapeScene scene;
  scene.groom = groom;
  scene.groom.validate();
  scene.x_posed = scene.groom.flatten_positions();

  const int n_strands = int(scene.groom.strands.size());
  const int verts = scene.groom.verts_per_strand();
  scene.ctx.topo = {n_strands, verts};
  for (const Strand& s : scene.groom.strands)
    scene.ctx.rest_lengths.insert(scene.ctx.rest_lengths.end(), s.rest_lengths.begin(),
                                  s.rest_lengths.end());
  scene.ctx.rest_bend_lengths = bend_rest_lengths(scene.groom);
  scene.ctx.directors = edge_directors(scene.x_posed, n_strands, verts);
  scene.ctx.rho_rest = scene.groom.rest_density.empty()
                           ? compute_rest_density(scene.groom, material.vertex_mass,
                                                  material.smoothing_length, threads)
                           : scene.groom.rest_density;
  scene.ctx.masses.assign(size_t(scene.ctx.topo.vertex_count()), material.vertex_mass);
  scene.ctx.material = material;
  scene.ctx.material.enable_body_collision = false;
  scene.ctx.threads = threads;
  scene.ctx.deterministic = deterministic;

  scene.pinned.assign(size_t(scene.ctx.topo.vertex_count()), 0);
  for (int s = 0; s < n_strands; ++s) scene.pinned[scene.ctx.topo.vertex(s, 0)] = 1;

  if (material.elastic == ElasticStack::full_cosserat) {
    scene.ctx.rest_orientations.resize(4 * scene.ctx.topo.edge_count());
    for (int e = 0; e < scene.ctx.topo.edge_count(); ++e)
      scene.ctx.rest_orientations.segment<4>(4 * e) =
          quat_from_two_unit_vectors(Vec3(0, 0, 1), scene.ctx.directors[e]);
  }
  return scene;
}

namespace detail {

// Maps the reduced free-vertex vector to the full layout and back.
struct DofPacking {
  std::vector<int> free_vertices;
  int full_size = 0;

  explicit DofPacking(const std::vector<uint8_t>& pinned) {
    full_size = 3 * int(pinned.size());
    for (size_t i = 0; i < pinned.size(); ++i)
      if (!pinned[i]) free_vertices.push_back(int(i));
  }

  VecX reduce(const VecX& full) const {
    VecX out(3 * free_vertices.size());
    for (size_t k = 0; k < free_vertices.size(); ++k)
      out.segment<3>(3 * k) = full.segment<3>(3 * free_vertices[k]);
    return out;
  }

  VecX expand(const VecX& reduced, const VecX& reference) const {
    VecX full = reference;
    for (size_t k = 0; k < free_vertices.size(); ++k)
      full.segment<3>(3 * free_vertices[k]) = reduced.segment<3>(3 * k);
    return full;
  }
};

}  // namespace detail

// Runs the configured solver from x_posed with roots pinned; the returned
// positions cover every vertex.
inline EquilibriumResult solve_drape(const DrapeScene& scene, const SolveConfig& config) {
  const VecX& x0 = scene.x_posed;
  if (config.method == SolveMethod::xpbd) {
    if (scene.ctx.material.elastic != ElasticStack::cosserat)
      throw std::invalid_argument("XPBD supports the position-only elastic stack");
    return xpbd_quasistatic(x0, scene.ctx, scene.pinned, config);
  }

  const detail::DofPacking pack(scene.pinned);
  if (scene.ctx.material.elastic == ElasticStack::full_cosserat) {
    const int nq = 4 * scene.ctx.topo.edge_count();
    const int nx = 3 * int(pack.free_vertices.size());
    VecX z0(nx + nq);
    z0.head(nx) = pack.reduce(x0);
    z0.tail(nq) = scene.ctx.rest_orientations;
    ObjectiveFn objective = [&, nx](const VecX& z, bool) {
      const VecX x = pack.expand(z.head(nx), x0);
      EnergyReport r = total_energy(x, z.tail(z.size() - nx), scene.ctx);
      VecX g(z.size());
      g.head(nx) = pack.reduce(r.gradient);
      g.tail(z.size() - nx) = r.orientation_gradient;
      r.gradient = std::move(g);
      return r;
    };
    EquilibriumResult result = config.method == SolveMethod::adam
                                   ? minimize_first_order(objective, z0, config)
                                   : minimize_lbfgs(objective, z0, config);
    result.positions = pack.expand(result.positions.head(nx), x0);
    return result;
  }

  ObjectiveFn objective = [&](const VecX& xr, bool) {
    EnergyReport r = total_energy(pack.expand(xr, x0), scene.ctx);
    r.gradient = pack.reduce(r.gradient);
    return r;
  };
  const VecX xr0 = pack.reduce(x0);
  EquilibriumResult result = config.method == SolveMethod::adam
                                 ? minimize_first_order(objective, xr0, config)
                                 : minimize_lbfgs(objective, xr0, config);
  result.positions = pack.expand(result.positions, x0);
  return result;
}

}  // namespace quaffure
