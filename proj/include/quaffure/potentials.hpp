#pragma once

// Energy terms of the quasi-static hair objective, each returning the scalar
// value and accumulating its analytic gradient. Positions are flattened
// strand-major: component k of vertex v of strand s lives at
// 3 * (s * verts + v) + k. Per-edge quantities use index s * (verts - 1) + v.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quaffure/groom.hpp"
#include "quaffure/material.hpp"
#include "quaffure/math.hpp"
#include "quaffure/parallel.hpp"
#include "quaffure/spatial.hpp"

namespace quaffure {

struct StrandTopology {
  int n_strands = 0;
  int verts = 0;

  int vertex_count() const { return n_strands * verts; }
  int edge_count() const { return n_strands * (verts - 1); }
  int dof_count() const { return 3 * vertex_count(); }
  int vertex(int s, int v) const { return s * verts + v; }
  int edge(int s, int v) const { return s * (verts - 1) + v; }

  void check_positions(const VecX& x) const {
    if (x.size() != dof_count()) throw std::invalid_argument("position vector size mismatch");
  }
};

// ---------------------------------------------------------------------------
// Elastic terms

inline double stretch_energy(const VecX& x, const StrandTopology& topo,
                             const std::vector<double>& rest_lengths, double k,
                             VecX* grad = nullptr) {
  topo.check_positions(x);
  if (int(rest_lengths.size()) != topo.edge_count())
    throw std::invalid_argument("one rest length per edge required");
  double energy = 0;
  for (int s = 0; s < topo.n_strands; ++s)
    for (int v = 0; v + 1 < topo.verts; ++v) {
      const int a = 3 * topo.vertex(s, v), b = 3 * topo.vertex(s, v + 1);
      const Vec3 e = x.segment<3>(b) - x.segment<3>(a);
      const double l = e.norm();
      const double lr = rest_lengths[topo.edge(s, v)];
      if (l < 1e-12 && lr < 1e-12)
        throw std::runtime_error("zero-length segment with zero rest length");
      energy += 0.5 * k * (l - lr) * (l - lr);
      if (grad && l > 1e-12) {
        const Vec3 g = k * (l - lr) / l * e;
        grad->segment<3>(b) += g;
        grad->segment<3>(a) -= g;
      }
    }
  return energy;
}

inline double cosserat_energy(const VecX& x, const StrandTopology& topo,
                              const std::vector<double>& rest_lengths,
                              const std::vector<Vec3>& directors, double k,
                              CosseratVariant variant, VecX* grad = nullptr) {
  topo.check_positions(x);
  if (int(directors.size()) != topo.edge_count())
    throw std::invalid_argument("one director per edge required");
  double energy = 0;
  for (int s = 0; s < topo.n_strands; ++s)
    for (int v = 0; v + 1 < topo.verts; ++v) {
      const int a = 3 * topo.vertex(s, v), b = 3 * topo.vertex(s, v + 1);
      const int e_idx = topo.edge(s, v);
      const Vec3 e = x.segment<3>(b) - x.segment<3>(a);
      const Vec3& d3 = directors[e_idx];
      if (variant == CosseratVariant::modified) {
        const double lr = rest_lengths[e_idx];
        const Vec3 gamma = e / lr - d3;
        energy += 0.5 * k * gamma.squaredNorm();
        if (grad) {
          const Vec3 g = k / lr * gamma;
          grad->segment<3>(b) += g;
          grad->segment<3>(a) -= g;
        }
      } else {
        const double l = e.norm();
        if (l < 1e-12) throw std::runtime_error("degenerate segment in shear-only energy");
        const Vec3 u = e / l;
        const Vec3 gamma = u - d3;
        energy += 0.5 * k * gamma.squaredNorm();
        if (grad) {
          // d(e/l)/de = (I - u u^T)/l
          const Vec3 g = k / l * (gamma - u.dot(gamma) * u);
          grad->segment<3>(b) += g;
          grad->segment<3>(a) -= g;
        }
      }
    }
  return energy;
}

// Per-edge unit quaternions flattened as 4 * edge + {w,x,y,z}.
inline double full_cosserat_stretch_shear(const VecX& x, const VecX& q,
                                          const StrandTopology& topo,
                                          const std::vector<double>& rest_lengths, double k,
                                          VecX* grad_x = nullptr, VecX* grad_q = nullptr) {
  topo.check_positions(x);
  if (q.size() != 4 * topo.edge_count())
    throw std::invalid_argument("one quaternion per edge required");
  double energy = 0;
  for (int s = 0; s < topo.n_strands; ++s)
    for (int v = 0; v + 1 < topo.verts; ++v) {
      const int a = 3 * topo.vertex(s, v), b = 3 * topo.vertex(s, v + 1);
      const int e_idx = topo.edge(s, v);
      const double lr = rest_lengths[e_idx];
      const Vec4 qe = q.segment<4>(4 * e_idx);
      const Vec3 gamma = (x.segment<3>(b) - x.segment<3>(a)) / lr - quat_sandwich_e3(qe);
      energy += 0.5 * k * gamma.squaredNorm();
      if (grad_x) {
        const Vec3 g = k / lr * gamma;
        grad_x->segment<3>(b) += g;
        grad_x->segment<3>(a) -= g;
      }
      if (grad_q)
        grad_q->segment<4>(4 * e_idx) -= k * quat_sandwich_e3_jacobian(qe).transpose() * gamma;
    }
  return energy;
}

inline double full_cosserat_bend_twist(const VecX& q, const VecX& q_rest,
                                       const StrandTopology& topo,
                                       const std::vector<double>& rest_lengths, double k,
                                       VecX* grad_q = nullptr) {
  if (q.size() != 4 * topo.edge_count() || q_rest.size() != q.size())
    throw std::invalid_argument("one quaternion per edge required");
  double energy = 0;
  for (int s = 0; s < topo.n_strands; ++s)
    for (int v = 0; v + 2 < topo.verts; ++v) {
      const int ei = topo.edge(s, v), ej = topo.edge(s, v + 1);
      const double lr = 0.5 * (rest_lengths[ei] + rest_lengths[ej]);
      const Vec4 qi = q.segment<4>(4 * ei), qj = q.segment<4>(4 * ej);
      const Vec3 rest = quat_imag_conj_prod(q_rest.segment<4>(4 * ei), q_rest.segment<4>(4 * ej));
      const Vec3 omega = (2.0 / lr) * (quat_imag_conj_prod(qi, qj) - rest);
      energy += 0.5 * k * omega.squaredNorm();
      if (grad_q) {
        const auto [ja, jb] = quat_imag_conj_prod_jacobians(qi, qj);
        const Vec3 w = k * (2.0 / lr) * omega;
        grad_q->segment<4>(4 * ei) += ja.transpose() * w;
        grad_q->segment<4>(4 * ej) += jb.transpose() * w;
      }
    }
  return energy;
}

inline double unit_quaternion_energy(const VecX& q, double k, VecX* grad_q = nullptr) {
  if (q.size() % 4 != 0) throw std::invalid_argument("quaternion array size must be 4n");
  double energy = 0;
  for (Eigen::Index i = 0; i < q.size(); i += 4) {
    const double n = q.segment<4>(i).norm();
    if (n < 1e-12) throw std::runtime_error("quaternion norm too small for unit constraint");
    energy += 0.5 * k * (n - 1) * (n - 1);
    if (grad_q) grad_q->segment<4>(i) += k * (n - 1) / n * q.segment<4>(i);
  }
  return energy;
}

inline double mass_spring_energy(const VecX& x, const StrandTopology& topo,
                                 const std::vector<double>& rest_lengths,
                                 const std::vector<double>& rest_bend_lengths, double k_edge,
                                 double k_bend, VecX* grad = nullptr) {
  topo.check_positions(x);
  if (topo.verts < 3) throw std::invalid_argument("bending springs need at least 3 vertices");
  if (int(rest_bend_lengths.size()) != topo.n_strands * (topo.verts - 2))
    throw std::invalid_argument("one bend rest length per (i, i+2) pair required");
  auto spring = [&](int a, int b, double rest, double k) {
    const Vec3 e = x.segment<3>(3 * b) - x.segment<3>(3 * a);
    const double l = e.norm();
    const double energy = 0.5 * k * (l - rest) * (l - rest);
    if (grad && l > 1e-12) {
      const Vec3 g = k * (l - rest) / l * e;
      grad->segment<3>(3 * b) += g;
      grad->segment<3>(3 * a) -= g;
    }
    return energy;
  };
  double energy = 0;
  for (int s = 0; s < topo.n_strands; ++s) {
    for (int v = 0; v + 1 < topo.verts; ++v)
      energy += spring(topo.vertex(s, v), topo.vertex(s, v + 1), rest_lengths[topo.edge(s, v)],
                       k_edge);
    for (int v = 0; v + 2 < topo.verts; ++v)
      energy += spring(topo.vertex(s, v), topo.vertex(s, v + 2),
                       rest_bend_lengths[s * (topo.verts - 2) + v], k_bend);
  }
  return energy;
}

// Rest distances of the (i, i+2) bending springs, from the rest configuration.
inline std::vector<double> bend_rest_lengths(const Groom& groom) {
  const int n = groom.verts_per_strand();
  std::vector<double> out;
  out.reserve(groom.strands.size() * size_t(std::max(0, n - 2)));
  for (const Strand& s : groom.strands)
    for (int v = 0; v + 2 < n; ++v)
      out.push_back((s.positions[v + 2] - s.positions[v]).norm());
  return out;
}

// ---------------------------------------------------------------------------
// External forces and collision

inline double gravity_energy(const VecX& x, double m, const Vec3& g, VecX* grad = nullptr) {
  if (x.size() % 3 != 0) throw std::invalid_argument("position array size must be 3n");
  double energy = 0;
  for (Eigen::Index i = 0; i < x.size(); i += 3) {
    energy -= m * g.dot(x.segment<3>(i));
    if (grad) grad->segment<3>(i) -= m * g;
  }
  return energy;
}

inline double body_collision_energy(const VecX& x, const TriMesh& body, const TriangleBVH& bvh,
                                    double margin, double k_bc, VecX* grad = nullptr,
                                    int threads = 1, bool deterministic = true) {
  if (x.size() % 3 != 0) throw std::invalid_argument("position array size must be 3n");
  if (body.triangles.empty()) throw std::invalid_argument("empty body mesh");
  const int n = int(x.size() / 3);
  const double energy = parallel_reduce(
      n, threads, deterministic, [&](int lo, int hi) {
        double partial = 0;
        for (int i = lo; i < hi; ++i) {
          const ClosestPointResult hit = bvh.closest_point(x.segment<3>(3 * i));
          const double pen = margin - hit.signed_distance;
          if (pen <= 0) continue;
          partial += k_bc * pen * pen * pen;
          if (grad) {
            const Vec3 normal = body.triangle_normal(hit.triangle);
            grad->segment<3>(3 * i) -= 3 * k_bc * pen * pen * normal;
          }
        }
        return partial;
      });
  return energy;
}

// Kernel with support [0, 2h), C1 at both breakpoints.
inline double sph_kernel(double r, double h) {
  if (h <= 0) throw std::invalid_argument("smoothing length must be positive");
  const double t = r / h;
  if (t < 1) return 4 - 6 * t * t + 3 * t * t * t;
  if (t < 2) {
    const double u = 2 - t;
    return u * u * u;
  }
  return 0;
}

inline double sph_kernel_derivative(double r, double h) {
  if (h <= 0) throw std::invalid_argument("smoothing length must be positive");
  const double t = r / h;
  if (t < 1) return (-12 * t + 9 * t * t) / h;
  if (t < 2) {
    const double u = 2 - t;
    return -3 * u * u / h;
  }
  return 0;
}

// Density at every vertex, self term included.
inline std::vector<double> sph_density(const VecX& x, const std::vector<double>& masses, double h,
                                       int threads = 1) {
  const int n = int(x.size() / 3);
  if (int(masses.size()) != n) throw std::invalid_argument("one mass per vertex required");
  std::vector<Vec3> pts(n);
  for (int i = 0; i < n; ++i) pts[i] = x.segment<3>(3 * i);
  HashGrid grid;
  grid.build(pts, 2 * h);
  std::vector<double> rho(n);
  parallel_for(n, threads, [&](int lo, int hi) {
    std::vector<int> nbr;
    for (int i = lo; i < hi; ++i) {
      grid.neighbors(pts[i], 2 * h, nbr);
      double r = 0;
      for (int j : nbr) r += masses[j] * sph_kernel((pts[i] - pts[j]).norm(), h);
      rho[i] = r;
    }
  });
  return rho;
}

inline std::vector<double> compute_rest_density(const Groom& groom, double vertex_mass, double h,
                                                int threads = 1) {
  VecX x = groom.flatten_positions();
  std::vector<double> masses(size_t(x.size() / 3), vertex_mass);
  return sph_density(x, masses, h, threads);
}

inline double self_collision_energy(const VecX& x, const std::vector<double>& masses, double h,
                                    const std::vector<double>& rho_rest, double k_sc,
                                    VecX* grad = nullptr, int threads = 1,
                                    bool deterministic = true) {
  if (h <= 0) throw std::invalid_argument("smoothing length must be positive");
  const int n = int(x.size() / 3);
  if (int(masses.size()) != n || int(rho_rest.size()) != n)
    throw std::invalid_argument("masses and rest densities must cover every vertex");
  std::vector<Vec3> pts(n);
  for (int i = 0; i < n; ++i) pts[i] = x.segment<3>(3 * i);
  HashGrid grid;
  grid.build(pts, 2 * h);

  std::vector<double> rho(n);
  parallel_for(n, threads, [&](int lo, int hi) {
    std::vector<int> nbr;
    for (int i = lo; i < hi; ++i) {
      grid.neighbors(pts[i], 2 * h, nbr);
      double r = 0;
      for (int j : nbr) r += masses[j] * sph_kernel((pts[i] - pts[j]).norm(), h);
      rho[i] = r;
    }
  });

  std::vector<double> excess(n);
  for (int i = 0; i < n; ++i) excess[i] = std::max(rho[i] - rho_rest[i], 0.0);

  const double energy = parallel_reduce(n, threads, deterministic, [&](int lo, int hi) {
    double partial = 0;
    for (int i = lo; i < hi; ++i) partial += k_sc * excess[i] * excess[i] * excess[i];
    return partial;
  });

  if (grad) {
    // grad_p = 3 k Σ_j (e_p² m_j + e_j² m_p) W'(r_pj) (x_p - x_j)/r_pj; each
    // vertex gathers its own row, so the scatter is race-free and ordered.
    parallel_for(n, threads, [&](int lo, int hi) {
      std::vector<int> nbr;
      for (int p = lo; p < hi; ++p) {
        grid.neighbors(pts[p], 2 * h, nbr);
        Vec3 acc = Vec3::Zero();
        for (int j : nbr) {
          if (j == p) continue;
          const Vec3 d = pts[p] - pts[j];
          const double r = d.norm();
          if (r < 1e-12) continue;  // coincident points carry no direction
          const double w = excess[p] * excess[p] * masses[j] + excess[j] * excess[j] * masses[p];
          if (w == 0) continue;
          acc += 3 * k_sc * w * sph_kernel_derivative(r, h) / r * d;
        }
        grad->segment<3>(3 * p) += acc;
      }
    });
  }
  return energy;
}

// ---------------------------------------------------------------------------
// Pose regularization over a window of deformation frames

inline double pose_reg_energy(const std::vector<VecX>& frames, double k_pr,
                              std::vector<VecX>* grads = nullptr) {
  if (frames.size() < 2) throw std::invalid_argument("pose regularization needs >= 2 frames");
  const Eigen::Index dim = frames[0].size();
  for (const VecX& f : frames)
    if (f.size() != dim) throw std::invalid_argument("pose regularization frame shape mismatch");
  VecX mean = VecX::Zero(dim);
  for (const VecX& f : frames) mean += f;
  mean /= double(frames.size());
  double energy = 0;
  if (grads) grads->assign(frames.size(), VecX());
  for (size_t i = 0; i < frames.size(); ++i) {
    const VecX d = mean - frames[i];
    energy += k_pr * d.squaredNorm();
    // mean-dependence cross terms cancel: dE/dx_i = 2 k_pr (x_i - mean)
    if (grads) (*grads)[i] = 2 * k_pr * (frames[i] - mean);
  }
  return energy;
}

inline double pose_reg_energy(const std::vector<DisplacementTexture>& frames, double k_pr,
                              std::vector<VecX>* grads = nullptr) {
  std::vector<VecX> flat;
  flat.reserve(frames.size());
  for (const DisplacementTexture& t : frames) {
    if (t.resolution != frames[0].resolution || t.verts != frames[0].verts)
      throw std::invalid_argument("pose regularization frame shape mismatch");
    flat.push_back(Eigen::Map<const VecX>(t.data.data(), Eigen::Index(t.data.size())));
  }
  return pose_reg_energy(flat, k_pr, grads);
}

// ---------------------------------------------------------------------------
// Assembly

struct EnergyReport {
  double total = 0;
  std::vector<std::pair<std::string, double>> terms;
  VecX gradient;              // w.r.t. positions
  VecX orientation_gradient;  // w.r.t. per-edge quaternions, full stack only

  double term(const std::string& name) const {
    for (const auto& [n, v] : terms)
      if (n == name) return v;
    throw std::out_of_range("no energy term named " + name);
  }
};

struct EnergyContext {
  StrandTopology topo;
  std::vector<double> rest_lengths;       // per edge
  std::vector<double> rest_bend_lengths;  // per (i, i+2) pair
  std::vector<Vec3> directors;            // posed d3 per edge
  VecX rest_orientations;                 // per-edge quaternions, full stack
  const TriMesh* body = nullptr;
  const TriangleBVH* body_bvh = nullptr;
  std::vector<double> rho_rest;  // per vertex
  std::vector<double> masses;    // per vertex
  MaterialParams material;
  int threads = 1;
  bool deterministic = true;

  bool has_body() const { return body && body_bvh && !body->triangles.empty(); }
};

inline EnergyReport total_energy(const VecX& x, const EnergyContext& ctx) {
  ctx.topo.check_positions(x);
  const MaterialParams& m = ctx.material;
  if (m.elastic == ElasticStack::full_cosserat)
    throw std::invalid_argument("full Cosserat stack requires the orientation overload");
  EnergyReport report;
  report.gradient = VecX::Zero(x.size());
  auto add = [&](const std::string& name, double value) {
    report.terms.emplace_back(name, value);
    report.total += value;
  };
  if (m.elastic == ElasticStack::cosserat) {
    add("stretch", m.k_stretch == 0
                       ? 0.0
                       : stretch_energy(x, ctx.topo, ctx.rest_lengths, m.k_stretch,
                                        &report.gradient));
    add("cosserat", m.k_cosserat == 0
                        ? 0.0
                        : cosserat_energy(x, ctx.topo, ctx.rest_lengths, ctx.directors,
                                          m.k_cosserat, m.variant, &report.gradient));
  } else {
    add("mass_spring",
        mass_spring_energy(x, ctx.topo, ctx.rest_lengths, ctx.rest_bend_lengths, m.k_edge,
                           m.k_bend, &report.gradient));
  }
  add("gravity", m.enable_gravity
                     ? gravity_energy(x, m.vertex_mass, m.gravity, &report.gradient)
                     : 0.0);
  add("body_collision",
      (m.enable_body_collision && ctx.has_body() && m.k_bc > 0)
          ? body_collision_energy(x, *ctx.body, *ctx.body_bvh, m.collision_margin, m.k_bc,
                                  &report.gradient, ctx.threads, ctx.deterministic)
          : 0.0);
  add("self_collision",
      (m.enable_self_collision && m.k_sc > 0)
          ? self_collision_energy(x, ctx.masses, m.smoothing_length, ctx.rho_rest, m.k_sc,
                                  &report.gradient, ctx.threads, ctx.deterministic)
          : 0.0);
  return report;
}

// Full Cosserat stack over positions and per-edge orientations.
inline EnergyReport total_energy(const VecX& x, const VecX& q, const EnergyContext& ctx) {
  ctx.topo.check_positions(x);
  const MaterialParams& m = ctx.material;
  EnergyReport report;
  report.gradient = VecX::Zero(x.size());
  report.orientation_gradient = VecX::Zero(q.size());
  auto add = [&](const std::string& name, double value) {
    report.terms.emplace_back(name, value);
    report.total += value;
  };
  add("stretch_shear",
      full_cosserat_stretch_shear(x, q, ctx.topo, ctx.rest_lengths, m.k_stretch_shear,
                                  &report.gradient, &report.orientation_gradient));
  add("bend_twist",
      full_cosserat_bend_twist(q, ctx.rest_orientations, ctx.topo, ctx.rest_lengths,
                               m.k_bend_twist, &report.orientation_gradient));
  add("unit_quaternion",
      unit_quaternion_energy(q, m.k_unit_quaternion, &report.orientation_gradient));
  add("gravity", m.enable_gravity
                     ? gravity_energy(x, m.vertex_mass, m.gravity, &report.gradient)
                     : 0.0);
  add("body_collision",
      (m.enable_body_collision && ctx.has_body() && m.k_bc > 0)
          ? body_collision_energy(x, *ctx.body, *ctx.body_bvh, m.collision_margin, m.k_bc,
                                  &report.gradient, ctx.threads, ctx.deterministic)
          : 0.0);
  add("self_collision",
      (m.enable_self_collision && m.k_sc > 0)
          ? self_collision_energy(x, ctx.masses, m.smoothing_length, ctx.rho_rest, m.k_sc,
                                  &report.gradient, ctx.threads, ctx.deterministic)
          : 0.0);
  return report;
}

}  // namespace quaffure
