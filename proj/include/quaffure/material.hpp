#pragma once

#include <stdexcept>

#include "quaffure/math.hpp"

namespace quaffure {

enum class CosseratVariant { modified, shear_only };

// Which elastic stack total_energy assembles.
enum class ElasticStack { cosserat, full_cosserat, mass_spring };

struct MaterialParams {
  double k_stretch = 1e4;
  double k_cosserat = 1e2;
  double k_stretch_shear = 1e4;
  double k_bend_twist = 1e2;
  double k_unit_quaternion = 1e4;
  double k_bc = 1e6;
  double k_sc = 1e3;
  double k_pr = 10.0;
  double k_edge = 1e4;  // mass-spring ablation
  double k_bend = 1e2;
  double collision_margin = 0.005;     // D, meters
  double smoothing_length = 0.01;      // h, meters
  double vertex_mass = 0.001 / 24.0;   // kg, 1 g strand spread over N = 24
  Vec3 gravity = Vec3(0, -9.81, 0);    // m/s^2
  int n_pose_reg = 4;
  CosseratVariant variant = CosseratVariant::modified;
  ElasticStack elastic = ElasticStack::cosserat;
  bool enable_gravity = true;
  bool enable_body_collision = true;
  bool enable_self_collision = true;

  void validate() const {
    for (double k : {k_stretch, k_cosserat, k_stretch_shear, k_bend_twist, k_unit_quaternion,
                     k_bc, k_sc, k_pr, k_edge, k_bend})
      if (!(k >= 0)) throw std::invalid_argument("stiffnesses must be non-negative");
    if (!(smoothing_length > 0)) throw std::invalid_argument("smoothing length must be positive");
    if (!(collision_margin >= 0)) throw std::invalid_argument("collision margin must be non-negative");
    if (!(vertex_mass > 0)) throw std::invalid_argument("vertex mass must be positive");
    if (n_pose_reg < 2) throw std::invalid_argument("pose regularization needs at least 2 frames");
    if (!gravity.allFinite()) throw std::invalid_argument("non-finite gravity");
  }
};

}  // namespace quaffure
