#pragma once

// Oracles shared by the suites. These stay independent of the library code
// they exercise: the finite-difference gradient, the closest-point reference,
// and the all-pairs density sum are written from the definitions, not by
// calling the implementations under test.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "quaffure/math.hpp"

namespace testutil {

using quaffure::Vec2;
using quaffure::Vec3;
using quaffure::VecX;

// Central differences, one coordinate at a time.
inline VecX fd_gradient(const std::function<double(const VecX&)>& f, const VecX& x,
                        double h = 1e-6) {
  VecX g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    VecX xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

inline double max_rel_err(const VecX& a, const VecX& b, double floor_ = 1e-10) {
  double scale = floor_;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

// Closest point on a triangle by exhaustive candidate enumeration: the
// unconstrained in-plane minimizer if it lands inside, every edge segment
// projection, and the three corners.
inline Vec3 closest_point_reference(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  std::vector<Vec3> candidates;
  const Vec3 e0 = b - a, e1 = c - a;
  const double d00 = e0.dot(e0), d01 = e0.dot(e1), d11 = e1.dot(e1);
  const Vec3 ap = p - a;
  const double det = d00 * d11 - d01 * d01;
  if (det > 0) {
    const double s = (d11 * ap.dot(e0) - d01 * ap.dot(e1)) / det;
    const double t = (d00 * ap.dot(e1) - d01 * ap.dot(e0)) / det;
    if (s >= 0 && t >= 0 && s + t <= 1) candidates.push_back(a + s * e0 + t * e1);
  }
  const auto on_segment = [&](const Vec3& u, const Vec3& v) {
    const Vec3 uv = v - u;
    const double len2 = uv.squaredNorm();
    const double t = len2 > 0 ? std::clamp((p - u).dot(uv) / len2, 0.0, 1.0) : 0.0;
    candidates.push_back(u + t * uv);
  };
  on_segment(a, b);
  on_segment(b, c);
  on_segment(c, a);
  candidates.push_back(a);
  candidates.push_back(b);
  candidates.push_back(c);
  Vec3 best = candidates.front();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (const Vec3& q : candidates) {
    const double d2 = (p - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = q;
    }
  }
  return best;
}

// All-pairs SPH density from the kernel definition.
inline std::vector<double> density_reference(const VecX& x, const std::vector<double>& masses,
                                             double h) {
  const int n = int(x.size() / 3);
  const auto kernel = [&](double r) {
    const double t = r / h;
    if (t < 1) return 4 - 6 * t * t + 3 * t * t * t;
    if (t < 2) return (2 - t) * (2 - t) * (2 - t);
    return 0.0;
  };
  std::vector<double> rho(size_t(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rho[size_t(i)] +=
          masses[size_t(j)] * kernel((x.segment<3>(3 * i) - x.segment<3>(3 * j)).norm());
  return rho;
}

}  // namespace testutil
