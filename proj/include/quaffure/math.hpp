#pragma once

// Small math utilities shared across the library: quaternion algebra on
// raw 4-vectors (w, x, y, z), axis-angle rotations, a seeded RNG with a
// pinned normal sampler, and a central-difference gradient helper.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace quaffure {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;  // quaternion storage: (w, x, y, z)
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline Vec3 quat_vec(const Vec4& q) { return q.tail<3>(); }

inline Vec4 quat_mul(const Vec4& a, const Vec4& b) {
  const Vec3 av = a.tail<3>(), bv = b.tail<3>();
  Vec4 r;
  r[0] = a[0] * b[0] - av.dot(bv);
  r.tail<3>() = a[0] * bv + b[0] * av + av.cross(bv);
  return r;
}

inline Vec4 quat_conj(const Vec4& q) { return Vec4(q[0], -q[1], -q[2], -q[3]); }

inline Vec4 quat_identity() { return Vec4(1, 0, 0, 0); }

// Im(q e3 q_bar) for e3 = (0,0,1); equals the third column of the rotation
// matrix scaled by |q|^2 when q is not normalized.
inline Vec3 quat_sandwich_e3(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  return Vec3(2 * (x * z + w * y), 2 * (y * z - w * x), w * w - x * x - y * y + z * z);
}

// d(quat_sandwich_e3)/dq as a 3x4 Jacobian, columns ordered (w, x, y, z).
inline Eigen::Matrix<double, 3, 4> quat_sandwich_e3_jacobian(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix<double, 3, 4> J;
  J.col(0) << 2 * y, -2 * x, 2 * w;
  J.col(1) << 2 * z, -2 * w, -2 * x;
  J.col(2) << 2 * w, 2 * z, -2 * y;
  J.col(3) << 2 * x, 2 * y, 2 * z;
  return J;
}

// Im(conj(a) * b).
inline Vec3 quat_imag_conj_prod(const Vec4& a, const Vec4& b) {
  const Vec3 av = a.tail<3>(), bv = b.tail<3>();
  return a[0] * bv - b[0] * av - av.cross(bv);
}

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Jacobians of quat_imag_conj_prod w.r.t. a and b, columns (w, x, y, z).
inline std::pair<Eigen::Matrix<double, 3, 4>, Eigen::Matrix<double, 3, 4>>
quat_imag_conj_prod_jacobians(const Vec4& a, const Vec4& b) {
  const Vec3 av = a.tail<3>(), bv = b.tail<3>();
  Eigen::Matrix<double, 3, 4> Ja, Jb;
  Ja.col(0) = bv;
  Ja.rightCols<3>() = -b[0] * Mat3::Identity() + skew(bv);
  Jb.col(0) = -av;
  Jb.rightCols<3>() = a[0] * Mat3::Identity() - skew(av);
  return {Ja, Jb};
}

inline Mat3 axis_angle_to_matrix(const Vec3& aa) {
  const double angle = aa.norm();
  if (angle < 1e-14) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix();
}

inline Vec4 axis_angle_to_quat(const Vec3& aa) {
  const double angle = aa.norm();
  if (angle < 1e-14) return quat_identity();
  const Vec3 axis = aa / angle;
  const double h = 0.5 * angle;
  Vec4 q;
  q[0] = std::cos(h);
  q.tail<3>() = std::sin(h) * axis;
  return q;
}

// Quaternion whose rotation matrix has the given (orthonormal, det +1) columns.
inline Vec4 quat_from_matrix(const Mat3& R) {
  Eigen::Quaterniond q(R);
  q.normalize();
  return Vec4(q.w(), q.x(), q.y(), q.z());
}

inline Mat3 quat_to_matrix(const Vec4& q) {
  Eigen::Quaterniond eq(q[0], q[1], q[2], q[3]);
  eq.normalize();
  return eq.toRotationMatrix();
}


inline Vec3 safe_normalized(const Vec3& v, const char* what = "vector") {
  const double n = v.norm();
  if (n < 1e-12) throw std::runtime_error(std::string("cannot normalize near-zero ") + what);
  return v / n;
}

// Any unit vector orthogonal to the (unit) input.
inline Vec3 orthogonal_unit(const Vec3& u) {
  Vec3 c = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return u.cross(c).normalized();
}

// Minimal rotation carrying unit vector a onto unit vector b.
inline Vec4 quat_from_two_unit_vectors(const Vec3& a, const Vec3& b) {
  const double c = a.dot(b);
  if (c < -1 + 1e-12) {  // antiparallel: rotate pi about any orthogonal axis
    const Vec3 axis = orthogonal_unit(a);
    return Vec4(0, axis.x(), axis.y(), axis.z());
  }
  Vec4 q;
  q[0] = 1 + c;
  q.tail<3>() = a.cross(b);
  return q / q.norm();
}

// Seeded RNG with a fixed-algorithm normal sampler so sampled streams do not
// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 42) : engine_(seed) {}

  double uniform() {  // [0, 1)
    return (engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive
    return lo + static_cast<std::int64_t>(uniform() * double(hi - lo + 1));
  }
  double normal() {  // Box-Muller, one value per draw pair
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0;
    do { u1 = uniform(); } while (u1 <= 0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }
  Vec3 normal_vec3() { return Vec3(normal(), normal(), normal()); }

  std::mt19937_64& engine() { return engine_; }

  std::string serialize() const;
  void deserialize(const std::string& s);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0;
};

inline std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_ << " " << (have_spare_ ? 1 : 0);
  if (have_spare_) os << " " << std::bit_cast<std::uint64_t>(spare_);  // exact round trip
  return os.str();
}

inline void Rng::deserialize(const std::string& s) {
  std::istringstream is(s);
  is >> engine_;
  int flag = 0;
  is >> flag;
  have_spare_ = flag != 0;
  if (have_spare_) {
    std::uint64_t bits = 0;
    is >> bits;
    spare_ = std::bit_cast<double>(bits);
  }
}

// Central-difference gradient of a scalar function. Used by the gradcheck
// command; tests carry their own copy so the oracle stays independent.
inline VecX finite_difference_gradient(const std::function<double(const VecX&)>& f,
                                       const VecX& x, double step) {
  VecX g(x.size());
  VecX xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    xp[i] = x0 + step;
    const double fp = f(xp);
    xp[i] = x0 - step;
    const double fm = f(xp);
    xp[i] = x0;
    g[i] = (fp - fm) / (2 * step);
  }
  return g;
}

inline double relative_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / denom;
}

// Max relative component error between two gradients, with an absolute floor
// so near-zero entries do not blow up the ratio.
inline double gradient_relative_error(const VecX& analytic, const VecX& numeric,
                                      double abs_floor = 1e-10) {
  double scale = std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), abs_floor});
  double worst = 0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i)
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  return worst;
}

}  // namespace quaffure
