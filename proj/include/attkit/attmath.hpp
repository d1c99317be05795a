// Quaternion and small-matrix primitives for attitude dynamics: products,
// rotation matrices, the 4x3 kinematics matrix J(q), the quaternion
// logarithm/exponential pair and the logarithm-rate matrix G(z).

#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace attkit {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat43 = Eigen::Matrix<double, 4, 3>;

// Raised when an attitude error reaches the antipode of the active chart
// (e0 <= -1 + eps), where the quaternion logarithm is undefined, or when
// ||z|| approaches pi where G(z) blows up.
class SingularityError : public std::domain_error {
 public:
  explicit SingularityError(const std::string& what) : std::domain_error(what) {}
};

// Below this magnitude the closed forms for log/exp/G switch to their
// series limits; chosen so double-precision relative error stays < 1e-10.
inline constexpr double kSeriesThreshold = 1e-4;
// Default guard band around the singular set of the logarithm chart.
inline constexpr double kSingularityGuard = 1e-6;
// How far from unit norm a quaternion may drift before it is rejected.
inline constexpr double kUnitTol = 1e-6;

// Scalar-first unit quaternion [q0, qv].
struct Quat {
  double q0 = 1.0;
  Vec3 qv = Vec3::Zero();

  Quat() = default;
  Quat(double w, const Vec3& v) : q0(w), qv(v) {}
  Quat(double w, double x, double y, double z) : q0(w), qv(x, y, z) {}

  static Quat identity() { return Quat(); }
  static Quat from_coeffs(const Vec4& c) { return Quat(c(0), c.tail<3>()); }

  Vec4 coeffs() const { return Vec4(q0, qv(0), qv(1), qv(2)); }
  double norm() const { return std::sqrt(q0 * q0 + qv.squaredNorm()); }
  bool is_finite() const { return std::isfinite(q0) && qv.allFinite(); }
  bool is_unit(double tol = kUnitTol) const { return std::abs(norm() - 1.0) <= tol; }

  // For unit quaternions the conjugate is the inverse.
  Quat conjugate() const { return Quat(q0, -qv); }
  Quat normalized() const;
  Quat operator-() const { return Quat(-q0, -qv); }
};

// Skew-symmetric cross-product matrix: skew(u) * v == u x v.
Mat3 skew(const Vec3& u);

// 4x3 kinematics matrix with -x_v^T on top of x0*I + S(x_v). Defined for
// any 4-vector, not just unit quaternions.
Mat43 jmat(const Vec4& x);
inline Mat43 jmat(const Quat& q) { return jmat(q.coeffs()); }

// Hamilton product, renormalized to unit. Inputs must be finite and unit
// within kUnitTol.
Quat quat_mul(const Quat& q, const Quat& p);

// Direction-cosine matrix of a unit quaternion; rotation_of(q) == rotation_of(-q).
Mat3 rotation_of(const Quat& q);

// Quaternion logarithm: z = arccos(e0) * e_v / ||e_v||, ||z|| in [0, pi).
// Throws SingularityError for e0 <= -1 + eps_z.
Vec3 quat_log(const Quat& e, double eps_z = kSingularityGuard);

// Inverse of quat_log: [cos||z||, sin||z|| * z/||z||]. Requires ||z|| < pi.
Quat quat_exp(const Vec3& z);

// Rate matrix of the quaternion logarithm, G(z) = I + S(z) + c(||z||) S^2(z)
// with c = (1 - ||z|| cot ||z||) / ||z||^2. Satisfies G(z) z = z.
Mat3 gmat(const Vec3& z, double eps_z = kSingularityGuard);

}  // namespace attkit
