#include "attkit/attmath.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace attkit {

namespace {

void require_finite(const Quat& q, const char* who) {
  if (!q.is_finite()) {
    throw std::invalid_argument(std::string(who) + ": non-finite quaternion");
  }
}

void require_unit(const Quat& q, const char* who) {
  require_finite(q, who);
  if (!q.is_unit()) {
    std::ostringstream os;
    os << who << ": quaternion norm " << q.norm() << " not unit within " << kUnitTol;
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

Quat Quat::normalized() const {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("Quat::normalized: zero or non-finite norm");
  }
  return Quat(q0 / n, qv / n);
}

Mat3 skew(const Vec3& u) {
  Mat3 s;
  s << 0.0, -u(2), u(1),
       u(2), 0.0, -u(0),
      -u(1), u(0), 0.0;
  return s;
}

Mat43 jmat(const Vec4& x) {
  Mat43 j;
  j.row(0) = -x.tail<3>().transpose();
  j.bottomRows<3>() = x(0) * Mat3::Identity() + skew(x.tail<3>());
  return j;
}

Quat quat_mul(const Quat& q, const Quat& p) {
  require_finite(q, "quat_mul");
  require_finite(p, "quat_mul");
  Quat r(q.q0 * p.q0 - q.qv.dot(p.qv),
         q.q0 * p.qv + p.q0 * q.qv + q.qv.cross(p.qv));
  return r.normalized();
}

Mat3 rotation_of(const Quat& q) {
  require_unit(q, "rotation_of");
  const Mat3 s = skew(q.qv);
  return Mat3::Identity() + 2.0 * q.q0 * s + 2.0 * s * s;
}

Vec3 quat_log(const Quat& e, double eps_z) {
  require_unit(e, "quat_log");
  if (e.q0 <= -1.0 + eps_z) {
    std::ostringstream os;
    os << "quat_log: error quaternion at antipode (e0 = " << e.q0 << ")";
    throw SingularityError(os.str());
  }
  const double ev_norm = e.qv.norm();
  if (ev_norm < kSeriesThreshold) {
    // e0 ~ +1 here; arccos(e0)/||e_v|| expanded as arcsin series.
    const double s2 = ev_norm * ev_norm;
    return e.qv * (1.0 + s2 / 6.0 + 3.0 * s2 * s2 / 40.0);
  }
  const double angle = std::acos(std::clamp(e.q0, -1.0, 1.0));
  return (angle / ev_norm) * e.qv;
}

Quat quat_exp(const Vec3& z) {
  if (!z.allFinite()) {
    throw std::invalid_argument("quat_exp: non-finite input");
  }
  const double n = z.norm();
  if (n >= std::numbers::pi) {
    throw std::domain_error("quat_exp: ||z|| must be < pi");
  }
  double sinc;  // sin(n)/n
  if (n < kSeriesThreshold) {
    const double n2 = n * n;
    sinc = 1.0 - n2 / 6.0 + n2 * n2 / 120.0;
  } else {
    sinc = std::sin(n) / n;
  }
  return Quat(std::cos(n), sinc * z);
}

Mat3 gmat(const Vec3& z, double eps_z) {
  if (!z.allFinite()) {
    throw std::invalid_argument("gmat: non-finite input");
  }
  const double n = z.norm();
  if (n >= std::numbers::pi - eps_z) {
    std::ostringstream os;
    os << "gmat: ||z|| = " << n << " too close to pi";
    throw SingularityError(os.str());
  }
  double c;  // (1 - n cos n / sin n) / n^2, limit 1/3 at n -> 0
  if (n < kSeriesThreshold) {
    c = 1.0 / 3.0 + n * n / 45.0;
  } else {
    c = (1.0 - n * std::cos(n) / std::sin(n)) / (n * n);
  }
  const Mat3 s = skew(z);
  return Mat3::Identity() + s + c * s * s;
}

}  // namespace attkit
