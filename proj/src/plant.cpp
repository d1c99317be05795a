#include "attkit/plant.hpp"

#include <cmath>
#include <stdexcept>

namespace attkit {

InertiaModel::InertiaModel(const Mat3& m) : m_(m) {
  if (!m.allFinite()) {
    throw std::invalid_argument("inertia: non-finite matrix");
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("inertia: matrix not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("inertia: matrix not positive definite");
  }
  m_inv_ = m.llt().solve(Mat3::Identity());
}

InertiaModel InertiaModel::diagonal(const Vec3& d) {
  return InertiaModel(d.asDiagonal());
}

TabulatedRate::TabulatedRate(std::vector<std::array<double, 4>> rows)
    : rows_(std::move(rows)) {
  if (rows_.empty()) {
    throw std::invalid_argument("tabulated rate: empty table");
  }
  for (std::size_t i = 1; i < rows_.size(); ++i) {
    if (!(rows_[i][0] > rows_[i - 1][0])) {
      throw std::invalid_argument("tabulated rate: times must be strictly increasing");
    }
  }
}

Vec3 TabulatedRate::omega_d(double t) const {
  if (t <= rows_.front()[0]) return Vec3(rows_.front()[1], rows_.front()[2], rows_.front()[3]);
  if (t >= rows_.back()[0]) return Vec3(rows_.back()[1], rows_.back()[2], rows_.back()[3]);
  std::size_t hi = 1;
  while (rows_[hi][0] < t) ++hi;
  const auto& a = rows_[hi - 1];
  const auto& b = rows_[hi];
  const double s = (t - a[0]) / (b[0] - a[0]);
  return Vec3(a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2]), a[3] + s * (b[3] - a[3]));
}

Vec3 TabulatedRate::omega_d_dot(double t) const {
  if (t <= rows_.front()[0] || t >= rows_.back()[0]) return Vec3::Zero();
  std::size_t hi = 1;
  while (rows_[hi][0] < t) ++hi;
  const auto& a = rows_[hi - 1];
  const auto& b = rows_[hi];
  const double inv = 1.0 / (b[0] - a[0]);
  return Vec3((b[1] - a[1]) * inv, (b[2] - a[2]) * inv, (b[3] - a[3]) * inv);
}

Vec4 kinematics_rate(const Quat& q, const Vec3& omega) {
  if (!q.is_unit()) {
    throw std::invalid_argument("kinematics_rate: quaternion not unit");
  }
  if (!omega.allFinite()) {
    throw std::invalid_argument("kinematics_rate: non-finite rate");
  }
  return 0.5 * (jmat(q) * omega);
}

Vec3 dynamics_rate(const BodyState& state, const Vec3& tau, const InertiaModel& inertia) {
  if (!tau.allFinite()) {
    throw std::invalid_argument("dynamics_rate: non-finite torque");
  }
  const Vec3 momentum = inertia.matrix() * state.omega;
  return inertia.inverse() * (skew(momentum) * state.omega + tau);
}

namespace {

struct Deriv {
  Vec4 q;
  Vec3 omega;
  Vec4 q_d;
  Vec3 b_bar;
  Vec4 q_f;
};

Deriv rates(const SimState& s, const StepInputs& u, double t_stage,
            const ReferenceProvider& ref, const InertiaModel& inertia,
            const ObserverGains& gains) {
  Deriv d;
  // Intermediate RK4 stages are slightly off the unit sphere; evaluate the
  // kinematics directly rather than through the unit-checked entry point.
  d.q = 0.5 * (jmat(s.q) * s.omega);
  const Vec3 momentum = inertia.matrix() * s.omega;
  d.omega = inertia.inverse() * (skew(momentum) * s.omega + u.tau);
  d.q_d = 0.5 * (jmat(s.q_d) * ref.omega_d(t_stage));

  // lambda_c == 0 makes every z term vanish identically, so the logarithm
  // (and its singularity) is never touched in ideal-observer mode.
  Vec3 z = Vec3::Zero();
  if (gains.lambda_c != 0.0) {
    const Quat e = quat_mul(s.q_d.conjugate(), s.q);
    z = quat_log(u.h >= 0 ? e : -e);
  }
  const Vec3 b_hat = coupled_bias_estimate(s.obs, s.q, z, inertia.matrix(), gains);
  const Vec3 omega_hat = u.omega_g - b_hat;
  const ObserverRates orates =
      coupled_observer_rates(s.obs, s.q, omega_hat, z, inertia.matrix(), gains);
  d.b_bar = orates.b_bar_rate;
  d.q_f = orates.q_f_rate;
  return d;
}

SimState advance(const SimState& s, const Deriv& d, double a) {
  SimState r;
  r.q = Quat::from_coeffs(s.q.coeffs() + a * d.q);
  r.omega = s.omega + a * d.omega;
  r.q_d = Quat::from_coeffs(s.q_d.coeffs() + a * d.q_d);
  r.obs.b_bar = s.obs.b_bar + a * d.b_bar;
  r.obs.q_f = s.obs.q_f + a * d.q_f;
  return r;
}

}  // namespace

SimState step(const SimState& s, const StepInputs& u, double dt,
              const ReferenceProvider& ref, const InertiaModel& inertia,
              const ObserverGains& gains) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("step: dt must be > 0");
  }
  const Deriv k1 = rates(s, u, u.t, ref, inertia, gains);
  const Deriv k2 = rates(advance(s, k1, 0.5 * dt), u, u.t + 0.5 * dt, ref, inertia, gains);
  const Deriv k3 = rates(advance(s, k2, 0.5 * dt), u, u.t + 0.5 * dt, ref, inertia, gains);
  const Deriv k4 = rates(advance(s, k3, dt), u, u.t + dt, ref, inertia, gains);

  SimState r;
  const double w = dt / 6.0;
  r.q = Quat::from_coeffs(s.q.coeffs() + w * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q));
  r.omega = s.omega + w * (k1.omega + 2.0 * k2.omega + 2.0 * k3.omega + k4.omega);
  r.q_d = Quat::from_coeffs(s.q_d.coeffs() + w * (k1.q_d + 2.0 * k2.q_d + 2.0 * k3.q_d + k4.q_d));
  r.obs.b_bar = s.obs.b_bar + w * (k1.b_bar + 2.0 * k2.b_bar + 2.0 * k3.b_bar + k4.b_bar);
  r.obs.q_f = s.obs.q_f + w * (k1.q_f + 2.0 * k2.q_f + 2.0 * k3.q_f + k4.q_f);

  // Cheapest projection back onto the unit sphere; q_f stays a raw filter state.
  r.q = r.q.normalized();
  r.q_d = r.q_d.normalized();
  return r;
}

}  // namespace attkit
