#include "attkit/control.hpp"

#include <cmath>
#include <stdexcept>

namespace attkit {

void validate(const ControllerGains& gains) {
  if (!gains.K_c.allFinite()) {
    throw std::invalid_argument("controller gains: K_c not finite");
  }
  if ((gains.K_c - gains.K_c.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("controller gains: K_c not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(gains.K_c);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("controller gains: K_c not positive definite");
  }
  if (!(gains.lambda_c > 0.0)) {
    throw std::invalid_argument("controller gains: lambda_c must be > 0");
  }
}

int sgn_hat(double e0) { return e0 >= 0.0 ? 1 : -1; }

Quat tracking_error(const Quat& q, const Quat& q_d) {
  return quat_mul(q_d.conjugate(), q);
}

HysteresisState hysteresis_update(HysteresisState hs, double e0) {
  if (!(std::abs(e0) <= 1.0 + 1e-9)) {
    throw std::invalid_argument("hysteresis_update: |e0| must be <= 1");
  }
  if (hs.h * e0 <= -hs.delta) {
    hs.h = sgn_hat(e0);
  }
  return hs;
}

ControlOutput switched_control(const Quat& q, const Vec3& omega_g,
                               const ReferenceState& ref, const ObserverState& obs,
                               const ObserverGains& og, const HysteresisState& hs,
                               const ControllerGains& cg, const InertiaModel& inertia) {
  const Mat3& M = inertia.matrix();
  const double lc = cg.lambda_c;

  ControlOutput out;
  out.e = tracking_error(q, ref.q_d);
  out.h = hs.h;
  const Quat he = hs.h >= 0 ? out.e : -out.e;
  out.z = quat_log(he);
  out.b_hat = coupled_bias_estimate(obs, q, out.z, M, og);
  out.omega_hat = omega_g - out.b_hat;

  const Mat3 R_he_t = rotation_of(he).transpose();
  const Vec3 rotated_rate = R_he_t * ref.omega_d;
  out.omega_r = -2.0 * lc * out.z + rotated_rate;

  const Mat3 G = gmat(out.z);
  // Reference-rate derivative with the measured estimate in place of omega.
  const Vec3 omega_r_dot_hat = 2.0 * lc * lc * out.z + lc * (G * out.omega_r) +
                               R_he_t * ref.omega_d_dot -
                               (lc * G - skew(rotated_rate)) * out.omega_hat;

  const Mat3 P = M * G;
  const Mat3 P_a = 0.5 * (P - P.transpose());
  out.tau = M * omega_r_dot_hat - skew(M * out.omega_hat) * out.omega_r -
            0.5 * (G.transpose() * out.z) -
            (cg.K_c - 2.0 * lc * P_a) * (out.omega_hat - out.omega_r);
  return out;
}

ControlOutput continuous_control(const Quat& q, const Vec3& omega_g,
                                 const ReferenceState& ref, const ObserverState& obs,
                                 const ObserverGains& og, const ControllerGains& cg,
                                 const InertiaModel& inertia) {
  return switched_control(q, omega_g, ref, obs, og, HysteresisState{1, 1.0}, cg, inertia);
}

std::vector<double> control_effort_curve(std::span<const Vec3> tau, double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("control_effort: dt must be > 0");
  }
  std::vector<double> curve(tau.size(), 0.0);
  if (tau.empty()) return curve;
  double integral = 0.0;
  double prev = tau[0].squaredNorm();
  for (std::size_t i = 1; i < tau.size(); ++i) {
    const double cur = tau[i].squaredNorm();
    integral += 0.5 * dt * (prev + cur);
    curve[i] = std::sqrt(integral);
    prev = cur;
  }
  return curve;
}

double control_effort(std::span<const Vec3> tau, double dt) {
  const auto curve = control_effort_curve(tau, dt);
  return curve.empty() ? 0.0 : curve.back();
}

}  // namespace attkit
