// Gyro-bias observers built on a first-order quaternion filter: the
// stand-alone ideal observer and the controller-coupled variant that adds
// the logarithm-error correction terms.

#pragma once

#include "attkit/attmath.hpp"

namespace attkit {

struct ObserverGains {
  Mat3 K_o = Mat3::Identity();  // symmetric positive definite
  double gamma = 0.5;           // filter pole, > 0
  double lambda_c = 0.0;        // coupling gain; 0 selects the ideal observer
};

// Throws std::invalid_argument if K_o is not symmetric positive definite
// (within 1e-12 symmetry tolerance), gamma <= 0 or lambda_c < 0.
void validate(const ObserverGains& gains);

struct ObserverState {
  Vec3 b_bar = Vec3::Zero();        // integrator state [rad/s]
  Vec4 q_f = Vec4(1, 0, 0, 0);      // filtered quaternion, lives in R^4

  // The filter must start on the measured attitude.
  static ObserverState initial(const Quat& q0) { return {Vec3::Zero(), q0.coeffs()}; }
};

struct ObserverRates {
  Vec3 b_bar_rate;
  Vec4 q_f_rate;
};

// b_hat = b_bar - K_o J^T(q_f) q
Vec3 ideal_bias_estimate(const ObserverState& state, const Quat& q,
                         const ObserverGains& gains);

// b_bar_rate = 1/2 K_o J^T(q_f) J(q) omega_hat + gamma K_o J^T(q) q_f
// q_f_rate   = gamma (q - q_f)
ObserverRates ideal_observer_rates(const ObserverState& state, const Quat& q,
                                   const Vec3& omega_hat, const ObserverGains& gains);

// Coupled variant: subtracts 2 lambda_c M z from the estimate and
// 2 lambda_c^2 M z from the integrator rate. z is the logarithm of the
// (possibly sign-flipped) tracking error, supplied by the controller.
Vec3 coupled_bias_estimate(const ObserverState& state, const Quat& q, const Vec3& z,
                           const Mat3& inertia, const ObserverGains& gains);

ObserverRates coupled_observer_rates(const ObserverState& state, const Quat& q,
                                     const Vec3& omega_hat, const Vec3& z,
                                     const Mat3& inertia, const ObserverGains& gains);

}  // namespace attkit
