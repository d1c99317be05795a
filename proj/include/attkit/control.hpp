// Tracking controllers: the continuous quaternion-logarithm law, the
// hysteretic switching automaton, and the switched unwinding-free law that
// stabilizes whichever of +-identity is closer.

#pragma once

#include "attkit/attmath.hpp"
#include "attkit/estimation.hpp"
#include "attkit/plant.hpp"

#include <span>
#include <vector>

namespace attkit {

struct ControllerGains {
  Mat3 K_c = Mat3::Identity();  // symmetric positive definite
  double lambda_c = 0.01;       // > 0
};

void validate(const ControllerGains& gains);

// Discrete hysteresis variable with its half-width. h only changes when
// h*e0 <= -delta, and immediately after a jump h*e0 >= 0.
struct HysteresisState {
  int h = 1;           // in {-1, +1}
  double delta = 1.0;  // in [0, 1]
};

struct ControlOutput {
  Vec3 tau = Vec3::Zero();        // commanded torque [N*m]
  Vec3 z = Vec3::Zero();          // logarithm of h*e [rad]
  Vec3 omega_r = Vec3::Zero();    // reference rate [rad/s]
  Quat e;                         // tracking error q_d^-1 (x) q
  int h = 1;                      // hysteresis value used
  Vec3 omega_hat = Vec3::Zero();  // bias-corrected rate estimate [rad/s]
  Vec3 b_hat = Vec3::Zero();      // coupled bias estimate [rad/s]
};

// +1 for e0 >= 0, -1 otherwise.
int sgn_hat(double e0);

// e = q_d^-1 (x) q, renormalized.
Quat tracking_error(const Quat& q, const Quat& q_d);

// Jump rule, evaluated once per step boundary: if h*e0 <= -delta then
// h <- sgn_hat(e0), else unchanged.
HysteresisState hysteresis_update(HysteresisState hs, double e0);

// Continuous law: z = log(e), omega_r = -2 lambda_c z + R^T(e) omega_d,
// tau = M omega_r_dot_hat - S(M omega_hat) omega_r - 1/2 G^T(z) z
//       - (K_c - 2 lambda_c P_a)(omega_hat - omega_r)
// with P_a the skew part of P = M G(z). Uses the coupled bias estimate.
// Throws SingularityError as e0 -> -1.
ControlOutput continuous_control(const Quat& q, const Vec3& omega_g,
                                 const ReferenceState& ref, const ObserverState& obs,
                                 const ObserverGains& og, const ControllerGains& cg,
                                 const InertiaModel& inertia);

// Switched law: same pipeline with e replaced by h*e throughout. For
// h = +1 the output equals continuous_control exactly.
ControlOutput switched_control(const Quat& q, const Vec3& omega_g,
                               const ReferenceState& ref, const ObserverState& obs,
                               const ObserverGains& og, const HysteresisState& hs,
                               const ControllerGains& cg, const InertiaModel& inertia);

// Running control-effort curve sqrt(int tau^T tau dt) over a uniformly
// sampled torque series (trapezoidal rule), and its terminal value.
std::vector<double> control_effort_curve(std::span<const Vec3> tau, double dt);
double control_effort(std::span<const Vec3> tau, double dt);

}  // namespace attkit
