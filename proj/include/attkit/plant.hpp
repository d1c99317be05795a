// Rigid-body rotational dynamics and kinematics, reference-trajectory
// providers, and the fixed-step RK4 integrator that advances plant,
// reference and observer states together.

#pragma once

#include "attkit/attmath.hpp"
#include "attkit/estimation.hpp"

#include <array>
#include <vector>

namespace attkit {

struct BodyState {
  Quat q;                       // body-to-inertial attitude
  Vec3 omega = Vec3::Zero();    // body-frame angular velocity [rad/s]
};

// Constant inertia matrix with its inverse precomputed once. Construction
// rejects non-symmetric (beyond 1e-12) or non-positive-definite matrices.
class InertiaModel {
 public:
  explicit InertiaModel(const Mat3& m);
  static InertiaModel diagonal(const Vec3& d);

  const Mat3& matrix() const { return m_; }
  const Mat3& inverse() const { return m_inv_; }

 private:
  Mat3 m_;
  Mat3 m_inv_;
};

struct ReferenceState {
  Quat q_d;                          // desired attitude
  Vec3 omega_d = Vec3::Zero();       // desired body rate [rad/s]
  Vec3 omega_d_dot = Vec3::Zero();   // its time derivative [rad/s^2]
};

// Supplies the desired angular velocity as a function of time. The desired
// attitude itself is integrated alongside the plant from q_dot_d = 1/2 J(q_d) omega_d.
class ReferenceProvider {
 public:
  virtual ~ReferenceProvider() = default;
  virtual Vec3 omega_d(double t) const = 0;
  virtual Vec3 omega_d_dot(double t) const = 0;
};

class ConstantRate final : public ReferenceProvider {
 public:
  explicit ConstantRate(const Vec3& w) : w_(w) {}
  Vec3 omega_d(double) const override { return w_; }
  Vec3 omega_d_dot(double) const override { return Vec3::Zero(); }

 private:
  Vec3 w_;
};

// Piecewise-linear interpolation of a tabulated rate profile, clamped at
// both ends. Rows are (t, wx, wy, wz) with strictly increasing t.
class TabulatedRate final : public ReferenceProvider {
 public:
  explicit TabulatedRate(std::vector<std::array<double, 4>> rows);
  Vec3 omega_d(double t) const override;
  Vec3 omega_d_dot(double t) const override;

 private:
  std::vector<std::array<double, 4>> rows_;
};

// q_dot = 1/2 J(q) omega. Requires unit q.
Vec4 kinematics_rate(const Quat& q, const Vec3& omega);

// omega_dot = M^-1 (S(M omega) omega + tau).
Vec3 dynamics_rate(const BodyState& state, const Vec3& tau, const InertiaModel& inertia);

// Everything the integrator advances. The hysteresis variable h is not part
// of this state: it only jumps at step boundaries, outside the integrator.
struct SimState {
  Quat q;
  Vec3 omega = Vec3::Zero();
  Quat q_d;
  ObserverState obs;
};

// Inputs held constant (zero-order hold) across one integration step.
struct StepInputs {
  Vec3 tau = Vec3::Zero();      // commanded torque [N*m]
  Vec3 omega_g = Vec3::Zero();  // gyro measurement [rad/s]
  int h = 1;                    // hysteresis variable, frozen within the step
  double t = 0.0;               // step start time [s]
};

// One classical RK4 step of the coupled plant/reference/observer ODEs.
// Quaternion states q and q_d are renormalized afterwards; the filter state
// q_f is not (it is a linear filter output in R^4). With gains.lambda_c == 0
// the observer runs in its ideal form and no tracking-error logarithm is
// evaluated, so the step cannot raise SingularityError in that mode.
SimState step(const SimState& s, const StepInputs& u, double dt,
              const ReferenceProvider& ref, const InertiaModel& inertia,
              const ObserverGains& gains);

}  // namespace attkit
