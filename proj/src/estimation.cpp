#include "attkit/estimation.hpp"

#include <stdexcept>

namespace attkit {

void validate(const ObserverGains& gains) {
  if (!gains.K_o.allFinite()) {
    throw std::invalid_argument("observer gains: K_o not finite");
  }
  if ((gains.K_o - gains.K_o.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("observer gains: K_o not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(gains.K_o);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("observer gains: K_o not positive definite");
  }
  if (!(gains.gamma > 0.0)) {
    throw std::invalid_argument("observer gains: gamma must be > 0");
  }
  if (gains.lambda_c < 0.0) {
    throw std::invalid_argument("observer gains: lambda_c must be >= 0");
  }
}

Vec3 ideal_bias_estimate(const ObserverState& state, const Quat& q,
                         const ObserverGains& gains) {
  return state.b_bar - gains.K_o * (jmat(state.q_f).transpose() * q.coeffs());
}

ObserverRates ideal_observer_rates(const ObserverState& state, const Quat& q,
                                   const Vec3& omega_hat, const ObserverGains& gains) {
  const Vec4 qc = q.coeffs();
  ObserverRates r;
  r.b_bar_rate = 0.5 * gains.K_o * (jmat(state.q_f).transpose() * (jmat(qc) * omega_hat)) +
                 gains.gamma * gains.K_o * (jmat(qc).transpose() * state.q_f);
  r.q_f_rate = gains.gamma * (qc - state.q_f);
  return r;
}

Vec3 coupled_bias_estimate(const ObserverState& state, const Quat& q, const Vec3& z,
                           const Mat3& inertia, const ObserverGains& gains) {
  return ideal_bias_estimate(state, q, gains) - 2.0 * gains.lambda_c * (inertia * z);
}

ObserverRates coupled_observer_rates(const ObserverState& state, const Quat& q,
                                     const Vec3& omega_hat, const Vec3& z,
                                     const Mat3& inertia, const ObserverGains& gains) {
  ObserverRates r = ideal_observer_rates(state, q, omega_hat, gains);
  r.b_bar_rate -= 2.0 * gains.lambda_c * gains.lambda_c * (inertia * z);
  return r;
}

}  // namespace attkit
