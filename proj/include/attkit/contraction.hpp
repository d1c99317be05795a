// Numerical certification of the contraction structure along simulated
// trajectories: assembles the analytic closed-loop Jacobian, cross-checks it
// against finite differences of the virtual vector field, and verifies the
// hierarchical/skew block structure sample by sample.

#pragma once

#include "attkit/attmath.hpp"
#include "attkit/scenario.hpp"

#include <string>
#include <vector>

namespace attkit {

using Mat9 = Eigen::Matrix<double, 9, 9>;
using Vec9 = Eigen::Matrix<double, 9, 1>;

// Analysis-form bias error field: b_tilde_dot = -1/2 K_o J^T(q_f) J(q) b_tilde.
Vec3 bias_error_rate(const Quat& q, const Vec4& q_f, const Vec3& b_tilde,
                     const Mat3& K_o);

// J_o = -1/2 K_o J^T(q_f) J(q)
Mat3 observer_jacobian(const Quat& q, const Vec4& q_f, const Mat3& K_o);

// F = S(omega_r) M - K_c + M S(R^T(e) omega_d); pass h*e for the switched law.
Mat3 coupling_matrix(const Vec3& omega_r, const Vec3& omega_d, const Quat& e_or_he,
                     const Mat3& K_c, const Mat3& inertia);

struct CertifyContext {
  Mat3 K_o = Mat3::Identity();
  Mat3 K_c = Mat3::Identity();
  double lambda_c = 0.01;
  Mat3 M = Mat3::Identity();
};

// Trajectory signals frozen at one sampled instant.
struct SamplePoint {
  double t = 0.0;
  Quat q;
  Vec4 q_f = Vec4(1, 0, 0, 0);
  Quat he;  // sign-resolved tracking error
  Vec3 z = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
  Vec3 omega_r = Vec3::Zero();
  Vec3 omega_d = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  Vec3 b_hat = Vec3::Zero();
};

SamplePoint sample_point(const LogSample& s);

// 9x9 Jacobian of the virtual observer/controller dynamics in the
// (bias, M*rate, logarithm) coordinates.
Mat9 closed_loop_jacobian(const SamplePoint& p, const CertifyContext& ctx);

// The virtual vector field whose Jacobian the certificates check. xi stacks
// (bias estimate, reference rate, logarithm); the field is affine in xi with
// coefficients frozen from the sample.
Vec9 virtual_rate(const SamplePoint& p, const CertifyContext& ctx, const Vec9& xi);

struct CertifyOptions {
  double fd_rel_step = 1e-6;   // central-difference relative step
  double fd_tol = 1e-5;        // analytic vs finite-difference, relative
  double block_tol = 1e-12;    // hierarchical upper-right block residual
  double skew_tol = 1e-10;     // skew-bracket quadratic-form residual
  double jo_margin = 1e-8;     // slack on the observer-block eigenvalue bound
  bool parallel = true;        // OpenMP over samples; serial path is the reference
};

struct JacobianReport {
  double t = 0.0;
  double lambda_max_sym_Jo = 0.0;
  double lambda_max_sym_Jc = 0.0;
  double norm_F = 0.0;              // spectral norm of the coupling block
  double fd_mismatch = 0.0;         // relative, against max(1, max|J|)
  double block_zero_residual = 0.0; // worst structural residual
  bool ok = false;
};

struct CertificationResult {
  std::vector<JacobianReport> reports;
  double sup_filter_gap = 0.0;  // max ||q - q_f|| over the log
  double jo_bound = 0.0;        // -(lmin(K_o) - lmax(K_o) sup_gap)/2 + margin
  bool passed = false;
  std::string first_error;      // diagnostic from the first failing sample, if any
};

JacobianReport certify_sample(const SamplePoint& p, const CertifyContext& ctx,
                              double jo_bound, const CertifyOptions& opts);

// Certifies every sample of the log. A failed check yields a failure report,
// not an exception. Parallel and serial execution produce identical results.
CertificationResult certify_trajectory(const TrajectoryLog& log,
                                       const ScenarioConfig& cfg,
                                       const CertifyOptions& opts = {});

void write_certification_csv(const CertificationResult& r, const std::string& path);

}  // namespace attkit
