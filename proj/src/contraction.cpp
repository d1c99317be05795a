#include "attkit/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace attkit {

Vec3 bias_error_rate(const Quat& q, const Vec4& q_f, const Vec3& b_tilde,
                     const Mat3& K_o) {
  return -0.5 * (K_o * (jmat(q_f).transpose() * (jmat(q) * b_tilde)));
}

Mat3 observer_jacobian(const Quat& q, const Vec4& q_f, const Mat3& K_o) {
  return -0.5 * (K_o * (jmat(q_f).transpose() * jmat(q)));
}

Mat3 coupling_matrix(const Vec3& omega_r, const Vec3& omega_d, const Quat& e_or_he,
                     const Mat3& K_c, const Mat3& inertia) {
  return skew(omega_r) * inertia - K_c +
         inertia * skew(rotation_of(e_or_he).transpose() * omega_d);
}

SamplePoint sample_point(const LogSample& s) {
  SamplePoint p;
  p.t = s.t;
  p.q = s.q;
  p.q_f = s.q_f;
  p.he = s.h >= 0 ? s.e : -s.e;
  p.z = s.z;
  p.omega = s.omega;
  p.omega_r = s.omega_r;
  p.omega_d = s.omega_d;
  p.b = s.b;
  p.b_hat = s.b_hat;
  return p;
}

namespace {

// Everything both the analytic Jacobian and the virtual field share.
struct BlockSet {
  Mat3 Jo, F, G, P, P_a, S_Mw;
};

BlockSet blocks(const SamplePoint& p, const CertifyContext& ctx) {
  BlockSet b;
  b.Jo = observer_jacobian(p.q, p.q_f, ctx.K_o);
  b.F = coupling_matrix(p.omega_r, p.omega_d, p.he, ctx.K_c, ctx.M);
  b.G = gmat(p.z);
  b.P = ctx.M * b.G;
  b.P_a = 0.5 * (b.P - b.P.transpose());
  b.S_Mw = skew(ctx.M * p.omega);
  return b;
}

Mat9 assemble(const BlockSet& b, const CertifyContext& ctx) {
  const double lc = ctx.lambda_c;
  Mat9 j = Mat9::Zero();
  j.block<3, 3>(0, 0) = b.Jo;
  j.block<3, 3>(0, 3) = lc * b.P;
  j.block<3, 3>(3, 0) = b.F - lc * b.P.transpose();
  j.block<3, 3>(3, 3) = b.S_Mw - ctx.K_c + 2.0 * lc * b.P_a;
  j.block<3, 3>(3, 6) = 0.5 * b.G.transpose();
  j.block<3, 3>(6, 3) = -0.5 * b.G;
  j.block<3, 3>(6, 6) = -lc * Mat3::Identity();
  return j;
}

// The bracket of blocks that cancels in the quadratic form.
Mat9 skew_bracket(const BlockSet& b, const CertifyContext& ctx) {
  const double lc = ctx.lambda_c;
  Mat9 j = Mat9::Zero();
  j.block<3, 3>(0, 3) = lc * b.P;
  j.block<3, 3>(3, 0) = -lc * b.P.transpose();
  j.block<3, 3>(3, 3) = b.S_Mw + 2.0 * lc * b.P_a;
  j.block<3, 3>(3, 6) = 0.5 * b.G.transpose();
  j.block<3, 3>(6, 3) = -0.5 * b.G;
  return j;
}

// Hierarchical remainder assembled independently of the sum above.
Mat9 hierarchical(const BlockSet& b, const CertifyContext& ctx) {
  Mat9 j = Mat9::Zero();
  j.block<3, 3>(0, 0) = b.Jo;
  j.block<3, 3>(3, 0) = b.F;
  j.block<3, 3>(3, 3) = -ctx.K_c;
  j.block<3, 3>(6, 6) = -ctx.lambda_c * Mat3::Identity();
  return j;
}

Vec9 rate(const BlockSet& b, const CertifyContext& ctx, const SamplePoint& p,
          const Vec9& xi) {
  const double lc = ctx.lambda_c;
  const Vec3 xi1 = xi.segment<3>(0);
  const Vec3 xi2 = xi.segment<3>(3);
  const Vec3 xi3 = xi.segment<3>(6);
  Vec9 f;
  f.segment<3>(0) = b.Jo * (xi1 - p.b) + lc * b.P * (xi2 - p.omega);
  f.segment<3>(3) = b.S_Mw * xi2 + (ctx.K_c - 2.0 * lc * b.P_a) * (p.omega - xi2) +
                    (b.F - lc * b.P.transpose()) * (xi1 - p.b) +
                    0.5 * (b.G.transpose() * xi3);
  f.segment<3>(6) = -lc * xi3 + 0.5 * b.G * (p.omega - xi2);
  return f;
}

double spectral_norm(const Mat3& a) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(a.transpose() * a);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace

Mat9 closed_loop_jacobian(const SamplePoint& p, const CertifyContext& ctx) {
  return assemble(blocks(p, ctx), ctx);
}

Vec9 virtual_rate(const SamplePoint& p, const CertifyContext& ctx, const Vec9& xi) {
  return rate(blocks(p, ctx), ctx, p, xi);
}

JacobianReport certify_sample(const SamplePoint& p, const CertifyContext& ctx,
                              double jo_bound, const CertifyOptions& opts) {
  JacobianReport r;
  r.t = p.t;
  const BlockSet b = blocks(p, ctx);
  const Mat9 j_oc = assemble(b, ctx);
  const Mat9 bracket = skew_bracket(b, ctx);
  const Mat9 j_s = hierarchical(b, ctx);

  // (a) observer block eigenvalue against the filter-gap bound
  {
    Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (b.Jo + b.Jo.transpose()));
    r.lambda_max_sym_Jo = es.eigenvalues().maxCoeff();
  }
  const bool ok_a = r.lambda_max_sym_Jo <= jo_bound;

  // (b) controller block is negative definite by construction of the gains
  {
    Eigen::SelfAdjointEigenSolver<Mat3> es(ctx.K_c);
    r.lambda_max_sym_Jc = -std::min(es.eigenvalues().minCoeff(), ctx.lambda_c);
  }
  const bool ok_b = r.lambda_max_sym_Jc < 0.0;

  // (c) hierarchical structure: the sum splits exactly and the upper-right
  // 3x6 block of the remainder vanishes
  const double resid_split = (j_oc - bracket - j_s).cwiseAbs().maxCoeff();
  const double resid_ur =
      (j_oc - bracket).topRightCorner<3, 6>().cwiseAbs().maxCoeff();
  // (d) the bracket contributes nothing to the quadratic form
  const double resid_skew =
      (0.5 * (bracket + bracket.transpose())).cwiseAbs().maxCoeff();
  r.block_zero_residual = std::max({resid_split, resid_ur, resid_skew});
  const bool ok_c = std::max(resid_split, resid_ur) <= opts.block_tol;
  const bool ok_d = resid_skew <= opts.skew_tol;

  // (e) finite differences of the implemented virtual field
  Vec9 xi_star;
  xi_star.segment<3>(0) = p.b_hat;
  xi_star.segment<3>(3) = p.omega_r;
  xi_star.segment<3>(6) = p.z;
  Mat9 fd;
  for (int col = 0; col < 9; ++col) {
    const double h = opts.fd_rel_step * std::max(1.0, std::abs(xi_star(col)));
    Vec9 plus = xi_star, minus = xi_star;
    plus(col) += h;
    minus(col) -= h;
    fd.col(col) = (rate(b, ctx, p, plus) - rate(b, ctx, p, minus)) / (2.0 * h);
  }
  const double scale = std::max(1.0, j_oc.cwiseAbs().maxCoeff());
  r.fd_mismatch = (fd - j_oc).cwiseAbs().maxCoeff() / scale;
  const bool ok_e = r.fd_mismatch <= opts.fd_tol;

  r.norm_F = spectral_norm(b.F);
  r.ok = ok_a && ok_b && ok_c && ok_d && ok_e;
  return r;
}

CertificationResult certify_trajectory(const TrajectoryLog& log,
                                       const ScenarioConfig& cfg,
                                       const CertifyOptions& opts) {
  if (log.samples.empty()) {
    throw std::invalid_argument("certify_trajectory: empty log");
  }
  const ScenarioConfig c = validated(cfg);
  const CertifyContext ctx{c.K_o, c.K_c, c.lambda_c, c.inertia};

  CertificationResult result;
  result.sup_filter_gap = 0.0;
  for (const auto& s : log.samples) {
    result.sup_filter_gap =
        std::max(result.sup_filter_gap, (s.q.coeffs() - s.q_f).norm());
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(ctx.K_o);
  result.jo_bound = -0.5 * (es.eigenvalues().minCoeff() -
                            es.eigenvalues().maxCoeff() * result.sup_filter_gap) +
                    opts.jo_margin;

  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(log.samples.size());
  result.reports.resize(log.samples.size());
  if (opts.parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      result.reports[i] = certify_sample(sample_point(log.samples[i]), ctx,
                                         result.jo_bound, opts);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      result.reports[i] = certify_sample(sample_point(log.samples[i]), ctx,
                                         result.jo_bound, opts);
    }
  }

  result.passed = true;
  for (const auto& r : result.reports) {
    if (!r.ok) {
      result.passed = false;
      if (result.first_error.empty()) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "certificate failed at t = %.6g (sym_Jo %.3e vs bound %.3e, "
                      "fd %.3e, block %.3e)",
                      r.t, r.lambda_max_sym_Jo, result.jo_bound, r.fd_mismatch,
                      r.block_zero_residual);
        result.first_error = buf;
      }
    }
  }
  return result;
}

void write_certification_csv(const CertificationResult& r, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) {
    throw std::runtime_error("write_certification_csv: cannot open " + path);
  }
  std::fprintf(f, "t,lambda_max_sym_Jo,lambda_max_sym_Jc,norm_F,fd_mismatch,"
                  "block_zero_residual,ok\n");
  for (const auto& rep : r.reports) {
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", rep.t,
                 rep.lambda_max_sym_Jo, rep.lambda_max_sym_Jc, rep.norm_F,
                 rep.fd_mismatch, rep.block_zero_residual, rep.ok ? 1 : 0);
  }
  std::fclose(f);
}

}  // namespace attkit
