// Scenario configuration, the run loop coupling plant/sensing/estimation/
// control, metric computation and CSV input/output. Ships the three
// built-in scenarios.

#pragma once

#include "attkit/attmath.hpp"
#include "attkit/control.hpp"
#include "attkit/plant.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace attkit {

// Convergence bands used for the enter-and-stay times.
struct ConvergenceBands {
  double angle = 0.05;  // pointing angle 2 acos|e0| [rad]
  double omega = 0.01;  // ||omega_tilde|| [rad/s]
  double bias = 0.005;  // ||b - b_hat|| [rad/s]
};

struct ScenarioConfig {
  std::string name = "run";
  double duration = 120.0;     // [s]
  double dt = 1e-3;            // [s]
  double log_interval = 0.05;  // target sample spacing [s], capped at 0.05

  Mat3 inertia = Mat3::Identity();  // [kg*m^2]
  Quat q0;
  Quat qd0;
  Vec3 omega0 = Vec3::Zero();   // [rad/s]
  Vec3 bias0 = Vec3::Zero();    // true gyro bias at t = 0 [rad/s]

  Vec3 omega_d = Vec3::Zero();  // constant desired rate [rad/s]
  std::vector<std::array<double, 4>> omega_d_table;  // overrides omega_d when non-empty
  double omega_d_cap = 10.0;    // sanity bound on ||omega_d|| [rad/s]

  double m1_max = 0.0;  // gyro-noise scale cap
  double m2_max = 0.0;  // bias-walk scale cap
  std::uint64_t seed = 1;

  Mat3 K_c = Mat3::Identity();
  double lambda_c = 0.01;
  Mat3 K_o = Mat3::Identity();
  double gamma = 0.5;

  double delta = 1.0;  // hysteresis half-width in [0, 1]
  int h0 = 0;          // 0 = auto (sign of e0(0)), otherwise +1 or -1

  ConvergenceBands bands;
  std::string out_dir;
  bool certify = false;
};

// Checks ranges, renormalizes q0/qd0 (rejecting drift beyond 1e-6) and
// verifies duration/dt is an integer step count within rounding.
// Returns the cleaned copy.
ScenarioConfig validated(const ScenarioConfig& cfg);

// Built-in scenarios 1..3; throws for anything else.
ScenarioConfig builtin_scenario(int n);

// Strict JSON loader: unknown keys are rejected, matrices may be given as a
// scalar (s*I), a 3-array (diagonal) or a 9-array (row-major full).
ScenarioConfig load_config(const std::string& path);

// Overrides one numeric scalar key (used by sweeps).
void apply_scalar_override(ScenarioConfig& cfg, const std::string& key, double value);

std::unique_ptr<ReferenceProvider> make_reference_provider(const ScenarioConfig& cfg);

struct SwitchEvent {
  double t = 0.0;
  int h_from = 1;
  int h_to = 1;
  double e0 = 0.0;
};

struct LogSample {
  double t = 0.0;
  Quat q;
  Quat q_d;
  Vec4 q_f = Vec4(1, 0, 0, 0);
  Quat e;
  int h = 1;
  Vec3 z = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
  Vec3 omega_g = Vec3::Zero();
  Vec3 omega_r = Vec3::Zero();
  Vec3 omega_d = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  Vec3 b_hat = Vec3::Zero();
  Vec3 tau = Vec3::Zero();
  // Derived columns, filled by compute_metrics.
  double angle = 0.0;      // 2 acos|e0| [rad]
  double omega_err = 0.0;  // ||omega - R^T(e) omega_d|| [rad/s]
  double bias_err = 0.0;   // ||b_hat - b|| [rad/s]
  double effort = 0.0;     // sqrt int tau^T tau dt
  double omega_rms = 0.0;
  double bias_rms = 0.0;
  long switches = 0;  // cumulative switch count up to t
};

struct TrajectoryLog {
  std::vector<LogSample> samples;
  std::vector<SwitchEvent> events;
  double sample_dt = 0.0;  // constant spacing [s]
  ConvergenceBands bands;
  std::string name = "run";
};

struct MetricSummary {
  double duration = 0.0;
  double terminal_angle = 0.0;
  double terminal_omega_err = 0.0;
  double terminal_bias_err = 0.0;
  double terminal_effort = 0.0;
  double terminal_omega_rms = 0.0;
  double terminal_bias_rms = 0.0;
  double accumulated_rotation = 0.0;  // int ||omega_tilde|| dt [rad]
  // Enter-and-stay times against the log's bands; infinity when never.
  double t_enter_angle = 0.0;
  double t_enter_omega = 0.0;
  double t_enter_bias = 0.0;
  long switch_count = 0;
  double sup_filter_gap = 0.0;  // max ||q - q_f||
  double z_decay_slope = 0.0;   // LS slope of log||z|| over the final half
  double min_e0 = 0.0;
  double max_abs_tau = 0.0;
};

// Runs one scenario to completion. Deterministic for fixed (config, seed).
// The hysteresis jump rule fires at each step boundary before the control
// is evaluated; control and measurement are held over the following step.
// Raises SingularityError with step diagnostics if the error leaves the
// admissible chart.
TrajectoryLog run_scenario(const ScenarioConfig& cfg);

// Fills the derived columns of the log and returns the summary.
MetricSummary compute_metrics(TrajectoryLog& log);

void write_log_csv(const TrajectoryLog& log, const std::string& path);
TrajectoryLog read_log_csv(const std::string& path);
void write_metrics_csv(const MetricSummary& m, const std::vector<SwitchEvent>& events,
                       const std::string& path);

}  // namespace attkit
