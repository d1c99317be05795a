#include "attkit/scenario.hpp"

#include "attkit/sensing.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace attkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

long step_count(double duration, double dt) {
  const long n = std::lround(duration / dt);
  if (n < 1 || std::abs(static_cast<double>(n) * dt - duration) >
                   1e-9 * std::max(1.0, duration)) {
    throw std::invalid_argument("scenario: duration must be an integer number of steps");
  }
  return n;
}

Quat load_unit(const Quat& q, const char* who) {
  if (!q.is_finite() || std::abs(q.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument(std::string(who) + ": quaternion not unit within 1e-6");
  }
  return q.normalized();
}

}  // namespace

ScenarioConfig validated(const ScenarioConfig& cfg) {
  ScenarioConfig c = cfg;
  if (!(c.duration > 0.0) || !(c.dt > 0.0)) {
    throw std::invalid_argument("scenario: duration and dt must be > 0");
  }
  step_count(c.duration, c.dt);
  if (!(c.log_interval > 0.0)) {
    throw std::invalid_argument("scenario: log_interval must be > 0");
  }
  c.q0 = load_unit(c.q0, "q0");
  c.qd0 = load_unit(c.qd0, "qd0");
  if (!c.omega0.allFinite() || !c.bias0.allFinite()) {
    throw std::invalid_argument("scenario: non-finite initial condition");
  }
  if (c.m1_max < 0.0 || c.m2_max < 0.0) {
    throw std::invalid_argument("scenario: noise caps must be >= 0");
  }
  if (!(c.delta >= 0.0 && c.delta <= 1.0)) {
    throw std::invalid_argument("scenario: delta must be in [0, 1]");
  }
  if (c.h0 != 0 && c.h0 != 1 && c.h0 != -1) {
    throw std::invalid_argument("scenario: h0 must be auto, +1 or -1");
  }
  if (!(c.omega_d_cap > 0.0)) {
    throw std::invalid_argument("scenario: omega_d_cap must be > 0");
  }
  validate(ObserverGains{c.K_o, c.gamma, c.lambda_c});
  validate(ControllerGains{c.K_c, c.lambda_c});
  InertiaModel check(c.inertia);
  (void)check;
  return c;
}

ScenarioConfig builtin_scenario(int n) {
  const Vec3 u = Vec3(1.0, 2.0, 3.0).normalized();
  ScenarioConfig c;
  c.duration = 120.0;
  c.dt = 1e-3;
  c.inertia = (10.0 * u).asDiagonal();
  c.q0 = Quat(-0.2, std::sqrt(1.0 - 0.04) * u);
  c.qd0 = Quat::identity();
  c.omega0 = 0.5 * u;
  c.omega_d = Vec3(0.0, 0.11, 0.0);
  c.bias0 = Vec3(0.05, -0.05, 0.033);
  c.K_c = Mat3::Identity();
  c.lambda_c = 0.01;
  c.K_o = Mat3::Identity();
  c.gamma = 0.5;
  c.h0 = 1;
  c.seed = 1;
  switch (n) {
    case 1:
      c.name = "scenario1";
      c.delta = 1.0;
      break;
    case 2:
      c.name = "scenario2";
      c.delta = 0.3;
      break;
    case 3:
      c.name = "scenario3";
      c.delta = 0.3;
      c.m1_max = 0.01;
      c.m2_max = 0.03;
      c.duration = 300.0;
      break;
    default:
      throw std::invalid_argument("builtin_scenario: scenario must be 1, 2 or 3");
  }
  return validated(c);
}

namespace {

using nlohmann::json;

Vec3 as_vec3(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument("config key '" + key + "': expected an array of 3 numbers");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Quat as_quat(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 4) {
    throw std::invalid_argument("config key '" + key + "': expected an array of 4 numbers");
  }
  return Quat(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

Mat3 as_mat3(const json& j, const std::string& key) {
  if (j.is_number()) {
    return j.get<double>() * Mat3::Identity();
  }
  if (j.is_array() && j.size() == 3) {
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>()).asDiagonal();
  }
  if (j.is_array() && j.size() == 9) {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) m(r, col) = j[3 * r + col].get<double>();
    return m;
  }
  throw std::invalid_argument("config key '" + key +
                              "': expected a scalar, 3-array (diagonal) or 9-array");
}

}  // namespace

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("config: cannot open " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw std::invalid_argument("config: parse error in " + path + ": " + ex.what());
  }
  if (!j.is_object()) {
    throw std::invalid_argument("config: top level must be an object");
  }

  static const std::set<std::string> known = {
      "name", "duration", "dt", "log_interval", "inertia", "q0", "qd0",
      "omega0", "bias0", "omega_d", "omega_d_table", "omega_d_cap",
      "m1_max", "m2_max", "seed", "K_c", "lambda_c", "K_o", "gamma",
      "delta", "h0", "band_angle", "band_omega", "band_bias",
      "out_dir", "certify"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw std::invalid_argument("config: unknown key '" + item.key() + "'");
    }
  }

  ScenarioConfig c;
  if (j.contains("name")) c.name = j["name"].get<std::string>();
  if (j.contains("duration")) c.duration = j["duration"].get<double>();
  if (j.contains("dt")) c.dt = j["dt"].get<double>();
  if (j.contains("log_interval")) c.log_interval = j["log_interval"].get<double>();
  if (j.contains("inertia")) c.inertia = as_mat3(j["inertia"], "inertia");
  if (j.contains("q0")) c.q0 = as_quat(j["q0"], "q0");
  if (j.contains("qd0")) c.qd0 = as_quat(j["qd0"], "qd0");
  if (j.contains("omega0")) c.omega0 = as_vec3(j["omega0"], "omega0");
  if (j.contains("bias0")) c.bias0 = as_vec3(j["bias0"], "bias0");
  if (j.contains("omega_d")) c.omega_d = as_vec3(j["omega_d"], "omega_d");
  if (j.contains("omega_d_table")) {
    for (const auto& row : j["omega_d_table"]) {
      if (!row.is_array() || row.size() != 4) {
        throw std::invalid_argument("config key 'omega_d_table': rows must be [t, wx, wy, wz]");
      }
      c.omega_d_table.push_back({row[0].get<double>(), row[1].get<double>(),
                                 row[2].get<double>(), row[3].get<double>()});
    }
  }
  if (j.contains("omega_d_cap")) c.omega_d_cap = j["omega_d_cap"].get<double>();
  if (j.contains("m1_max")) c.m1_max = j["m1_max"].get<double>();
  if (j.contains("m2_max")) c.m2_max = j["m2_max"].get<double>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("K_c")) c.K_c = as_mat3(j["K_c"], "K_c");
  if (j.contains("lambda_c")) c.lambda_c = j["lambda_c"].get<double>();
  if (j.contains("K_o")) c.K_o = as_mat3(j["K_o"], "K_o");
  if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
  if (j.contains("delta")) c.delta = j["delta"].get<double>();
  if (j.contains("h0")) {
    const auto& h = j["h0"];
    if (h.is_string() && h.get<std::string>() == "auto") {
      c.h0 = 0;
    } else if (h.is_number_integer()) {
      c.h0 = h.get<int>();
    } else {
      throw std::invalid_argument("config key 'h0': expected \"auto\", 1 or -1");
    }
  }
  if (j.contains("band_angle")) c.bands.angle = j["band_angle"].get<double>();
  if (j.contains("band_omega")) c.bands.omega = j["band_omega"].get<double>();
  if (j.contains("band_bias")) c.bands.bias = j["band_bias"].get<double>();
  if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("certify")) c.certify = j["certify"].get<bool>();
  return validated(c);
}

void apply_scalar_override(ScenarioConfig& cfg, const std::string& key, double value) {
  if (key == "duration") cfg.duration = value;
  else if (key == "dt") cfg.dt = value;
  else if (key == "log_interval") cfg.log_interval = value;
  else if (key == "lambda_c") cfg.lambda_c = value;
  else if (key == "gamma") cfg.gamma = value;
  else if (key == "delta") cfg.delta = value;
  else if (key == "m1_max") cfg.m1_max = value;
  else if (key == "m2_max") cfg.m2_max = value;
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::llround(value));
  else if (key == "h0") cfg.h0 = static_cast<int>(std::llround(value));
  else if (key == "band_angle") cfg.bands.angle = value;
  else if (key == "band_omega") cfg.bands.omega = value;
  else if (key == "band_bias") cfg.bands.bias = value;
  else throw std::invalid_argument("sweep: unsupported key '" + key + "'");
}

std::unique_ptr<ReferenceProvider> make_reference_provider(const ScenarioConfig& cfg) {
  if (!cfg.omega_d_table.empty()) {
    return std::make_unique<TabulatedRate>(cfg.omega_d_table);
  }
  return std::make_unique<ConstantRate>(cfg.omega_d);
}

TrajectoryLog run_scenario(const ScenarioConfig& raw) {
  const ScenarioConfig cfg = validated(raw);
  const long n_steps = step_count(cfg.duration, cfg.dt);
  // At least one sample per 0.05 s regardless of dt.
  const double target = std::min(cfg.log_interval, 0.05);
  const long stride = std::max<long>(1, static_cast<long>(std::floor(target / cfg.dt + 1e-9)));

  const InertiaModel inertia(cfg.inertia);
  const ObserverGains og{cfg.K_o, cfg.gamma, cfg.lambda_c};
  const ControllerGains cg{cfg.K_c, cfg.lambda_c};
  const auto ref = make_reference_provider(cfg);
  GyroModel gyro(cfg.bias0, cfg.m1_max, cfg.m2_max, cfg.seed);

  SimState s;
  s.q = cfg.q0;
  s.omega = cfg.omega0;
  s.q_d = cfg.qd0;
  s.obs = ObserverState::initial(cfg.q0);

  HysteresisState hs;
  hs.delta = cfg.delta;
  hs.h = cfg.h0 != 0 ? cfg.h0 : sgn_hat(tracking_error(s.q, s.q_d).q0);

  TrajectoryLog log;
  log.name = cfg.name;
  log.bands = cfg.bands;
  log.sample_dt = static_cast<double>(stride) * cfg.dt;
  log.samples.reserve(static_cast<std::size_t>(n_steps / stride) + 1);

  long switches = 0;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const Quat e = tracking_error(s.q, s.q_d);
    const HysteresisState next = hysteresis_update(hs, e.q0);
    if (next.h != hs.h) {
      log.events.push_back({t, hs.h, next.h, e.q0});
      ++switches;
    }
    hs = next;

    const Vec3 b_true = gyro.bias();
    const Vec3 omega_g = gyro.measure(s.omega, cfg.dt);
    const ReferenceState rs{s.q_d, ref->omega_d(t), ref->omega_d_dot(t)};
    if (rs.omega_d.norm() > cfg.omega_d_cap) {
      throw std::invalid_argument("scenario: ||omega_d|| exceeds omega_d_cap");
    }

    ControlOutput out;
    try {
      out = switched_control(s.q, omega_g, rs, s.obs, og, hs, cg, inertia);
    } catch (const SingularityError& ex) {
      std::ostringstream os;
      os << ex.what() << " [scenario '" << cfg.name << "', control at step " << k
         << ", t = " << t << ", e0 = " << e.q0 << ", h = " << hs.h << "]";
      throw SingularityError(os.str());
    }

    if (k % stride == 0) {
      LogSample sample;
      sample.t = t;
      sample.q = s.q;
      sample.q_d = s.q_d;
      sample.q_f = s.obs.q_f;
      sample.e = out.e;
      sample.h = hs.h;
      sample.z = out.z;
      sample.omega = s.omega;
      sample.omega_g = omega_g;
      sample.omega_r = out.omega_r;
      sample.omega_d = rs.omega_d;
      sample.b = b_true;
      sample.b_hat = out.b_hat;
      sample.tau = out.tau;
      sample.switches = switches;
      log.samples.push_back(sample);
    }
    if (k == n_steps) break;

    try {
      s = step(s, StepInputs{out.tau, omega_g, hs.h, t}, cfg.dt, *ref, inertia, og);
    } catch (const SingularityError& ex) {
      std::ostringstream os;
      os << ex.what() << " [scenario '" << cfg.name << "', integration at step " << k
         << ", t = " << t << ", e0 = " << e.q0 << ", h = " << hs.h << "]";
      throw SingularityError(os.str());
    }
  }

  compute_metrics(log);
  return log;
}

MetricSummary compute_metrics(TrajectoryLog& log) {
  MetricSummary m;
  if (log.samples.empty()) {
    throw std::invalid_argument("compute_metrics: empty log");
  }
  const double dt = log.sample_dt;
  double effort_integral = 0.0;
  double omega_sq_integral = 0.0;
  double bias_sq_integral = 0.0;
  double rotation_integral = 0.0;
  double prev_tau_sq = 0.0, prev_omega_sq = 0.0, prev_bias_sq = 0.0, prev_omega = 0.0;

  m.sup_filter_gap = 0.0;
  m.min_e0 = kInf;
  m.max_abs_tau = 0.0;

  for (std::size_t i = 0; i < log.samples.size(); ++i) {
    LogSample& s = log.samples[i];
    s.angle = 2.0 * std::acos(std::min(1.0, std::abs(s.e.q0)));
    const Vec3 omega_tilde = s.omega - rotation_of(s.e).transpose() * s.omega_d;
    s.omega_err = omega_tilde.norm();
    s.bias_err = (s.b_hat - s.b).norm();

    const double tau_sq = s.tau.squaredNorm();
    const double omega_sq = s.omega_err * s.omega_err;
    const double bias_sq = s.bias_err * s.bias_err;
    if (i == 0) {
      s.effort = 0.0;
      s.omega_rms = s.omega_err;
      s.bias_rms = s.bias_err;
    } else {
      effort_integral += 0.5 * dt * (prev_tau_sq + tau_sq);
      omega_sq_integral += 0.5 * dt * (prev_omega_sq + omega_sq);
      bias_sq_integral += 0.5 * dt * (prev_bias_sq + bias_sq);
      rotation_integral += 0.5 * dt * (prev_omega + s.omega_err);
      s.effort = std::sqrt(effort_integral);
      s.omega_rms = std::sqrt(omega_sq_integral / s.t);
      s.bias_rms = std::sqrt(bias_sq_integral / s.t);
    }
    prev_tau_sq = tau_sq;
    prev_omega_sq = omega_sq;
    prev_bias_sq = bias_sq;
    prev_omega = s.omega_err;

    m.sup_filter_gap = std::max(m.sup_filter_gap, (s.q.coeffs() - s.q_f).norm());
    m.min_e0 = std::min(m.min_e0, s.e.q0);
    m.max_abs_tau = std::max(m.max_abs_tau, s.tau.cwiseAbs().maxCoeff());
  }

  const LogSample& last = log.samples.back();
  m.duration = last.t;
  m.terminal_angle = last.angle;
  m.terminal_omega_err = last.omega_err;
  m.terminal_bias_err = last.bias_err;
  m.terminal_effort = last.effort;
  m.terminal_omega_rms = last.omega_rms;
  m.terminal_bias_rms = last.bias_rms;
  m.accumulated_rotation = rotation_integral;
  m.switch_count = last.switches;

  // Enter-and-stay times: scan from the end for the last violation.
  auto enter_time = [&](auto getter, double band) {
    std::size_t first_ok = 0;
    for (std::size_t i = log.samples.size(); i-- > 0;) {
      if (getter(log.samples[i]) >= band) {
        first_ok = i + 1;
        break;
      }
    }
    if (first_ok >= log.samples.size()) return kInf;
    return log.samples[first_ok].t;
  };
  m.t_enter_angle = enter_time([](const LogSample& s) { return s.angle; }, log.bands.angle);
  m.t_enter_omega = enter_time([](const LogSample& s) { return s.omega_err; }, log.bands.omega);
  m.t_enter_bias = enter_time([](const LogSample& s) { return s.bias_err; }, log.bands.bias);

  // Least-squares slope of log||z|| over the final half of the run.
  {
    const double t_start = 0.5 * last.t;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = 0;
    for (const auto& s : log.samples) {
      if (s.t < t_start) continue;
      const double y = std::log(std::max(s.z.norm(), 1e-300));
      sx += s.t;
      sy += y;
      sxx += s.t * s.t;
      sxy += s.t * y;
      ++n;
    }
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    m.z_decay_slope = (n >= 2 && denom != 0.0)
                          ? (static_cast<double>(n) * sxy - sx * sy) / denom
                          : 0.0;
  }
  return m;
}

namespace {

const char* kHeader =
    "t,q0,q1,q2,q3,qd0,qd1,qd2,qd3,qf0,qf1,qf2,qf3,e0,e1,e2,e3,h,"
    "z0,z1,z2,w0,w1,w2,wg0,wg1,wg2,wr0,wr1,wr2,wd0,wd1,wd2,"
    "b0,b1,b2,bh0,bh1,bh2,tau0,tau1,tau2,"
    "angle,werr,berr,effort,wrms,brms,switches";

void put(std::FILE* f, double v, bool comma = true) {
  std::fprintf(f, "%.17g%s", v, comma ? "," : "");
}

void put4(std::FILE* f, const Vec4& v) {
  for (int i = 0; i < 4; ++i) put(f, v(i));
}

void put3(std::FILE* f, const Vec3& v) {
  for (int i = 0; i < 3; ++i) put(f, v(i));
}

}  // namespace

void write_log_csv(const TrajectoryLog& log, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) {
    throw std::runtime_error("write_log_csv: cannot open " + path);
  }
  std::fprintf(f, "%s\n", kHeader);
  for (const auto& s : log.samples) {
    put(f, s.t);
    put4(f, s.q.coeffs());
    put4(f, s.q_d.coeffs());
    put4(f, s.q_f);
    put4(f, s.e.coeffs());
    std::fprintf(f, "%d,", s.h);
    put3(f, s.z);
    put3(f, s.omega);
    put3(f, s.omega_g);
    put3(f, s.omega_r);
    put3(f, s.omega_d);
    put3(f, s.b);
    put3(f, s.b_hat);
    put3(f, s.tau);
    put(f, s.angle);
    put(f, s.omega_err);
    put(f, s.bias_err);
    put(f, s.effort);
    put(f, s.omega_rms);
    put(f, s.bias_rms);
    std::fprintf(f, "%ld\n", s.switches);
  }
  std::fclose(f);
}

TrajectoryLog read_log_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("read_log_csv: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw std::runtime_error("read_log_csv: unexpected header in " + path);
  }
  TrajectoryLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    v.reserve(46);
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      v.push_back(std::strtod(line.c_str() + pos, nullptr));
      pos = next + 1;
    }
    if (v.size() != 46) {
      throw std::runtime_error("read_log_csv: malformed row in " + path);
    }
    LogSample s;
    int i = 0;
    s.t = v[i++];
    s.q = Quat(v[i], v[i + 1], v[i + 2], v[i + 3]);
    i += 4;
    s.q_d = Quat(v[i], v[i + 1], v[i + 2], v[i + 3]);
    i += 4;
    s.q_f = Vec4(v[i], v[i + 1], v[i + 2], v[i + 3]);
    i += 4;
    s.e = Quat(v[i], v[i + 1], v[i + 2], v[i + 3]);
    i += 4;
    s.h = static_cast<int>(v[i++]);
    auto take3 = [&]() {
      Vec3 r(v[i], v[i + 1], v[i + 2]);
      i += 3;
      return r;
    };
    s.z = take3();
    s.omega = take3();
    s.omega_g = take3();
    s.omega_r = take3();
    s.omega_d = take3();
    s.b = take3();
    s.b_hat = take3();
    s.tau = take3();
    s.angle = v[i++];
    s.omega_err = v[i++];
    s.bias_err = v[i++];
    s.effort = v[i++];
    s.omega_rms = v[i++];
    s.bias_rms = v[i++];
    s.switches = static_cast<long>(v[i++]);
    log.samples.push_back(s);
  }
  if (log.samples.size() >= 2) {
    log.sample_dt = log.samples[1].t - log.samples[0].t;
  }
  return log;
}

void write_metrics_csv(const MetricSummary& m, const std::vector<SwitchEvent>& events,
                       const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) {
    throw std::runtime_error("write_metrics_csv: cannot open " + path);
  }
  std::fprintf(f, "metric,value\n");
  auto row = [&](const char* name, double v) { std::fprintf(f, "%s,%.17g\n", name, v); };
  row("duration", m.duration);
  row("terminal_angle", m.terminal_angle);
  row("terminal_omega_err", m.terminal_omega_err);
  row("terminal_bias_err", m.terminal_bias_err);
  row("terminal_effort", m.terminal_effort);
  row("terminal_omega_rms", m.terminal_omega_rms);
  row("terminal_bias_rms", m.terminal_bias_rms);
  row("accumulated_rotation", m.accumulated_rotation);
  row("t_enter_angle", m.t_enter_angle);
  row("t_enter_omega", m.t_enter_omega);
  row("t_enter_bias", m.t_enter_bias);
  std::fprintf(f, "switch_count,%ld\n", m.switch_count);
  row("sup_filter_gap", m.sup_filter_gap);
  row("z_decay_slope", m.z_decay_slope);
  row("min_e0", m.min_e0);
  row("max_abs_tau", m.max_abs_tau);
  for (std::size_t i = 0; i < events.size(); ++i) {
    std::fprintf(f, "switch_%zu_t,%.17g\n", i + 1, events[i].t);
    std::fprintf(f, "switch_%zu_e0,%.17g\n", i + 1, events[i].e0);
    std::fprintf(f, "switch_%zu_h_to,%d\n", i + 1, events[i].h_to);
  }
  std::fclose(f);
}

}  // namespace attkit
