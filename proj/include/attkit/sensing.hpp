// Gyro measurement synthesis with bounded direction-noise and a random-walk
// bias, driven by a seedable deterministic generator.

#pragma once

#include "attkit/attmath.hpp"

#include <cstdint>

namespace attkit {

// Deterministic stream built on splitmix64 (Steele, Lea & Flood 2014):
//   state += 0x9E3779B97F4A7C15
//   z = state; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9
//   z = (z ^ z>>27) * 0x94D049BB133111EB; return z ^ z>>31
// Uniforms take the top 53 bits; Gaussians come from the Box-Muller
// transform with the spare value cached. Identical seeds give identical
// streams within one build; across implementations the streams agree
// statistically, not bit for bit.
class NoiseRng {
 public:
  explicit NoiseRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double uniform();   // in [0, 1)
  double gaussian();  // standard normal

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Measurement model: omega_g = omega + b + r_g with r_g = m1 * nu_bar,
// where nu is zero-mean Gaussian with per-axis variance 0.5, nu_bar its
// normalization and m1 uniform on [0, m1_max]. The bias walks as
// b += m2 * nu_bar' * dt with an independent draw, m2 uniform on
// [0, m2_max]. With both caps zero the output is exactly omega + b and the
// bias stays constant.
class GyroModel {
 public:
  GyroModel(const Vec3& bias, double m1_max, double m2_max, std::uint64_t seed);

  // One draw per call; callers hold the result over an integrator step.
  Vec3 measure(const Vec3& omega, double dt);

  const Vec3& bias() const { return b_; }

 private:
  Vec3 unit_direction();

  Vec3 b_;
  double m1_max_;
  double m2_max_;
  NoiseRng rng_;
};

}  // namespace attkit
