#include "attkit/sensing.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace attkit {

std::uint64_t NoiseRng::next_u64() {
  state_ += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double NoiseRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double NoiseRng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

GyroModel::GyroModel(const Vec3& bias, double m1_max, double m2_max, std::uint64_t seed)
    : b_(bias), m1_max_(m1_max), m2_max_(m2_max), rng_(seed) {
  if (!bias.allFinite()) {
    throw std::invalid_argument("gyro model: non-finite bias");
  }
  if (m1_max < 0.0 || m2_max < 0.0) {
    throw std::invalid_argument("gyro model: noise caps must be >= 0");
  }
}

Vec3 GyroModel::unit_direction() {
  const double sigma = std::sqrt(0.5);  // per-axis variance 0.5
  Vec3 v(sigma * rng_.gaussian(), sigma * rng_.gaussian(), sigma * rng_.gaussian());
  const double n = v.norm();
  if (n < 1e-300) {
    return Vec3::UnitX();
  }
  return v / n;
}

Vec3 GyroModel::measure(const Vec3& omega, double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("gyro measure: dt must be > 0");
  }
  if (!omega.allFinite()) {
    throw std::invalid_argument("gyro measure: non-finite rate");
  }
  // Fixed draw order per call: gyro direction, m1, walk direction, m2.
  const Vec3 dir_g = unit_direction();
  const double m1 = m1_max_ * rng_.uniform();
  const Vec3 out = omega + b_ + m1 * dir_g;
  const Vec3 dir_b = unit_direction();
  const double m2 = m2_max_ * rng_.uniform();
  b_ += (m2 * dir_b) * dt;
  return out;
}

}  // namespace attkit
