#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "comtraq/random.hpp"

namespace comtraq {

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (a > -std::numbers::pi && a <= std::numbers::pi) return a;
  double r = std::fmod(a + std::numbers::pi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= std::numbers::pi;
  // fmod maps +pi onto -pi; the interval is open on the left.
  if (r <= -std::numbers::pi) r += kTwoPi;
  return r;
}

/// Signed smallest difference a - b, in (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

struct PhysicalState {
  double x = 0.0;    // m
  double y = 0.0;    // m
  double v = 0.0;    // m/s
  double psi = 0.0;  // rad, (-pi, pi]

  friend bool operator==(const PhysicalState&, const PhysicalState&) = default;
};

struct ControlInput {
  double a = 0.0;      // m/s^2
  double delta = 0.0;  // rad

  friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

struct DynamicsParams {
  double wheelbase = 0.16;
  double dt = 0.1;
  double slip_sigma = deg2rad(15.0);
  double a_min = -0.2;
  double a_max = 0.2;
  double delta_min = -std::numbers::pi / 3.0;
  double delta_max = std::numbers::pi / 3.0;
  double v_min = 0.0;
  double v_max = 0.5;

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("dynamics: dt must be positive");
    if (!(wheelbase > 0.0)) throw std::invalid_argument("dynamics: wheelbase must be positive");
    if (!(slip_sigma >= 0.0)) throw std::invalid_argument("dynamics: slip_sigma must be >= 0");
    if (!(a_min <= a_max) || !(delta_min <= delta_max) || !(v_min <= v_max))
      throw std::invalid_argument("dynamics: min bound exceeds max bound");
    if (std::max(std::abs(delta_min), std::abs(delta_max)) >= std::numbers::pi / 2.0)
      throw std::invalid_argument("dynamics: steering bound must stay below pi/2");
  }
};

inline ControlInput clamp_control(const ControlInput& u, const DynamicsParams& p) {
  return {std::clamp(u.a, p.a_min, p.a_max), std::clamp(u.delta, p.delta_min, p.delta_max)};
}

/// Forward-Euler kinematic bicycle, rear-axle reference point. `u` must be clamped.
inline PhysicalState step_deterministic(const PhysicalState& s, const ControlInput& u,
                                        const DynamicsParams& p) {
  PhysicalState n;
  n.x = s.x + s.v * std::cos(s.psi) * p.dt;
  n.y = s.y + s.v * std::sin(s.psi) * p.dt;
  n.psi = wrap_angle(s.psi + (s.v / p.wheelbase) * std::tan(u.delta) * p.dt);
  n.v = std::clamp(s.v + u.a * p.dt, p.v_min, p.v_max);
  return n;
}

/// Deterministic step followed by additive heading slip. Consumes exactly one
/// Gaussian draw from `rng`.
inline PhysicalState step_stochastic(const PhysicalState& s, const ControlInput& u,
                                     const DynamicsParams& p, RandomStream& rng) {
  PhysicalState n = step_deterministic(s, u, p);
  const double w = rng.normal();
  n.psi = wrap_angle(n.psi + p.slip_sigma * w);
  return n;
}

}  // namespace comtraq
