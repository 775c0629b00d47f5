#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "comtraq/dynamics.hpp"
#include "comtraq/random.hpp"

namespace comtraq {

// Particle belief over the physical state. The observation model is
// all-or-nothing (exact state or no measurement), so weights never change
// between collapses and no resampling step exists.
struct ParticleSet {
  std::vector<PhysicalState> particles;
  std::vector<double> weights;

  std::size_t size() const { return particles.size(); }
};

struct BeliefSummary {
  PhysicalState mean;
  // Spread per dimension; psi uses circular standard deviation.
  double std_x = 0.0;
  double std_y = 0.0;
  double std_v = 0.0;
  double std_psi = 0.0;
};

inline ParticleSet init_delta(const PhysicalState& s0, std::size_t n) {
  if (n == 0) throw std::invalid_argument("belief: particle count must be >= 1");
  ParticleSet ps;
  ps.particles.assign(n, s0);
  ps.weights.assign(n, 1.0 / static_cast<double>(n));
  return ps;
}

/// Propagates every particle through the stochastic model with its own draw.
inline ParticleSet predict(const ParticleSet& ps, const ControlInput& u, const DynamicsParams& p,
                           RandomStream& rng) {
  ParticleSet out;
  out.weights = ps.weights;
  out.particles.reserve(ps.size());
  for (const auto& s : ps.particles) out.particles.push_back(step_stochastic(s, u, p, rng));
  return out;
}

inline ParticleSet collapse_to(const ParticleSet& ps, const PhysicalState& s_true) {
  return init_delta(s_true, ps.size());
}

inline BeliefSummary summarize(const ParticleSet& ps) {
  if (ps.particles.empty() || ps.particles.size() != ps.weights.size())
    throw std::invalid_argument("belief: malformed particle set");
  double wsum = 0.0;
  for (double w : ps.weights) wsum += w;
  if (!(wsum > 0.0)) throw std::invalid_argument("belief: weights sum to zero");

  // A belief that is a single point (e.g. right after a collapse) must report
  // the point itself, bit-exact, with zero spread.
  bool identical = true;
  for (const auto& s : ps.particles) {
    if (!(s == ps.particles.front())) {
      identical = false;
      break;
    }
  }
  if (identical) return BeliefSummary{ps.particles.front(), 0.0, 0.0, 0.0, 0.0};

  double mx = 0.0, my = 0.0, mv = 0.0, ms = 0.0, mc = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double w = ps.weights[i] / wsum;
    const auto& s = ps.particles[i];
    mx += w * s.x;
    my += w * s.y;
    mv += w * s.v;
    ms += w * std::sin(s.psi);
    mc += w * std::cos(s.psi);
  }
  double vx = 0.0, vy = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double w = ps.weights[i] / wsum;
    const auto& s = ps.particles[i];
    vx += w * (s.x - mx) * (s.x - mx);
    vy += w * (s.y - my) * (s.y - my);
    vv += w * (s.v - mv) * (s.v - mv);
  }
  BeliefSummary b;
  b.mean = {mx, my, mv, wrap_angle(std::atan2(ms, mc))};
  b.std_x = std::sqrt(vx);
  b.std_y = std::sqrt(vy);
  b.std_v = std::sqrt(vv);
  const double r = std::min(1.0, std::hypot(ms, mc));
  b.std_psi = r > 0.0 ? std::sqrt(-2.0 * std::log(r)) : std::numbers::pi;
  return b;
}

}  // namespace comtraq
