#include "himpc/env2d.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace himpc::env2d {

Vec ParticleState::packed() const {
  Vec x(4);
  x << position, velocity;
  return x;
}

ParticleState ParticleState::unpack(const Vec& x) {
  require_size(x.size(), 4, "ParticleState::unpack");
  return {x.head<2>(), x.tail<2>()};
}

void Obstacle::validate() const {
  if (!(min_corner.array() < max_corner.array()).all()) {
    throw InvalidArgument("obstacle: min_corner must be strictly below max_corner");
  }
  if (!(stiffness > 0.0)) throw InvalidArgument("obstacle: stiffness must be > 0");
  if (damping < 0.0) throw InvalidArgument("obstacle: damping must be >= 0");
  if (friction_coeff < 0.0) throw InvalidArgument("obstacle: friction_coeff must be >= 0");
}

bool Obstacle::contains(const Eigen::Vector2d& p) const {
  return (p.array() > min_corner.array()).all() && (p.array() < max_corner.array()).all();
}

double Obstacle::penetration(const Eigen::Vector2d& p) const {
  if (!contains(p)) return 0.0;
  return std::min({p.x() - min_corner.x(), max_corner.x() - p.x(), p.y() - min_corner.y(),
                   max_corner.y() - p.y()});
}

void EnvConfig::validate() const {
  if (!(mass > 0.0)) throw InvalidArgument("env: mass must be > 0");
  if (!(dt > 0.0)) throw InvalidArgument("env: dt must be > 0");
  if (!(control_limit > 0.0)) throw InvalidArgument("env: control_limit must be > 0");
  if (episode_length < 1) throw InvalidArgument("env: episode_length must be >= 1");
  for (const auto& o : obstacles) o.validate();
}

EnvConfig EnvConfig::free_space() {
  EnvConfig c;
  c.start = {-1.5, 1.5};
  c.goal = {0.5, -1.0};
  return c;
}

EnvConfig EnvConfig::obstacle_course() {
  EnvConfig c = free_space();
  Obstacle left;
  left.min_corner = {-3.0, -0.3};
  left.max_corner = {0.2, 0.3};
  Obstacle right;
  right.min_corner = {0.8, -0.3};
  right.max_corner = {4.0, 0.3};
  c.obstacles = {left, right};
  return c;
}

Eigen::Vector2d contact_force(const ParticleState& state, std::span<const Obstacle> obstacles) {
  Eigen::Vector2d total = Eigen::Vector2d::Zero();
  for (const auto& o : obstacles) {
    if (!o.contains(state.position)) continue;
    const Eigen::Vector2d& p = state.position;
    // Faces in order: left, right, bottom, top.
    const std::array<double, 4> depth = {p.x() - o.min_corner.x(), o.max_corner.x() - p.x(),
                                         p.y() - o.min_corner.y(), o.max_corner.y() - p.y()};
    static const std::array<Eigen::Vector2d, 4> normals = {
        Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(0, -1),
        Eigen::Vector2d(0, 1)};
    const auto face = static_cast<std::size_t>(
        std::distance(depth.begin(), std::min_element(depth.begin(), depth.end())));
    const Eigen::Vector2d& n = normals[face];
    const Eigen::Vector2d tangent(-n.y(), n.x());

    const double vn = state.velocity.dot(n);
    const double fn = std::max(0.0, o.stiffness * depth[face] - o.damping * vn);
    if (fn == 0.0) continue;

    const double vt = state.velocity.dot(tangent);
    // Coulomb friction, capped by a viscous term so a single explicit step
    // cannot reverse the sliding direction at low speed.
    const double ft = std::min(o.friction_coeff * fn, o.damping * std::abs(vt));
    total += fn * n - std::copysign(ft, vt) * tangent;
  }
  return total;
}

Eigen::Vector2d clip_control(const Eigen::Vector2d& control, double limit) {
  return control.cwiseMax(-limit).cwiseMin(limit);
}

ParticleState step(const ParticleState& state, const Eigen::Vector2d& control,
                   const EnvConfig& config) {
  const Eigen::Vector2d u = clip_control(control, config.control_limit);
  const Eigen::Vector2d force = u + contact_force(state, config.obstacles);
  ParticleState next;
  next.velocity = state.velocity + config.dt * force / config.mass;
  next.position = state.position + config.dt * next.velocity;
  return next;
}

ParticleState reset(const EnvConfig& config, std::optional<Eigen::Vector2d> start_override) {
  return {start_override.value_or(config.start), Eigen::Vector2d::Zero()};
}

double max_penetration(const Eigen::Vector2d& position, std::span<const Obstacle> obstacles) {
  double worst = 0.0;
  for (const auto& o : obstacles) worst = std::max(worst, o.penetration(position));
  return worst;
}

}  // namespace himpc::env2d
