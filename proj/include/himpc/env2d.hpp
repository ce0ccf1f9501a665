#pragma once

// Deterministic 2D point-mass world with axis-aligned rectangular obstacles.
// Obstacles act through penalty contact: a spring-damper normal force along
// the nearest face plus capped Coulomb friction.

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

#include "himpc/common.hpp"

namespace himpc::env2d {

struct ParticleState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();

  /// [px, py, vx, vy]
  [[nodiscard]] Vec packed() const;
  static ParticleState unpack(const Vec& x);
  bool operator==(const ParticleState&) const = default;
};

struct Obstacle {
  Eigen::Vector2d min_corner;
  Eigen::Vector2d max_corner;
  double stiffness = 500.0;     // N/m
  double damping = 10.0;        // N s/m, also caps friction at low sliding speed
  double friction_coeff = 0.5;

  void validate() const;
  [[nodiscard]] bool contains(const Eigen::Vector2d& p) const;
  /// Depth below the nearest face; 0 outside.
  [[nodiscard]] double penetration(const Eigen::Vector2d& p) const;
};

struct EnvConfig {
  double mass = 1.0;
  double dt = 0.05;
  double control_limit = 10.0;
  std::vector<Obstacle> obstacles;
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  int episode_length = 200;

  void validate() const;

  /// Two slabs with an opening between them; start up-left, goal below.
  static EnvConfig obstacle_course();
  /// Same constants without obstacles.
  static EnvConfig free_space();
};

Eigen::Vector2d contact_force(const ParticleState& state, std::span<const Obstacle> obstacles);

/// Semi-implicit Euler step with the control clipped to +-control_limit.
ParticleState step(const ParticleState& state, const Eigen::Vector2d& control,
                   const EnvConfig& config);

ParticleState reset(const EnvConfig& config,
                    std::optional<Eigen::Vector2d> start_override = std::nullopt);

Eigen::Vector2d clip_control(const Eigen::Vector2d& control, double limit);

/// Largest penetration over all obstacles at `position`.
double max_penetration(const Eigen::Vector2d& position, std::span<const Obstacle> obstacles);

}  // namespace himpc::env2d
