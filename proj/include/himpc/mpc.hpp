#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "himpc/common.hpp"
#include "himpc/dynamics.hpp"
#include "himpc/lqr.hpp"
#include "himpc/plant.hpp"
#include "himpc/shaping.hpp"

namespace himpc {

struct MpcConfig {
  int horizon = 10;
  /// Exploration noise ~ N(0, noise_scale^2 * Q_uu^{-1}) at the first step.
  double noise_scale = 1.0;
  std::uint64_t seed = 0;
  bool shaping_enabled = true;
  double terminal_weight = 1.0;
  double beta = 0.95;
  /// Success threshold on the distance to the goal position.
  double success_threshold = 0.1;
  /// Leading state entries that hold the position.
  int position_dims = 2;
  /// Shaping switches off after `convergence_window` consecutive steps with
  /// |x - x_hat*| < convergence_threshold while |x - x*| > success_threshold.
  int convergence_window = 10;
  double convergence_threshold = 0.05;
  LqrOptions lqr;

  void validate(int episode_length) const;
};

/// One control step of an episode.
struct StepRecord {
  Vec state;          // x_t
  Vec planned;        // first planned action (shaped when shaping was active)
  Vec unshaped;       // u_t^0
  Vec noise;
  Vec control;        // planned + noise, before saturation
  Vec applied;        // what the plant received
  Vec shaped_goal;    // x_hat*; equals x* when shaping is inactive
  std::vector<LinearDynamics> models;  // f_s^t for s = t..t+H
  double cost = 0.0;          // original cost at (x_t, control)
  double shaped_delta = 0.0;  // shaped minus original state cost at x_t
  bool shaping_active = false;
};

/// Records for t = 0..T. The last record has a plan but no plant step.
struct TrajectoryInfo {
  int horizon = 0;
  Vec goal;
  std::vector<StepRecord> steps;

  [[nodiscard]] int episode_length() const { return static_cast<int>(steps.size()) - 1; }
  [[nodiscard]] std::vector<Vec> states() const;
  /// Observations [x_t; applied_t; x_{t+1}] for t < T.
  [[nodiscard]] std::vector<Vec> observations() const;
};

struct PlanResult {
  Vec u;
  LqrSolution solution;
};

/// First action of the H-step plan. A shaped goal replaces the cost goal of
/// every step.
PlanResult plan_step(const Vec& x_t, std::span<const LinearDynamics> models,
                     std::span<const QuadraticCost> costs,
                     const std::optional<Vec>& shaped_goal = std::nullopt,
                     const LqrOptions& options = {});

Vec sample_exploration_noise(const Mat& Quu, double noise_scale, std::mt19937_64& rng);

/// Runs one MPC episode on `plant`. `net` may be null (no shaping).
TrajectoryInfo run_episode(const Plant& plant, const DynamicsContext& dynamics,
                           const QuadraticCost& cost, const ShapingNet* net,
                           const MpcConfig& config);

/// Episode under zero-mean Gaussian controls; used to bootstrap the prior.
std::vector<Vec> run_random_episode(const Plant& plant, double control_std, std::uint64_t seed);

struct EpisodeMetrics {
  double cumulative_distance = 0.0;
  double min_distance = 0.0;
  double final_distance = 0.0;
  bool success = false;
};

/// Distances between the first `goal_position.size()` state entries and the goal.
EpisodeMetrics compute_metrics(std::span<const Vec> states, const Vec& goal_position,
                               double success_threshold);
EpisodeMetrics compute_metrics(const TrajectoryInfo& info, double success_threshold,
                               int position_dims = 2);

}  // namespace himpc
