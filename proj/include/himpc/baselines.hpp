#pragma once

// Full-horizon iLQR baseline under the same sample budget as the learning
// loop: every iteration executes `rollouts` noisy episodes of T steps.

#include <vector>

#include "himpc/env2d.hpp"
#include "himpc/ilqg.hpp"
#include "himpc/mpc.hpp"

namespace himpc {

struct IlqgRunRecord {
  int iteration = 0;
  std::vector<SampleTrajectory> rollouts;  // the executed, noisy episodes
  std::vector<EpisodeMetrics> metrics;     // one per rollout
  EpisodeMetrics mean;
  double cost_before = 0.0;  // noise-free cost of the executed controller
  double cost_after = 0.0;   // noise-free cost of the controller kept afterwards
  bool accepted = false;
  double step_size = 0.0;
};

struct IlqgExperimentConfig {
  IlqgOptions solver;
  double success_threshold = 0.1;
};

/// Runs solver.iterations iLQR iterations on the particle environment with
/// `cost`. Samples per iteration: solver.rollouts x env.episode_length.
std::vector<IlqgRunRecord> run_ilqg_experiment(const env2d::EnvConfig& env,
                                               const QuadraticCost& cost,
                                               const IlqgExperimentConfig& config);

/// Metrics of one rollout, recomputed from its states.
EpisodeMetrics ilqg_metrics(const SampleTrajectory& rollout, const Vec& goal_position,
                            double success_threshold);

}  // namespace himpc
