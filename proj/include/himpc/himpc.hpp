#pragma once

// Iterative learning loop: run (shaped) MPC episodes, re-plan them in
// hindsight with a longer horizon, and retrain the goal-shift network on the
// aggregated hindsight data.

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

#include "himpc/common.hpp"
#include "himpc/dynamics.hpp"
#include "himpc/env2d.hpp"
#include "himpc/gmm.hpp"
#include "himpc/hindsight.hpp"
#include "himpc/mpc.hpp"
#include "himpc/shaping.hpp"
#include "himpc/trainer.hpp"

namespace himpc {

/// Diagonal quadratic cost around the goal position (zero goal velocity).
struct CostWeights {
  double position = 1.0;
  double velocity = 0.1;
  double control = 0.01;

  [[nodiscard]] QuadraticCost make(const Eigen::Vector2d& goal) const;
};

struct PriorConfig {
  int components = 8;
  GmmFitOptions fit;
  /// Refit on all observations after every episode batch.
  bool refresh = true;
  /// Control std of the bootstrap episode.
  double bootstrap_control_std = 5.0;
  ConditionOptions condition;
};

struct HimpcConfig {
  CostWeights cost;
  MpcConfig mpc;
  PriorConfig prior;
  int hindsight_horizon = 30;
  TrainConfig train;
  std::vector<int> hidden_layers = {25, 25};
  /// State entries fed to the network; empty = whole state.
  std::vector<int> shaping_inputs;
  int iterations = 6;
  int rollouts_per_iteration = 3;
  /// Training starts once this many successful rollouts have been seen.
  int success_gate = 2;
  /// Exploration noise multiplier applied per iteration (1 = constant).
  double noise_decay = 1.0;
  /// false: never train (baseline MPC under the same schedule).
  bool learn = true;
  /// Start positions cycled over the rollouts; empty = environment start.
  std::vector<Eigen::Vector2d> starts;
  std::uint64_t seed = 0;

  void validate(const env2d::EnvConfig& env) const;
};

struct RolloutRecord {
  std::uint64_t seed = 0;
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  TrajectoryInfo trajectory;
  HindsightPlan hindsight;  // empty when learning is off
  EpisodeMetrics metrics;
};

struct IterationRecord {
  int iteration = 0;
  Vec theta;  // parameters the rollouts ran with
  std::vector<RolloutRecord> rollouts;
  EpisodeMetrics mean;  // averaged over rollouts (success = fraction > 0.5)
  double success_rate = 0.0;
  bool trained = false;
  double loss_before = 0.0;
  double loss_after = 0.0;
  std::size_t dataset_size = 0;  // after this iteration's samples were added
  std::vector<LbfgsTraceEntry> training_trace;
};

/// Average of per-rollout metrics.
EpisodeMetrics average_metrics(std::span<const RolloutRecord> rollouts);

class HimpcRunner {
 public:
  HimpcRunner(env2d::EnvConfig env, HimpcConfig config);

  /// Random-policy episode that seeds the first prior. Called lazily.
  void bootstrap();

  /// Runs the next iteration: rollouts, hindsight, dataset update, prior
  /// refresh and (gated) training of the parameters for the next iteration.
  IterationRecord run_iteration();

  /// Re-absorbs a logged iteration instead of running it: observations,
  /// hindsight samples and success counts are rebuilt from the record, and
  /// `next_theta` (the parameters the following iteration used) is adopted.
  void replay_iteration(IterationRecord record, const std::optional<Vec>& next_theta);

  /// One evaluation episode with the current parameters; does not touch the
  /// prior or dataset.
  RolloutRecord evaluate(const Eigen::Vector2d& start, std::uint64_t seed,
                         bool use_shaping = true) const;

  [[nodiscard]] int next_iteration() const noexcept { return iteration_; }
  [[nodiscard]] const ShapingNet& net() const noexcept { return net_; }
  void set_theta(const Vec& theta) { net_.set_params(theta); }
  [[nodiscard]] const GmmPrior& prior() const;
  [[nodiscard]] bool has_prior() const noexcept { return prior_.has_value(); }
  [[nodiscard]] const TrainingDataset& dataset() const noexcept { return dataset_; }
  [[nodiscard]] const std::vector<Vec>& observations() const noexcept { return observations_; }
  [[nodiscard]] int successes() const noexcept { return successes_; }
  [[nodiscard]] const QuadraticCost& cost() const noexcept { return cost_; }
  [[nodiscard]] const HimpcConfig& config() const noexcept { return config_; }
  [[nodiscard]] const env2d::EnvConfig& env() const noexcept { return env_; }

  [[nodiscard]] std::uint64_t rollout_seed(int iteration, int rollout) const;

 private:
  void refit_prior();
  void absorb(IterationRecord& record);
  [[nodiscard]] DynamicsContext dynamics_context() const;
  [[nodiscard]] MpcConfig mpc_config(int iteration, std::uint64_t seed) const;

  env2d::EnvConfig env_;
  HimpcConfig config_;
  QuadraticCost cost_;
  ShapingNet net_;
  std::optional<GmmPrior> prior_;
  std::vector<Vec> observations_;
  TrainingDataset dataset_;
  int iteration_ = 0;
  int successes_ = 0;
  int refits_ = 0;
};

/// Runs config.iterations iterations from scratch.
std::vector<IterationRecord> run_himpc(const env2d::EnvConfig& env, const HimpcConfig& config);

struct SweepCell {
  int hbar = 0;  // 0 marks the baseline row
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> samples;
};

struct SweepOptions {
  std::vector<int> hbar_values = {10, 20, 30};
  std::vector<Eigen::Vector2d> train_positions;
  std::vector<Eigen::Vector2d> test_positions;
  int trials = 3;
  bool include_baseline = true;
};

/// Trains one learner per H_bar on the train positions (one rollout per
/// position and iteration) and evaluates cumulative distance from every test
/// position. Baseline rows (hbar = 0) come from an identically scheduled
/// non-learning run. Evaluation seeds are shared across rows.
std::vector<SweepCell> sweep_hbar(const env2d::EnvConfig& env, const HimpcConfig& config,
                                  const SweepOptions& options);

/// Evenly spaced n x n grid over [lo, hi].
std::vector<Eigen::Vector2d> grid_positions(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                                            int n);

}  // namespace himpc
