#pragma once

// Similarity loss between shaped-MPC actions and hindsight actions,
//
//   L(theta) = sum_t |u_t(theta) - u_bar_t|^2 + lambda |u_t(theta) - u_t^0|^2,
//
// summed over every retained iteration, and its minimization with L-BFGS.

#include <cstdint>
#include <vector>

#include "himpc/common.hpp"
#include "himpc/hindsight.hpp"
#include "himpc/lbfgs.hpp"
#include "himpc/lqr.hpp"
#include "himpc/mpc.hpp"
#include "himpc/shaping.hpp"

namespace himpc {

struct TrainingSample {
  int iteration = 0;
  Vec state;                          // x_t
  std::vector<LinearDynamics> models; // f_s^t, s = t..t+H
  Vec hindsight_action;               // u_bar_t
  Vec unshaped_action;                // u_t^0

  // u_t(theta) = anchor_action + goal_jacobian * g(x_t; theta). Exact because
  // the planned action is affine in the goal.
  Vec anchor_action;
  Mat goal_jacobian;
};

class TrainingDataset {
 public:
  TrainingDataset(QuadraticCost cost, int horizon, double terminal_weight = 1.0,
                  LqrOptions lqr = {});

  /// Builds the affine cache for a sample and appends it. Returns false (and
  /// logs) when the planning problem cannot be solved.
  bool add(TrainingSample sample);

  /// Adds every `stride`-th step of an episode. Returns the number added.
  int add_episode(const TrajectoryInfo& info, const HindsightPlan& plan, int iteration,
                  int stride = 1);

  [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
  [[nodiscard]] bool empty() const noexcept { return samples_.empty(); }
  [[nodiscard]] const std::vector<TrainingSample>& samples() const noexcept { return samples_; }
  [[nodiscard]] int skipped() const noexcept { return skipped_; }
  [[nodiscard]] const QuadraticCost& cost() const noexcept { return cost_; }
  [[nodiscard]] int horizon() const noexcept { return horizon_; }
  [[nodiscard]] double terminal_weight() const noexcept { return terminal_weight_; }
  [[nodiscard]] const LqrOptions& lqr() const noexcept { return lqr_; }
  /// Samples belonging to one iteration, as a new dataset.
  [[nodiscard]] TrainingDataset subset(int iteration) const;

 private:
  QuadraticCost cost_;
  int horizon_;
  double terminal_weight_;
  LqrOptions lqr_;
  std::vector<TrainingSample> samples_;
  int skipped_ = 0;
};

struct TrainConfig {
  double lambda = 0.1;
  LbfgsOptions lbfgs;
  int stride = 2;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct LossValue {
  double loss = 0.0;
  Vec gradient;
};

/// Loss and gradient at `theta` for the architecture of `net`.
LossValue similarity_loss(const ShapingNet& net, const Vec& theta, const TrainingDataset& data,
                          double lambda, int threads = 0);

/// Same loss, recomputing every action through a fresh LQR solve
/// (slow; used to cross-check the cached affine form).
LossValue similarity_loss_direct(const ShapingNet& net, const Vec& theta,
                                 const TrainingDataset& data, double lambda);

struct TrainResult {
  ShapingNet net;
  double loss_before = 0.0;
  double loss_after = 0.0;
  LbfgsResult optimizer;
};

/// Minimizes the loss from the parameters in `initial`. Never returns a
/// network with higher loss than the start.
TrainResult optimize(const ShapingNet& initial, const TrainingDataset& data,
                     const TrainConfig& config);

}  // namespace himpc
