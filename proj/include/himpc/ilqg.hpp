#pragma once

// Full-horizon iterative LQR on time-varying linear models fitted by least
// squares to sampled rollouts. A deliberately simple stand-in for iLQG with
// GMM priors: per-step affine fits pooled over a window of neighbouring
// steps, a full-episode backward pass, and a step-size search on the
// feedforward term.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "himpc/common.hpp"
#include "himpc/lqr.hpp"
#include "himpc/plant.hpp"

namespace himpc {

/// States x_0..x_T and applied controls u_0..u_{T-1}.
struct SampleTrajectory {
  std::vector<Vec> states;
  std::vector<Vec> controls;
};

/// u_t = k_t + K_t x_t
struct TimeVaryingPolicy {
  std::vector<ControlLaw> laws;

  [[nodiscard]] int length() const { return static_cast<int>(laws.size()); }
  [[nodiscard]] Vec apply(int t, const Vec& x) const;
  static TimeVaryingPolicy zeros(int T, int state_dim, int control_dim);
};

/// Runs the policy on the plant, adding N(0, noise_std^2 I) to the
/// feedforward term when `rng` is given.
SampleTrajectory simulate(const Plant& plant, const TimeVaryingPolicy& policy,
                          double noise_std = 0.0, std::mt19937_64* rng = nullptr);

/// sum_{t<T} l(x_t, u_t); the final state is not charged.
double trajectory_cost(const SampleTrajectory& trajectory, const QuadraticCost& cost);

/// Fits x_{t+1} ~ A_t x_t + B_t u_t + c_t for every t by least squares over
/// the samples of steps t-window..t+window of all trajectories. Throws
/// NumericalError naming the step when it has fewer samples than
/// coefficients; collinear samples get the minimum-norm fit.
std::vector<LinearDynamics> fit_time_varying_models(std::span<const SampleTrajectory> samples,
                                                    int window);

struct IlqgOptions {
  int iterations = 10;
  int rollouts = 3;
  int window = 2;
  /// Std of the exploration noise on the feedforward term (N).
  double noise_std = 0.5;
  /// Tried in order; the first that lowers the model cost is used.
  std::vector<double> step_sizes = {1.0, 0.5, 0.25, 0.125, 0.0625};
  LqrOptions lqr;
  std::uint64_t seed = 0;
};

struct IlqgIteration {
  int iteration = 0;
  std::vector<SampleTrajectory> samples;
  double cost_before = 0.0;  // true noise-free cost of the policy that was sampled
  double cost_after = 0.0;   // true noise-free cost of the policy kept afterwards
  double step_size = 0.0;    // of the accepted update; 0 when rejected
  bool accepted = false;
};

class IlqgSolver {
 public:
  IlqgSolver(const Plant& plant, QuadraticCost cost, IlqgOptions options,
             TimeVaryingPolicy initial = {});

  /// Samples, refits, and tries to improve the policy once.
  IlqgIteration step();

  [[nodiscard]] const TimeVaryingPolicy& policy() const noexcept { return policy_; }
  [[nodiscard]] const SampleTrajectory& nominal() const noexcept { return nominal_; }
  [[nodiscard]] double cost() const noexcept { return cost_; }
  [[nodiscard]] int iterations_done() const noexcept { return done_; }

 private:
  const Plant& plant_;
  QuadraticCost cost_fn_;
  IlqgOptions options_;
  TimeVaryingPolicy policy_;
  SampleTrajectory nominal_;
  double cost_ = 0.0;
  int done_ = 0;
  std::mt19937_64 rng_;
};

struct IlqgResult {
  TimeVaryingPolicy policy;
  SampleTrajectory nominal;
  std::vector<IlqgIteration> iterations;
};

IlqgResult solve_ilqg_full_horizon(const Plant& plant, const QuadraticCost& cost,
                                   const IlqgOptions& options, TimeVaryingPolicy initial = {});

}  // namespace himpc
