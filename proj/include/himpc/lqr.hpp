#pragma once

// Finite-horizon LQR for time-varying affine dynamics
//
//   x_{s+1} = A_s x_s + B_s u_s + c_s
//
// and per-step quadratic costs
//
//   l_s(x, u) = (x - g_s)^T Q_s (x - g_s) + u^T R_s u,   s = 0..H.
//
// The problem has H+1 decision steps; the state reached after the last model
// carries no cost, so the final control in every plan is zero.

#include <span>
#include <vector>

#include "himpc/common.hpp"

namespace himpc {

/// Affine one-step model x' = A x + B u + c with process-noise covariance W.
struct LinearDynamics {
  Mat A;
  Mat B;
  Vec c;
  Mat W;

  [[nodiscard]] int state_dim() const { return static_cast<int>(A.rows()); }
  [[nodiscard]] int control_dim() const { return static_cast<int>(B.cols()); }
  [[nodiscard]] Vec predict(const Vec& x, const Vec& u) const { return A * x + B * u + c; }
  bool operator==(const LinearDynamics&) const = default;
};

struct QuadraticCost {
  Mat Q;     // PSD
  Mat R;     // PD
  Vec goal;

  [[nodiscard]] double evaluate(const Vec& x, const Vec& u) const;
  /// Throws InvalidArgument when Q is not PSD or R not PD (eigenvalue tolerance `tol`).
  void validate(double tol = 1e-12) const;
};

/// The same cost repeated over `steps` steps; the last one scaled by `terminal_weight`.
std::vector<QuadraticCost> repeat_cost(const QuadraticCost& cost, int steps,
                                       double terminal_weight = 1.0);

/// Copy of `costs` with every goal replaced.
std::vector<QuadraticCost> with_goal(std::span<const QuadraticCost> costs, const Vec& goal);

struct ValueFunction {
  Mat Vxx;
  Vec Vx;
};

/// u = k + K x
struct ControlLaw {
  Mat K;
  Vec k;
  [[nodiscard]] Vec apply(const Vec& x) const { return k + K * x; }
};

struct LqrOptions {
  /// Tikhonov shift, relative to trace(Q_uu)/m. Applied only to steps whose
  /// smallest Q_uu eigenvalue falls below the shift.
  double relative_regularization = 1e-8;
};

struct LqrSolution {
  std::vector<ControlLaw> laws;       // s = 0..H
  std::vector<ValueFunction> values;  // s = 0..H
  std::vector<Mat> Quu;               // symmetrized, after regularization
  int regularized_steps = 0;
};

/// Dynamic-programming recursion for the problem above.
LqrSolution backward_pass(std::span<const LinearDynamics> models,
                          std::span<const QuadraticCost> costs, const LqrOptions& options = {});

struct Rollout {
  std::vector<Vec> states;    // x_0..x_{H+1}
  std::vector<Vec> controls;  // u_0..u_H
};

Rollout forward_rollout(const Vec& x0, std::span<const LinearDynamics> models,
                        std::span<const ControlLaw> laws);

/// Total cost of a rollout under `costs` (state x_{H+1} is not charged).
double rollout_cost(const Rollout& rollout, std::span<const QuadraticCost> costs);

/// d u_0 / d g for a goal g shared by all steps, given the solution of the
/// same problem. Gains do not depend on the goal, so this is a linear sweep
/// over the value-function gradients. Result is control_dim x state_dim.
Mat goal_jacobian(std::span<const LinearDynamics> models, std::span<const QuadraticCost> costs,
                  const LqrSolution& solution);

}  // namespace himpc
