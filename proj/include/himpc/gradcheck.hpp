#pragma once

// Central finite-difference checks of the analytic derivatives used in
// training: the goal Jacobian of the first planned action, the action
// Jacobian with respect to the network parameters, and the loss gradient.

#include <cstdint>

namespace himpc {

struct GradcheckOptions {
  int instances = 50;
  std::uint64_t seed = 0;
  double step = 1e-5;
  /// Negative control: perturbs the analytic goal Jacobian by 1%.
  bool corrupt_goal_jacobian = false;
};

/// Largest relative errors |analytic - fd| / max(|fd|, 1e-8) (Frobenius
/// norms) over all instances.
struct GradcheckReport {
  int instances = 0;
  double goal_jacobian_error = 0.0;  // du_0 / d x_hat*
  double param_jacobian_error = 0.0; // du_0 / d theta
  double loss_gradient_error = 0.0;  // dL / d theta

  static constexpr double kGoalTolerance = 1e-6;
  static constexpr double kParamTolerance = 1e-4;

  [[nodiscard]] bool passed() const {
    return goal_jacobian_error < kGoalTolerance && param_jacobian_error < kParamTolerance &&
           loss_gradient_error < kParamTolerance;
  }
};

GradcheckReport run_gradcheck(const GradcheckOptions& options = {});

}  // namespace himpc
