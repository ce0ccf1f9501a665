#pragma once

// Offline re-planning of every step of a finished episode with a longer
// horizon, using the one-step models that were estimated online at the
// respective future steps (model of step s taken from the plan made at s).

#include <vector>

#include "himpc/common.hpp"
#include "himpc/lqr.hpp"
#include "himpc/mpc.hpp"

namespace himpc {

struct HindsightStep {
  Vec action;               // u_bar_t
  int effective_horizon = 0;
  std::vector<Vec> planned_states;  // diagnostics; empty unless requested
};

struct HindsightPlan {
  int horizon = 0;  // requested H_bar
  std::vector<HindsightStep> steps;

  [[nodiscard]] std::vector<Vec> actions() const;
};

struct HindsightOptions {
  bool keep_planned_states = false;
  double terminal_weight = 1.0;
  LqrOptions lqr;
  int threads = 0;
};

/// Model sequence f_t^t, f_{t+1}^{t+1}, ..., f_{t+hbar}^{t+hbar}. Steps past
/// the episode end T use the final plan's predictions f_{T+i}^T; the sequence
/// is truncated where those run out.
std::vector<LinearDynamics> hindsight_models(const TrajectoryInfo& info, int t, int hbar);

/// Solves, for each t, the H_bar-step problem from x_t under the original
/// cost. Results do not depend on evaluation order.
HindsightPlan compute_hindsight_plan(const TrajectoryInfo& info, int hbar,
                                     const QuadraticCost& cost,
                                     const HindsightOptions& options = {});

}  // namespace himpc
