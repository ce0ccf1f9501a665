#include "himpc/hindsight.hpp"

#include <algorithm>
#include <string>

namespace himpc {

std::vector<Vec> HindsightPlan::actions() const {
  std::vector<Vec> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.action);
  return out;
}

std::vector<LinearDynamics> hindsight_models(const TrajectoryInfo& info, int t, int hbar) {
  const int T = info.episode_length();
  if (t < 0 || t > T) throw InvalidArgument("hindsight_models: t out of range");
  std::vector<LinearDynamics> models;
  models.reserve(static_cast<std::size_t>(hbar) + 1);
  for (int s = t; s <= t + hbar; ++s) {
    // Past the last step, fall back to what the final plan predicted for
    // s = T+1.., and stop where those predictions run out.
    const auto& rec = info.steps[static_cast<std::size_t>(std::min(s, T))];
    const auto idx = static_cast<std::size_t>(std::max(0, s - T));
    if (rec.models.empty()) {
      throw InvalidArgument("hindsight: no recorded model at t = " + std::to_string(std::min(s, T)));
    }
    if (idx >= rec.models.size()) break;
    models.push_back(rec.models[idx]);
  }
  return models;
}

HindsightPlan compute_hindsight_plan(const TrajectoryInfo& info, int hbar,
                                     const QuadraticCost& cost, const HindsightOptions& options) {
  if (hbar < 1) throw InvalidArgument("hindsight: H_bar must be >= 1");
  if (info.steps.empty()) throw InvalidArgument("hindsight: empty trajectory");
  HindsightPlan plan;
  plan.horizon = hbar;
  plan.steps.resize(info.steps.size());
  parallel_for(
      info.steps.size(),
      [&](std::size_t i) {
        const int t = static_cast<int>(i);
        const auto models = hindsight_models(info, t, hbar);
        const int h = static_cast<int>(models.size()) - 1;
        const auto costs = repeat_cost(cost, h + 1, options.terminal_weight);
        const Vec& x = info.steps[i].state;
        const LqrSolution sol = backward_pass(models, costs, options.lqr);
        HindsightStep& out = plan.steps[i];
        out.action = sol.laws.front().apply(x);
        out.effective_horizon = h;
        if (options.keep_planned_states) {
          out.planned_states = forward_rollout(x, models, sol.laws).states;
        }
      },
      options.threads);
  return plan;
}

}  // namespace himpc
