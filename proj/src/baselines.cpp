#include "himpc/baselines.hpp"

#include "himpc/plant.hpp"

namespace himpc {

EpisodeMetrics ilqg_metrics(const SampleTrajectory& rollout, const Vec& goal_position,
                            double success_threshold) {
  return compute_metrics(rollout.states, goal_position, success_threshold);
}

std::vector<IlqgRunRecord> run_ilqg_experiment(const env2d::EnvConfig& env,
                                               const QuadraticCost& cost,
                                               const IlqgExperimentConfig& config) {
  env.validate();
  const ParticlePlant plant(env);
  IlqgSolver solver(plant, cost, config.solver);
  const Vec goal = env.goal;

  std::vector<IlqgRunRecord> records;
  records.reserve(static_cast<std::size_t>(config.solver.iterations));
  for (int i = 0; i < config.solver.iterations; ++i) {
    IlqgIteration it = solver.step();
    IlqgRunRecord rec;
    rec.iteration = it.iteration;
    rec.cost_before = it.cost_before;
    rec.cost_after = it.cost_after;
    rec.accepted = it.accepted;
    rec.step_size = it.step_size;
    int wins = 0;
    for (const auto& r : it.samples) {
      rec.metrics.push_back(ilqg_metrics(r, goal, config.success_threshold));
      const auto& m = rec.metrics.back();
      rec.mean.cumulative_distance += m.cumulative_distance;
      rec.mean.min_distance += m.min_distance;
      rec.mean.final_distance += m.final_distance;
      wins += m.success ? 1 : 0;
    }
    const double n = static_cast<double>(it.samples.size());
    rec.mean.cumulative_distance /= n;
    rec.mean.min_distance /= n;
    rec.mean.final_distance /= n;
    rec.mean.success = 2 * wins > static_cast<int>(it.samples.size());
    rec.rollouts = std::move(it.samples);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace himpc
