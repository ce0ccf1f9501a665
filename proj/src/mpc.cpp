#include "himpc/mpc.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <limits>

namespace himpc {

void MpcConfig::validate(int episode_length) const {
  if (horizon < 1 || horizon > episode_length) {
    throw InvalidArgument("mpc: horizon must satisfy 1 <= H <= T");
  }
  if (noise_scale < 0.0) throw InvalidArgument("mpc: noise_scale must be >= 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("mpc: beta must be in [0, 1]");
  if (convergence_window < 1) throw InvalidArgument("mpc: convergence_window must be >= 1");
}

std::vector<Vec> TrajectoryInfo::states() const {
  std::vector<Vec> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.state);
  return out;
}

std::vector<Vec> TrajectoryInfo::observations() const {
  std::vector<Vec> out;
  for (std::size_t t = 0; t + 1 < steps.size(); ++t) {
    out.push_back(make_observation(steps[t].state, steps[t].applied, steps[t + 1].state));
  }
  return out;
}

PlanResult plan_step(const Vec& x_t, std::span<const LinearDynamics> models,
                     std::span<const QuadraticCost> costs, const std::optional<Vec>& shaped_goal,
                     const LqrOptions& options) {
  PlanResult r;
  if (shaped_goal) {
    const auto shaped = with_goal(costs, *shaped_goal);
    r.solution = backward_pass(models, shaped, options);
  } else {
    r.solution = backward_pass(models, costs, options);
  }
  r.u = r.solution.laws.front().apply(x_t);
  return r;
}

Vec sample_exploration_noise(const Mat& Quu, double noise_scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec xi(Quu.rows());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);
  if (noise_scale == 0.0) return Vec::Zero(Quu.rows());
  // Quu = L L^T  =>  L^{-T} xi ~ N(0, Quu^{-1})
  Eigen::LLT<Mat> llt(Quu);
  if (llt.info() != Eigen::Success) throw NumericalError("exploration noise: Q_uu not PD");
  return noise_scale * llt.matrixU().solve(xi);
}

TrajectoryInfo run_episode(const Plant& plant, const DynamicsContext& dynamics,
                           const QuadraticCost& cost, const ShapingNet* net,
                           const MpcConfig& config) {
  const int T = plant.episode_length();
  config.validate(T);
  const int nx = plant.state_dim();
  const int nu = plant.control_dim();
  require_size(dynamics.state_dim, nx, "run_episode state dim");
  require_size(dynamics.control_dim, nu, "run_episode control dim");
  cost.validate();

  const auto costs = repeat_cost(cost, config.horizon + 1, config.terminal_weight);
  std::mt19937_64 rng(config.seed);
  MovingStats stats(2 * nx + nu, config.beta);

  TrajectoryInfo info;
  info.horizon = config.horizon;
  info.goal = cost.goal;
  info.steps.reserve(static_cast<std::size_t>(T) + 1);

  bool shaping = net != nullptr && config.shaping_enabled;
  int converged_steps = 0;
  std::vector<ControlLaw> previous_laws;
  Vec x = plant.initial_state();

  for (int t = 0; t <= T; ++t) {
    StepRecord rec;
    rec.state = x;
    rec.models = predict_horizon(stats, dynamics, x, previous_laws, config.horizon);

    PlanResult unshaped = plan_step(x, rec.models, costs, std::nullopt, config.lqr);
    rec.unshaped = unshaped.u;
    rec.shaped_goal = cost.goal;

    if (shaping) {
      const Vec goal_hat = shaped_goal(*net, x, cost.goal);
      const double to_shaped = (x - goal_hat).norm();
      const auto pd = std::min(config.position_dims, nx);
      const double to_goal = (x.head(pd) - cost.goal.head(pd)).norm();
      converged_steps = (to_shaped < config.convergence_threshold &&
                         to_goal > config.success_threshold)
                            ? converged_steps + 1
                            : 0;
      if (converged_steps >= config.convergence_window) shaping = false;
      if (shaping) rec.shaped_goal = goal_hat;
    }
    rec.shaping_active = shaping;

    PlanResult executed =
        shaping ? plan_step(x, rec.models, costs, rec.shaped_goal, config.lqr) : std::move(unshaped);
    rec.planned = executed.u;
    rec.noise = sample_exploration_noise(executed.solution.Quu.front(), config.noise_scale, rng);
    rec.control = rec.planned + rec.noise;
    rec.applied = plant.clip(rec.control);
    rec.cost = cost.evaluate(x, rec.control);
    {
      const Vec e_shaped = x - rec.shaped_goal;
      const Vec e = x - cost.goal;
      rec.shaped_delta = e_shaped.dot(cost.Q * e_shaped) - e.dot(cost.Q * e);
    }

    if (t < T) {
      Vec next = plant.step(x, rec.control);
      stats.update(make_observation(x, rec.applied, next));
      x = std::move(next);
      previous_laws = std::move(executed.solution.laws);
    }
    info.steps.push_back(std::move(rec));
  }
  return info;
}

std::vector<Vec> run_random_episode(const Plant& plant, double control_std, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, control_std);
  std::vector<Vec> observations;
  Vec x = plant.initial_state();
  for (int t = 0; t < plant.episode_length(); ++t) {
    Vec u(plant.control_dim());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = normal(rng);
    const Vec applied = plant.clip(u);
    Vec next = plant.step(x, u);
    observations.push_back(make_observation(x, applied, next));
    x = std::move(next);
  }
  return observations;
}

EpisodeMetrics compute_metrics(std::span<const Vec> states, const Vec& goal_position,
                               double success_threshold) {
  EpisodeMetrics m;
  if (states.empty()) return m;
  m.min_distance = std::numeric_limits<double>::infinity();
  const auto d = goal_position.size();
  for (const auto& x : states) {
    const double dist = (x.head(d) - goal_position).norm();
    m.cumulative_distance += dist;
    m.min_distance = std::min(m.min_distance, dist);
  }
  m.final_distance = (states.back().head(d) - goal_position).norm();
  m.success = m.final_distance < success_threshold;
  return m;
}

EpisodeMetrics compute_metrics(const TrajectoryInfo& info, double success_threshold,
                               int position_dims) {
  const auto states = info.states();
  return compute_metrics(states, info.goal.head(position_dims), success_threshold);
}

}  // namespace himpc
