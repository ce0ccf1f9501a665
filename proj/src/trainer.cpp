#include "himpc/trainer.hpp"

#include <algorithm>
#include <string>

namespace himpc {

TrainingDataset::TrainingDataset(QuadraticCost cost, int horizon, double terminal_weight,
                                 LqrOptions lqr)
    : cost_(std::move(cost)), horizon_(horizon), terminal_weight_(terminal_weight), lqr_(lqr) {
  cost_.validate();
  if (horizon_ < 0) throw InvalidArgument("TrainingDataset: horizon must be >= 0");
}

bool TrainingDataset::add(TrainingSample sample) {
  const auto n = cost_.goal.size();
  require_size(sample.state.size(), n, "training sample state");
  if (sample.models.size() != static_cast<std::size_t>(horizon_) + 1) {
    throw DimensionError("training sample: expected " + std::to_string(horizon_ + 1) +
                         " models, got " + std::to_string(sample.models.size()));
  }
  try {
    const auto costs = repeat_cost(cost_, horizon_ + 1, terminal_weight_);
    const LqrSolution sol = backward_pass(sample.models, costs, lqr_);
    sample.anchor_action = sol.laws.front().apply(sample.state);
    sample.goal_jacobian = goal_jacobian(sample.models, costs, sol);
  } catch (const NumericalError& e) {
    ++skipped_;
    log(LogLevel::Warn, std::string("skipping training sample (iteration ") +
                            std::to_string(sample.iteration) + "): " + e.what());
    return false;
  }
  const auto m = sample.anchor_action.size();
  require_size(sample.hindsight_action.size(), m, "hindsight action");
  require_size(sample.unshaped_action.size(), m, "unshaped action");
  samples_.push_back(std::move(sample));
  return true;
}

int TrainingDataset::add_episode(const TrajectoryInfo& info, const HindsightPlan& plan,
                                 int iteration, int stride) {
  if (stride < 1) throw InvalidArgument("add_episode: stride must be >= 1");
  if (plan.steps.size() != info.steps.size()) {
    throw DimensionError("add_episode: hindsight plan does not match the trajectory");
  }
  int added = 0;
  const int T = info.episode_length();
  for (int t = 0; t < T; t += stride) {
    const auto& rec = info.steps[static_cast<std::size_t>(t)];
    TrainingSample s;
    s.iteration = iteration;
    s.state = rec.state;
    s.models = rec.models;
    s.hindsight_action = plan.steps[static_cast<std::size_t>(t)].action;
    s.unshaped_action = rec.unshaped;
    if (add(std::move(s))) ++added;
  }
  return added;
}

TrainingDataset TrainingDataset::subset(int iteration) const {
  TrainingDataset out(cost_, horizon_, terminal_weight_, lqr_);
  for (const auto& s : samples_) {
    if (s.iteration == iteration) out.samples_.push_back(s);
  }
  return out;
}

namespace {

// Fixed partition of the samples; each chunk is summed sequentially and the
// chunks are then added in index order, so the result is independent of the
// thread count.
constexpr std::size_t kChunks = 64;

}  // namespace

LossValue similarity_loss(const ShapingNet& net, const Vec& theta, const TrainingDataset& data,
                          double lambda, int threads) {
  if (data.empty()) throw InvalidArgument("similarity_loss: empty dataset");
  if (lambda < 0.0) throw InvalidArgument("similarity_loss: lambda must be >= 0");
  ShapingNet model = net;
  model.set_params(theta);

  const auto& samples = data.samples();
  const std::size_t chunks = std::min(kChunks, samples.size());
  std::vector<double> losses(chunks, 0.0);
  std::vector<Vec> grads(chunks, Vec::Zero(theta.size()));

  parallel_for(
      chunks,
      [&](std::size_t c) {
        const std::size_t begin = c * samples.size() / chunks;
        const std::size_t end = (c + 1) * samples.size() / chunks;
        for (std::size_t i = begin; i < end; ++i) {
          const auto& s = samples[i];
          const Vec u = s.anchor_action + s.goal_jacobian * model.forward(s.state);
          const Vec r1 = u - s.hindsight_action;
          const Vec r2 = u - s.unshaped_action;
          losses[c] += r1.squaredNorm() + lambda * r2.squaredNorm();
          const Vec dldu = 2.0 * r1 + 2.0 * lambda * r2;
          grads[c] += model.vector_jacobian(s.state, s.goal_jacobian.transpose() * dldu);
        }
      },
      threads);

  LossValue out{0.0, Vec::Zero(theta.size())};
  for (std::size_t c = 0; c < chunks; ++c) {
    out.loss += losses[c];
    out.gradient += grads[c];
  }
  return out;
}

LossValue similarity_loss_direct(const ShapingNet& net, const Vec& theta,
                                 const TrainingDataset& data, double lambda) {
  if (data.empty()) throw InvalidArgument("similarity_loss: empty dataset");
  ShapingNet model = net;
  model.set_params(theta);
  const auto costs = repeat_cost(data.cost(), data.horizon() + 1, data.terminal_weight());
  LossValue out{0.0, Vec::Zero(theta.size())};
  for (const auto& s : data.samples()) {
    const ShapedAction a = action_and_jacobian(s.state, s.models, costs, model, data.lqr());
    const Vec r1 = a.u - s.hindsight_action;
    const Vec r2 = a.u - s.unshaped_action;
    out.loss += r1.squaredNorm() + lambda * r2.squaredNorm();
    out.gradient += a.param_jacobian.transpose() * (2.0 * r1 + 2.0 * lambda * r2);
  }
  return out;
}

TrainResult optimize(const ShapingNet& initial, const TrainingDataset& data,
                     const TrainConfig& config) {
  if (config.lambda < 0.0) throw InvalidArgument("TrainConfig: lambda must be >= 0");
  const Objective objective = [&](const Vec& theta, Vec& grad) {
    LossValue v = similarity_loss(initial, theta, data, config.lambda, config.threads);
    grad = std::move(v.gradient);
    return v.loss;
  };
  TrainResult out{initial, 0.0, 0.0, {}};
  Vec g0(initial.num_params());
  out.loss_before = objective(initial.params(), g0);
  if (!std::isfinite(out.loss_before) || !g0.allFinite()) {
    throw NumericalError("optimize: loss or gradient not finite at the initial parameters");
  }
  out.optimizer = lbfgs_minimize(objective, initial.params(), config.lbfgs);
  if (out.optimizer.f <= out.loss_before) {
    out.net.set_params(out.optimizer.x);
    out.loss_after = out.optimizer.f;
  } else {
    out.loss_after = out.loss_before;
  }
  return out;
}

}  // namespace himpc
