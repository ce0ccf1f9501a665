#include "himpc/himpc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "himpc/plant.hpp"

namespace himpc {

namespace {

// Seed stream tags.
constexpr std::uint64_t kNetTag = 1;
constexpr std::uint64_t kBootstrapTag = 2;
constexpr std::uint64_t kGmmTag = 3;
constexpr std::uint64_t kRolloutTag = 4;
constexpr std::uint64_t kEvalTag = 5;

}  // namespace

QuadraticCost CostWeights::make(const Eigen::Vector2d& goal) const {
  QuadraticCost c;
  c.Q = Vec(Eigen::Vector4d(position, position, velocity, velocity)).asDiagonal();
  c.R = control * Mat::Identity(2, 2);
  c.goal = Vec::Zero(4);
  c.goal.head(2) = goal;
  c.validate();
  return c;
}

void HimpcConfig::validate(const env2d::EnvConfig& env) const {
  mpc.validate(env.episode_length);
  if (hindsight_horizon < 1) throw InvalidArgument("himpc: hindsight horizon must be >= 1");
  if (iterations < 0) throw InvalidArgument("himpc: iterations must be >= 0");
  if (rollouts_per_iteration < 1) throw InvalidArgument("himpc: rollouts must be >= 1");
  if (success_gate < 0) throw InvalidArgument("himpc: success gate must be >= 0");
  if (prior.components < 1) throw InvalidArgument("himpc: prior needs >= 1 component");
  if (!(noise_decay > 0.0)) throw InvalidArgument("himpc: noise_decay must be > 0");
  if (train.lambda < 0.0) throw InvalidArgument("himpc: lambda must be >= 0");
  if (train.stride < 1) throw InvalidArgument("himpc: stride must be >= 1");
  for (int h : hidden_layers) {
    if (h < 1) throw InvalidArgument("himpc: hidden layer sizes must be >= 1");
  }
  for (int i : shaping_inputs) {
    if (i < 0 || i >= 4) throw InvalidArgument("himpc: shaping input index out of range");
  }
}

EpisodeMetrics average_metrics(std::span<const RolloutRecord> rollouts) {
  EpisodeMetrics m;
  if (rollouts.empty()) return m;
  int wins = 0;
  for (const auto& r : rollouts) {
    m.cumulative_distance += r.metrics.cumulative_distance;
    m.min_distance += r.metrics.min_distance;
    m.final_distance += r.metrics.final_distance;
    wins += r.metrics.success ? 1 : 0;
  }
  const double n = static_cast<double>(rollouts.size());
  m.cumulative_distance /= n;
  m.min_distance /= n;
  m.final_distance /= n;
  m.success = 2 * wins > static_cast<int>(rollouts.size());
  return m;
}

HimpcRunner::HimpcRunner(env2d::EnvConfig env, HimpcConfig config)
    : env_(std::move(env)),
      config_(std::move(config)),
      cost_((env_.validate(), config_.validate(env_), config_.cost.make(env_.goal))),
      dataset_(cost_, config_.mpc.horizon, config_.mpc.terminal_weight, config_.mpc.lqr) {
  std::vector<int> sizes;
  sizes.push_back(config_.shaping_inputs.empty() ? 4
                                                 : static_cast<int>(config_.shaping_inputs.size()));
  sizes.insert(sizes.end(), config_.hidden_layers.begin(), config_.hidden_layers.end());
  sizes.push_back(4);
  net_ = ShapingNet::initialized(sizes, derive_seed(config_.seed, {kNetTag}),
                                 config_.shaping_inputs);
}

std::uint64_t HimpcRunner::rollout_seed(int iteration, int rollout) const {
  return derive_seed(config_.seed, {kRolloutTag, static_cast<std::uint64_t>(iteration),
                                    static_cast<std::uint64_t>(rollout)});
}

const GmmPrior& HimpcRunner::prior() const {
  if (!prior_) throw InvalidArgument("himpc: prior not fitted yet");
  return *prior_;
}

void HimpcRunner::bootstrap() {
  if (prior_) return;
  const Eigen::Vector2d start = config_.starts.empty() ? env_.start : config_.starts.front();
  ParticlePlant plant(env_, start);
  const auto obs = run_random_episode(plant, config_.prior.bootstrap_control_std,
                                      derive_seed(config_.seed, {kBootstrapTag}));
  observations_.insert(observations_.end(), obs.begin(), obs.end());
  refit_prior();
}

void HimpcRunner::refit_prior() {
  GmmFitOptions opts = config_.prior.fit;
  opts.seed = derive_seed(config_.seed, {kGmmTag, static_cast<std::uint64_t>(refits_++)});
  const int K = std::min<int>(config_.prior.components, static_cast<int>(observations_.size()));
  prior_ = fit_gmm(observations_, K, 6, opts).prior;
}

DynamicsContext HimpcRunner::dynamics_context() const {
  DynamicsContext ctx;
  ctx.prior = &prior();
  ctx.state_dim = 4;
  ctx.control_dim = 2;
  ctx.condition = config_.prior.condition;
  return ctx;
}

MpcConfig HimpcRunner::mpc_config(int iteration, std::uint64_t seed) const {
  MpcConfig m = config_.mpc;
  m.seed = seed;
  m.noise_scale *= std::pow(config_.noise_decay, iteration);
  return m;
}

RolloutRecord HimpcRunner::evaluate(const Eigen::Vector2d& start, std::uint64_t seed,
                                    bool use_shaping) const {
  RolloutRecord r;
  r.seed = seed;
  r.start = start;
  ParticlePlant plant(env_, start);
  const ShapingNet* net = (use_shaping && config_.learn) ? &net_ : nullptr;
  r.trajectory = run_episode(plant, dynamics_context(), cost_, net, mpc_config(iteration_, seed));
  r.metrics = compute_metrics(r.trajectory, config_.mpc.success_threshold);
  return r;
}

IterationRecord HimpcRunner::run_iteration() {
  bootstrap();
  IterationRecord rec;
  rec.iteration = iteration_;
  rec.theta = net_.params();
  for (int r = 0; r < config_.rollouts_per_iteration; ++r) {
    const Eigen::Vector2d start =
        config_.starts.empty() ? env_.start
                               : config_.starts[static_cast<std::size_t>(r) % config_.starts.size()];
    RolloutRecord roll = evaluate(start, rollout_seed(iteration_, r));
    const auto obs = roll.trajectory.observations();
    observations_.insert(observations_.end(), obs.begin(), obs.end());
    if (config_.prior.refresh) refit_prior();
    rec.rollouts.push_back(std::move(roll));
  }
  absorb(rec);

  if (config_.learn && successes_ >= config_.success_gate && !dataset_.empty()) {
    try {
      TrainResult res = optimize(net_, dataset_, config_.train);
      net_ = std::move(res.net);
      rec.trained = true;
      rec.loss_before = res.loss_before;
      rec.loss_after = res.loss_after;
      rec.training_trace = std::move(res.optimizer.trace);
      log(LogLevel::Info, "iteration " + std::to_string(rec.iteration) + ": loss " +
                              std::to_string(res.loss_before) + " -> " +
                              std::to_string(res.loss_after) + " (" +
                              to_string(res.optimizer.status) + ")");
    } catch (const Error& e) {
      log(LogLevel::Warn, std::string("training failed, keeping previous parameters: ") +
                              e.what());
    }
  }
  return rec;
}

void HimpcRunner::replay_iteration(IterationRecord record, const std::optional<Vec>& next_theta) {
  bootstrap();
  if (record.iteration != iteration_) {
    throw InvalidArgument("replay: expected iteration " + std::to_string(iteration_) + ", got " +
                          std::to_string(record.iteration));
  }
  for (const auto& roll : record.rollouts) {
    const auto obs = roll.trajectory.observations();
    observations_.insert(observations_.end(), obs.begin(), obs.end());
    if (config_.prior.refresh) refit_prior();
  }
  absorb(record);
  if (next_theta) net_.set_params(*next_theta);
}

void HimpcRunner::absorb(IterationRecord& rec) {
  HindsightOptions hopts;
  hopts.terminal_weight = config_.mpc.terminal_weight;
  hopts.lqr = config_.mpc.lqr;
  hopts.threads = config_.train.threads;
  for (auto& roll : rec.rollouts) {
    roll.metrics = compute_metrics(roll.trajectory, config_.mpc.success_threshold);
    if (roll.metrics.success) ++successes_;
    if (!config_.learn) continue;
    if (roll.hindsight.steps.empty()) {
      roll.hindsight =
          compute_hindsight_plan(roll.trajectory, config_.hindsight_horizon, cost_, hopts);
    }
    dataset_.add_episode(roll.trajectory, roll.hindsight, rec.iteration, config_.train.stride);
  }
  rec.mean = average_metrics(rec.rollouts);
  int wins = 0;
  for (const auto& r : rec.rollouts) wins += r.metrics.success ? 1 : 0;
  rec.success_rate = rec.rollouts.empty() ? 0.0 : static_cast<double>(wins) / rec.rollouts.size();
  rec.dataset_size = dataset_.size();
  ++iteration_;
}

std::vector<IterationRecord> run_himpc(const env2d::EnvConfig& env, const HimpcConfig& config) {
  HimpcRunner runner(env, config);
  std::vector<IterationRecord> out;
  for (int i = 0; i < config.iterations; ++i) out.push_back(runner.run_iteration());
  return out;
}

std::vector<Eigen::Vector2d> grid_positions(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                                            int n) {
  if (n < 1) throw InvalidArgument("grid_positions: n must be >= 1");
  std::vector<Eigen::Vector2d> out;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double fx = n == 1 ? 0.5 : static_cast<double>(i) / (n - 1);
      const double fy = n == 1 ? 0.5 : static_cast<double>(j) / (n - 1);
      out.emplace_back(lo.x() + fx * (hi.x() - lo.x()), lo.y() + fy * (hi.y() - lo.y()));
    }
  }
  return out;
}

namespace {

std::vector<SweepCell> evaluate_learner(HimpcRunner& runner, int hbar, const SweepOptions& opt,
                                        std::uint64_t seed) {
  std::vector<SweepCell> cells;
  for (std::size_t p = 0; p < opt.test_positions.size(); ++p) {
    SweepCell cell;
    cell.hbar = hbar;
    cell.position = opt.test_positions[p];
    for (int k = 0; k < opt.trials; ++k) {
      const auto s = derive_seed(seed, {kEvalTag, p, static_cast<std::uint64_t>(k)});
      cell.samples.push_back(runner.evaluate(cell.position, s).metrics.cumulative_distance);
    }
    const double n = static_cast<double>(cell.samples.size());
    for (double v : cell.samples) cell.mean += v / n;
    double var = 0.0;
    for (double v : cell.samples) var += (v - cell.mean) * (v - cell.mean);
    cell.stddev = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    cells.push_back(std::move(cell));
  }
  return cells;
}

}  // namespace

std::vector<SweepCell> sweep_hbar(const env2d::EnvConfig& env, const HimpcConfig& config,
                                  const SweepOptions& options) {
  if (options.hbar_values.empty()) throw InvalidArgument("sweep_hbar: no H_bar values");
  if (options.trials < 1) throw InvalidArgument("sweep_hbar: trials must be >= 1");
  if (options.test_positions.empty()) return {};

  HimpcConfig base = config;
  if (!options.train_positions.empty()) {
    base.starts = options.train_positions;
    base.rollouts_per_iteration = static_cast<int>(options.train_positions.size());
  }

  std::vector<SweepCell> table;
  auto train_and_eval = [&](HimpcConfig cfg, int hbar) {
    HimpcRunner runner(env, cfg);
    for (int i = 0; i < cfg.iterations; ++i) runner.run_iteration();
    runner.bootstrap();
    auto cells = evaluate_learner(runner, hbar, options, config.seed);
    table.insert(table.end(), cells.begin(), cells.end());
  };

  if (options.include_baseline) {
    HimpcConfig cfg = base;
    cfg.learn = false;
    train_and_eval(cfg, 0);
  }
  for (int hbar : options.hbar_values) {
    HimpcConfig cfg = base;
    cfg.hindsight_horizon = hbar;
    train_and_eval(cfg, hbar);
  }
  return table;
}

}  // namespace himpc
