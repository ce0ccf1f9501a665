#include "himpc/ilqg.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace himpc {

Vec TimeVaryingPolicy::apply(int t, const Vec& x) const {
  if (t < 0 || t >= length()) throw InvalidArgument("TimeVaryingPolicy: step out of range");
  return laws[static_cast<std::size_t>(t)].apply(x);
}

TimeVaryingPolicy TimeVaryingPolicy::zeros(int T, int state_dim, int control_dim) {
  if (T < 0) throw InvalidArgument("TimeVaryingPolicy::zeros: negative length");
  TimeVaryingPolicy p;
  p.laws.assign(static_cast<std::size_t>(T),
                ControlLaw{Mat::Zero(control_dim, state_dim), Vec::Zero(control_dim)});
  return p;
}

SampleTrajectory simulate(const Plant& plant, const TimeVaryingPolicy& policy, double noise_std,
                          std::mt19937_64* rng) {
  const int T = plant.episode_length();
  if (policy.length() != T) {
    throw DimensionError("simulate: policy length " + std::to_string(policy.length()) +
                         " != episode length " + std::to_string(T));
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  SampleTrajectory out;
  out.states.reserve(static_cast<std::size_t>(T) + 1);
  out.controls.reserve(static_cast<std::size_t>(T));
  Vec x = plant.initial_state();
  out.states.push_back(x);
  for (int t = 0; t < T; ++t) {
    Vec u = policy.apply(t, x);
    if (rng != nullptr && noise_std > 0.0) {
      for (Eigen::Index i = 0; i < u.size(); ++i) u(i) += noise_std * normal(*rng);
    }
    u = plant.clip(u);
    x = plant.step(x, u);
    out.controls.push_back(u);
    out.states.push_back(x);
  }
  return out;
}

double trajectory_cost(const SampleTrajectory& trajectory, const QuadraticCost& cost) {
  double total = 0.0;
  for (std::size_t t = 0; t < trajectory.controls.size(); ++t) {
    total += cost.evaluate(trajectory.states[t], trajectory.controls[t]);
  }
  return total;
}

std::vector<LinearDynamics> fit_time_varying_models(std::span<const SampleTrajectory> samples,
                                                    int window) {
  if (samples.empty()) throw InvalidArgument("fit_time_varying_models: no trajectories");
  if (window < 0) throw InvalidArgument("fit_time_varying_models: negative window");
  const auto T = samples.front().controls.size();
  if (T == 0) throw InvalidArgument("fit_time_varying_models: empty trajectories");
  const auto nx = samples.front().states.front().size();
  const auto nu = samples.front().controls.front().size();
  for (const auto& s : samples) {
    if (s.controls.size() != T || s.states.size() != T + 1) {
      throw DimensionError("fit_time_varying_models: trajectories differ in length");
    }
  }
  const Eigen::Index cols = nx + nu + 1;

  std::vector<LinearDynamics> models;
  models.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t lo = t >= static_cast<std::size_t>(window) ? t - window : 0;
    const std::size_t hi = std::min(T - 1, t + static_cast<std::size_t>(window));
    const auto rows = static_cast<Eigen::Index>((hi - lo + 1) * samples.size());
    Mat X(rows, cols);
    Mat Y(rows, nx);
    Eigen::Index r = 0;
    for (const auto& s : samples) {
      for (std::size_t j = lo; j <= hi; ++j, ++r) {
        X.row(r) << s.states[j].transpose(), s.controls[j].transpose(), 1.0;
        Y.row(r) = s.states[j + 1].transpose();
      }
    }
    if (rows < cols) {
      throw NumericalError("fit_time_varying_models: step " + std::to_string(t) + " has " +
                               std::to_string(rows) + " samples for " + std::to_string(cols) +
                               " coefficients; sample more rollouts or widen the window",
                           static_cast<int>(t));
    }
    // Saturated or noise-free controls leave collinear regressors; the
    // minimum-norm solution then assigns no effect to unexcited directions.
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(X);
    if (cod.rank() < cols) {
      log(LogLevel::Debug, "fit_time_varying_models: step " + std::to_string(t) + " rank " +
                               std::to_string(cod.rank()) + " < " + std::to_string(cols));
    }
    const Mat coef = cod.solve(Y).transpose();  // nx x cols
    LinearDynamics f;
    f.A = coef.leftCols(nx);
    f.B = coef.middleCols(nx, nu);
    f.c = coef.col(cols - 1);
    const Mat resid = Y - X * coef.transpose();
    const double dof = std::max<double>(1.0, static_cast<double>(rows - cols));
    f.W = symmetrized(resid.transpose() * resid / dof);
    models.push_back(std::move(f));
  }
  return models;
}

namespace {

/// Model-predicted cost of running `policy` from x0 through `models`.
double model_cost(const Vec& x0, std::span<const LinearDynamics> models,
                  const TimeVaryingPolicy& policy, const QuadraticCost& cost) {
  Vec x = x0;
  double total = 0.0;
  for (std::size_t t = 0; t < models.size(); ++t) {
    const Vec u = policy.laws[t].apply(x);
    total += cost.evaluate(x, u);
    x = models[t].predict(x, u);
  }
  return total;
}

/// u = u_bar + alpha (k + K x_bar - u_bar) + K (x - x_bar), in u = k' + K x form.
TimeVaryingPolicy blend(const LqrSolution& sol, const SampleTrajectory& nominal, double alpha) {
  TimeVaryingPolicy p;
  p.laws.reserve(sol.laws.size());
  for (std::size_t t = 0; t < sol.laws.size(); ++t) {
    const auto& law = sol.laws[t];
    const Vec& xb = nominal.states[t];
    const Vec& ub = nominal.controls[t];
    const Vec delta = law.k + law.K * xb - ub;
    p.laws.push_back(ControlLaw{law.K, ub + alpha * delta - law.K * xb});
  }
  return p;
}

}  // namespace

IlqgSolver::IlqgSolver(const Plant& plant, QuadraticCost cost, IlqgOptions options,
                       TimeVaryingPolicy initial)
    : plant_(plant),
      cost_fn_(std::move(cost)),
      options_(std::move(options)),
      policy_(std::move(initial)),
      rng_(options_.seed) {
  if (options_.rollouts < 1) throw InvalidArgument("IlqgSolver: rollouts must be >= 1");
  if (options_.iterations < 0) throw InvalidArgument("IlqgSolver: iterations must be >= 0");
  if (options_.noise_std < 0.0) throw InvalidArgument("IlqgSolver: noise_std must be >= 0");
  cost_fn_.validate();
  if (policy_.laws.empty()) {
    policy_ = TimeVaryingPolicy::zeros(plant.episode_length(), plant.state_dim(),
                                       plant.control_dim());
  }
  nominal_ = simulate(plant_, policy_);
  cost_ = trajectory_cost(nominal_, cost_fn_);
}

IlqgIteration IlqgSolver::step() {
  IlqgIteration rec;
  rec.iteration = done_++;
  rec.cost_before = cost_;
  rec.cost_after = cost_;
  rec.samples.reserve(static_cast<std::size_t>(options_.rollouts));
  for (int i = 0; i < options_.rollouts; ++i) {
    rec.samples.push_back(simulate(plant_, policy_, options_.noise_std, &rng_));
  }

  const auto models = fit_time_varying_models(rec.samples, options_.window);
  const auto costs = repeat_cost(cost_fn_, static_cast<int>(models.size()));
  const LqrSolution sol = backward_pass(models, costs, options_.lqr);

  const Vec& x0 = nominal_.states.front();
  const double current_model_cost = model_cost(x0, models, policy_, cost_fn_);
  for (double alpha : options_.step_sizes) {
    TimeVaryingPolicy candidate = blend(sol, nominal_, alpha);
    if (!(model_cost(x0, models, candidate, cost_fn_) < current_model_cost)) continue;
    SampleTrajectory traj = simulate(plant_, candidate);
    const double true_cost = trajectory_cost(traj, cost_fn_);
    if (std::isfinite(true_cost) && true_cost <= cost_) {
      policy_ = std::move(candidate);
      nominal_ = std::move(traj);
      cost_ = true_cost;
      rec.accepted = true;
      rec.step_size = alpha;
      rec.cost_after = cost_;
      break;
    }
  }
  return rec;
}

IlqgResult solve_ilqg_full_horizon(const Plant& plant, const QuadraticCost& cost,
                                   const IlqgOptions& options, TimeVaryingPolicy initial) {
  IlqgSolver solver(plant, cost, options, std::move(initial));
  IlqgResult result;
  for (int i = 0; i < options.iterations; ++i) result.iterations.push_back(solver.step());
  result.policy = solver.policy();
  result.nominal = solver.nominal();
  return result;
}

}  // namespace himpc
