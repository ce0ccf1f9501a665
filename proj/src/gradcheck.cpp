#include "himpc/gradcheck.hpp"

#include <algorithm>
#include <random>

#include "himpc/common.hpp"
#include "himpc/lqr.hpp"
#include "himpc/mpc.hpp"
#include "himpc/shaping.hpp"
#include "himpc/trainer.hpp"

namespace himpc {
namespace {

struct Instance {
  std::vector<LinearDynamics> models;
  QuadraticCost cost;
  Vec x0;
  int horizon = 0;
};

Mat gaussian(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = n(rng);
  return m;
}

Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nx_d(2, 4), nu_d(1, 2), h_d(2, 6);
  Instance inst;
  const int nx = nx_d(rng);
  const int nu = nu_d(rng);
  inst.horizon = h_d(rng);
  for (int s = 0; s <= inst.horizon; ++s) {
    LinearDynamics f;
    f.A = Mat::Identity(nx, nx) + gaussian(nx, nx, rng, 0.2);
    f.B = gaussian(nx, nu, rng, 0.5);
    f.c = gaussian(nx, 1, rng, 0.1);
    f.W = Mat::Zero(nx, nx);
    inst.models.push_back(std::move(f));
  }
  const Mat L = gaussian(nx, nx, rng);
  inst.cost.Q = L * L.transpose() + 0.1 * Mat::Identity(nx, nx);
  const Mat M = gaussian(nu, nu, rng, 0.3);
  inst.cost.R = M * M.transpose() + 0.1 * Mat::Identity(nu, nu);
  inst.cost.goal = gaussian(nx, 1, rng);
  inst.x0 = gaussian(nx, 1, rng);
  return inst;
}

double relative_error(const Mat& analytic, const Mat& fd) {
  return (analytic - fd).norm() / std::max(fd.norm(), 1e-8);
}

ShapingNet random_net(int nx, std::mt19937_64& rng) {
  ShapingNet net({nx, 5, nx});
  net.set_params(gaussian(static_cast<int>(net.num_params()), 1, rng, 0.5));
  return net;
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  if (options.instances < 1) throw InvalidArgument("run_gradcheck: instances must be >= 1");
  if (!(options.step > 0.0)) throw InvalidArgument("run_gradcheck: step must be positive");
  std::mt19937_64 rng(options.seed);
  const double h = options.step;
  GradcheckReport report;
  report.instances = options.instances;

  for (int i = 0; i < options.instances; ++i) {
    const Instance inst = random_instance(rng);
    const int nx = static_cast<int>(inst.x0.size());
    const auto costs = repeat_cost(inst.cost, inst.horizon + 1);

    // du_0 / d x_hat*
    const LqrSolution sol = backward_pass(inst.models, costs);
    Mat J = goal_jacobian(inst.models, costs, sol);
    if (options.corrupt_goal_jacobian) J *= 1.01;
    Mat J_fd(J.rows(), nx);
    for (int j = 0; j < nx; ++j) {
      Vec gp = inst.cost.goal, gm = inst.cost.goal;
      gp(j) += h;
      gm(j) -= h;
      const Vec up = plan_step(inst.x0, inst.models, costs, gp).u;
      const Vec um = plan_step(inst.x0, inst.models, costs, gm).u;
      J_fd.col(j) = (up - um) / (2.0 * h);
    }
    report.goal_jacobian_error = std::max(report.goal_jacobian_error, relative_error(J, J_fd));

    // du_0 / d theta
    ShapingNet net = random_net(nx, rng);
    const Vec theta = net.params();
    Mat P = action_and_jacobian(inst.x0, inst.models, costs, net).param_jacobian;
    if (options.corrupt_goal_jacobian) P *= 1.01;
    Mat P_fd(P.rows(), P.cols());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      Vec tp = theta, tm = theta;
      tp(j) += h;
      tm(j) -= h;
      net.set_params(tp);
      const Vec up = action_and_jacobian(inst.x0, inst.models, costs, net).u;
      net.set_params(tm);
      const Vec um = action_and_jacobian(inst.x0, inst.models, costs, net).u;
      P_fd.col(j) = (up - um) / (2.0 * h);
    }
    net.set_params(theta);
    report.param_jacobian_error = std::max(report.param_jacobian_error, relative_error(P, P_fd));

    // dL / d theta on a small dataset sharing the models.
    TrainingDataset data(inst.cost, inst.horizon);
    const int nu = inst.models.front().control_dim();
    for (int k = 0; k < 3; ++k) {
      TrainingSample s;
      s.state = gaussian(nx, 1, rng);
      s.models = inst.models;
      s.hindsight_action = gaussian(nu, 1, rng);
      s.unshaped_action = gaussian(nu, 1, rng);
      data.add(std::move(s));
    }
    const double lambda = 0.1;
    Vec g = similarity_loss(net, theta, data, lambda, 1).gradient;
    Vec g_fd(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      Vec tp = theta, tm = theta;
      tp(j) += h;
      tm(j) -= h;
      g_fd(j) = (similarity_loss(net, tp, data, lambda, 1).loss -
                 similarity_loss(net, tm, data, lambda, 1).loss) /
                (2.0 * h);
    }
    report.loss_gradient_error = std::max(report.loss_gradient_error, relative_error(g, g_fd));
  }
  return report;
}

}  // namespace himpc
