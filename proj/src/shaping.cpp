#include "himpc/shaping.hpp"

#include <cmath>
#include <random>
#include <string>

namespace himpc {

ShapingNet::ShapingNet(std::vector<int> layer_sizes, std::vector<int> input_indices)
    : sizes_(std::move(layer_sizes)), inputs_(std::move(input_indices)) {
  if (sizes_.size() < 2) throw InvalidArgument("ShapingNet: need at least input and output sizes");
  for (int s : sizes_) {
    if (s < 1) throw InvalidArgument("ShapingNet: layer sizes must be >= 1");
  }
  if (!inputs_.empty() && static_cast<int>(inputs_.size()) != sizes_.front()) {
    throw DimensionError("ShapingNet: input_indices length must equal the input size");
  }
  Eigen::Index total = 0;
  for (int l = 0; l + 1 < static_cast<int>(sizes_.size()); ++l) {
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  offsets_.push_back(total);
  params_ = Vec::Zero(total);
}

ShapingNet ShapingNet::initialized(std::vector<int> layer_sizes, std::uint64_t seed,
                                   std::vector<int> input_indices) {
  ShapingNet net(std::move(layer_sizes), std::move(input_indices));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l + 1 < net.num_layers(); ++l) {
    auto W = net.weight(l);
    const double scale = 1.0 / std::sqrt(static_cast<double>(W.cols()));
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = scale * normal(rng);
    }
  }
  return net;
}

Eigen::Index ShapingNet::offset(int layer) const {
  return offsets_[static_cast<std::size_t>(layer)];
}

void ShapingNet::set_params(const Vec& theta) {
  require_size(theta.size(), params_.size(), "ShapingNet::set_params");
  params_ = theta;
}

Eigen::Map<const Mat> ShapingNet::weight(int l) const {
  const auto ls = static_cast<std::size_t>(l);
  return {params_.data() + offset(l), sizes_[ls + 1], sizes_[ls]};
}
Eigen::Map<const Vec> ShapingNet::bias(int l) const {
  const auto ls = static_cast<std::size_t>(l);
  return {params_.data() + offset(l) + static_cast<Eigen::Index>(sizes_[ls + 1]) * sizes_[ls],
          sizes_[ls + 1]};
}
Eigen::Map<Mat> ShapingNet::weight(int l) {
  const auto ls = static_cast<std::size_t>(l);
  return {params_.data() + offset(l), sizes_[ls + 1], sizes_[ls]};
}
Eigen::Map<Vec> ShapingNet::bias(int l) {
  const auto ls = static_cast<std::size_t>(l);
  return {params_.data() + offset(l) + static_cast<Eigen::Index>(sizes_[ls + 1]) * sizes_[ls],
          sizes_[ls + 1]};
}

Vec ShapingNet::select_input(const Vec& state) const {
  if (inputs_.empty()) {
    require_size(state.size(), input_dim(), "ShapingNet input");
    return state;
  }
  Vec in(input_dim());
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    const int idx = inputs_[i];
    if (idx < 0 || idx >= state.size()) throw DimensionError("ShapingNet: input index out of range");
    in[static_cast<Eigen::Index>(i)] = state[idx];
  }
  return in;
}

void ShapingNet::forward_cached(const Vec& input, std::vector<Vec>& a) const {
  a.resize(sizes_.size());
  a[0] = input;
  for (int l = 0; l < num_layers(); ++l) {
    const auto ls = static_cast<std::size_t>(l);
    Vec z = weight(l) * a[ls] + bias(l);
    if (l + 1 < num_layers()) z = z.array().tanh();
    a[ls + 1] = std::move(z);
  }
}

Vec ShapingNet::forward(const Vec& state) const {
  std::vector<Vec> a;
  forward_cached(select_input(state), a);
  return a.back();
}

Vec ShapingNet::vector_jacobian(const Vec& state, const Vec& w) const {
  require_size(w.size(), output_dim(), "ShapingNet::vector_jacobian");
  std::vector<Vec> a;
  forward_cached(select_input(state), a);
  Vec grad = Vec::Zero(params_.size());
  Vec delta = w;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const auto ls = static_cast<std::size_t>(l);
    const auto rows = sizes_[ls + 1];
    const auto cols = sizes_[ls];
    Eigen::Map<Mat>(grad.data() + offset(l), rows, cols).noalias() = delta * a[ls].transpose();
    grad.segment(offset(l) + static_cast<Eigen::Index>(rows) * cols, rows) = delta;
    if (l > 0) {
      delta = (weight(l).transpose() * delta).cwiseProduct(
          (1.0 - a[ls].array().square()).matrix());
    }
  }
  return grad;
}

Mat ShapingNet::param_jacobian(const Vec& state) const {
  Mat J(output_dim(), params_.size());
  for (int i = 0; i < output_dim(); ++i) {
    J.row(i) = vector_jacobian(state, Vec::Unit(output_dim(), i)).transpose();
  }
  return J;
}

bool ShapingNet::output_layer_is_zero() const {
  const int last = num_layers() - 1;
  return weight(last).isZero(0.0) && bias(last).isZero(0.0);
}

Vec shaped_goal(const ShapingNet& net, const Vec& x_t, const Vec& goal) {
  Vec g = net.forward(x_t);
  require_size(g.size(), goal.size(), "shaped_goal");
  return goal + g;
}

ShapedAction action_and_jacobian(const Vec& x_t, std::span<const LinearDynamics> models,
                                 std::span<const QuadraticCost> costs, const ShapingNet& net,
                                 const LqrOptions& options) {
  if (costs.empty()) throw InvalidArgument("action_and_jacobian: empty horizon");
  const Vec goal = shaped_goal(net, x_t, costs.front().goal);
  const auto shaped = with_goal(costs, goal);
  const LqrSolution sol = backward_pass(models, shaped, options);
  ShapedAction out;
  out.u = sol.laws.front().apply(x_t);
  out.goal_jacobian = goal_jacobian(models, shaped, sol);
  out.param_jacobian = out.goal_jacobian * net.param_jacobian(x_t);
  return out;
}

}  // namespace himpc
