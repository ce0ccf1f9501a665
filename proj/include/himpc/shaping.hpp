#pragma once

// Cost shaping through a learned goal offset.
//
// The shaping term g(x_t)^T Q x_s added to a quadratic goal cost is, up to a
// constant, the same cost centred at x* + g(x_t). g is an MLP of the current
// state only, so it stays fixed across the planning horizon and the planned
// action is an affine function of the shifted goal.

#include <cstdint>
#include <span>
#include <vector>

#include "himpc/common.hpp"
#include "himpc/lqr.hpp"

namespace himpc {

class ShapingNet {
 public:
  ShapingNet() = default;
  /// `layer_sizes` = {input, hidden..., output}. `input_indices` picks the
  /// network input out of the state vector; empty means the whole state.
  ShapingNet(std::vector<int> layer_sizes, std::vector<int> input_indices = {});

  /// Hidden layers ~ N(0, 1/fan_in), zero biases, zero output layer.
  static ShapingNet initialized(std::vector<int> layer_sizes, std::uint64_t seed,
                                std::vector<int> input_indices = {});

  [[nodiscard]] const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
  [[nodiscard]] const std::vector<int>& input_indices() const noexcept { return inputs_; }
  [[nodiscard]] int input_dim() const { return sizes_.front(); }
  [[nodiscard]] int output_dim() const { return sizes_.back(); }
  [[nodiscard]] int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  [[nodiscard]] Eigen::Index num_params() const noexcept { return params_.size(); }

  [[nodiscard]] const Vec& params() const noexcept { return params_; }
  void set_params(const Vec& theta);

  /// Layered views into the flat parameter vector. Layer l maps
  /// sizes[l] -> sizes[l+1]; weights are stored column-major.
  [[nodiscard]] Eigen::Map<const Mat> weight(int layer) const;
  [[nodiscard]] Eigen::Map<const Vec> bias(int layer) const;
  [[nodiscard]] Eigen::Map<Mat> weight(int layer);
  [[nodiscard]] Eigen::Map<Vec> bias(int layer);

  /// Network input for a full state vector.
  [[nodiscard]] Vec select_input(const Vec& state) const;

  /// g(x) for a full state vector.
  [[nodiscard]] Vec forward(const Vec& state) const;

  /// d g / d theta, output_dim x num_params.
  [[nodiscard]] Mat param_jacobian(const Vec& state) const;

  /// w^T (d g / d theta) for an output-space cotangent w.
  [[nodiscard]] Vec vector_jacobian(const Vec& state, const Vec& w) const;

  /// True when the output layer is all zeros (g == 0 everywhere).
  [[nodiscard]] bool output_layer_is_zero() const;

  bool operator==(const ShapingNet&) const = default;

 private:
  [[nodiscard]] Eigen::Index offset(int layer) const;
  void forward_cached(const Vec& input, std::vector<Vec>& activations) const;

  std::vector<int> sizes_;
  std::vector<int> inputs_;
  std::vector<Eigen::Index> offsets_;
  Vec params_;
};

/// x_hat* = x* + g(x_t)
Vec shaped_goal(const ShapingNet& net, const Vec& x_t, const Vec& goal);

struct ShapedAction {
  Vec u;              // first planned action under the shaped goal
  Mat goal_jacobian;  // du / d x_hat*, control_dim x state_dim
  Mat param_jacobian; // du / d theta, control_dim x num_params
};

/// Plans from x_t with the goal of every step shifted to x_hat*(x_t) and
/// differentiates the first action with respect to the network parameters.
ShapedAction action_and_jacobian(const Vec& x_t, std::span<const LinearDynamics> models,
                                 std::span<const QuadraticCost> costs, const ShapingNet& net,
                                 const LqrOptions& options = {});

}  // namespace himpc
