#include "himpc/plant.hpp"

#include <limits>
#include <utility>

namespace himpc {

ParticlePlant::ParticlePlant(env2d::EnvConfig config, std::optional<Eigen::Vector2d> start_override)
    : config_(std::move(config)), start_(start_override) {
  config_.validate();
}

Vec ParticlePlant::initial_state() const { return env2d::reset(config_, start_).packed(); }

Vec ParticlePlant::clip(const Vec& u) const {
  require_size(u.size(), 2, "ParticlePlant::clip");
  return env2d::clip_control(u, config_.control_limit);
}

Vec ParticlePlant::step(const Vec& x, const Vec& u) const {
  require_size(u.size(), 2, "ParticlePlant::step");
  return env2d::step(env2d::ParticleState::unpack(x), u, config_).packed();
}

LinearPlant::LinearPlant(Mat A, Mat B, Vec c, Vec x0, int episode_length, double control_limit)
    : A_(std::move(A)), B_(std::move(B)), c_(std::move(c)), x0_(std::move(x0)),
      T_(episode_length), limit_(control_limit) {
  require_size(A_.cols(), A_.rows(), "LinearPlant A");
  require_size(B_.rows(), A_.rows(), "LinearPlant B");
  require_size(c_.size(), A_.rows(), "LinearPlant c");
  require_size(x0_.size(), A_.rows(), "LinearPlant x0");
}

Vec LinearPlant::clip(const Vec& u) const { return u.cwiseMax(-limit_).cwiseMin(limit_); }

Vec LinearPlant::step(const Vec& x, const Vec& u) const { return A_ * x + B_ * clip(u) + c_; }

}  // namespace himpc
