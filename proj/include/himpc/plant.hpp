#pragma once

#include <limits>
#include <memory>
#include <optional>

#include "himpc/common.hpp"
#include "himpc/env2d.hpp"

namespace himpc {

/// The true system the controller acts on, seen through packed vectors.
class Plant {
 public:
  virtual ~Plant() = default;
  [[nodiscard]] virtual int state_dim() const = 0;
  [[nodiscard]] virtual int control_dim() const = 0;
  [[nodiscard]] virtual Vec initial_state() const = 0;
  /// Control actually applied for a commanded control (saturation).
  [[nodiscard]] virtual Vec clip(const Vec& u) const = 0;
  [[nodiscard]] virtual Vec step(const Vec& x, const Vec& u) const = 0;
  [[nodiscard]] virtual int episode_length() const = 0;
};

class ParticlePlant final : public Plant {
 public:
  explicit ParticlePlant(env2d::EnvConfig config,
                         std::optional<Eigen::Vector2d> start_override = std::nullopt);

  [[nodiscard]] int state_dim() const override { return 4; }
  [[nodiscard]] int control_dim() const override { return 2; }
  [[nodiscard]] Vec initial_state() const override;
  [[nodiscard]] Vec clip(const Vec& u) const override;
  [[nodiscard]] Vec step(const Vec& x, const Vec& u) const override;
  [[nodiscard]] int episode_length() const override { return config_.episode_length; }
  [[nodiscard]] const env2d::EnvConfig& config() const noexcept { return config_; }

 private:
  env2d::EnvConfig config_;
  std::optional<Eigen::Vector2d> start_;
};

/// x' = A x + B clip(u) + c. Used for oracle tests.
class LinearPlant final : public Plant {
 public:
  LinearPlant(Mat A, Mat B, Vec c, Vec x0, int episode_length,
              double control_limit = std::numeric_limits<double>::infinity());

  [[nodiscard]] int state_dim() const override { return static_cast<int>(A_.rows()); }
  [[nodiscard]] int control_dim() const override { return static_cast<int>(B_.cols()); }
  [[nodiscard]] Vec initial_state() const override { return x0_; }
  [[nodiscard]] Vec clip(const Vec& u) const override;
  [[nodiscard]] Vec step(const Vec& x, const Vec& u) const override;
  [[nodiscard]] int episode_length() const override { return T_; }

 private:
  Mat A_, B_;
  Vec c_, x0_;
  int T_;
  double limit_;
};

}  // namespace himpc
