#pragma once

// Online dynamics estimation: within-episode moving statistics of
// observations p_t = [x_{t-1}; u_{t-1}; x_t], blended with a GMM prior and
// conditioned into an affine one-step model.

#include <optional>
#include <span>
#include <vector>

#include "himpc/common.hpp"
#include "himpc/gmm.hpp"
#include "himpc/lqr.hpp"

namespace himpc {

/// Builds the observation vector [x_prev; u_prev; x_next].
Vec make_observation(const Vec& x_prev, const Vec& u_prev, const Vec& x_next);

/// Exponential moving first and second moments.
///
///   mean   <- beta * mean   + (1 - beta) * p
///   second <- beta * second + (1 - beta) * p p^T
///
/// Both start at zero, so after n updates the weights sum to 1 - beta^n;
/// normalized_mean()/covariance() divide that out.
class MovingStats {
 public:
  MovingStats(int dim, double beta);

  [[nodiscard]] int dim() const noexcept { return static_cast<int>(mean_.size()); }
  [[nodiscard]] double beta() const noexcept { return beta_; }
  [[nodiscard]] int count() const noexcept { return count_; }
  [[nodiscard]] const Vec& mean() const noexcept { return mean_; }
  [[nodiscard]] const Mat& second_moment() const noexcept { return second_; }

  /// sum_{i<count} beta^i
  [[nodiscard]] double effective_count() const noexcept { return effective_count_; }
  /// 1 - beta^count; zero when nothing has been absorbed.
  [[nodiscard]] double total_weight() const noexcept { return total_weight_; }

  [[nodiscard]] Vec normalized_mean() const;
  /// E[p p^T] - E[p] E[p]^T under the normalized weights.
  [[nodiscard]] Mat covariance() const;

  void update(const Vec& observation);

 private:
  double beta_;
  Vec mean_;
  Mat second_;
  int count_ = 0;
  double effective_count_ = 0.0;
  double total_weight_ = 0.0;
};

/// Returns the updated statistics (value semantics; `stats` is untouched).
MovingStats update_stats(MovingStats stats, const Vec& observation);

struct MixCoefficients {
  double a1 = 0.0;  // weight of the empirical mean
  double a2 = 1.0;  // weight of the prior covariance
  double a3 = 0.0;  // weight of the empirical covariance
  double a4 = 0.0;  // weight of the mean-disagreement term

  /// n = effective empirical count, n_p = prior pseudo-count.
  static MixCoefficients from_counts(double n, double n_p);
};

struct ConditionOptions {
  /// Added to the conditioning block only when it is too ill-conditioned to factor.
  double ridge = 1e-6;
};

/// Blends empirical and prior moments, then conditions x' on [x; u].
LinearDynamics mix_and_condition(const MovingStats& stats, const Vec& prior_mean,
                                 const Mat& prior_cov, const MixCoefficients& coeffs,
                                 int state_dim, int control_dim,
                                 const ConditionOptions& options = {});

/// Conditions a joint Gaussian over [x; u; x'] on [x; u].
LinearDynamics condition_gaussian(const Vec& mean, const Mat& cov, int state_dim, int control_dim,
                                  const ConditionOptions& options = {});

/// Shared knobs for model prediction.
struct DynamicsContext {
  const GmmPrior* prior = nullptr;
  int state_dim = 0;
  int control_dim = 0;
  ConditionOptions condition;
};

/// The model for one predicted state/action pair.
LinearDynamics predict_model(const MovingStats& stats, const DynamicsContext& ctx, const Vec& x,
                             const Vec& u);

/// Models for steps t..t+H. Actions along the predicted mean trajectory come
/// from the previous plan's laws (law i+1 drives step t+i; the last law is
/// reused past its end); without a previous plan they are zero.
std::vector<LinearDynamics> predict_horizon(const MovingStats& stats, const DynamicsContext& ctx,
                                            const Vec& x_t,
                                            std::span<const ControlLaw> previous_laws, int H);

}  // namespace himpc
