#pragma once

// Gaussian mixture prior over transition observations p = [x; u; x'].

#include <Eigen/Cholesky>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "himpc/common.hpp"

namespace himpc {

struct GmmComponent {
  double weight = 0.0;
  Vec mean;
  Mat covariance;
};

class GmmPrior {
 public:
  GmmPrior() = default;
  /// `conditioning_dim` is the length of the [x; u] prefix used for queries.
  GmmPrior(std::vector<GmmComponent> components, int conditioning_dim, double pseudo_count = 1.0);

  [[nodiscard]] const std::vector<GmmComponent>& components() const noexcept { return components_; }
  [[nodiscard]] int num_components() const noexcept { return static_cast<int>(components_.size()); }
  [[nodiscard]] int dim() const;
  [[nodiscard]] int conditioning_dim() const noexcept { return conditioning_dim_; }
  [[nodiscard]] double pseudo_count() const noexcept { return pseudo_count_; }
  void set_pseudo_count(double n);

  /// Posterior responsibilities of each component for a point whose size is
  /// either dim() (full density) or conditioning_dim() (marginal on the prefix).
  [[nodiscard]] Vec responsibilities(const Vec& point) const;

  /// Per-point log density under the full mixture.
  [[nodiscard]] double log_density(const Vec& point) const;

  bool operator==(const GmmPrior& other) const;

 private:
  [[nodiscard]] Vec component_log_densities(const Vec& point) const;

  std::vector<GmmComponent> components_;
  int conditioning_dim_ = 0;
  double pseudo_count_ = 1.0;
  std::vector<Eigen::LLT<Mat>> full_chol_;
  std::vector<Eigen::LLT<Mat>> prefix_chol_;
  std::vector<double> full_logdet_;
  std::vector<double> prefix_logdet_;
};

struct GmmFitOptions {
  int max_iters = 100;
  /// Stop when the relative objective improvement drops below this.
  double tolerance = 1e-6;
  /// Covariance floor for a component of typical size (see fit_gmm).
  double ridge = 1e-6;
  /// Strength of the covariance prior; must be > 0.
  double covariance_prior_count = 1.0;
  std::uint64_t seed = 0;
  double pseudo_count = 1.0;
};

struct GmmFit {
  GmmPrior prior;
  /// Objective after every EM iteration, starting from the seeded state.
  std::vector<double> log_likelihood;
  int iterations = 0;
};

/// EM with k-means++ seeding. Covariances are MAP estimates under a weak
/// inverse-Wishart-type prior with scale rho * I and strength a,
///
///   Sigma_k = (N_k S_k + rho I) / (N_k + a),   rho = ridge * (N/K + a),
///
/// which keeps them positive definite, shrinks nearly empty components to a
/// narrow spike instead of inflating them, and makes the reported objective
/// (data log-likelihood plus the prior's log term) monotone by construction.
GmmFit fit_gmm(std::span<const Vec> data, int K, int conditioning_dim,
               const GmmFitOptions& options = {});

struct PriorMoments {
  Vec mean;
  Mat covariance;
  Vec responsibilities;
};

/// Responsibility-weighted moments of the mixture at `point` (see
/// GmmPrior::responsibilities for the accepted point sizes).
PriorMoments query_prior(const GmmPrior& prior, const Vec& point);

}  // namespace himpc
