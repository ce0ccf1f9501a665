#include "himpc/dynamics.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace himpc {

Vec make_observation(const Vec& x_prev, const Vec& u_prev, const Vec& x_next) {
  require_size(x_next.size(), x_prev.size(), "make_observation");
  Vec p(x_prev.size() + u_prev.size() + x_next.size());
  p << x_prev, u_prev, x_next;
  return p;
}

MovingStats::MovingStats(int dim, double beta)
    : beta_(beta), mean_(Vec::Zero(dim)), second_(Mat::Zero(dim, dim)) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("MovingStats: beta must be in [0, 1]");
  if (dim < 1) throw InvalidArgument("MovingStats: dim must be >= 1");
}

void MovingStats::update(const Vec& p) {
  require_size(p.size(), mean_.size(), "MovingStats::update");
  const double a = 1.0 - beta_;
  mean_ = beta_ * mean_ + a * p;
  second_ = beta_ * second_ + a * (p * p.transpose());
  ++count_;
  if (beta_ < 1.0) {
    const double decay = std::pow(beta_, count_);
    total_weight_ = 1.0 - decay;
    effective_count_ = total_weight_ / (1.0 - beta_);
  }
}

Vec MovingStats::normalized_mean() const {
  if (total_weight_ <= 0.0) return Vec::Zero(mean_.size());
  return mean_ / total_weight_;
}

Mat MovingStats::covariance() const {
  if (total_weight_ <= 0.0) return Mat::Zero(mean_.size(), mean_.size());
  const Vec mu = normalized_mean();
  Mat S = second_ / total_weight_ - mu * mu.transpose();
  return symmetrized(S);
}

MovingStats update_stats(MovingStats stats, const Vec& observation) {
  stats.update(observation);
  return stats;
}

MixCoefficients MixCoefficients::from_counts(double n, double n_p) {
  if (n < 0.0 || n_p < 0.0) throw InvalidArgument("MixCoefficients: negative count");
  const double total = n + n_p;
  if (total <= 0.0) throw InvalidArgument("MixCoefficients: no empirical data and no prior strength");
  MixCoefficients c;
  c.a1 = n / total;
  c.a2 = n_p / total;
  c.a3 = n / total;
  c.a4 = n * n_p / (total * total);
  return c;
}

LinearDynamics condition_gaussian(const Vec& mean, const Mat& cov, int nx, int nu,
                                  const ConditionOptions& options) {
  const int d = nx + nu;
  require_size(mean.size(), d + nx, "condition_gaussian mean");
  require_size(cov.rows(), d + nx, "condition_gaussian cov");
  require_size(cov.cols(), d + nx, "condition_gaussian cov");

  Mat Sxx = cov.topLeftCorner(d, d);
  Sxx = symmetrized(Sxx);
  const Mat Sxy = cov.topRightCorner(d, nx);
  const Mat Syy = cov.bottomRightCorner(nx, nx);

  Eigen::LLT<Mat> llt(Sxx);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-12)) {
    Sxx.diagonal().array() += options.ridge;
    llt.compute(Sxx);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("condition_gaussian: [x; u] covariance block is singular after ridge");
    }
  }
  const Mat gain = llt.solve(Sxy).transpose();  // nx x d = Syx Sxx^{-1}

  LinearDynamics f;
  f.A = gain.leftCols(nx);
  f.B = gain.rightCols(nu);
  f.c = mean.tail(nx) - gain * mean.head(d);
  Mat W = Syy - gain * Sxy;
  f.W = symmetrized(W);
  return f;
}

LinearDynamics mix_and_condition(const MovingStats& stats, const Vec& prior_mean,
                                 const Mat& prior_cov, const MixCoefficients& coeffs, int nx,
                                 int nu, const ConditionOptions& options) {
  require_size(prior_mean.size(), stats.dim(), "mix_and_condition prior mean");
  const Vec mu_hat = stats.normalized_mean();
  const Mat S_hat = stats.covariance();
  const Vec mu = coeffs.a1 * mu_hat + (1.0 - coeffs.a1) * prior_mean;
  const Vec diff = prior_mean - mu_hat;
  Mat sigma = coeffs.a2 * prior_cov + coeffs.a3 * S_hat + coeffs.a4 * (diff * diff.transpose());
  sigma = symmetrized(sigma);
  return condition_gaussian(mu, sigma, nx, nu, options);
}

LinearDynamics predict_model(const MovingStats& stats, const DynamicsContext& ctx, const Vec& x,
                             const Vec& u) {
  const int nx = ctx.state_dim;
  const int nu = ctx.control_dim;
  if (ctx.prior == nullptr) {
    return condition_gaussian(stats.normalized_mean(), stats.covariance(), nx, nu, ctx.condition);
  }
  Vec query(nx + nu);
  query << x, u;
  const PriorMoments pm = query_prior(*ctx.prior, query);
  const auto coeffs =
      MixCoefficients::from_counts(stats.effective_count(), ctx.prior->pseudo_count());
  return mix_and_condition(stats, pm.mean, pm.covariance, coeffs, nx, nu, ctx.condition);
}

std::vector<LinearDynamics> predict_horizon(const MovingStats& stats, const DynamicsContext& ctx,
                                            const Vec& x_t,
                                            std::span<const ControlLaw> previous_laws, int H) {
  if (H < 0) throw InvalidArgument("predict_horizon: H must be >= 0");
  require_size(x_t.size(), ctx.state_dim, "predict_horizon state");
  std::vector<LinearDynamics> models;
  models.reserve(static_cast<std::size_t>(H) + 1);
  Vec x = x_t;
  for (int i = 0; i <= H; ++i) {
    Vec u = Vec::Zero(ctx.control_dim);
    if (!previous_laws.empty()) {
      const auto idx = std::min<std::size_t>(static_cast<std::size_t>(i) + 1, previous_laws.size() - 1);
      u = previous_laws[idx].apply(x);
    }
    models.push_back(predict_model(stats, ctx, x, u));
    x = models.back().predict(x, u);
  }
  return models;
}

}  // namespace himpc
