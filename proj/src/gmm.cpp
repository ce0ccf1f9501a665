#include "himpc/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace himpc {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_det(const Eigen::LLT<Mat>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Eigen::LLT<Mat> factor_or_throw(const Mat& cov, const char* what) {
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": covariance is not positive definite");
  }
  return llt;
}

double log_sum_exp(const Vec& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

GmmPrior::GmmPrior(std::vector<GmmComponent> components, int conditioning_dim,
                   double pseudo_count)
    : components_(std::move(components)), conditioning_dim_(conditioning_dim) {
  if (components_.empty()) throw InvalidArgument("GmmPrior: no components");
  set_pseudo_count(pseudo_count);
  const auto D = components_.front().mean.size();
  if (conditioning_dim_ <= 0 || conditioning_dim_ > D) {
    throw InvalidArgument("GmmPrior: conditioning_dim out of range");
  }
  double total = 0.0;
  for (const auto& c : components_) {
    require_size(c.mean.size(), D, "GmmPrior mean");
    require_size(c.covariance.rows(), D, "GmmPrior covariance rows");
    require_size(c.covariance.cols(), D, "GmmPrior covariance cols");
    if (c.weight < 0.0 || !std::isfinite(c.weight)) {
      throw InvalidArgument("GmmPrior: weights must be finite and non-negative");
    }
    total += c.weight;
  }
  if (!(total > 0.0)) throw InvalidArgument("GmmPrior: weights sum to zero");
  for (auto& c : components_) c.weight /= total;

  for (const auto& c : components_) {
    full_chol_.push_back(factor_or_throw(c.covariance, "GmmPrior"));
    full_logdet_.push_back(log_det(full_chol_.back()));
    prefix_chol_.push_back(factor_or_throw(
        c.covariance.topLeftCorner(conditioning_dim_, conditioning_dim_), "GmmPrior"));
    prefix_logdet_.push_back(log_det(prefix_chol_.back()));
  }
}

int GmmPrior::dim() const {
  return components_.empty() ? 0 : static_cast<int>(components_.front().mean.size());
}

void GmmPrior::set_pseudo_count(double n) {
  if (!(n >= 0.0) || !std::isfinite(n)) throw InvalidArgument("GmmPrior: pseudo_count must be >= 0");
  pseudo_count_ = n;
}

Vec GmmPrior::component_log_densities(const Vec& point) const {
  const bool full = point.size() == dim();
  if (!full && point.size() != conditioning_dim_) {
    throw DimensionError("GmmPrior: query point has size " + std::to_string(point.size()) +
                         "; expected " + std::to_string(dim()) + " or " +
                         std::to_string(conditioning_dim_));
  }
  const auto d = static_cast<double>(point.size());
  Vec logp(components_.size());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    const Vec diff = point - c.mean.head(point.size());
    const auto& llt = full ? full_chol_[k] : prefix_chol_[k];
    const double maha = llt.matrixL().solve(diff).squaredNorm();
    const double ld = full ? full_logdet_[k] : prefix_logdet_[k];
    logp[static_cast<Eigen::Index>(k)] =
        (c.weight > 0.0 ? std::log(c.weight) : -std::numeric_limits<double>::infinity()) -
        0.5 * (d * kLog2Pi + ld + maha);
  }
  return logp;
}

Vec GmmPrior::responsibilities(const Vec& point) const {
  const Vec logp = component_log_densities(point);
  const double norm = log_sum_exp(logp);
  if (!std::isfinite(norm)) {
    // Every component underflowed; fall back to the mixture weights.
    Vec w(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) w[static_cast<Eigen::Index>(k)] = components_[k].weight;
    return w;
  }
  return (logp.array() - norm).exp();
}

double GmmPrior::log_density(const Vec& point) const {
  require_size(point.size(), dim(), "GmmPrior::log_density");
  return log_sum_exp(component_log_densities(point));
}

bool GmmPrior::operator==(const GmmPrior& other) const {
  if (conditioning_dim_ != other.conditioning_dim_ || pseudo_count_ != other.pseudo_count_ ||
      components_.size() != other.components_.size()) {
    return false;
  }
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& a = components_[k];
    const auto& b = other.components_[k];
    if (a.weight != b.weight || a.mean != b.mean || a.covariance != b.covariance) return false;
  }
  return true;
}

PriorMoments query_prior(const GmmPrior& prior, const Vec& point) {
  PriorMoments out;
  out.responsibilities = prior.responsibilities(point);
  const auto& comps = prior.components();
  const auto D = prior.dim();
  out.mean = Vec::Zero(D);
  for (std::size_t k = 0; k < comps.size(); ++k) {
    out.mean += out.responsibilities[static_cast<Eigen::Index>(k)] * comps[k].mean;
  }
  out.covariance = Mat::Zero(D, D);
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const double r = out.responsibilities[static_cast<Eigen::Index>(k)];
    if (r == 0.0) continue;
    const Vec d = comps[k].mean - out.mean;
    out.covariance += r * (comps[k].covariance + d * d.transpose());
  }
  out.covariance = symmetrized(out.covariance);
  return out;
}

GmmFit fit_gmm(std::span<const Vec> data, int K, int conditioning_dim,
               const GmmFitOptions& options) {
  if (data.empty()) throw InvalidArgument("fit_gmm: empty dataset");
  if (K < 1) throw InvalidArgument("fit_gmm: K must be >= 1");
  if (!(options.covariance_prior_count > 0.0)) {
    throw InvalidArgument("fit_gmm: covariance_prior_count must be > 0");
  }
  if (!(options.ridge > 0.0)) throw InvalidArgument("fit_gmm: ridge must be > 0");
  if (static_cast<std::size_t>(K) > data.size()) {
    throw InvalidArgument("fit_gmm: K = " + std::to_string(K) + " exceeds dataset size " +
                          std::to_string(data.size()));
  }
  const auto D = data.front().size();
  const auto N = static_cast<Eigen::Index>(data.size());
  Mat X(D, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    require_size(data[static_cast<std::size_t>(i)].size(), D, "fit_gmm sample");
    X.col(i) = data[static_cast<std::size_t>(i)];
  }
  if (!X.allFinite()) throw InvalidArgument("fit_gmm: non-finite sample");

  // Inverse-Wishart-type covariance prior: scale rho * I, strength a. Chosen
  // so a component holding N/K points gets a floor of about `ridge`.
  const double a = options.covariance_prior_count;
  const double rho = options.ridge * (static_cast<double>(N) / K + a);
  const Mat I = Mat::Identity(D, D);

  // k-means++ seeding
  std::mt19937_64 rng(options.seed);
  std::vector<Eigen::Index> centers;
  centers.push_back(std::uniform_int_distribution<Eigen::Index>(0, N - 1)(rng));
  Vec d2 = (X.colwise() - X.col(centers[0])).colwise().squaredNorm().transpose();
  while (static_cast<int>(centers.size()) < K) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick < N - 1; ++pick) {
        r -= d2[pick];
        if (r < 0.0) break;
      }
    } else {
      pick = std::uniform_int_distribution<Eigen::Index>(0, N - 1)(rng);
    }
    centers.push_back(pick);
    d2 = d2.cwiseMin((X.colwise() - X.col(pick)).colwise().squaredNorm().transpose());
  }

  const Vec global_mean = X.rowwise().mean();
  const Mat centered = X.colwise() - global_mean;
  const Mat global_cov = centered * centered.transpose() / static_cast<double>(N);

  std::vector<double> weight(static_cast<std::size_t>(K), 1.0 / K);
  std::vector<Vec> mean(static_cast<std::size_t>(K));
  std::vector<Mat> cov(static_cast<std::size_t>(K), global_cov + options.ridge * I);
  for (int k = 0; k < K; ++k) mean[static_cast<std::size_t>(k)] = X.col(centers[static_cast<std::size_t>(k)]);

  GmmFit fit;
  Mat logr(K, N);
  for (int iter = 0;; ++iter) {
    // E-step and objective at the current parameters.
    double log_prior = 0.0;
    for (int k = 0; k < K; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      Eigen::LLT<Mat> llt(cov[ks]);
      if (llt.info() != Eigen::Success) throw NumericalError("fit_gmm: covariance lost definiteness");
      const double ld = log_det(llt);
      const Mat z = llt.matrixL().solve(X.colwise() - mean[ks]);
      const double lw = weight[ks] > 0.0 ? std::log(weight[ks]) : -std::numeric_limits<double>::infinity();
      logr.row(k) = (lw - 0.5 * (static_cast<double>(D) * kLog2Pi + ld +
                                 z.colwise().squaredNorm().array()))
                        .matrix();
      log_prior -= 0.5 * (a * ld + rho * llt.solve(I).trace());
    }
    double ll = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      const double norm = log_sum_exp(logr.col(i));
      logr.col(i).array() -= norm;
      ll += norm;
    }
    const double objective = ll + log_prior;
    fit.log_likelihood.push_back(objective);

    if (iter > 0) {
      const double prev = fit.log_likelihood[fit.log_likelihood.size() - 2];
      if (objective - prev <= options.tolerance * std::abs(prev)) break;
    }
    if (iter >= options.max_iters) break;

    // M-step
    const Mat resp = logr.array().exp();
    for (int k = 0; k < K; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      const double Nk = resp.row(k).sum();
      if (Nk < 1e-12) continue;  // dead component keeps its parameters
      weight[ks] = Nk / static_cast<double>(N);
      mean[ks] = X * resp.row(k).transpose() / Nk;
      const Mat C = X.colwise() - mean[ks];
      Mat S = C * resp.row(k).asDiagonal() * C.transpose();
      S = (symmetrized(S) + rho * I) / (Nk + a);
      cov[ks] = std::move(S);
    }
    fit.iterations = iter + 1;
  }

  std::vector<GmmComponent> comps;
  for (int k = 0; k < K; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    comps.push_back({weight[ks], mean[ks], cov[ks]});
  }
  fit.prior = GmmPrior(std::move(comps), conditioning_dim, options.pseudo_count);
  return fit;
}

}  // namespace himpc
