#pragma once

// Independent reference solutions and random instances shared by the tests
// and the acceptance binary.

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "himpc/lqr.hpp"

namespace himpc::oracle {

inline Mat gaussian(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = n(rng);
  return m;
}

inline Vec gaussian_vec(int n, std::mt19937_64& rng, double scale = 1.0) {
  return gaussian(n, 1, rng, scale);
}

struct LqrInstance {
  std::vector<LinearDynamics> models;  // H + 1
  std::vector<QuadraticCost> costs;    // H + 1
  Vec x0;
};

/// Random time-varying affine problem with PSD Q and PD R per step.
inline LqrInstance random_lqr(int nx, int nu, int H, std::mt19937_64& rng) {
  LqrInstance inst;
  for (int s = 0; s <= H; ++s) {
    LinearDynamics f;
    f.A = Mat::Identity(nx, nx) + gaussian(nx, nx, rng, 0.3);
    f.B = gaussian(nx, nu, rng, 0.5);
    f.c = gaussian_vec(nx, rng, 0.2);
    f.W = Mat::Zero(nx, nx);
    inst.models.push_back(f);
    QuadraticCost c;
    const Mat L = gaussian(nx, nx, rng);
    c.Q = L * L.transpose();
    const Mat M = gaussian(nu, nu, rng, 0.5);
    c.R = M * M.transpose() + 0.1 * Mat::Identity(nu, nu);
    c.goal = gaussian_vec(nx, rng);
    inst.costs.push_back(c);
  }
  inst.x0 = gaussian_vec(nx, rng);
  return inst;
}

/// Open-loop optimum u_0..u_H of
///   sum_s (x_s - g_s)^T Q_s (x_s - g_s) + u_s^T R_s u_s
/// by eliminating the states and solving the normal equations of the stacked
/// quadratic program directly.
inline std::vector<Vec> stacked_qp(const std::vector<LinearDynamics>& models,
                                   const std::vector<QuadraticCost>& costs, const Vec& x0) {
  const int n = static_cast<int>(x0.size());
  const int m = static_cast<int>(models.front().B.cols());
  const int N = static_cast<int>(costs.size());
  // x_s = Sx_s x0 + Su_s U + d_s for s = 0..N-1.
  Mat Su = Mat::Zero(n * N, m * N);
  Vec free = Vec::Zero(n * N);
  Vec x_free = x0;
  Mat G = Mat::Zero(n, m * N);  // d x_s / d U
  for (int s = 0; s < N; ++s) {
    free.segment(s * n, n) = x_free;
    Su.block(s * n, 0, n, m * N) = G;
    const auto& f = models[static_cast<std::size_t>(s)];
    x_free = f.A * x_free + f.c;
    Mat Gn = f.A * G;
    Gn.block(0, s * m, n, m) += f.B;
    G = Gn;
  }
  Mat Qb = Mat::Zero(n * N, n * N);
  Mat Rb = Mat::Zero(m * N, m * N);
  Vec goals(n * N);
  for (int s = 0; s < N; ++s) {
    Qb.block(s * n, s * n, n, n) = costs[static_cast<std::size_t>(s)].Q;
    Rb.block(s * m, s * m, m, m) = costs[static_cast<std::size_t>(s)].R;
    goals.segment(s * n, n) = costs[static_cast<std::size_t>(s)].goal;
  }
  const Mat H = Su.transpose() * Qb * Su + Rb;
  const Vec rhs = -Su.transpose() * Qb * (free - goals);
  const Vec U = H.fullPivLu().solve(rhs);
  std::vector<Vec> out;
  for (int s = 0; s < N; ++s) out.push_back(U.segment(s * m, m));
  return out;
}

inline double relative_error(const Vec& a, const Vec& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-12);
}

}  // namespace himpc::oracle
