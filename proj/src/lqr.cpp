#include "himpc/lqr.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <string>

namespace himpc {

double QuadraticCost::evaluate(const Vec& x, const Vec& u) const {
  const Vec e = x - goal;
  return e.dot(Q * e) + u.dot(R * u);
}

void QuadraticCost::validate(double tol) const {
  if (Q.rows() != Q.cols() || R.rows() != R.cols() || goal.size() != Q.rows()) {
    throw DimensionError("QuadraticCost: inconsistent Q/R/goal sizes");
  }
  const Mat Qs = symmetrized(Q);
  const Mat Rs = symmetrized(R);
  if (Qs.rows() > 0 && Eigen::SelfAdjointEigenSolver<Mat>(Qs).eigenvalues().minCoeff() < -tol) {
    throw InvalidArgument("QuadraticCost: Q is not positive semi-definite");
  }
  if (Rs.rows() > 0 && Eigen::SelfAdjointEigenSolver<Mat>(Rs).eigenvalues().minCoeff() <= tol) {
    throw InvalidArgument("QuadraticCost: R is not positive definite");
  }
}

std::vector<QuadraticCost> repeat_cost(const QuadraticCost& cost, int steps,
                                       double terminal_weight) {
  std::vector<QuadraticCost> out(static_cast<std::size_t>(steps), cost);
  if (!out.empty()) out.back().Q *= terminal_weight;
  return out;
}

std::vector<QuadraticCost> with_goal(std::span<const QuadraticCost> costs, const Vec& goal) {
  std::vector<QuadraticCost> out(costs.begin(), costs.end());
  for (auto& c : out) c.goal = goal;
  return out;
}

namespace {

void check_problem(std::span<const LinearDynamics> models, std::span<const QuadraticCost> costs) {
  if (models.empty()) throw InvalidArgument("LQR: empty horizon");
  if (models.size() != costs.size()) {
    throw DimensionError("LQR: " + std::to_string(models.size()) + " models but " +
                         std::to_string(costs.size()) + " costs");
  }
  const auto n = models.front().A.rows();
  const auto m = models.front().B.cols();
  for (std::size_t s = 0; s < models.size(); ++s) {
    const auto& f = models[s];
    const auto& l = costs[s];
    if (f.A.rows() != n || f.A.cols() != n || f.B.rows() != n || f.B.cols() != m ||
        f.c.size() != n || l.Q.rows() != n || l.Q.cols() != n || l.R.rows() != m ||
        l.R.cols() != m || l.goal.size() != n) {
      throw DimensionError("LQR: inconsistent dimensions at step " + std::to_string(s));
    }
  }
}

}  // namespace

LqrSolution backward_pass(std::span<const LinearDynamics> models,
                          std::span<const QuadraticCost> costs, const LqrOptions& options) {
  check_problem(models, costs);
  const auto steps = models.size();
  const auto n = models.front().A.rows();
  const auto m = models.front().B.cols();

  LqrSolution sol;
  sol.laws.resize(steps);
  sol.values.resize(steps);
  sol.Quu.resize(steps);

  Mat Vxx_next = Mat::Zero(n, n);
  Vec Vx_next = Vec::Zero(n);
  for (std::size_t i = steps; i-- > 0;) {
    const auto& f = models[i];
    const auto& l = costs[i];
    const Vec v = Vx_next + Vxx_next * f.c;
    const Mat VB = Vxx_next * f.B;

    const Mat Qxx = 2.0 * l.Q + f.A.transpose() * Vxx_next * f.A;
    Mat Quu = 2.0 * l.R + f.B.transpose() * VB;
    const Mat Qux = VB.transpose() * f.A;
    const Vec Qx = -2.0 * (l.Q * l.goal) + f.A.transpose() * v;
    const Vec Qu = f.B.transpose() * v;

    Quu = symmetrized(Quu);
    const double shift = options.relative_regularization * Quu.trace() / static_cast<double>(m);
    if (m > 0 && Eigen::SelfAdjointEigenSolver<Mat>(Quu, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .minCoeff() < shift) {
      Quu.diagonal().array() += shift;
      ++sol.regularized_steps;
    }
    Eigen::LLT<Mat> llt(Quu);
    if (llt.info() != Eigen::Success || !Quu.allFinite()) {
      throw NumericalError("LQR: Q_uu not positive definite at step " + std::to_string(i),
                           static_cast<int>(i));
    }

    ControlLaw& law = sol.laws[i];
    law.K = -llt.solve(Qux);
    law.k = -llt.solve(Qu);

    Mat Vxx = Qxx + Qux.transpose() * law.K;
    Vxx = symmetrized(Vxx);
    Vec Vx = Qx + Qux.transpose() * law.k;

    sol.values[i] = {Vxx, Vx};
    sol.Quu[i] = std::move(Quu);
    Vxx_next = std::move(Vxx);
    Vx_next = std::move(Vx);
  }
  return sol;
}

Rollout forward_rollout(const Vec& x0, std::span<const LinearDynamics> models,
                        std::span<const ControlLaw> laws) {
  if (models.size() != laws.size()) throw DimensionError("forward_rollout: models/laws length");
  Rollout r;
  r.states.reserve(models.size() + 1);
  r.controls.reserve(models.size());
  r.states.push_back(x0);
  for (std::size_t s = 0; s < models.size(); ++s) {
    const Vec& x = r.states.back();
    Vec u = laws[s].apply(x);
    Vec next = models[s].predict(x, u);
    r.controls.push_back(std::move(u));
    r.states.push_back(std::move(next));
  }
  return r;
}

double rollout_cost(const Rollout& rollout, std::span<const QuadraticCost> costs) {
  if (rollout.controls.size() != costs.size()) throw DimensionError("rollout_cost: length");
  double total = 0.0;
  for (std::size_t s = 0; s < costs.size(); ++s) {
    total += costs[s].evaluate(rollout.states[s], rollout.controls[s]);
  }
  return total;
}

Mat goal_jacobian(std::span<const LinearDynamics> models, std::span<const QuadraticCost> costs,
                  const LqrSolution& solution) {
  check_problem(models, costs);
  if (solution.laws.size() != models.size()) {
    throw DimensionError("goal_jacobian: solution length does not match the horizon");
  }
  const auto n = models.front().A.rows();
  // dVx_{s}/dg, swept backwards; zero past the horizon.
  Mat dVx = Mat::Zero(n, n);
  for (std::size_t s = models.size(); s-- > 1;) {
    const auto& f = models[s];
    const Mat closed = f.A + f.B * solution.laws[s].K;
    dVx = (-2.0 * costs[s].Q + closed.transpose() * dVx).eval();
  }
  const auto& f0 = models.front();
  const Mat dQu = f0.B.transpose() * dVx;
  return -solution.Quu.front().llt().solve(dQu);
}

}  // namespace himpc
