#include <doctest.h>

#include <chrono>
#include <random>

#include "himpc/lqr.hpp"
#include "oracles.hpp"

using namespace himpc;

namespace {

std::vector<Vec> open_loop(const oracle::LqrInstance& inst, const LqrOptions& opts = {}) {
  const auto sol = backward_pass(inst.models, inst.costs, opts);
  return forward_rollout(inst.x0, inst.models, sol.laws).controls;
}

}  // namespace

TEST_CASE("zero state cost gives zero control") {
  std::mt19937_64 rng(1);
  auto inst = oracle::random_lqr(3, 2, 4, rng);
  for (auto& c : inst.costs) c.Q.setZero();
  const auto sol = backward_pass(inst.models, inst.costs);
  for (const auto& law : sol.laws) {
    CHECK(law.K.norm() == 0.0);
    CHECK(law.k.norm() == 0.0);
  }
}

TEST_CASE("scalar two-step problem matches the hand-solved minimizer") {
  // x1 = x0 + u0; cost x0^2 + u0^2 + x1^2 + u1^2 with x0 = 1:
  // d/du0 [u0^2 + (1 + u0)^2] = 0 -> u0 = -1/2, u1 = 0.
  LinearDynamics f{Mat::Ones(1, 1), Mat::Ones(1, 1), Vec::Zero(1), Mat::Zero(1, 1)};
  QuadraticCost c{Mat::Ones(1, 1), Mat::Ones(1, 1), Vec::Zero(1)};
  std::vector<LinearDynamics> models{f, f};
  std::vector<QuadraticCost> costs{c, c};
  const Vec x0 = Vec::Ones(1);
  const auto sol = backward_pass(models, costs);
  const auto roll = forward_rollout(x0, models, sol.laws);
  CHECK(roll.controls[0](0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(std::abs(roll.controls[1](0)) < 1e-12);
  const auto qp = oracle::stacked_qp(models, costs, x0);
  CHECK(std::abs(qp[0](0) + 0.5) < 1e-10);
}

TEST_CASE("random 4-state 2-control instance matches the stacked QP") {
  std::mt19937_64 rng(42);
  const auto inst = oracle::random_lqr(4, 2, 5, rng);
  const auto u = open_loop(inst);
  const auto qp = oracle::stacked_qp(inst.models, inst.costs, inst.x0);
  for (std::size_t s = 0; s < u.size(); ++s) {
    CHECK(oracle::relative_error(u[s], qp[s]) < 1e-8);
  }
}

TEST_CASE("property: backward pass equals the stacked QP on random instances") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> nx_d(1, 6), nu_d(1, 3), h_d(0, 8);
  for (int i = 0; i < 100; ++i) {
    const auto inst = oracle::random_lqr(nx_d(rng), nu_d(rng), h_d(rng), rng);
    const auto u = open_loop(inst);
    const auto qp = oracle::stacked_qp(inst.models, inst.costs, inst.x0);
    Vec a(static_cast<Eigen::Index>(u.size() * u[0].size())), b(a.size());
    for (std::size_t s = 0; s < u.size(); ++s) {
      a.segment(static_cast<Eigen::Index>(s) * u[0].size(), u[0].size()) = u[s];
      b.segment(static_cast<Eigen::Index>(s) * u[0].size(), u[0].size()) = qp[s];
    }
    INFO("instance " << i);
    CHECK(oracle::relative_error(a, b) < 1e-8);
  }
}

TEST_CASE("value Hessians are symmetric and the last control is zero") {
  std::mt19937_64 rng(9);
  const auto inst = oracle::random_lqr(5, 2, 6, rng);
  const auto sol = backward_pass(inst.models, inst.costs);
  for (const auto& v : sol.values) CHECK((v.Vxx - v.Vxx.transpose()).norm() <= 1e-12 * v.Vxx.norm());
  CHECK(sol.laws.back().K.norm() < 1e-12);
  CHECK(sol.laws.back().k.norm() < 1e-12);
}

TEST_CASE("planned action is affine in the goal") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 20; ++i) {
    const auto inst = oracle::random_lqr(4, 2, 6, rng);
    const auto sol = backward_pass(inst.models, inst.costs);
    const Mat J = goal_jacobian(inst.models, inst.costs, sol);
    const Vec u0 = sol.laws[0].apply(inst.x0);
    const Vec delta = oracle::gaussian_vec(4, rng);
    const Vec goal = inst.costs[0].goal + delta;
    const auto shifted = with_goal(inst.costs, goal);
    // with_goal replaces every step's goal; compare against the same base.
    const auto base = with_goal(inst.costs, inst.costs[0].goal);
    const auto sb = backward_pass(inst.models, base);
    const auto ss = backward_pass(inst.models, shifted);
    const Mat Jb = goal_jacobian(inst.models, base, sb);
    const Vec diff = ss.laws[0].apply(inst.x0) - sb.laws[0].apply(inst.x0);
    CHECK((diff - Jb * delta).norm() < 1e-10 * std::max(1.0, diff.norm()));
    CHECK(J.rows() == 2);
    CHECK(u0.allFinite());
  }
}

TEST_CASE("regularization is transparent on well-conditioned problems") {
  std::mt19937_64 rng(17);
  const auto inst = oracle::random_lqr(4, 2, 5, rng);
  LqrOptions none;
  none.relative_regularization = 0.0;
  LqrOptions strong;
  strong.relative_regularization = 1e-8;
  const auto a = open_loop(inst, none);
  const auto b = open_loop(inst, strong);
  for (std::size_t s = 0; s < a.size(); ++s) CHECK((a[s] - b[s]).norm() < 1e-6);
}

TEST_CASE("forward rollout definitions") {
  std::mt19937_64 rng(19);
  auto inst = oracle::random_lqr(3, 1, 3, rng);
  for (auto& f : inst.models) f.c.setZero();
  std::vector<ControlLaw> zero(4, ControlLaw{Mat::Zero(1, 3), Vec::Zero(1)});
  const auto roll = forward_rollout(inst.x0, inst.models, zero);
  Vec x = inst.x0;
  for (std::size_t s = 0; s < inst.models.size(); ++s) {
    CHECK((roll.states[s] - x).norm() == 0.0);
    x = inst.models[s].A * x;
  }
  CHECK(roll.states.size() == 5);

  auto one = oracle::random_lqr(3, 2, 0, rng);
  const auto sol = backward_pass(one.models, one.costs);
  const auto r1 = forward_rollout(one.x0, one.models, sol.laws);
  CHECK(r1.controls[0] == sol.laws[0].k + sol.laws[0].K * one.x0);
}

TEST_CASE("reachable goal: terminal state matches the QP optimum") {
  std::mt19937_64 rng(23);
  auto inst = oracle::random_lqr(2, 2, 4, rng);
  for (auto& c : inst.costs) c.goal = inst.costs[0].goal;
  const auto sol = backward_pass(inst.models, inst.costs);
  const auto roll = forward_rollout(inst.x0, inst.models, sol.laws);
  const auto qp = oracle::stacked_qp(inst.models, inst.costs, inst.x0);
  Vec x = inst.x0;
  for (std::size_t s = 0; s + 1 < inst.models.size(); ++s) x = inst.models[s].predict(x, qp[s]);
  CHECK((roll.states[inst.models.size() - 1] - x).norm() < 1e-8);
}

TEST_CASE("invalid inputs raise structured errors") {
  std::mt19937_64 rng(29);
  auto inst = oracle::random_lqr(3, 2, 2, rng);
  auto bad = inst.costs;
  bad[1].R = -1e3 * Mat::Identity(2, 2);
  try {
    (void)backward_pass(inst.models, bad);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    REQUIRE(e.step().has_value());
    CHECK(*e.step() == 1);
  }
  auto models = inst.models;
  models.pop_back();
  CHECK_THROWS_AS((void)backward_pass(models, inst.costs), DimensionError);
  QuadraticCost c = inst.costs[0];
  c.Q = -Mat::Identity(3, 3);
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = inst.costs[0];
  c.R = Mat::Zero(2, 2);
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("repeat_cost applies the terminal weight to the last step only") {
  QuadraticCost c{2.0 * Mat::Identity(2, 2), Mat::Identity(1, 1), Vec::Zero(2)};
  const auto cs = repeat_cost(c, 4, 3.0);
  REQUIRE(cs.size() == 4);
  CHECK(cs[0].Q == c.Q);
  CHECK(cs[3].Q == 3.0 * c.Q);
}
