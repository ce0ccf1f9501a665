#include <doctest.h>

#include <cmath>
#include <random>

#include "himpc/env2d.hpp"
#include "himpc/plant.hpp"

using namespace himpc;
using namespace himpc::env2d;

namespace {

Obstacle box() {
  Obstacle o;
  o.min_corner = {0.0, 0.0};
  o.max_corner = {1.0, 1.0};
  return o;
}

}  // namespace

TEST_CASE("no contact outside every obstacle") {
  const auto env = EnvConfig::obstacle_course();
  ParticleState s{{-1.0, 1.0}, {0.3, -0.2}};
  CHECK(contact_force(s, env.obstacles) == Eigen::Vector2d::Zero());
}

TEST_CASE("left-face penetration at rest gives the spring force") {
  const Obstacle o = box();
  const double d = 0.01;
  ParticleState s{{d, 0.5}, {0.0, 0.0}};
  const auto f = contact_force(s, std::span(&o, 1));
  CHECK(f.x() == doctest::Approx(-o.stiffness * d).epsilon(1e-12));
  CHECK(f.y() == 0.0);
}

TEST_CASE("normal damping and outward clamp") {
  const Obstacle o = box();
  // Moving into the top face adds damping; moving out fast enough cancels the spring.
  ParticleState in{{0.5, 0.99}, {0.0, -1.0}};
  const auto f_in = contact_force(in, std::span(&o, 1));
  CHECK(f_in.y() == doctest::Approx(o.stiffness * 0.01 + o.damping * 1.0).epsilon(1e-9));
  ParticleState out{{0.5, 0.99}, {0.0, 10.0}};
  CHECK(contact_force(out, std::span(&o, 1)) == Eigen::Vector2d::Zero());
}

TEST_CASE("friction opposes sliding and respects the Coulomb bound") {
  Obstacle o = box();
  o.friction_coeff = 0.5;
  const double d = 0.02;
  for (double vy : {0.01, 0.1, 1.0, 5.0}) {
    ParticleState s{{d, 0.5}, {0.0, vy}};
    const auto f = contact_force(s, std::span(&o, 1));
    const double normal = o.stiffness * d;
    CHECK(f.y() < 0.0);
    CHECK(std::abs(f.y()) <= o.friction_coeff * normal + 1e-12);
  }
  ParticleState down{{d, 0.5}, {0.0, -1.0}};
  CHECK(contact_force(down, std::span(&o, 1)).y() > 0.0);
}

TEST_CASE("force vanishes continuously with penetration depth") {
  const Obstacle o = box();
  double prev = 1e9;
  for (double d : {1e-2, 1e-3, 1e-4, 1e-6}) {
    ParticleState s{{0.5, 1.0 - d}, {0.0, 0.0}};
    const double mag = contact_force(s, std::span(&o, 1)).norm();
    CHECK(mag < prev);
    CHECK(mag == doctest::Approx(o.stiffness * d).epsilon(1e-6));
    prev = mag;
  }
}

TEST_CASE("equilibrium and constant-force kinematics") {
  const auto env = EnvConfig::free_space();
  ParticleState s = reset(env);
  CHECK(step(s, Eigen::Vector2d::Zero(), env) == s);

  const Eigen::Vector2d F(2.0, -3.0);
  ParticleState x = s;
  // Semi-implicit Euler by hand: v_k = k dt F / m, p_k = p_0 + dt^2 F / m * k (k + 1) / 2.
  const int n = 17;
  for (int k = 0; k < n; ++k) x = step(x, F, env);
  const Eigen::Vector2d v_expected = n * env.dt * F / env.mass;
  const Eigen::Vector2d p_expected =
      s.position + env.dt * env.dt * F / env.mass * (n * (n + 1) / 2.0);
  CHECK((x.velocity - v_expected).norm() < 1e-12);
  CHECK((x.position - p_expected).norm() < 1e-12);
}

TEST_CASE("controls beyond the limit act as clipped controls") {
  const auto env = EnvConfig::obstacle_course();
  ParticleState a = reset(env), b = reset(env);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 30.0);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Vector2d u(n(rng), n(rng));
    a = step(a, u, env);
    b = step(b, clip_control(u, env.control_limit), env);
    REQUIRE(a == b);
  }
}

TEST_CASE("reset and determinism") {
  const auto env = EnvConfig::obstacle_course();
  const auto s = reset(env);
  CHECK(s.position == env.start);
  CHECK(s.velocity == Eigen::Vector2d::Zero());
  const auto o = reset(env, Eigen::Vector2d(0.3, -0.7));
  CHECK(o.position == Eigen::Vector2d(0.3, -0.7));
  CHECK(o.velocity == Eigen::Vector2d::Zero());
  CHECK(reset(env) == reset(env));

  auto run = [&] {
    ParticleState x = reset(env);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 8.0);
    for (int t = 0; t < 200; ++t) x = step(x, Eigen::Vector2d(n(rng), n(rng)), env);
    return x;
  };
  CHECK(run() == run());
}

TEST_CASE("kinetic energy is conserved in free flight") {
  const auto env = EnvConfig::free_space();
  ParticleState x{{0.0, 0.0}, {0.7, -1.3}};
  const double e0 = x.velocity.squaredNorm();
  for (int t = 0; t < 500; ++t) x = step(x, Eigen::Vector2d::Zero(), env);
  CHECK(x.velocity.squaredNorm() == e0);
}

TEST_CASE("penetration stays bounded under saturated pushing") {
  const auto env = EnvConfig::obstacle_course();
  // Static push depth is limit / stiffness = 2 cm; impacts at the ~4 m/s
  // reachable here overshoot by up to about v / sqrt(k / m). The margin keeps
  // the particle well short of the slab's mid-plane, so it cannot tunnel.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    ParticleState x = reset(env, Eigen::Vector2d(-2.0 + 0.1 * trial, 1.0));
    const Eigen::Vector2d push(ux(rng) * env.control_limit, -env.control_limit);
    for (int t = 0; t < env.episode_length; ++t) {
      x = step(x, push, env);
      worst = std::max(worst, max_penetration(x.position, env.obstacles));
    }
  }
  const double static_depth = env.control_limit / env.obstacles[0].stiffness;
  CHECK(worst > 0.0);
  const double half_thickness =
      0.5 * (env.obstacles[0].max_corner.y() - env.obstacles[0].min_corner.y());
  CHECK(worst < static_depth + 0.2);
  CHECK(worst < 0.75 * half_thickness);
}

TEST_CASE("invalid configurations are rejected") {
  auto env = EnvConfig::obstacle_course();
  env.mass = 0.0;
  CHECK_THROWS_AS(env.validate(), InvalidArgument);
  env = EnvConfig::obstacle_course();
  env.obstacles[0].max_corner = env.obstacles[0].min_corner;
  CHECK_THROWS_AS(env.validate(), InvalidArgument);
  env = EnvConfig::obstacle_course();
  env.obstacles[1].friction_coeff = -1.0;
  CHECK_THROWS_AS(env.validate(), InvalidArgument);
  CHECK_NOTHROW(EnvConfig::obstacle_course().validate());
}

TEST_CASE("particle plant matches the environment step") {
  const auto env = EnvConfig::obstacle_course();
  ParticlePlant plant(env);
  Vec x = plant.initial_state();
  ParticleState s = reset(env);
  for (int t = 0; t < 50; ++t) {
    Vec u(2);
    u << 12.0, -4.0 + t * 0.3;
    x = plant.step(x, u);
    s = step(s, u, env);
    REQUIRE(x == s.packed());
  }
  Vec big(2);
  big << 50.0, -50.0;
  CHECK(plant.clip(big) == Vec(Eigen::Vector2d(10.0, -10.0)));
}
