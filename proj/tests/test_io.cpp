#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "himpc/gmm.hpp"
#include "himpc/io.hpp"

using namespace himpc;

namespace {

std::filesystem::path temp_dir() {
  auto p = std::filesystem::temp_directory_path() / "himpc_test_io";
  std::filesystem::create_directories(p);
  return p;
}

double random_double(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return u(rng) * std::pow(10.0, std::floor(u(rng) * 12.0));
}

}  // namespace

TEST_CASE("CSV tables read back bit-identically") {
  std::mt19937_64 rng(1);
  io::CsvTable t{io::metrics_columns(), {}};
  for (int r = 0; r < 50; ++r) {
    std::vector<double> row;
    for (std::size_t c = 0; c < t.header.size(); ++c) row.push_back(random_double(rng));
    t.rows.push_back(row);
  }
  t.rows.push_back({0.1, 1.0 / 3.0, std::numeric_limits<double>::denorm_min(), -0.0, 1e300,
                    std::numeric_limits<double>::max(), 2.0, 7.0});
  const auto path = temp_dir() / "metrics.csv";
  io::write_csv(path, t);
  const auto back = io::read_csv(path, io::metrics_columns());
  CHECK(back.header == t.header);
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      CHECK(std::bit_cast<std::uint64_t>(back.rows[r][c]) ==
            std::bit_cast<std::uint64_t>(t.rows[r][c]));
    }
  }
}

TEST_CASE("malformed CSV files are reported") {
  const auto path = temp_dir() / "bad.csv";
  {
    std::ofstream(path) << "a,b\n1,2\n3\n";
  }
  CHECK_THROWS_AS(io::read_csv(path), IoError);
  {
    std::ofstream(path) << "a,b\n1,x\n";
  }
  CHECK_THROWS_AS(io::read_csv(path), IoError);
  {
    std::ofstream(path) << "a,b\n1,2\n";
  }
  CHECK_THROWS_AS(io::read_csv(path, {"a", "c"}), IoError);
  CHECK_THROWS_AS(io::read_csv(temp_dir() / "missing.csv"), IoError);
  CHECK_THROWS_AS(io::write_csv("/nonexistent/dir/x.csv", io::CsvTable{{"a"}, {}}), IoError);
}

TEST_CASE("shaping parameters round-trip through JSON") {
  const auto net = ShapingNet::initialized({2, 5, 4}, 3, {0, 1});
  ShapingNet trained = net;
  Vec theta = net.params();
  theta.setRandom();
  trained.set_params(theta);
  const auto path = temp_dir() / "theta.json";
  io::save_json(path, io::to_json(trained));
  const ShapingNet back = io::net_from_json(io::load_json(path));
  CHECK(back == trained);
}

TEST_CASE("GMM prior round-trips and rejects other versions") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Vec> data;
  for (int i = 0; i < 200; ++i) {
    Vec p(3);
    p << n(rng) + (i % 2 ? 3.0 : -3.0), n(rng), n(rng);
    data.push_back(p);
  }
  GmmFitOptions opt;
  opt.pseudo_count = 2.5;
  const auto prior = fit_gmm(data, 2, 2, opt).prior;
  auto j = io::to_json(prior);
  const GmmPrior back = io::prior_from_json(j);
  CHECK(back == prior);
  CHECK(back.pseudo_count() == 2.5);
  j["version"] = io::kFormatVersion + 1;
  CHECK_THROWS_AS(io::prior_from_json(j), IoError);
}

TEST_CASE("iteration records round-trip through JSON lines") {
  IterationRecord rec;
  rec.iteration = 3;
  rec.theta = Vec::LinSpaced(5, -1.0, 1.0);
  rec.trained = true;
  rec.loss_before = 12.5;
  rec.loss_after = 1.0 / 3.0;
  rec.dataset_size = 42;
  rec.training_trace = {{0, 12.5, 3.0, 0.01}, {1, 0.4, 0.1, 0.02}};
  for (int r = 0; r < 2; ++r) {
    RolloutRecord roll;
    roll.seed = 1000 + r;
    roll.start = {-1.0, 2.0 + r};
    roll.trajectory.horizon = 1;
    roll.trajectory.goal = Vec::Zero(4);
    for (int t = 0; t < 3; ++t) {
      StepRecord s;
      s.state = Vec::Constant(4, 0.1 * t + r);
      s.planned = s.unshaped = s.noise = s.control = s.applied = Vec::Constant(2, t);
      s.shaped_goal = Vec::Ones(4);
      s.models.push_back(LinearDynamics{Mat::Identity(4, 4), Mat::Ones(4, 2), Vec::Zero(4),
                                        Mat::Identity(4, 4) * 1e-3});
      s.cost = 0.7 * t;
      s.shaping_active = t % 2 == 0;
      roll.trajectory.steps.push_back(s);
    }
    roll.hindsight.horizon = 5;
    roll.hindsight.steps.push_back(HindsightStep{Vec::Ones(2), 2, {Vec::Zero(4)}});
    roll.metrics = {1.5, 0.2, 0.3, true};
    rec.rollouts.push_back(roll);
  }
  const auto path = temp_dir() / "iteration.jsonl";
  io::save_iteration(path, rec);
  const auto back = io::load_iteration(path);
  CHECK(back.iteration == 3);
  CHECK(back.theta == rec.theta);
  CHECK(back.loss_after == rec.loss_after);
  CHECK(back.dataset_size == 42);
  REQUIRE(back.training_trace.size() == 2);
  CHECK(back.training_trace[1].loss == 0.4);
  REQUIRE(back.rollouts.size() == 2);
  for (int r = 0; r < 2; ++r) {
    const auto& a = rec.rollouts[r];
    const auto& b = back.rollouts[r];
    CHECK(b.seed == a.seed);
    CHECK(b.start == a.start);
    CHECK(b.metrics.cumulative_distance == a.metrics.cumulative_distance);
    REQUIRE(b.trajectory.steps.size() == a.trajectory.steps.size());
    for (std::size_t t = 0; t < a.trajectory.steps.size(); ++t) {
      CHECK(b.trajectory.steps[t].state == a.trajectory.steps[t].state);
      CHECK(b.trajectory.steps[t].models == a.trajectory.steps[t].models);
      CHECK(b.trajectory.steps[t].shaping_active == a.trajectory.steps[t].shaping_active);
    }
    CHECK(b.hindsight.steps[0].action == a.hindsight.steps[0].action);
    CHECK(b.hindsight.steps[0].planned_states == a.hindsight.steps[0].planned_states);
  }
}

TEST_CASE("quiver table has one row per grid point and eight columns") {
  const auto net = ShapingNet::initialized({4, 3, 4}, 1);
  Vec goal = Vec::Zero(4);
  goal.head(2) << 0.5, -1.0;
  const auto t = io::quiver_table(net, goal, {-1.0, -1.0}, {1.0, 1.0}, 5);
  CHECK(t.header.size() == 8);
  REQUIRE(t.rows.size() == 25);
  // Zero output layer: the shaped field equals the goal field.
  for (const auto& r : t.rows) {
    CHECK(r[2] == doctest::Approx(r[6]));
    CHECK(r[3] == doctest::Approx(r[7]));
  }
}
