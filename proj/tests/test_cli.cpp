#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "himpc/config.hpp"
#include "himpc/io.hpp"

using namespace himpc;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory, removed on destruction.
struct Scratch {
  fs::path root;
  Scratch() {
    static int counter = 0;
    root = fs::temp_directory_path() /
           ("himpc_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  [[nodiscard]] fs::path operator/(const std::string& name) const { return root / name; }
};

ExperimentConfig small_config() {
  auto c = ExperimentConfig::defaults();
  c.env.episode_length = 80;
  c.himpc.iterations = 3;
  c.himpc.rollouts_per_iteration = 2;
  c.himpc.success_gate = 1;
  c.himpc.prior.components = 4;
  c.himpc.hindsight_horizon = 15;
  c.himpc.hidden_layers = {6};
  c.himpc.train.lbfgs.max_iterations = 10;
  c.himpc.train.stride = 4;
  c.ilqg.solver.iterations = 2;
  c.sweep.hbar_values = {5};
  c.sweep.train_positions = {Eigen::Vector2d(-1.5, 1.5)};
  c.sweep.test_positions.clear();
  c.test_grid = {Eigen::Vector2d(-2.0, 1.0), Eigen::Vector2d(-1.0, 2.0), 2};
  c.sweep.trials = 1;
  c.quiver = {Eigen::Vector2d(-1.0, -1.0), Eigen::Vector2d(1.0, 1.0), 3};
  return c;
}

fs::path write_config(const fs::path& path, const ExperimentConfig& c) {
  std::ofstream(path) << dump_config(c);
  return path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

cli::RunOptions options(const fs::path& config, const fs::path& out) {
  cli::RunOptions o;
  o.config = config;
  o.out = out;
  return o;
}

int run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "himpc");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("run-himpc writes the documented outputs") {
  Scratch dir;
  const auto cfg = small_config();
  const auto out = dir / "run";
  std::ostringstream log;
  REQUIRE(cli::cmd_run_himpc(options(write_config(dir / "c.yaml", cfg), out), log) == cli::kExitOk);

  CHECK(fs::exists(out / cli::kOutMarker));
  CHECK(parse_config(slurp(out / "config.yaml")).himpc.iterations == cfg.himpc.iterations);
  const auto metrics = io::read_csv(out / "metrics.csv", io::metrics_columns());
  CHECK(metrics.rows.size() ==
        static_cast<std::size_t>(cfg.himpc.iterations * cfg.himpc.rollouts_per_iteration));
  for (std::size_t i = 0; i < metrics.rows.size(); ++i) {
    CHECK(metrics.rows[i][0] == static_cast<double>(i / 2));
    CHECK(metrics.rows[i][1] == static_cast<double>(i % 2));
  }
  (void)io::read_csv(out / "training_trace.csv", io::trace_columns());
  for (int k = 0; k <= cfg.himpc.iterations; ++k) {
    CHECK(fs::exists(out / "snapshots" / ("theta_" + std::to_string(k) + ".json")));
  }
  for (int k = 0; k < cfg.himpc.iterations; ++k) {
    CHECK(fs::exists(out / "iterations" / ("iteration_" + std::to_string(k) + ".jsonl")));
    CHECK(fs::exists(out / "snapshots" / ("prior_" + std::to_string(k) + ".json")));
  }
  const auto quiver = io::read_csv(out / "quiver.csv", io::quiver_columns());
  CHECK(quiver.rows.size() == 9);
  for (const auto& row : quiver.rows) CHECK(row.size() == 8);
}

TEST_CASE("resuming a truncated run reproduces the full run") {
  Scratch dir;
  const auto cfg = small_config();
  const auto config = write_config(dir / "c.yaml", cfg);
  std::ostringstream log;
  REQUIRE(cli::cmd_run_himpc(options(config, dir / "full"), log) == cli::kExitOk);
  REQUIRE(cli::cmd_run_himpc(options(config, dir / "cut"), log) == cli::kExitOk);

  // Simulate an interruption during the last iteration.
  const int last = cfg.himpc.iterations - 1;
  fs::remove(dir / "cut" / "iterations" / ("iteration_" + std::to_string(last) + ".jsonl"));
  fs::remove(dir / "cut" / "snapshots" / ("theta_" + std::to_string(last + 1) + ".json"));
  fs::remove(dir / "cut" / "quiver.csv");

  auto resume = options(config, dir / "cut");
  resume.resume = true;
  std::ostringstream rlog;
  REQUIRE(cli::cmd_run_himpc(resume, rlog) == cli::kExitOk);
  CHECK(rlog.str().find("resumed after " + std::to_string(last)) != std::string::npos);
  CHECK(slurp(dir / "cut" / "metrics.csv") == slurp(dir / "full" / "metrics.csv"));
  const std::string theta = "snapshots/theta_" + std::to_string(last + 1) + ".json";
  CHECK(slurp(dir / "cut" / theta) == slurp(dir / "full" / theta));
  CHECK(slurp(dir / "cut" / "quiver.csv") == slurp(dir / "full" / "quiver.csv"));

  // A different configuration cannot resume into this directory.
  auto other = cfg;
  other.himpc.hindsight_horizon += 1;
  auto mismatch = options(write_config(dir / "other.yaml", other), dir / "cut");
  mismatch.resume = true;
  CHECK(cli::cmd_run_himpc(mismatch, log) == cli::kExitConfig);
}

TEST_CASE("output directories are never clobbered by accident") {
  Scratch dir;
  const auto config = write_config(dir / "c.yaml", small_config());
  std::ostringstream log;

  const auto foreign = dir / "foreign";
  fs::create_directories(foreign);
  std::ofstream(foreign / "keep.txt") << "data";
  auto o = options(config, foreign);
  CHECK(cli::cmd_run_mpc(o, log) == cli::kExitFailure);
  o.overwrite = true;
  CHECK(cli::cmd_run_mpc(o, log) == cli::kExitFailure);
  CHECK(fs::exists(foreign / "keep.txt"));

  const auto mine = dir / "mine";
  REQUIRE(cli::cmd_run_mpc(options(config, mine), log) == cli::kExitOk);
  CHECK(cli::cmd_run_mpc(options(config, mine), log) == cli::kExitFailure);
  auto again = options(config, mine);
  again.overwrite = true;
  CHECK(cli::cmd_run_mpc(again, log) == cli::kExitOk);
  CHECK_FALSE(fs::exists(mine / "snapshots"));
}

TEST_CASE("configuration and I/O failures map to distinct exit codes") {
  Scratch dir;
  std::ostringstream log;
  std::string text = dump_config(small_config());
  const auto pos = text.find("seed: 0");
  REQUIRE(pos != std::string::npos);
  text.erase(pos, 7);
  std::ofstream(dir / "missing.yaml") << text;
  CHECK(cli::cmd_run_mpc(options(dir / "missing.yaml", dir / "a"), log) == cli::kExitConfig);
  CHECK(log.str().find("seed") != std::string::npos);

  std::ofstream(dir / "bad.yaml") << "env: [1, 2\n";
  CHECK(cli::cmd_run_mpc(options(dir / "bad.yaml", dir / "b"), log) == cli::kExitConfig);

  // The output path runs through a regular file, so it cannot be created.
  const auto config = write_config(dir / "c.yaml", small_config());
  std::ofstream(dir / "file") << "x";
  CHECK(cli::cmd_run_mpc(options(config, dir / "file" / "out"), log) == cli::kExitFailure);

  CHECK(run_args({"run-mpc"}) == cli::kExitConfig);
  CHECK(run_args({"run-mpc", "--out", (dir / "x").string(), "--no-such-flag"}) ==
        cli::kExitConfig);
  CHECK(run_args({"run-mpc", "--config", (dir / "absent.yaml").string(), "--out",
                  (dir / "y").string()}) == cli::kExitConfig);
  CHECK(run_args({}) == cli::kExitConfig);
}

TEST_CASE("run-mpc and run-ilqg emit the metrics schema") {
  Scratch dir;
  const auto cfg = small_config();
  const auto config = write_config(dir / "c.yaml", cfg);
  std::ostringstream log;
  REQUIRE(cli::cmd_run_mpc(options(config, dir / "mpc"), log) == cli::kExitOk);
  const auto mpc = io::read_csv(dir / "mpc" / "metrics.csv", io::metrics_columns());
  CHECK(mpc.rows.size() ==
        static_cast<std::size_t>(cfg.himpc.iterations * cfg.himpc.rollouts_per_iteration));
  CHECK_FALSE(fs::exists(dir / "mpc" / "quiver.csv"));

  REQUIRE(cli::cmd_run_ilqg(options(config, dir / "ilqg"), log) == cli::kExitOk);
  const auto ilqg = io::read_csv(dir / "ilqg" / "metrics.csv", io::metrics_columns());
  CHECK(ilqg.rows.size() ==
        static_cast<std::size_t>(cfg.ilqg.solver.iterations * cfg.ilqg.solver.rollouts));
}

TEST_CASE("sweep-hbar writes one row per H_bar and test position") {
  Scratch dir;
  auto cfg = small_config();
  cfg.himpc.iterations = 1;
  const auto config = write_config(dir / "c.yaml", cfg);
  std::ostringstream log;
  REQUIRE(cli::cmd_sweep_hbar(options(config, dir / "sweep"), {4, 8}, log) == cli::kExitOk);
  const auto t = io::read_csv(dir / "sweep" / "sweep.csv", io::sweep_columns());
  // Two learners plus the baseline, over a 2 x 2 test grid.
  CHECK(t.rows.size() == 3 * 4);
  CHECK(parse_config(slurp(dir / "sweep" / "config.yaml")).sweep.hbar_values ==
        std::vector<int>{4, 8});
}

TEST_CASE("gradcheck exit status follows the verdict") {
  std::ostringstream out;
  cli::GradcheckCommand ok;
  ok.instances = 5;
  CHECK(cli::cmd_gradcheck(ok, out) == cli::kExitOk);
  CHECK(out.str().find("PASS") != std::string::npos);
  cli::GradcheckCommand bad = ok;
  bad.corrupt_jacobian = true;
  std::ostringstream out2;
  CHECK(cli::cmd_gradcheck(bad, out2) == cli::kExitFailure);
  CHECK(out2.str().find("FAIL") != std::string::npos);
}
