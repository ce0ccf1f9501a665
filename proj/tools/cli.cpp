#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <system_error>

#include "himpc/baselines.hpp"
#include "himpc/config.hpp"
#include "himpc/gradcheck.hpp"
#include "himpc/himpc.hpp"
#include "himpc/io.hpp"

namespace himpc::cli {
namespace fs = std::filesystem;

namespace {

ExperimentConfig resolve_config(const RunOptions& o) {
  ExperimentConfig c = o.config ? load_config(*o.config) : ExperimentConfig::defaults();
  if (o.seed) {
    c.seed = *o.seed;
    c.himpc.seed = c.himpc.train.seed = c.ilqg.solver.seed = c.seed;
  }
  c.validate();
  return c;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
  out.close();
  if (!out) throw IoError("cannot write " + p.string());
}

/// Writes via a temporary file so an interrupted run never leaves a
/// truncated file under the final name.
template <class Fn>
void write_atomically(const fs::path& p, Fn&& write) {
  const fs::path tmp = p.string() + ".tmp";
  write(tmp);
  fs::rename(tmp, p);
}

/// Creates or validates the output directory. Returns true when existing
/// results should be resumed.
bool prepare_out_dir(const RunOptions& o) {
  if (o.out.empty()) throw InvalidArgument("--out is required");
  const fs::path marker = o.out / kOutMarker;
  if (fs::exists(o.out)) {
    if (!fs::is_directory(o.out)) throw IoError(o.out.string() + " is not a directory");
    if (!fs::is_empty(o.out)) {
      if (!fs::exists(marker)) {
        throw IoError(o.out.string() + " is not empty and was not created by this tool; refusing to touch it");
      }
      if (o.resume) return true;
      if (!o.overwrite) {
        throw IoError(o.out.string() + " is not empty; pass --overwrite to replace or --resume to continue");
      }
      for (const auto& entry : fs::directory_iterator(o.out)) fs::remove_all(entry.path());
    }
  } else {
    fs::create_directories(o.out);
  }
  write_text(marker, "");
  return false;
}

void write_config(const RunOptions& o, const ExperimentConfig& c, bool resuming) {
  const fs::path p = o.out / "config.yaml";
  const std::string text = dump_config(c);
  if (resuming && fs::exists(p)) {
    if (read_text(p) != text) {
      throw ConfigError(p.string() + ": configuration differs from the run being resumed");
    }
    return;
  }
  write_text(p, text);
}

fs::path iteration_path(const fs::path& out, int k) {
  return out / "iterations" / ("iteration_" + std::to_string(k) + ".jsonl");
}
fs::path theta_path(const fs::path& out, int k) {
  return out / "snapshots" / ("theta_" + std::to_string(k) + ".json");
}
fs::path prior_path(const fs::path& out, int k) {
  return out / "snapshots" / ("prior_" + std::to_string(k) + ".json");
}

/// Shared loop of run-mpc (learn = false) and run-himpc.
int run_learning(const RunOptions& o, bool learn, std::ostream& log) {
  ExperimentConfig c = resolve_config(o);
  c.himpc.learn = learn;
  const bool resuming = prepare_out_dir(o);
  write_config(o, c, resuming);
  fs::create_directories(o.out / "iterations");
  if (learn) fs::create_directories(o.out / "snapshots");

  HimpcRunner runner(c.env, c.himpc);
  std::vector<IterationRecord> records;

  if (resuming) {
    // Replay every iteration whose follow-up parameters were saved.
    for (int k = 0; k < c.himpc.iterations; ++k) {
      const fs::path it = iteration_path(o.out, k);
      const fs::path next = theta_path(o.out, k + 1);
      if (!fs::exists(it) || (learn && !fs::exists(next))) break;
      IterationRecord rec = io::load_iteration(it);
      std::optional<Vec> next_theta;
      if (learn) next_theta = io::net_from_json(io::load_json(next)).params();
      runner.replay_iteration(rec, next_theta);
      records.push_back(std::move(rec));
    }
    log << "resumed after " << records.size() << " iteration(s)\n";
  }
  if (learn && records.empty()) {
    write_atomically(theta_path(o.out, 0),
                     [&](const fs::path& p) { io::save_json(p, io::to_json(runner.net())); });
  }

  auto write_tables = [&] {
    io::CsvTable metrics{io::metrics_columns(), {}};
    io::CsvTable trace{io::trace_columns(), {}};
    for (const auto& r : records) {
      io::append_metrics_rows(metrics, r);
      io::append_trace_rows(trace, r);
    }
    write_atomically(o.out / "metrics.csv", [&](const fs::path& p) { io::write_csv(p, metrics); });
    if (learn) {
      write_atomically(o.out / "training_trace.csv",
                       [&](const fs::path& p) { io::write_csv(p, trace); });
    }
  };

  while (runner.next_iteration() < c.himpc.iterations) {
    IterationRecord rec = runner.run_iteration();
    const int k = rec.iteration;
    write_atomically(iteration_path(o.out, k),
                     [&](const fs::path& p) { io::save_iteration(p, rec); });
    if (learn) {
      write_atomically(prior_path(o.out, k),
                       [&](const fs::path& p) { io::save_json(p, io::to_json(runner.prior())); });
      write_atomically(theta_path(o.out, k + 1),
                       [&](const fs::path& p) { io::save_json(p, io::to_json(runner.net())); });
    }
    log << "iteration " << k << ": cumulative distance " << rec.mean.cumulative_distance
        << ", success rate " << rec.success_rate << (rec.trained ? ", trained" : "") << '\n';
    records.push_back(std::move(rec));
    write_tables();
  }
  write_tables();
  if (learn) {
    const io::CsvTable q =
        io::quiver_table(runner.net(), runner.cost().goal, c.quiver.lo, c.quiver.hi, c.quiver.n);
    write_atomically(o.out / "quiver.csv", [&](const fs::path& p) { io::write_csv(p, q); });
  }
  return kExitOk;
}

template <class Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    log << "I/O error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const IoError& e) {
    log << "I/O error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace

int cmd_run_mpc(const RunOptions& options, std::ostream& log) {
  return guarded(log, [&] { return run_learning(options, false, log); });
}

int cmd_run_himpc(const RunOptions& options, std::ostream& log) {
  return guarded(log, [&] { return run_learning(options, true, log); });
}

int cmd_run_ilqg(const RunOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    const ExperimentConfig c = resolve_config(options);
    if (options.resume) throw InvalidArgument("run-ilqg does not support --resume");
    prepare_out_dir(options);
    write_config(options, c, false);
    const auto records =
        run_ilqg_experiment(c.env, c.himpc.cost.make(c.env.goal), c.ilqg);
    io::CsvTable metrics{io::metrics_columns(), {}};
    for (const auto& r : records) {
      io::append_metrics_rows(metrics, r);
      log << "iteration " << r.iteration << ": cost " << r.cost_before << " -> " << r.cost_after
          << (r.accepted ? "" : " (rejected)") << '\n';
    }
    io::write_csv(options.out / "metrics.csv", metrics);
    return kExitOk;
  });
}

int cmd_sweep_hbar(const RunOptions& options, const std::vector<int>& hbar, std::ostream& log) {
  return guarded(log, [&] {
    ExperimentConfig c = resolve_config(options);
    if (!hbar.empty()) c.sweep.hbar_values = hbar;
    c.validate();
    if (options.resume) throw InvalidArgument("sweep-hbar does not support --resume");
    prepare_out_dir(options);
    write_config(options, c, false);
    const auto cells = sweep_hbar(c.env, c.himpc, c.sweep);
    io::write_csv(options.out / "sweep.csv", io::sweep_table(cells));
    log << "wrote " << cells.size() << " cells\n";
    return kExitOk;
  });
}

int cmd_gradcheck(const GradcheckCommand& options, std::ostream& out) {
  return guarded(out, [&] {
    GradcheckOptions g;
    g.seed = options.seed;
    g.instances = options.instances;
    g.corrupt_goal_jacobian = options.corrupt_jacobian;
    const GradcheckReport r = run_gradcheck(g);
    out << "instances " << r.instances << '\n'
        << "goal_jacobian_error " << io::format_double(r.goal_jacobian_error) << " (tol "
        << GradcheckReport::kGoalTolerance << ")\n"
        << "param_jacobian_error " << io::format_double(r.param_jacobian_error) << " (tol "
        << GradcheckReport::kParamTolerance << ")\n"
        << "loss_gradient_error " << io::format_double(r.loss_gradient_error) << " (tol "
        << GradcheckReport::kParamTolerance << ")\n"
        << (r.passed() ? "PASS" : "FAIL") << '\n';
    return r.passed() ? kExitOk : kExitFailure;
  });
}

int run(int argc, char** argv) {
  CLI::App app{"Hindsight iterative MPC experiments"};
  app.require_subcommand(1);
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "More log output (repeatable)");

  RunOptions run_opts;
  std::uint64_t seed = 0;
  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", run_opts.config, "YAML config (built-in defaults when omitted)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", run_opts.out, "Output directory")->required();
    cmd->add_option("--seed", run_opts.seed, "Override the config seed");
    cmd->add_flag("--overwrite", run_opts.overwrite, "Replace an existing output directory");
    cmd->add_flag("--resume", run_opts.resume, "Continue from the files in the output directory");
  };
  auto* mpc = app.add_subcommand("run-mpc", "Baseline MPC episodes");
  add_run_flags(mpc);
  auto* him = app.add_subcommand("run-himpc", "Hindsight-trained shaped MPC");
  add_run_flags(him);
  auto* ilqg = app.add_subcommand("run-ilqg", "Full-horizon iLQR baseline");
  add_run_flags(ilqg);
  auto* sweep = app.add_subcommand("sweep-hbar", "Hindsight-horizon sweep on a grid of starts");
  add_run_flags(sweep);
  std::vector<int> hbar;
  sweep->add_option("--hbar", hbar, "Hindsight horizons (overrides the config)")->delimiter(',');

  GradcheckCommand grad;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference derivative checks");
  gc->add_option("--seed", seed, "Random seed");
  gc->add_option("--instances", grad.instances, "Random instances")->check(CLI::PositiveNumber);
  gc->add_flag("--corrupt-jacobian", grad.corrupt_jacobian)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  set_log_level(verbosity >= 2 ? LogLevel::Debug : verbosity == 1 ? LogLevel::Info : LogLevel::Warn);

  if (run_opts.overwrite && run_opts.resume) {
    std::cerr << "--overwrite and --resume are mutually exclusive\n";
    return kExitConfig;
  }
  if (*mpc) return cmd_run_mpc(run_opts, std::cerr);
  if (*him) return cmd_run_himpc(run_opts, std::cerr);
  if (*ilqg) return cmd_run_ilqg(run_opts, std::cerr);
  if (*sweep) return cmd_sweep_hbar(run_opts, hbar, std::cerr);
  grad.seed = seed;
  return cmd_gradcheck(grad, std::cout);
}

}  // namespace himpc::cli
