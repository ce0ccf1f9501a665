#pragma once

// Experiment commands behind the `himpc` executable. Each command returns a
// process exit code: 0 success, 1 runtime or I/O failure, 2 configuration
// error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace himpc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

/// Marks directories the tool created; only these are ever wiped.
inline constexpr const char* kOutMarker = ".himpc_out";

struct RunOptions {
  std::optional<std::filesystem::path> config;  // built-in defaults when empty
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  bool overwrite = false;
  bool resume = false;
};

int cmd_run_mpc(const RunOptions& options, std::ostream& log);
int cmd_run_himpc(const RunOptions& options, std::ostream& log);
int cmd_run_ilqg(const RunOptions& options, std::ostream& log);
/// Empty `hbar` keeps the configured values.
int cmd_sweep_hbar(const RunOptions& options, const std::vector<int>& hbar, std::ostream& log);

struct GradcheckCommand {
  std::uint64_t seed = 0;
  int instances = 50;
  bool corrupt_jacobian = false;
};
int cmd_gradcheck(const GradcheckCommand& options, std::ostream& out);

/// Parses argv and dispatches.
int run(int argc, char** argv);

}  // namespace himpc::cli
