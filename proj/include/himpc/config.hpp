#pragma once

// Experiment configuration loaded from YAML. Every key is required and
// unknown keys are rejected, so a config file is always a complete record of
// the run. Errors carry the file name, line and column.

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "himpc/baselines.hpp"
#include "himpc/env2d.hpp"
#include "himpc/himpc.hpp"

namespace himpc {

/// Invalid or incomplete configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct GridSpec {
  Eigen::Vector2d lo = Eigen::Vector2d::Zero();
  Eigen::Vector2d hi = Eigen::Vector2d::Zero();
  int n = 1;
};

struct ExperimentConfig {
  env2d::EnvConfig env;
  HimpcConfig himpc;
  IlqgExperimentConfig ilqg;
  SweepOptions sweep;
  GridSpec test_grid;
  GridSpec quiver;
  std::uint64_t seed = 0;

  /// Built-in defaults; identical to configs/default.yaml.
  static ExperimentConfig defaults();

  /// Cross-field checks (delegates to the module validators).
  void validate() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");

/// YAML text that parse_config reads back into the same configuration.
std::string dump_config(const ExperimentConfig& config);

}  // namespace himpc
