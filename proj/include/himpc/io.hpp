#pragma once

// Files written by the experiment commands: numeric CSV tables with fixed
// column orders and versioned JSON snapshots. Doubles are written in their
// shortest round-trip form, so every file reads back bit-identically.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "himpc/baselines.hpp"
#include "himpc/gmm.hpp"
#include "himpc/himpc.hpp"
#include "himpc/shaping.hpp"

namespace himpc::io {

inline constexpr int kFormatVersion = 1;

// ---- CSV -----------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

std::string format_double(double v);

void write_csv(const std::filesystem::path& path, const CsvTable& table);
/// Throws IoError on unreadable files, ragged rows, non-numeric cells, or a
/// header different from `expected_header` (when non-empty).
CsvTable read_csv(const std::filesystem::path& path,
                  const std::vector<std::string>& expected_header = {});

/// iteration, rollout, cumulative_distance, min_distance, final_distance,
/// success, loss_before, loss_after
const std::vector<std::string>& metrics_columns();
/// iteration, lbfgs_iteration, loss, grad_norm, seconds
const std::vector<std::string>& trace_columns();
/// x, y, vx, vy of the shaped-goal field, then of the true-goal field
const std::vector<std::string>& quiver_columns();
/// hbar, position_x, position_y, mean, std, trials
const std::vector<std::string>& sweep_columns();

void append_metrics_rows(CsvTable& table, const IterationRecord& record);
/// Loss columns carry the noise-free episode cost before and after the update.
void append_metrics_rows(CsvTable& table, const IlqgRunRecord& record);
void append_trace_rows(CsvTable& table, const IterationRecord& record);
CsvTable sweep_table(const std::vector<SweepCell>& cells);

/// Arrows from every grid position (zero velocity) to the shaped goal and to
/// the true goal.
CsvTable quiver_table(const ShapingNet& net, const Vec& goal, const Eigen::Vector2d& lo,
                      const Eigen::Vector2d& hi, int n);

// ---- JSON ----------------------------------------------------------------

nlohmann::json to_json(const Vec& v);
nlohmann::json to_json(const Mat& m);
Vec vec_from_json(const nlohmann::json& j);
Mat mat_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ShapingNet& net);
ShapingNet net_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GmmPrior& prior);
GmmPrior prior_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrajectoryInfo& info);
TrajectoryInfo trajectory_from_json(const nlohmann::json& j);

nlohmann::json to_json(const HindsightPlan& plan);
HindsightPlan hindsight_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RolloutRecord& r);
RolloutRecord rollout_from_json(const nlohmann::json& j);

/// Summary line of an iteration (everything except the rollouts).
nlohmann::json iteration_header(const IterationRecord& record);

/// One header line followed by one line per rollout.
void save_iteration(const std::filesystem::path& path, const IterationRecord& record);
IterationRecord load_iteration(const std::filesystem::path& path);

void save_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace himpc::io
