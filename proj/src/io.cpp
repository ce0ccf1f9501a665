#include "himpc/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace himpc::io {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) cells.push_back(cell);
  if (!line.empty() && line.back() == sep) cells.emplace_back();
  return cells;
}

void require_version(const json& j, const char* what) {
  const int v = j.at("version").get<int>();
  if (v != kFormatVersion) {
    throw IoError(std::string(what) + ": unsupported format version " + std::to_string(v));
  }
}

json metrics_json(const EpisodeMetrics& m) {
  return {{"cumulative_distance", m.cumulative_distance},
          {"min_distance", m.min_distance},
          {"final_distance", m.final_distance},
          {"success", m.success}};
}

EpisodeMetrics metrics_from_json(const json& j) {
  EpisodeMetrics m;
  m.cumulative_distance = j.at("cumulative_distance").get<double>();
  m.min_distance = j.at("min_distance").get<double>();
  m.final_distance = j.at("final_distance").get<double>();
  m.success = j.at("success").get<bool>();
  return m;
}

json vec_list(const std::vector<Vec>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back(to_json(v));
  return a;
}

std::vector<Vec> vec_list_from(const json& j) {
  std::vector<Vec> out;
  for (const auto& e : j) out.push_back(vec_from_json(e));
  return out;
}

}  // namespace

// ---- CSV -----------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    out << (i ? "," : "") << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw DimensionError("write_csv: row has " + std::to_string(row.size()) + " cells, header " +
                           std::to_string(table.header.size()));
    }
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
  finish(out, path);
}

CsvTable read_csv(const std::filesystem::path& path,
                  const std::vector<std::string>& expected_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  table.header = split(line, ',');
  if (!expected_header.empty() && table.header != expected_header) {
    throw IoError(path.string() + ": unexpected header '" + line + "'");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != table.header.size()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(table.header.size()) + " cells, got " +
                    std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const char* b = cells[i].data();
      const char* e = b + cells[i].size();
      const auto res = std::from_chars(b, e, row[i]);
      if (res.ec != std::errc() || res.ptr != e) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": not a number: '" +
                      cells[i] + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> c = {
      "iteration",      "rollout", "cumulative_distance", "min_distance", "final_distance",
      "success", "loss_before", "loss_after"};
  return c;
}

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> c = {"iteration", "lbfgs_iteration", "loss", "grad_norm",
                                             "seconds"};
  return c;
}

const std::vector<std::string>& quiver_columns() {
  static const std::vector<std::string> c = {"shaped_x", "shaped_y", "shaped_vx", "shaped_vy",
                                             "goal_x",   "goal_y",   "goal_vx",   "goal_vy"};
  return c;
}

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> c = {"hbar", "position_x", "position_y",
                                             "mean", "std",        "trials"};
  return c;
}

void append_metrics_rows(CsvTable& table, const IterationRecord& record) {
  for (std::size_t r = 0; r < record.rollouts.size(); ++r) {
    const auto& m = record.rollouts[r].metrics;
    table.rows.push_back({static_cast<double>(record.iteration), static_cast<double>(r),
                          m.cumulative_distance, m.min_distance, m.final_distance,
                          m.success ? 1.0 : 0.0, record.loss_before, record.loss_after});
  }
}

void append_metrics_rows(CsvTable& table, const IlqgRunRecord& record) {
  for (std::size_t r = 0; r < record.metrics.size(); ++r) {
    const auto& m = record.metrics[r];
    table.rows.push_back({static_cast<double>(record.iteration), static_cast<double>(r),
                          m.cumulative_distance, m.min_distance, m.final_distance,
                          m.success ? 1.0 : 0.0, record.cost_before, record.cost_after});
  }
}

void append_trace_rows(CsvTable& table, const IterationRecord& record) {
  for (const auto& e : record.training_trace) {
    table.rows.push_back({static_cast<double>(record.iteration), static_cast<double>(e.iteration),
                          e.loss, e.grad_norm, e.seconds});
  }
}

CsvTable sweep_table(const std::vector<SweepCell>& cells) {
  CsvTable t{sweep_columns(), {}};
  for (const auto& c : cells) {
    t.rows.push_back({static_cast<double>(c.hbar), c.position.x(), c.position.y(), c.mean,
                      c.stddev, static_cast<double>(c.samples.size())});
  }
  return t;
}

CsvTable quiver_table(const ShapingNet& net, const Vec& goal, const Eigen::Vector2d& lo,
                      const Eigen::Vector2d& hi, int n) {
  CsvTable t{quiver_columns(), {}};
  for (const auto& p : grid_positions(lo, hi, n)) {
    Vec x = Vec::Zero(goal.size());
    x.head(2) = p;
    const Vec shaped = shaped_goal(net, x, goal);
    t.rows.push_back({p.x(), p.y(), shaped(0) - p.x(), shaped(1) - p.y(), p.x(), p.y(),
                      goal(0) - p.x(), goal(1) - p.y()});
  }
  return t;
}

// ---- JSON ----------------------------------------------------------------

json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Mat& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Vec vec_from_json(const json& j) {
  const auto d = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(d.data(), static_cast<Eigen::Index>(d.size()));
}

Mat mat_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto d = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(d.size()) != rows * cols) throw IoError("matrix: size mismatch");
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = d[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

json to_json(const ShapingNet& net) {
  return {{"version", kFormatVersion},
          {"layer_sizes", net.layer_sizes()},
          {"input_indices", net.input_indices()},
          {"theta", to_json(net.params())}};
}

ShapingNet net_from_json(const json& j) {
  require_version(j, "shaping parameters");
  ShapingNet net(j.at("layer_sizes").get<std::vector<int>>(),
                 j.at("input_indices").get<std::vector<int>>());
  net.set_params(vec_from_json(j.at("theta")));
  return net;
}

json to_json(const GmmPrior& prior) {
  json comps = json::array();
  for (const auto& c : prior.components()) {
    comps.push_back(
        {{"weight", c.weight}, {"mean", to_json(c.mean)}, {"covariance", to_json(c.covariance)}});
  }
  return {{"version", kFormatVersion},
          {"conditioning_dim", prior.conditioning_dim()},
          {"pseudo_count", prior.pseudo_count()},
          {"components", comps}};
}

GmmPrior prior_from_json(const json& j) {
  require_version(j, "GMM prior");
  std::vector<GmmComponent> comps;
  for (const auto& c : j.at("components")) {
    comps.push_back(GmmComponent{c.at("weight").get<double>(), vec_from_json(c.at("mean")),
                                 mat_from_json(c.at("covariance"))});
  }
  return GmmPrior(std::move(comps), j.at("conditioning_dim").get<int>(),
                  j.at("pseudo_count").get<double>());
}

json to_json(const TrajectoryInfo& info) {
  json steps = json::array();
  for (const auto& s : info.steps) {
    json models = json::array();
    for (const auto& f : s.models) {
      models.push_back(
          {{"A", to_json(f.A)}, {"B", to_json(f.B)}, {"c", to_json(f.c)}, {"W", to_json(f.W)}});
    }
    steps.push_back({{"state", to_json(s.state)},
                     {"planned", to_json(s.planned)},
                     {"unshaped", to_json(s.unshaped)},
                     {"noise", to_json(s.noise)},
                     {"control", to_json(s.control)},
                     {"applied", to_json(s.applied)},
                     {"shaped_goal", to_json(s.shaped_goal)},
                     {"models", models},
                     {"cost", s.cost},
                     {"shaped_delta", s.shaped_delta},
                     {"shaping_active", s.shaping_active}});
  }
  return {{"horizon", info.horizon}, {"goal", to_json(info.goal)}, {"steps", steps}};
}

TrajectoryInfo trajectory_from_json(const json& j) {
  TrajectoryInfo info;
  info.horizon = j.at("horizon").get<int>();
  info.goal = vec_from_json(j.at("goal"));
  for (const auto& s : j.at("steps")) {
    StepRecord r;
    r.state = vec_from_json(s.at("state"));
    r.planned = vec_from_json(s.at("planned"));
    r.unshaped = vec_from_json(s.at("unshaped"));
    r.noise = vec_from_json(s.at("noise"));
    r.control = vec_from_json(s.at("control"));
    r.applied = vec_from_json(s.at("applied"));
    r.shaped_goal = vec_from_json(s.at("shaped_goal"));
    for (const auto& f : s.at("models")) {
      r.models.push_back(LinearDynamics{mat_from_json(f.at("A")), mat_from_json(f.at("B")),
                                        vec_from_json(f.at("c")), mat_from_json(f.at("W"))});
    }
    r.cost = s.at("cost").get<double>();
    r.shaped_delta = s.at("shaped_delta").get<double>();
    r.shaping_active = s.at("shaping_active").get<bool>();
    info.steps.push_back(std::move(r));
  }
  return info;
}

json to_json(const HindsightPlan& plan) {
  json steps = json::array();
  for (const auto& s : plan.steps) {
    steps.push_back({{"action", to_json(s.action)},
                     {"effective_horizon", s.effective_horizon},
                     {"planned_states", vec_list(s.planned_states)}});
  }
  return {{"horizon", plan.horizon}, {"steps", steps}};
}

HindsightPlan hindsight_from_json(const json& j) {
  HindsightPlan plan;
  plan.horizon = j.at("horizon").get<int>();
  for (const auto& s : j.at("steps")) {
    plan.steps.push_back(HindsightStep{vec_from_json(s.at("action")),
                                       s.at("effective_horizon").get<int>(),
                                       vec_list_from(s.at("planned_states"))});
  }
  return plan;
}

json to_json(const RolloutRecord& r) {
  return {{"seed", r.seed},
          {"start", to_json(Vec(r.start))},
          {"metrics", metrics_json(r.metrics)},
          {"trajectory", to_json(r.trajectory)},
          {"hindsight", to_json(r.hindsight)}};
}

RolloutRecord rollout_from_json(const json& j) {
  RolloutRecord r;
  r.seed = j.at("seed").get<std::uint64_t>();
  const Vec start = vec_from_json(j.at("start"));
  if (start.size() != 2) throw IoError("rollout: start must have 2 entries");
  r.start = start;
  r.metrics = metrics_from_json(j.at("metrics"));
  r.trajectory = trajectory_from_json(j.at("trajectory"));
  r.hindsight = hindsight_from_json(j.at("hindsight"));
  return r;
}

json iteration_header(const IterationRecord& rec) {
  json trace = json::array();
  for (const auto& e : rec.training_trace) {
    trace.push_back({{"iteration", e.iteration},
                     {"loss", e.loss},
                     {"grad_norm", e.grad_norm},
                     {"seconds", e.seconds}});
  }
  return {{"version", kFormatVersion},
          {"iteration", rec.iteration},
          {"theta", to_json(rec.theta)},
          {"rollouts", rec.rollouts.size()},
          {"mean", metrics_json(rec.mean)},
          {"success_rate", rec.success_rate},
          {"trained", rec.trained},
          {"loss_before", rec.loss_before},
          {"loss_after", rec.loss_after},
          {"dataset_size", rec.dataset_size},
          {"training_trace", trace}};
}

void save_iteration(const std::filesystem::path& path, const IterationRecord& rec) {
  auto out = open_out(path);
  out << iteration_header(rec).dump() << '\n';
  for (const auto& r : rec.rollouts) out << to_json(r).dump() << '\n';
  finish(out, path);
}

IterationRecord load_iteration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  IterationRecord rec;
  try {
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    const json h = json::parse(line);
    require_version(h, "iteration record");
    rec.iteration = h.at("iteration").get<int>();
    rec.theta = vec_from_json(h.at("theta"));
    rec.mean = metrics_from_json(h.at("mean"));
    rec.success_rate = h.at("success_rate").get<double>();
    rec.trained = h.at("trained").get<bool>();
    rec.loss_before = h.at("loss_before").get<double>();
    rec.loss_after = h.at("loss_after").get<double>();
    rec.dataset_size = h.at("dataset_size").get<std::size_t>();
    for (const auto& e : h.at("training_trace")) {
      rec.training_trace.push_back(LbfgsTraceEntry{e.at("iteration").get<int>(),
                                                   e.at("loss").get<double>(),
                                                   e.at("grad_norm").get<double>(),
                                                   e.at("seconds").get<double>()});
    }
    const auto n = h.at("rollouts").get<std::size_t>();
    while (std::getline(in, line)) {
      if (!line.empty()) rec.rollouts.push_back(rollout_from_json(json::parse(line)));
    }
    if (rec.rollouts.size() != n) {
      throw IoError(path.string() + ": expected " + std::to_string(n) + " rollouts, found " +
                    std::to_string(rec.rollouts.size()));
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return rec;
}

void save_json(const std::filesystem::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(1) << '\n';
  finish(out, path);
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace himpc::io
