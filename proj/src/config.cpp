#include "himpc/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "himpc/io.hpp"

namespace himpc {

namespace {

std::string where(const std::string& source, const YAML::Mark& mark) {
  if (mark.is_null()) return source;
  return source + ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
}

/// A YAML mapping whose keys are consumed one by one; finish() rejects the rest.
class Section {
 public:
  Section(YAML::Node node, std::string path, const std::string& source)
      : node_(std::move(node)), path_(std::move(path)), source_(source) {
    if (!node_.IsMap()) fail(node_, "expected a mapping");
  }

  template <class T>
  T get(const std::string& key) {
    const YAML::Node n = child(key);
    return convert<T>(n, qualified(key));
  }

  Section section(const std::string& key) { return Section(child(key), qualified(key), source_); }

  std::vector<Section> sections(const std::string& key) {
    const YAML::Node n = child(key);
    if (!n.IsSequence()) fail(n, "'" + qualified(key) + "' must be a list");
    std::vector<Section> out;
    for (std::size_t i = 0; i < n.size(); ++i) {
      out.emplace_back(n[i], qualified(key) + "[" + std::to_string(i) + "]", source_);
    }
    return out;
  }

  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) fail(kv.first, "unknown key '" + qualified(key) + "'");
    }
  }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    throw ConfigError(where(source_, at.Mark()) + ": " + msg);
  }

 private:
  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  YAML::Node child(const std::string& key) {
    seen_.insert(key);
    const YAML::Node& cnode = node_;
    const YAML::Node n = cnode[key];
    if (!n.IsDefined() || n.IsNull()) fail(node_, "missing key '" + qualified(key) + "'");
    return n;
  }

  template <class T>
  T convert(const YAML::Node& n, const std::string& name) const {
    if constexpr (std::is_same_v<T, Eigen::Vector2d>) {
      const auto v = convert<std::vector<double>>(n, name);
      if (v.size() != 2) fail(n, "'" + name + "' must have 2 entries");
      return Eigen::Vector2d(v[0], v[1]);
    } else if constexpr (std::is_same_v<T, std::vector<Eigen::Vector2d>>) {
      if (!n.IsSequence()) fail(n, "'" + name + "' must be a list of [x, y] pairs");
      std::vector<Eigen::Vector2d> out;
      for (std::size_t i = 0; i < n.size(); ++i) {
        out.push_back(convert<Eigen::Vector2d>(n[i], name + "[" + std::to_string(i) + "]"));
      }
      return out;
    } else {
      try {
        return n.as<T>();
      } catch (const YAML::Exception&) {
        fail(n, "'" + name + "' has the wrong type");
      }
    }
  }

  YAML::Node node_;
  std::string path_;
  const std::string& source_;
  std::set<std::string> seen_;
};

ExperimentConfig from_yaml(const YAML::Node& root, const std::string& source) {
  ExperimentConfig c;
  Section top(root, "", source);

  {
    Section s = top.section("env");
    auto& e = c.env;
    e.mass = s.get<double>("mass");
    e.dt = s.get<double>("dt");
    e.control_limit = s.get<double>("control_limit");
    e.episode_length = s.get<int>("episode_length");
    e.start = s.get<Eigen::Vector2d>("start");
    e.goal = s.get<Eigen::Vector2d>("goal");
    e.obstacles.clear();
    for (auto& o : s.sections("obstacles")) {
      env2d::Obstacle ob;
      ob.min_corner = o.get<Eigen::Vector2d>("min_corner");
      ob.max_corner = o.get<Eigen::Vector2d>("max_corner");
      ob.stiffness = o.get<double>("stiffness");
      ob.damping = o.get<double>("damping");
      ob.friction_coeff = o.get<double>("friction_coeff");
      o.finish();
      e.obstacles.push_back(ob);
    }
    s.finish();
  }
  auto& h = c.himpc;
  {
    Section s = top.section("cost");
    h.cost.position = s.get<double>("position");
    h.cost.velocity = s.get<double>("velocity");
    h.cost.control = s.get<double>("control");
    s.finish();
  }
  {
    Section s = top.section("dynamics");
    h.mpc.beta = s.get<double>("beta");
    h.prior.components = s.get<int>("components");
    h.prior.fit.pseudo_count = s.get<double>("pseudo_count");
    h.prior.refresh = s.get<bool>("refresh");
    h.prior.bootstrap_control_std = s.get<double>("bootstrap_control_std");
    h.prior.fit.max_iters = s.get<int>("em_max_iterations");
    h.prior.fit.tolerance = s.get<double>("em_tolerance");
    h.prior.fit.ridge = s.get<double>("covariance_ridge");
    h.prior.fit.covariance_prior_count = s.get<double>("covariance_prior_count");
    h.prior.condition.ridge = s.get<double>("condition_ridge");
    s.finish();
  }
  {
    Section s = top.section("mpc");
    h.mpc.horizon = s.get<int>("horizon");
    h.mpc.noise_scale = s.get<double>("noise_scale");
    h.noise_decay = s.get<double>("noise_decay");
    h.mpc.terminal_weight = s.get<double>("terminal_weight");
    h.mpc.success_threshold = s.get<double>("success_threshold");
    h.mpc.convergence_window = s.get<int>("convergence_window");
    h.mpc.convergence_threshold = s.get<double>("convergence_threshold");
    h.mpc.lqr.relative_regularization = s.get<double>("lqr_regularization");
    s.finish();
  }
  {
    Section s = top.section("hindsight");
    h.hindsight_horizon = s.get<int>("horizon");
    s.finish();
  }
  {
    Section s = top.section("shaping");
    h.hidden_layers = s.get<std::vector<int>>("hidden_layers");
    h.shaping_inputs = s.get<std::vector<int>>("inputs");
    s.finish();
  }
  {
    Section s = top.section("trainer");
    h.train.lambda = s.get<double>("lambda");
    h.train.stride = s.get<int>("stride");
    h.train.threads = s.get<int>("threads");
    Section l = s.section("lbfgs");
    h.train.lbfgs.memory = l.get<int>("memory");
    h.train.lbfgs.max_iterations = l.get<int>("max_iterations");
    h.train.lbfgs.gradient_tolerance = l.get<double>("gradient_tolerance");
    h.train.lbfgs.c1 = l.get<double>("c1");
    h.train.lbfgs.c2 = l.get<double>("c2");
    h.train.lbfgs.max_line_search_evals = l.get<int>("max_line_search_evals");
    l.finish();
    s.finish();
  }
  {
    Section s = top.section("himpc");
    h.iterations = s.get<int>("iterations");
    h.rollouts_per_iteration = s.get<int>("rollouts_per_iteration");
    h.success_gate = s.get<int>("success_gate");
    h.learn = s.get<bool>("learn");
    h.starts = s.get<std::vector<Eigen::Vector2d>>("starts");
    s.finish();
  }
  {
    Section s = top.section("ilqg");
    auto& o = c.ilqg.solver;
    o.iterations = s.get<int>("iterations");
    o.rollouts = s.get<int>("rollouts");
    o.window = s.get<int>("window");
    o.noise_std = s.get<double>("noise_std");
    o.step_sizes = s.get<std::vector<double>>("step_sizes");
    s.finish();
  }
  auto grid = [](Section s, GridSpec& g) {
    g.lo = s.get<Eigen::Vector2d>("lo");
    g.hi = s.get<Eigen::Vector2d>("hi");
    g.n = s.get<int>("n");
    s.finish();
  };
  {
    Section s = top.section("sweep");
    c.sweep.hbar_values = s.get<std::vector<int>>("hbar_values");
    c.sweep.train_positions = s.get<std::vector<Eigen::Vector2d>>("train_positions");
    grid(s.section("test_grid"), c.test_grid);
    c.sweep.trials = s.get<int>("trials");
    c.sweep.include_baseline = s.get<bool>("include_baseline");
    s.finish();
  }
  grid(top.section("quiver"), c.quiver);
  c.seed = top.get<std::uint64_t>("seed");
  top.finish();

  c.himpc.seed = c.seed;
  c.himpc.train.seed = c.seed;
  c.ilqg.solver.seed = c.seed;
  c.ilqg.solver.lqr = c.himpc.mpc.lqr;
  c.ilqg.success_threshold = c.himpc.mpc.success_threshold;
  c.sweep.test_positions = grid_positions(c.test_grid.lo, c.test_grid.hi, c.test_grid.n);
  return c;
}

void emit(YAML::Emitter& out, double v) { out << io::format_double(v); }

void emit(YAML::Emitter& out, const Eigen::Vector2d& v) {
  out << YAML::Flow << YAML::BeginSeq << io::format_double(v.x()) << io::format_double(v.y())
      << YAML::EndSeq;
}

void emit_points(YAML::Emitter& out, const std::vector<Eigen::Vector2d>& pts) {
  out << YAML::BeginSeq;
  for (const auto& p : pts) emit(out, p);
  out << YAML::EndSeq;
}

template <class T>
void emit_list(YAML::Emitter& out, const std::vector<T>& xs) {
  out << YAML::Flow << YAML::BeginSeq;
  for (const auto& x : xs) {
    if constexpr (std::is_floating_point_v<T>) {
      out << io::format_double(x);
    } else {
      out << x;
    }
  }
  out << YAML::EndSeq;
}

void key(YAML::Emitter& out, const char* k) { out << YAML::Key << k << YAML::Value; }

void emit_grid(YAML::Emitter& out, const GridSpec& g) {
  out << YAML::BeginMap;
  key(out, "lo");
  emit(out, g.lo);
  key(out, "hi");
  emit(out, g.hi);
  key(out, "n");
  out << g.n;
  out << YAML::EndMap;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.env = env2d::EnvConfig::obstacle_course();
  c.himpc.prior.fit.pseudo_count = 1.0;
  c.himpc.mpc.noise_scale = 0.05;
  c.sweep.train_positions = {{-1.5, 1.5}, {-2.0, 1.0}, {-1.0, 1.0}, {-2.0, 2.0}, {-1.0, 2.0}};
  c.test_grid = {{-2.25, 0.75}, {-0.75, 2.25}, 4};
  c.quiver = {{-3.0, -2.0}, {3.0, 2.5}, 13};
  c.himpc.seed = c.himpc.train.seed = c.ilqg.solver.seed = c.seed;
  c.ilqg.solver.lqr = c.himpc.mpc.lqr;
  c.ilqg.success_threshold = c.himpc.mpc.success_threshold;
  c.sweep.test_positions = grid_positions(c.test_grid.lo, c.test_grid.hi, c.test_grid.n);
  return c;
}

void ExperimentConfig::validate() const {
  try {
    env.validate();
    himpc.validate(env);
    if (ilqg.solver.iterations < 0) throw InvalidArgument("ilqg: iterations must be >= 0");
    if (ilqg.solver.rollouts < 1) throw InvalidArgument("ilqg: rollouts must be >= 1");
    if (ilqg.solver.window < 0) throw InvalidArgument("ilqg: window must be >= 0");
    if (ilqg.solver.noise_std < 0.0) throw InvalidArgument("ilqg: noise_std must be >= 0");
    if (ilqg.solver.step_sizes.empty()) throw InvalidArgument("ilqg: step_sizes must be non-empty");
    for (double a : ilqg.solver.step_sizes) {
      if (!(a > 0.0 && a <= 1.0)) throw InvalidArgument("ilqg: step sizes must be in (0, 1]");
    }
    if (sweep.hbar_values.empty()) throw InvalidArgument("sweep: hbar_values must be non-empty");
    for (int hb : sweep.hbar_values) {
      if (hb < 1) throw InvalidArgument("sweep: hbar values must be >= 1");
    }
    if (sweep.trials < 1) throw InvalidArgument("sweep: trials must be >= 1");
    if (test_grid.n < 0 || quiver.n < 1) throw InvalidArgument("grid sizes must be positive");
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(where(source, e.mark) + ": " + e.msg);
  }
  ExperimentConfig c = from_yaml(root, source);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string dump_config(const ExperimentConfig& c) {
  const auto& h = c.himpc;
  YAML::Emitter out;
  out << YAML::BeginMap;

  key(out, "env");
  out << YAML::BeginMap;
  key(out, "mass"); emit(out, c.env.mass);
  key(out, "dt"); emit(out, c.env.dt);
  key(out, "control_limit"); emit(out, c.env.control_limit);
  key(out, "episode_length"); out << c.env.episode_length;
  key(out, "start"); emit(out, c.env.start);
  key(out, "goal"); emit(out, c.env.goal);
  key(out, "obstacles");
  out << YAML::BeginSeq;
  for (const auto& o : c.env.obstacles) {
    out << YAML::BeginMap;
    key(out, "min_corner"); emit(out, o.min_corner);
    key(out, "max_corner"); emit(out, o.max_corner);
    key(out, "stiffness"); emit(out, o.stiffness);
    key(out, "damping"); emit(out, o.damping);
    key(out, "friction_coeff"); emit(out, o.friction_coeff);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;

  key(out, "cost");
  out << YAML::BeginMap;
  key(out, "position"); emit(out, h.cost.position);
  key(out, "velocity"); emit(out, h.cost.velocity);
  key(out, "control"); emit(out, h.cost.control);
  out << YAML::EndMap;

  key(out, "dynamics");
  out << YAML::BeginMap;
  key(out, "beta"); emit(out, h.mpc.beta);
  key(out, "components"); out << h.prior.components;
  key(out, "pseudo_count"); emit(out, h.prior.fit.pseudo_count);
  key(out, "refresh"); out << h.prior.refresh;
  key(out, "bootstrap_control_std"); emit(out, h.prior.bootstrap_control_std);
  key(out, "em_max_iterations"); out << h.prior.fit.max_iters;
  key(out, "em_tolerance"); emit(out, h.prior.fit.tolerance);
  key(out, "covariance_ridge"); emit(out, h.prior.fit.ridge);
  key(out, "covariance_prior_count"); emit(out, h.prior.fit.covariance_prior_count);
  key(out, "condition_ridge"); emit(out, h.prior.condition.ridge);
  out << YAML::EndMap;

  key(out, "mpc");
  out << YAML::BeginMap;
  key(out, "horizon"); out << h.mpc.horizon;
  key(out, "noise_scale"); emit(out, h.mpc.noise_scale);
  key(out, "noise_decay"); emit(out, h.noise_decay);
  key(out, "terminal_weight"); emit(out, h.mpc.terminal_weight);
  key(out, "success_threshold"); emit(out, h.mpc.success_threshold);
  key(out, "convergence_window"); out << h.mpc.convergence_window;
  key(out, "convergence_threshold"); emit(out, h.mpc.convergence_threshold);
  key(out, "lqr_regularization"); emit(out, h.mpc.lqr.relative_regularization);
  out << YAML::EndMap;

  key(out, "hindsight");
  out << YAML::BeginMap;
  key(out, "horizon"); out << h.hindsight_horizon;
  out << YAML::EndMap;

  key(out, "shaping");
  out << YAML::BeginMap;
  key(out, "hidden_layers"); emit_list(out, h.hidden_layers);
  key(out, "inputs"); emit_list(out, h.shaping_inputs);
  out << YAML::EndMap;

  key(out, "trainer");
  out << YAML::BeginMap;
  key(out, "lambda"); emit(out, h.train.lambda);
  key(out, "stride"); out << h.train.stride;
  key(out, "threads"); out << h.train.threads;
  key(out, "lbfgs");
  out << YAML::BeginMap;
  key(out, "memory"); out << h.train.lbfgs.memory;
  key(out, "max_iterations"); out << h.train.lbfgs.max_iterations;
  key(out, "gradient_tolerance"); emit(out, h.train.lbfgs.gradient_tolerance);
  key(out, "c1"); emit(out, h.train.lbfgs.c1);
  key(out, "c2"); emit(out, h.train.lbfgs.c2);
  key(out, "max_line_search_evals"); out << h.train.lbfgs.max_line_search_evals;
  out << YAML::EndMap;
  out << YAML::EndMap;

  key(out, "himpc");
  out << YAML::BeginMap;
  key(out, "iterations"); out << h.iterations;
  key(out, "rollouts_per_iteration"); out << h.rollouts_per_iteration;
  key(out, "success_gate"); out << h.success_gate;
  key(out, "learn"); out << h.learn;
  key(out, "starts"); emit_points(out, h.starts);
  out << YAML::EndMap;

  key(out, "ilqg");
  out << YAML::BeginMap;
  key(out, "iterations"); out << c.ilqg.solver.iterations;
  key(out, "rollouts"); out << c.ilqg.solver.rollouts;
  key(out, "window"); out << c.ilqg.solver.window;
  key(out, "noise_std"); emit(out, c.ilqg.solver.noise_std);
  key(out, "step_sizes"); emit_list(out, c.ilqg.solver.step_sizes);
  out << YAML::EndMap;

  key(out, "sweep");
  out << YAML::BeginMap;
  key(out, "hbar_values"); emit_list(out, c.sweep.hbar_values);
  key(out, "train_positions"); emit_points(out, c.sweep.train_positions);
  key(out, "test_grid"); emit_grid(out, c.test_grid);
  key(out, "trials"); out << c.sweep.trials;
  key(out, "include_baseline"); out << c.sweep.include_baseline;
  out << YAML::EndMap;

  key(out, "quiver"); emit_grid(out, c.quiver);
  key(out, "seed"); out << c.seed;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace himpc
