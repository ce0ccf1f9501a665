#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "himpc/config.hpp"

using namespace himpc;

namespace {

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, from.size(), to);
  return text;
}

std::string error_of(const std::string& text) {
  try {
    (void)parse_config(text, "cfg.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("dump_config round-trips the defaults") {
  const auto d = ExperimentConfig::defaults();
  const std::string text = dump_config(d);
  const auto back = parse_config(text);
  CHECK(dump_config(back) == text);
  CHECK(back.sweep.test_positions.size() == 16);
  CHECK(back.himpc.mpc.horizon == 10);
  CHECK(back.himpc.hindsight_horizon == 30);
}

TEST_CASE("shipped default config equals the built-in defaults") {
  const std::filesystem::path path = std::filesystem::path(HIMPC_SOURCE_DIR) / "configs/default.yaml";
  const auto loaded = load_config(path);
  CHECK(dump_config(loaded) == dump_config(ExperimentConfig::defaults()));
}

TEST_CASE("missing keys are named with their location") {
  const std::string text = dump_config(ExperimentConfig::defaults());
  const std::string broken = replace_once(text, "  horizon: 10\n", "");
  const std::string err = error_of(broken);
  CHECK(err.find("missing key 'mpc.horizon'") != std::string::npos);
  CHECK(err.rfind("cfg.yaml:", 0) == 0);
}

TEST_CASE("unknown keys are rejected at their line") {
  const std::string text = dump_config(ExperimentConfig::defaults());
  const std::string broken = replace_once(text, "  horizon: 10\n", "  horizon: 10\n  horizn: 3\n");
  const std::string err = error_of(broken);
  CHECK(err.find("unknown key 'mpc.horizn'") != std::string::npos);
  // Line of the misspelled key.
  int line = 1;
  for (char ch : broken.substr(0, broken.find("horizn"))) line += ch == '\n';
  CHECK(err.find("cfg.yaml:" + std::to_string(line) + ":") != std::string::npos);
}

TEST_CASE("type errors and invalid values are config errors") {
  const std::string text = dump_config(ExperimentConfig::defaults());
  CHECK(error_of(replace_once(text, "  horizon: 10\n", "  horizon: ten\n")).find("wrong type") !=
        std::string::npos);
  CHECK(error_of(replace_once(text, "  horizon: 10\n", "  horizon: 0\n")).find("horizon") !=
        std::string::npos);
  CHECK(error_of("env: [1, 2\n").rfind("cfg.yaml:", 0) == 0);
  CHECK_FALSE(error_of("{}").empty());
}

TEST_CASE("unreadable config file is a config error") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), ConfigError);
}
