#pragma once

#include <optional>
#include <string>

#include "mms/generator.hpp"
#include "mms/io.hpp"
#include "mms/optimizer.hpp"

namespace mms {
namespace cli {

// Exit codes: 0 success/feasible, 1 infeasible or unsafe, 2 input error.
struct CommandResult {
  int exit_code = 0;
  std::string text;   // human-readable summary, printed to stdout
  io::Json report;    // machine-readable mirror of the summary
};

CommandResult cmd_check(const std::string& instance_path);

CommandResult cmd_synthesize(const std::string& instance_path, const std::string& out_path);

CommandResult cmd_optimize(const std::string& instance_path, const optimizer::CostWeights& weights,
                           const Rational& epsilon, const std::string& out_path);

struct SimulateArgs {
  std::string instance_path;
  std::string controller_path;
  std::string horizon = "10000p";  // time, "<n>p" periods, or "<n>a" actions
  std::optional<Rational> step;    // also sample on this grid
  std::string csv_path;
  std::string stats_path;
  bool verify = false;
};

CommandResult cmd_simulate(const SimulateArgs& args);

// simulate --verify as a standalone command
CommandResult cmd_verify(const std::string& instance_path, const std::string& controller_path,
                         const std::string& horizon);

struct CompareArgs {
  std::string building_path;
  Rational hours = 9;
  Rational step_hours = rat(1, 20);  // three minutes
  std::string csv_prefix;
  std::string stats_path;
};

CommandResult cmd_compare(const CompareArgs& args);

struct GenerateArgs {
  std::string config_path;  // optional; defaults otherwise
  std::optional<std::uint64_t> seed;
  std::optional<int> zones;
  std::optional<int> settings;
  std::string out_path;
};

CommandResult cmd_generate(const GenerateArgs& args);

// "2.5" time units, "10000p" periods, "12a" actions
simulate::Horizon parse_horizon(const std::string& text);

}  // namespace cli
}  // namespace mms
