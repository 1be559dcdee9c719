#include <CLI11.hpp>

#include <iostream>

#include "mms/cli.hpp"

namespace {

int run(const std::function<mms::cli::CommandResult()>& command) {
  try {
    const mms::cli::CommandResult result = command();
    if (!result.text.empty()) std::cout << result.text << "\n";
    return result.exit_code;
  } catch (const mms::io::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "safe controller synthesis and cost optimization for decoupled "
      "linear-rate multi-mode systems"};
  app.require_subcommand(1);

  std::string instance_path, controller_path, out_path, config_path;
  std::string horizon = "10000p";
  std::string step_text, mu_avg_text = "0", mu_peak_text = "0", epsilon_text;
  std::string csv_path, stats_path, csv_prefix;
  std::string hours_text = "9", compare_step_text = "180s";
  bool verify_flag = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int zones = 0, settings = 0;

  auto* check = app.add_subcommand("check", "decide safe controllability");
  check->add_option("instance", instance_path, "instance file")->required();

  auto* synth = app.add_subcommand("synthesize", "construct a periodic safe controller");
  synth->add_option("instance", instance_path, "instance file")->required();
  synth->add_option("-o,--out", out_path, "controller output file")->required();

  auto* opt = app.add_subcommand("optimize", "peak/average cost optimization");
  opt->add_option("instance", instance_path, "instance file")->required();
  opt->add_option("--mu-avg", mu_avg_text, "average-cost weight (rational)");
  opt->add_option("--mu-peak", mu_peak_text, "peak-cost weight (rational)");
  opt->add_option("--epsilon", epsilon_text, "realization slack (default 1/2^20)");
  opt->add_option("-o,--out", out_path, "result output file");

  auto* sim = app.add_subcommand("simulate", "run a controller and check safety");
  sim->add_option("instance", instance_path, "instance file")->required();
  sim->add_option("-c,--controller", controller_path, "controller file")->required();
  sim->add_option("--horizon", horizon, "time, <n>p periods or <n>a actions");
  sim->add_option("--step", step_text, "sampling step (time units)");
  sim->add_option("--csv", csv_path, "trajectory CSV output");
  sim->add_option("--stats", stats_path, "stats JSON output");
  sim->add_flag("--verify", verify_flag, "re-check safety certificates independently");

  auto* ver = app.add_subcommand("verify", "independently verify a controller");
  ver->add_option("instance", instance_path, "instance file")->required();
  ver->add_option("-c,--controller", controller_path, "controller file")->required();
  ver->add_option("--horizon", horizon, "verification horizon");

  auto* cmp = app.add_subcommand("compare", "optimal vs lazy controller on a building");
  cmp->add_option("building", instance_path, "building instance file")->required();
  cmp->add_option("--hours", hours_text, "simulated duration in hours");
  cmp->add_option("--step", compare_step_text, "sampling step, e.g. 180s or 0.05 (hours)");
  cmp->add_option("--csv-prefix", csv_prefix, "write <prefix>_optimal.csv and <prefix>_lazy.csv");
  cmp->add_option("--stats", stats_path, "stats JSON output");

  auto* generate = app.add_subcommand("generate", "emit a seeded multi-zone benchmark");
  generate->add_option("-c,--config", config_path, "generator configuration JSON");
  auto* seed_opt = generate->add_option("--seed", seed, "PRNG seed");
  generate->add_option("--zones", zones, "zone count override");
  generate->add_option("--settings", settings, "heater states per zone override");
  generate->add_option("-o,--out", out_path, "instance output file")->required();

  CLI11_PARSE(app, argc, argv);
  seed_set = seed_opt->count() > 0;

  if (check->parsed()) return run([&] { return mms::cli::cmd_check(instance_path); });

  if (synth->parsed())
    return run([&] { return mms::cli::cmd_synthesize(instance_path, out_path); });

  if (opt->parsed()) {
    return run([&] {
      mms::optimizer::CostWeights weights;
      weights.mu_avg = mms::parse_rational(mu_avg_text);
      weights.mu_peak = mms::parse_rational(mu_peak_text);
      const mms::Rational epsilon =
          epsilon_text.empty() ? mms::rat(1, 1 << 20) : mms::parse_rational(epsilon_text);
      return mms::cli::cmd_optimize(instance_path, weights, epsilon, out_path);
    });
  }

  if (sim->parsed()) {
    return run([&] {
      mms::cli::SimulateArgs args;
      args.instance_path = instance_path;
      args.controller_path = controller_path;
      args.horizon = horizon;
      if (!step_text.empty()) args.step = mms::parse_rational(step_text);
      args.csv_path = csv_path;
      args.stats_path = stats_path;
      args.verify = verify_flag;
      return mms::cli::cmd_simulate(args);
    });
  }

  if (ver->parsed())
    return run([&] { return mms::cli::cmd_verify(instance_path, controller_path, horizon); });

  if (cmp->parsed()) {
    return run([&] {
      mms::cli::CompareArgs args;
      args.building_path = instance_path;
      args.hours = mms::parse_rational(hours_text);
      if (!compare_step_text.empty() && compare_step_text.back() == 's') {
        const std::string seconds = compare_step_text.substr(0, compare_step_text.size() - 1);
        args.step_hours = mms::parse_rational(seconds) / 3600;
      } else {
        args.step_hours = mms::parse_rational(compare_step_text);
      }
      args.csv_prefix = csv_prefix;
      args.stats_path = stats_path;
      return mms::cli::cmd_compare(args);
    });
  }

  if (generate->parsed()) {
    return run([&] {
      mms::cli::GenerateArgs args;
      args.config_path = config_path;
      if (seed_set) args.seed = seed;
      if (zones > 0) args.zones = zones;
      if (settings > 0) args.settings = settings;
      args.out_path = out_path;
      return mms::cli::cmd_generate(args);
    });
  }
  return 2;
}
