#include "mms/cli.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mms/order_graph.hpp"
#include "mms/synthesis.hpp"

namespace mms {
namespace cli {

namespace {

std::string rat_str(const Rational& q) { return to_string(q); }

// run `fn` with the simulation scalar selected by MMS_PRECISION
template <typename Fn>
CommandResult with_precision(Fn&& fn) {
  switch (precision_from_env()) {
    case Precision::Bits64:
      return fn(double{});
    case Precision::Bits128:
      return fn(__float128{});
    case Precision::Bits80:
    default:
      return fn((long double){});
  }
}

int precision_bits() {
  switch (precision_from_env()) {
    case Precision::Bits64:
      return 64;
    case Precision::Bits128:
      return 128;
    default:
      return 80;
  }
}

template <typename F>
Vec<F> to_float_point(const RatVec& x) {
  Vec<F> out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = to_fp<F>(x(i));
  return out;
}

// explicit instance backing a controller over a building's implicit modes
MmsInstance instance_for_controller(const BuildingSpec& building,
                                    const io::ControllerFile& cf) {
  std::set<std::string> ids;
  for (const TimedAction& a : cf.controller.prefix) ids.insert(a.mode);
  for (const TimedAction& a : cf.controller.period) ids.insert(a.mode);
  for (const auto& [id, w] : cf.frequency.weights) ids.insert(id);
  MmsInstance out;
  out.num_vars = building.zone_count();
  for (const std::string& id : ids) {
    const auto choice = parse_choice_id(building, id);
    if (!choice)
      throw io::ParseError("controller mode '" + id + "' is not a valid joint heater choice");
    out.modes.push_back(materialize_mode(building, *choice));
  }
  std::sort(out.modes.begin(), out.modes.end(), [](const Mode& a, const Mode& b) {
    if (a.price != b.price) return a.price < b.price;
    return a.id < b.id;
  });
  return out;
}

io::Json frequency_json(const FrequencyVector& f) {
  io::Json j;
  for (const auto& [id, w] : f.weights) j[id] = io::rational_to_json(w);
  return j;
}

struct VerifyOutcome {
  bool passed = true;
  std::vector<std::string> failures;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      failures.push_back(what);
    }
  }
};

}  // namespace

simulate::Horizon parse_horizon(const std::string& text) {
  if (text.empty()) throw io::ParseError("empty horizon");
  const char tail = text.back();
  if (tail == 'p' || tail == 'a') {
    const std::string body = text.substr(0, text.size() - 1);
    long n = 0;
    try {
      n = std::stol(body);
    } catch (const std::exception&) {
      throw io::ParseError("cannot parse horizon '" + text + "'");
    }
    if (n <= 0) throw io::ParseError("horizon must be positive");
    return tail == 'p' ? simulate::Horizon::periods(n) : simulate::Horizon::actions(n);
  }
  Rational t;
  try {
    t = parse_rational(text);
  } catch (const std::invalid_argument&) {
    throw io::ParseError("cannot parse horizon '" + text + "'");
  }
  if (!(t > 0)) throw io::ParseError("horizon must be positive");
  return simulate::Horizon::duration(t);
}

CommandResult cmd_check(const std::string& instance_path) {
  const io::Problem p = io::load_problem(instance_path);
  CommandResult out;

  bool feasible = false;
  FrequencyVector witness;
  std::vector<std::string> surviving;
  if (p.is_implicit()) {
    const auto d = optimizer::decide_building(*p.building, std::nullopt);
    feasible = d.feasible;
    if (feasible) {
      witness = d.witness;
      for (const Mode& m : d.support.modes) surviving.push_back(m.id);
    }
  } else if (p.order) {
    const auto o = order_graph::synthesize_ordered(*p.instance, p.box, p.x0, *p.order);
    feasible = o.feasible;
    if (feasible) {
      witness = o.frequency;
      surviving = o.surviving_modes;
    }
  } else {
    const auto d = synthesis::decide(*p.instance, p.box);
    feasible = d.feasible;
    if (feasible) {
      witness = d.strict_witness;
      for (const Mode& m : d.pruned.modes) surviving.push_back(m.id);
    }
  }

  out.report["feasible"] = feasible;
  std::ostringstream text;
  if (feasible) {
    text << "FEASIBLE\n";
    text << "surviving modes:";
    for (const std::string& id : surviving) text << " " << id;
    text << "\nfrequency:";
    for (const std::string& id : surviving) text << " " << id << "=" << rat_str(witness.weight(id));
    out.report["frequency"] = frequency_json(witness);
    out.report["surviving_modes"] = surviving;
    out.exit_code = 0;
  } else {
    text << "INFEASIBLE";
    out.exit_code = 1;
  }
  out.text = text.str();
  return out;
}

CommandResult cmd_synthesize(const std::string& instance_path, const std::string& out_path) {
  const io::Problem p = io::load_problem(instance_path);
  synthesis::Outcome o;
  if (p.is_implicit()) {
    o = optimizer::synthesize_building(*p.building, p.x0);
  } else if (p.order) {
    o = order_graph::synthesize_ordered(*p.instance, p.box, p.x0, *p.order);
  } else {
    o = synthesis::synthesize(*p.instance, p.box, p.x0);
  }

  CommandResult out;
  if (!o.feasible) {
    out.exit_code = 1;
    out.text = "INFEASIBLE";
    out.report["feasible"] = false;
    return out;
  }
  const io::Json cj = io::controller_to_json(o.controller, o.frequency, o.scale);
  if (!out_path.empty()) io::save_json(cj, out_path);
  out.report["feasible"] = true;
  out.report["controller"] = cj;
  std::ostringstream text;
  text << "FEASIBLE\nperiod actions: " << o.controller.period.size()
       << "\nscale s: " << rat_str(o.scale)
       << "\nmin dwell: " << rat_str(o.controller.min_dwell);
  if (!out_path.empty()) text << "\ncontroller written to " << out_path;
  out.text = text.str();
  return out;
}

CommandResult cmd_optimize(const std::string& instance_path,
                           const optimizer::CostWeights& weights, const Rational& epsilon,
                           const std::string& out_path) {
  const io::Problem p = io::load_problem(instance_path);
  optimizer::OptimizationResult r;
  if (p.is_implicit()) {
    r = optimizer::optimize_weighted(*p.building, p.x0, weights, epsilon);
  } else {
    r = optimizer::optimize_weighted(*p.instance, p.box, p.x0, weights, epsilon);
  }

  CommandResult out;
  out.report = io::optimization_to_json(r, weights);
  if (!r.feasible) {
    out.exit_code = 1;
    out.text = "INFEASIBLE";
    return out;
  }
  if (!out_path.empty()) io::save_json(out.report, out_path);
  std::ostringstream text;
  text << "p_star: " << rat_str(r.chosen_peak_level) << "\npeak: " << rat_str(r.peak)
       << "\navg infimum: " << rat_str(r.avg_infimum)
       << "\navg realized: " << rat_str(r.avg_realized)
       << "\nweighted infimum: " << rat_str(r.weighted_infimum);
  if (!out_path.empty()) text << "\nresult written to " << out_path;
  out.text = text.str();
  return out;
}

CommandResult cmd_simulate(const SimulateArgs& args) {
  const io::Problem p = io::load_problem(args.instance_path);
  const io::ControllerFile cf = io::controller_from_json(io::load_json(args.controller_path));
  const MmsInstance instance =
      p.is_implicit() ? instance_for_controller(*p.building, cf) : *p.instance;
  const simulate::Horizon horizon = parse_horizon(args.horizon);

  // horizons covering absurdly many periods go through the closed-form
  // sampler instead of enumerating every switch
  const Rational period_time = cf.controller.period_time();
  Rational wall_time = 0;
  if (horizon.kind == simulate::Horizon::Kind::Time) {
    wall_time = horizon.time;
  } else if (horizon.kind == simulate::Horizon::Kind::Periods) {
    wall_time = period_time * horizon.count;
    for (const TimedAction& a : cf.controller.prefix) wall_time += a.dwell;
  }
  const bool sampled_route =
      horizon.kind != simulate::Horizon::Kind::Actions &&
      wall_time / period_time > Rational(10000000);

  return with_precision([&](auto tag) {
    using F = decltype(tag);
    simulate::SimOptions<F> opts;
    if (args.step) opts.sample_step = to_fp<F>(*args.step);
    const auto x0 = to_float_point<F>(p.x0);
    const auto tr =
        sampled_route
            ? simulate::sample_periodic<F>(instance, p.box, x0, cf.controller, wall_time,
                                           args.step ? *args.step : Rational(wall_time / 1000))
            : simulate::run<F>(instance, p.box, x0, cf.controller, horizon, opts);

    CommandResult out;
    out.report["safe"] = tr.safe;
    if (sampled_route) out.report["sampled_grid_only"] = true;
    out.report["switch_points"] = tr.switch_points.size();
    out.report["samples"] = tr.samples.size();
    out.report["precision_bits"] = precision_bits();
    if (tr.first_violation) {
      io::Json v;
      v["time"] = FloatOps<F>::str(tr.first_violation->time);
      v["variable"] = static_cast<long>(tr.first_violation->var);
      v["bound"] = tr.first_violation->lower ? "lower" : "upper";
      out.report["first_violation"] = v;
    }

    std::ostringstream text;
    text << (tr.safe ? "SAFE" : "UNSAFE");
    if (tr.first_violation)
      text << "\nfirst violation at t=" << FloatOps<F>::str(tr.first_violation->time)
           << " variable " << (tr.first_violation->var + 1)
           << (tr.first_violation->lower ? " below lower bound" : " above upper bound");

    if (!args.csv_path.empty()) {
      std::ofstream csv(args.csv_path);
      if (!csv) throw io::ParseError("cannot write '" + args.csv_path + "'");
      const auto prices = p.is_implicit() ? io::price_lookup(*p.building)
                                          : io::price_lookup(*p.instance);
      io::write_csv<F>(csv, tr, prices);
      text << "\ntrajectory written to " << args.csv_path;
    }

    if (args.verify) {
      VerifyOutcome v;
      v.require(tr.safe, "trajectory leaves the safe set");
      const auto pm = simulate::analyze_period<F>(instance, cf.controller);
      for (Eigen::Index i = 0; i < instance.num_vars; ++i) {
        v.require(pm.contraction(i) > F(0) && pm.contraction(i) < F(1),
                  "period map does not contract");
        const F lo = to_fp<F>(p.box.lower(i)) - F(1e-9L);
        const F hi = to_fp<F>(p.box.upper(i)) + F(1e-9L);
        v.require(pm.fixed_point(i) >= lo && pm.fixed_point(i) <= hi,
                  "period fixed point escapes the box");
      }
      if (!cf.frequency.weights.empty() && cf.scale > 0) {
        std::map<std::string, Rational> totals;
        for (const TimedAction& a : cf.controller.period) totals[a.mode] += a.dwell;
        for (const auto& [id, total] : totals)
          v.require(total == cf.frequency.weight(id) * cf.scale,
                    "period dwells do not match frequency * s");
      }
      if (p.order)
        v.require(order_graph::complies(cf.controller, *p.order),
                  "controller violates the mode-order graph");
      out.report["verified"] = v.passed;
      if (!v.failures.empty()) out.report["verify_failures"] = v.failures;
      text << (v.passed ? "\nVERIFIED" : "\nVERIFY FAILED");
      for (const std::string& f : v.failures) text << "\n  " << f;
      out.exit_code = v.passed && tr.safe ? 0 : 1;
    } else {
      out.exit_code = tr.safe ? 0 : 1;
    }
    if (!args.stats_path.empty()) {
      simulate::RunStats stats;
      stats.peak_power = 0;
      for (const TimedAction& a : cf.controller.period) {
        if (a.dwell == 0) continue;
        const Mode* m = instance.find_mode(a.mode);
        if (m != nullptr) stats.peak_power = rat_max(stats.peak_power, m->price);
      }
      stats.avg_power = optimizer::average_cost_of(cf.controller, instance);
      stats.min_dwell_observed = cf.controller.min_dwell;
      stats.mode_switch_count = static_cast<long>(tr.switch_points.size()) - 1;
      io::save_json(io::stats_to_json(stats), args.stats_path);
      text << "\nstats written to " << args.stats_path;
    }
    out.text = text.str();
    return out;
  });
}

CommandResult cmd_verify(const std::string& instance_path, const std::string& controller_path,
                         const std::string& horizon) {
  SimulateArgs args;
  args.instance_path = instance_path;
  args.controller_path = controller_path;
  args.horizon = horizon;
  args.verify = true;
  return cmd_simulate(args);
}

CommandResult cmd_compare(const CompareArgs& args) {
  const io::Problem p = io::load_problem(args.building_path);
  if (!p.is_implicit())
    throw io::ParseError("compare expects an implicit multi-zone building instance");
  const BuildingSpec& building = *p.building;

  return with_precision([&](auto tag) {
    using F = decltype(tag);
    const simulate::ComparisonResult<F> cmp =
        simulate::compare<F>(building, p.x0, args.hours, args.step_hours);

    CommandResult out;
    if (!cmp.feasible) {
      out.exit_code = 1;
      out.text = "INFEASIBLE: no safe controller exists for this building";
      out.report["feasible"] = false;
      return out;
    }

    out.report["feasible"] = true;
    out.report["optimal"] = io::stats_to_json(cmp.optimal);
    out.report["lazy"] = io::stats_to_json(cmp.lazy);
    out.report["optimal_safe"] = cmp.optimal_safe;
    out.report["lazy_safe"] = cmp.lazy_safe;
    out.report["savings_peak_percent"] = to_double(cmp.savings_peak_percent);
    out.report["savings_avg_percent"] = to_double(cmp.savings_avg_percent);
    out.report["p_min"] = io::rational_to_json(cmp.p_min);
    out.report["avg_infimum"] = io::rational_to_json(cmp.avg_infimum);
    out.report["horizon_hours"] = to_double(args.hours);
    out.report["step_hours"] = to_double(args.step_hours);
    out.report["guard_band"] = 1e-9;
    out.report["precision_bits"] = precision_bits();
    out.report["epsilon"] = io::rational_to_json(cmp.epsilon);

    if (!args.csv_prefix.empty()) {
      const auto prices = io::price_lookup(building);
      std::ofstream opt_csv(args.csv_prefix + "_optimal.csv");
      if (!opt_csv) throw io::ParseError("cannot write optimal CSV");
      io::write_csv<F>(opt_csv, cmp.optimal_trajectory, prices);
      std::ofstream lazy_csv(args.csv_prefix + "_lazy.csv");
      if (!lazy_csv) throw io::ParseError("cannot write lazy CSV");
      io::write_csv<F>(lazy_csv, cmp.lazy_trajectory, prices);
    }
    if (!args.stats_path.empty()) io::save_json(out.report, args.stats_path);

    std::ostringstream text;
    text << "optimal: peak " << rat_str(cmp.optimal.peak_power) << ", avg "
         << to_double(cmp.optimal.avg_power) << (cmp.optimal_safe ? " (safe)" : " (UNSAFE)")
         << "\nlazy:    peak " << rat_str(cmp.lazy.peak_power) << ", avg "
         << to_double(cmp.lazy.avg_power) << (cmp.lazy_safe ? " (safe)" : " (UNSAFE)")
         << "\nsavings: peak " << to_double(cmp.savings_peak_percent) << "%, avg "
         << to_double(cmp.savings_avg_percent) << "%";
    out.text = text.str();
    out.exit_code = 0;
    return out;
  });
}

CommandResult cmd_generate(const GenerateArgs& args) {
  gen::GeneratorConfig config;
  if (!args.config_path.empty())
    config = gen::GeneratorConfig::from_json(io::load_json(args.config_path));
  if (args.seed) config.seed = *args.seed;
  if (args.zones) config.zones = *args.zones;
  if (args.settings) config.settings_per_zone = *args.settings;
  if (args.out_path.empty()) throw io::ParseError("generate needs an output path");

  const io::Json file = gen::generate_building_file(config);
  io::save_json(file, args.out_path);

  CommandResult out;
  out.report = file.at("generator");
  std::ostringstream text;
  text << "generated " << config.zones << " zones x " << config.settings_per_zone
       << " heater states (seed " << config.seed << ") -> " << args.out_path;
  out.text = text.str();
  return out;
}

}  // namespace cli
}  // namespace mms
