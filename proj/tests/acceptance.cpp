// Acceptance suite: every criterion prints exactly one PASS/FAIL line along
// with its elapsed time and the runtime budget it must meet.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "fixtures.hpp"
#include "mms/cli.hpp"
#include "mms/core.hpp"
#include "mms/generator.hpp"
#include "mms/io.hpp"
#include "mms/optimizer.hpp"
#include "mms/order_graph.hpp"
#include "mms/simulate.hpp"
#include "mms/synthesis.hpp"
#include "oracles.hpp"

using namespace mms;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

struct Criterion {
  std::string name;
  double budget_seconds;
  Clock::time_point start = Clock::now();
  std::ostringstream detail;
  bool ok = true;

  Criterion(std::string n, double budget) : name(std::move(n)), budget_seconds(budget) {}

  void require(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      detail << "\n    failed: " << what;
    }
  }

  void finish() {
    const double elapsed =
        std::chrono::duration<double>(Clock::now() - start).count();
    if (elapsed > budget_seconds) {
      ok = false;
      detail << "\n    failed: exceeded the " << budget_seconds << " s budget";
    }
    std::printf("criterion %-38s %s  (%.2f s / %.0f s)%s\n", name.c_str(),
                ok ? "PASS" : "FAIL", elapsed, budget_seconds, detail.str().c_str());
    if (!ok) ++failures;
  }
};

Vec<long double> to_ld(const RatVec& x) {
  Vec<long double> out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = to_fp<long double>(x(i));
  return out;
}

io::Json apartment_json(bool only_first_mode) {
  io::Problem p;
  p.instance = fixtures::two_room_apartment();
  if (only_first_mode) p.instance->modes.resize(1);
  p.box = fixtures::two_room_box();
  p.x0 = fixtures::make_point({20, 20});
  return io::problem_to_json(p);
}

MmsInstance random_small_instance(gen::SplitMix64& rng, int max_modes, int max_vars,
                                  bool priced) {
  MmsInstance m;
  m.num_vars = rng.uniform(1, max_vars);
  const long modes = rng.uniform(1, max_modes);
  for (long k = 0; k < modes; ++k) {
    std::vector<long> drive, decay;
    for (Eigen::Index i = 0; i < m.num_vars; ++i) {
      drive.push_back(rng.uniform(-3, 3));
      decay.push_back(rng.uniform(1, 3));
    }
    m.modes.push_back(fixtures::make_mode("m" + std::to_string(k + 1), drive,
                                          priced ? rng.uniform(0, 5) : 0, decay));
  }
  return m;
}

SafeBox unit_band(Eigen::Index n) {
  SafeBox box;
  box.lower = RatVec::Constant(n, Rational(-1));
  box.upper = RatVec::Constant(n, Rational(1));
  return box;
}

// ---------------------------------------------------------------------------

void criterion_1_apartment_feasibility() {
  Criterion c("1 apartment feasibility (check)", 1.0);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string full = (dir / "acceptance_apartment.json").string();
  const std::string restricted = (dir / "acceptance_apartment_m1.json").string();
  io::save_json(apartment_json(false), full);
  io::save_json(apartment_json(true), restricted);

  const auto feasible = cli::cmd_check(full);
  c.require(feasible.exit_code == 0, "full apartment must be FEASIBLE (exit 0)");
  c.require(feasible.text.find("FEASIBLE") == 0, "report must lead with FEASIBLE");

  const auto infeasible = cli::cmd_check(restricted);
  c.require(infeasible.exit_code == 1, "heater-off apartment must be INFEASIBLE (exit 1)");
  c.finish();
}

void criterion_2_apartment_long_run() {
  Criterion c("2 apartment 10^4-period safety", 10.0);
  const auto instance = fixtures::two_room_apartment();
  const auto box = fixtures::two_room_box();
  const auto out = synthesis::synthesize(instance, box, fixtures::make_point({20, 20}));
  c.require(out.feasible, "synthesis must succeed");
  if (out.feasible) {
    const auto tr = simulate::run<long double>(instance, box, to_ld(fixtures::make_point({20, 20})),
                                               out.controller, simulate::Horizon::periods(10000));
    c.require(tr.safe, "10^4 periods must stay inside [18,22]^2 at every switch point");
    const auto pm = simulate::analyze_period<long double>(instance, out.controller);
    for (Eigen::Index i = 0; i < 2; ++i) {
      c.require(pm.contraction(i) > 0.0L && pm.contraction(i) < 1.0L,
                "period map must contract");
      c.require(pm.fixed_point(i) >= 18.0L - 1e-9L && pm.fixed_point(i) <= 22.0L + 1e-9L,
                "fixed point must lie in [18,22] within 1e-9");
    }
  }
  c.finish();
}

void criterion_3_priced_optimization() {
  Criterion c("3 priced-system optimization", 1.0);
  const auto quad = fixtures::priced_quad();
  const auto box = fixtures::unit_box();
  const RatVec x0 = fixtures::make_point({rat(1, 2), rat(1, 2)});
  const Rational eps = rat(1, 1 << 20);

  const auto pk = optimizer::min_peak_cost(quad, box, x0);
  c.require(pk.feasible && pk.p_min == 3, "minimum peak must be exactly 3");

  MmsInstance trio = quad;
  trio.modes.pop_back();
  const auto avg3 = optimizer::min_average_cost(trio, box, eps);
  c.require(avg3.feasible && avg3.infimum == 2, "average infimum within peak 3 must be 2");
  const auto bound3 = oracles::oracle_avg_lower_bound(trio, box, 60);
  c.require(bound3.feasible, "grid oracle must find near-good vectors");
  // oracle certifies inf >= grid_min - slack; with the 1/60 grid both slacks
  // together stay below K/60 for K = 60*(price+coefficient budget)
  c.require(bound3.grid_minimum - bound3.slack <= 2,
            "oracle lower bound must not exceed the LP value");
  c.require(bound3.grid_minimum - bound3.slack > rat(5, 6),
            "oracle bound must rule out the misprinted 5/6");

  const auto avg_all = optimizer::min_average_cost(quad, box, eps);
  c.require(avg_all.feasible && avg_all.infimum == rat(2, 3),
            "average infimum over all modes must be 2/3");
  c.require(avg_all.realized_cost - avg_all.infimum <= eps,
            "realized average must sit within epsilon of the infimum");
  const auto bound_all = oracles::oracle_avg_lower_bound(quad, box, 60);
  c.require(bound_all.feasible && bound_all.grid_minimum - bound_all.slack <= rat(2, 3),
            "oracle bound must be consistent with 2/3");

  const auto weighted =
      optimizer::optimize_weighted(quad, box, x0, optimizer::CostWeights{1, 1}, eps);
  c.require(weighted.feasible && weighted.chosen_peak_level == 4,
            "weighted optimum must pick peak level 4");
  c.require(weighted.weighted_infimum == Rational(4) + rat(2, 3),
            "weighted value must be 4 + 2/3");
  c.require(weighted.avg_realized - weighted.avg_infimum <= eps,
            "weighted realization must stay within epsilon");
  c.finish();
}

void criterion_4_synthesis_oracle_agreement() {
  Criterion c("4 synthesis vs grid oracle (500x)", 120.0);
  gen::SplitMix64 rng(1009);
  int decided = 0, undecided = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const MmsInstance m = random_small_instance(rng, 3, 2, false);
    const SafeBox box = unit_band(m.num_vars);
    const auto verdict = oracles::oracle_safe_controllable(m, box, 64);
    if (verdict == oracles::OracleVerdict::Undecided) {
      ++undecided;
      continue;
    }
    const auto out = synthesis::synthesize(m, box, RatVec::Constant(m.num_vars, Rational(0)));
    if (out.feasible != (verdict == oracles::OracleVerdict::Yes)) {
      c.require(false, "disagreement on trial " + std::to_string(trial));
      break;
    }
    ++decided;
  }
  c.detail << "\n    decided " << decided << ", undecided (logged, skipped) " << undecided;
  c.require(decided >= 400, "the oracle must decide the bulk of the sample");
  c.finish();
}

void criterion_5_narrowing_matches_full_scan() {
  Criterion c("5 narrowing == full level scan (200x)", 60.0);
  gen::SplitMix64 rng(2003);
  int compared = 0;
  const Rational eps = rat(1, 1 << 20);
  for (int trial = 0; trial < 200; ++trial) {
    const MmsInstance m = random_small_instance(rng, 6, 2, true);
    const SafeBox box = unit_band(m.num_vars);
    const RatVec x0 = RatVec::Constant(m.num_vars, Rational(0));
    optimizer::CostWeights weights;
    weights.mu_peak = rng.uniform(1, 3);
    weights.mu_avg = rng.uniform(0, 3);
    const auto narrowed = optimizer::optimize_weighted(m, box, x0, weights, eps);
    const auto scanned = optimizer::optimize_weighted_full_scan(m, box, x0, weights, eps);
    if (narrowed.feasible != scanned.feasible) {
      c.require(false, "feasibility mismatch on trial " + std::to_string(trial));
      break;
    }
    if (!narrowed.feasible) continue;
    if (narrowed.chosen_peak_level != scanned.chosen_peak_level ||
        narrowed.weighted_infimum != scanned.weighted_infimum) {
      c.require(false, "optimum mismatch on trial " + std::to_string(trial));
      break;
    }
    ++compared;
  }
  c.detail << "\n    feasible instances compared: " << compared;
  c.require(compared >= 60, "enough feasible draws must occur");
  c.finish();
}

void criterion_6_lazy_enumeration() {
  Criterion c("6 implicit enumeration order + memory", 30.0);
  gen::SplitMix64 rng(3001);
  // order equals exhaustive sort on small buildings
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<fixtures::ZoneSketch> sketches;
    const long zones = rng.uniform(1, 4);
    for (long z = 0; z < zones; ++z) {
      fixtures::ZoneSketch sk;
      const long settings = rng.uniform(0, 3);
      for (long s = 0; s < settings; ++s) {
        sk.equilibria.push_back(rng.uniform(15, 40));
        sk.powers.push_back(rng.uniform(0, 5));
      }
      sketches.push_back(sk);
    }
    BuildingSpec b = fixtures::make_building(sketches, 10, 18, 22);
    if (rng.uniform(0, 3) == 0) b.max_active = static_cast<int>(rng.uniform(0, 2));

    std::vector<BuildingSpec::Choice> all;
    BuildingSpec::Choice current(b.zones.size(), -1);
    std::function<void(std::size_t)> rec = [&](std::size_t z) {
      if (z == b.zones.size()) {
        if (b.admissible(current)) all.push_back(current);
        return;
      }
      for (int e = -1; e < static_cast<int>(b.zones[z].settings.size()); ++e) {
        current[z] = e;
        rec(z + 1);
      }
      current[z] = -1;
    };
    rec(0);
    std::stable_sort(all.begin(), all.end(),
                     [&](const BuildingSpec::Choice& x, const BuildingSpec::Choice& y) {
                       const Rational px = b.choice_price(x), py = b.choice_price(y);
                       if (px != py) return px < py;
                       return x < y;
                     });
    ModeCursor cursor(b);
    std::size_t at = 0;
    bool match = true;
    while (auto m = cursor.next()) {
      if (at >= all.size() || m->id != b.choice_id(all[at])) {
        match = false;
        break;
      }
      ++at;
    }
    if (!match || at != all.size()) {
      c.require(false, "cursor order diverged on trial " + std::to_string(trial));
      break;
    }
  }

  // lazy memory on the 8x6 space: materialization tracks consumption
  gen::GeneratorConfig config;
  config.seed = 11;
  const auto problem = gen::generate_building(config);
  const BuildingSpec& big = *problem.building;
  c.require(big.mode_space_size() == Rational(1679616), "8x6 space must have 6^8 modes");
  ModeCursor cursor(big);
  std::size_t yielded = 0;
  while (yielded < 2000) {
    if (!cursor.next()) break;
    ++yielded;
  }
  c.require(yielded == 2000, "the cursor must stream modes on demand");
  c.require(cursor.nodes_created() <= yielded + cursor.frontier_size() + cursor.ready_size(),
            "materialized nodes must stay within yielded + frontier");
  c.finish();
}

void criterion_7_order_graph_equivalence() {
  Criterion c("7 ordered vs unordered verdicts (100x)", 60.0);
  gen::SplitMix64 rng(4001);
  int feasible_seen = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const MmsInstance m = random_small_instance(rng, 3, 2, false);
    const SafeBox box = unit_band(m.num_vars);
    const RatVec x0 = RatVec::Constant(m.num_vars, Rational(0));
    order_graph::OrderSpec spec;
    spec.initial =
        m.modes[static_cast<std::size_t>(rng.uniform(0, m.mode_count() - 1))].id;
    for (const Mode& a : m.modes)
      for (const Mode& b : m.modes) spec.edges.push_back({a.id, b.id});

    const auto plain = synthesis::synthesize(m, box, x0);
    const auto ordered = order_graph::synthesize_ordered(m, box, x0, spec);
    if (plain.feasible != ordered.feasible) {
      c.require(false, "verdict mismatch on trial " + std::to_string(trial));
      break;
    }
    if (ordered.feasible) {
      ++feasible_seen;
      if (!order_graph::complies(ordered.controller, spec)) {
        c.require(false, "emitted controller violates the graph on trial " +
                             std::to_string(trial));
        break;
      }
    }
  }
  c.detail << "\n    feasible instances: " << feasible_seen;
  c.require(feasible_seen >= 20, "enough feasible draws must occur");
  c.finish();
}

void criterion_8_simulator_fidelity() {
  Criterion c("8 closed form vs RK4 (1000 segments)", 30.0);
  gen::SplitMix64 rng(5003);
  long double worst_rel = 0;
  bool sandwich_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const long decay = rng.uniform(1, 4);
    const long drive = rng.uniform(-30, 30);
    const Mode m = fixtures::make_mode("m", {drive}, 0, {decay});
    Vec<long double> x0(1);
    x0(0) = static_cast<long double>(rng.uniform(-250, 250)) / 10.0L;
    const long double t = static_cast<long double>(rng.uniform(1, 200)) / 100.0L;

    const auto closed = flow_segment<long double>(x0, m, t);
    const auto rk = oracles::rk4_flow(x0, m, t, 100000);
    const long double scale = std::max({std::fabs((double)rk(0)), 1.0});
    worst_rel = std::max(worst_rel, std::fabs((double)(closed(0) - rk(0))) / scale);

    const long double a = static_cast<long double>(decay);
    const long double b = static_cast<long double>(drive);
    const long double d0 = b - a * x0(0);
    if (d0 != 0.0L) {
      const long double sign = d0 > 0 ? 1.0L : -1.0L;
      const long double lower = x0(0) + t * (b - a * closed(0));
      const long double upper = x0(0) + t * (b - a * x0(0));
      if (sign * closed(0) < sign * lower - 1e-12L ||
          sign * closed(0) > sign * upper + 1e-12L)
        sandwich_ok = false;
    }
  }
  c.detail << "\n    worst relative deviation: " << static_cast<double>(worst_rel);
  c.require(worst_rel <= 1e-6L, "closed form and RK4 must agree to 1e-6");
  c.require(sandwich_ok, "every segment endpoint must satisfy the drift sandwich");
  c.finish();
}

void criterion_9_building_comparison() {
  Criterion c("9 optimal vs lazy on 20 buildings", 300.0);
  std::atomic<int> next{0};
  std::atomic<int> feasible_count{0};
  std::mutex mu;
  std::vector<std::string> problems;

  auto worker = [&] {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= 20) return;
      gen::GeneratorConfig config;
      config.seed = static_cast<std::uint64_t>(k + 1);
      const io::Problem p = gen::generate_building(config);

      const auto cmp = simulate::compare<long double>(*p.building, p.x0, Rational(9), rat(1, 20));
      if (!cmp.feasible) continue;  // the criterion binds only when synthesis succeeds
      feasible_count.fetch_add(1);

      std::ostringstream local;
      if (!cmp.optimal_safe) local << "seed " << k + 1 << ": optimal controller unsafe; ";
      if (!cmp.lazy_safe) local << "seed " << k + 1 << ": lazy controller unsafe; ";
      if (!(cmp.optimal.peak_power <= cmp.lazy.peak_power))
        local << "seed " << k + 1 << ": optimal peak above lazy peak; ";
      // guard band: 5% relative plus a numerical floor, covering the lazy
      // run's finite-horizon transient credit
      const Rational guard = cmp.lazy.avg_power * rat(1, 20) + rat(1, 1000000000);
      if (!(cmp.optimal.avg_power <= cmp.lazy.avg_power + guard))
        local << "seed " << k + 1 << ": optimal average above lazy + guard; ";
      if (!local.str().empty()) {
        std::lock_guard<std::mutex> lock(mu);
        problems.push_back(local.str());
      }
    }
  };
  std::thread t1(worker), t2(worker);
  t1.join();
  t2.join();

  c.detail << "\n    feasible buildings: " << feasible_count.load() << "/20";
  for (const std::string& msg : problems) c.require(false, msg);
  c.require(feasible_count.load() >= 15, "most seeded buildings must synthesize");
  c.finish();
}

}  // namespace

int main() {
  std::printf("acceptance suite\n================\n");
  criterion_1_apartment_feasibility();
  criterion_2_apartment_long_run();
  criterion_3_priced_optimization();
  criterion_4_synthesis_oracle_agreement();
  criterion_5_narrowing_matches_full_scan();
  criterion_6_lazy_enumeration();
  criterion_7_order_graph_equivalence();
  criterion_8_simulator_fidelity();
  criterion_9_building_comparison();
  if (failures == 0) {
    std::printf("================\nall criteria passed\n");
    return 0;
  }
  std::printf("================\n%d criterion(s) failed\n", failures);
  return 1;
}
