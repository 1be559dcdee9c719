#include <doctest.h>

#include "fixtures.hpp"
#include "mms/building.hpp"
#include "mms/core.hpp"
#include "mms/generator.hpp"
#include "mms/optimizer.hpp"
#include "oracles.hpp"

using namespace mms;
using namespace mms::optimizer;
using fixtures::make_box;
using fixtures::make_building;
using fixtures::make_mode;
using fixtures::make_point;

namespace {

const Rational kEps = rat(1, 1 << 20);

MmsInstance explicit_of(const BuildingSpec& building) {
  Rational cap = 0;
  for (const ZoneSpec& z : building.zones)
    for (const HeaterSetting& s : z.settings) cap += s.power;
  MmsInstance m;
  m.num_vars = building.zone_count();
  m.modes = modes_up_to(building, cap);
  return m;
}

MmsInstance random_priced(gen::SplitMix64& rng, int max_modes) {
  MmsInstance m;
  m.num_vars = rng.uniform(1, 2);
  const long modes = rng.uniform(1, max_modes);
  for (long k = 0; k < modes; ++k) {
    std::vector<long> drive, decay;
    for (Eigen::Index i = 0; i < m.num_vars; ++i) {
      drive.push_back(rng.uniform(-3, 3));
      decay.push_back(rng.uniform(1, 3));
    }
    m.modes.push_back(
        make_mode("m" + std::to_string(k + 1), drive, rng.uniform(0, 5), decay));
  }
  return m;
}

}  // namespace

TEST_CASE("the priced system's minimum peak is 3") {
  const auto pk = min_peak_cost(fixtures::priced_quad(), fixtures::unit_box(),
                                make_point({rat(1, 2), rat(1, 2)}));
  REQUIRE(pk.feasible);
  CHECK(pk.p_min == 3);
  CHECK(pk.mode_ids == std::vector<std::string>{"m1", "m2", "m3"});
}

TEST_CASE("the cheapest mode alone cannot hold the unit box") {
  MmsInstance only_free = fixtures::priced_quad();
  only_free.modes.resize(1);
  const auto out = synthesis::find_good_vector(only_free, fixtures::unit_box());
  CHECK_FALSE(out.has_value());
}

TEST_CASE("average infimum over the cheap trio is 2") {
  MmsInstance trio = fixtures::priced_quad();
  trio.modes.pop_back();
  const auto avg = min_average_cost(trio, fixtures::unit_box(), kEps);
  REQUIRE(avg.feasible);
  CHECK(avg.infimum == 2);
  CHECK(avg.realized_cost >= avg.infimum);
  CHECK(avg.realized_cost - avg.infimum <= kEps);

  // upper witness: the equal-thirds grid point is good and costs exactly 2
  const auto thirds =
      fixtures::freq({{"m1", rat(1, 3)}, {"m2", rat(1, 3)}, {"m3", rat(1, 3)}});
  CHECK(classify(trio, fixtures::unit_box(), thirds).cls != VectorClass::NotGood);
  Rational witness_cost = 0;
  for (const Mode& m : trio.modes) witness_cost += thirds.weight(m.id) * m.price;
  CHECK(witness_cost == 2);

  // the grid lower bound stays consistent and well above the next candidate
  const auto bound = oracles::oracle_avg_lower_bound(trio, fixtures::unit_box(), 60);
  REQUIRE(bound.feasible);
  CHECK(bound.grid_minimum - bound.slack <= 2);
  CHECK(bound.grid_minimum - bound.slack > rat(5, 6));
}

TEST_CASE("average infimum over all four modes is 2/3") {
  const auto avg = min_average_cost(fixtures::priced_quad(), fixtures::unit_box(), kEps);
  REQUIRE(avg.feasible);
  CHECK(avg.infimum == rat(2, 3));

  // the optimum sits on the critical boundary; the realizing mix does not
  const auto cls_opt = classify(fixtures::priced_quad(), fixtures::unit_box(), avg.optimum);
  CHECK(cls_opt.cls != VectorClass::NotGood);
  const auto cls_real = classify(avg.pruned, fixtures::unit_box(), avg.realizing);
  CHECK(cls_real.cls == VectorClass::Implementable);
  CHECK(avg.realized_cost - avg.infimum <= kEps);

  // upper witness: the boundary point costs exactly 2/3
  Rational witness_cost = 0;
  const auto boundary = fixtures::freq({{"m1", rat(5, 6)}, {"m4", rat(1, 6)}});
  for (const Mode& m : fixtures::priced_quad().modes)
    witness_cost += boundary.weight(m.id) * m.price;
  CHECK(witness_cost == rat(2, 3));

  const auto bound =
      oracles::oracle_avg_lower_bound(fixtures::priced_quad(), fixtures::unit_box(), 60);
  REQUIRE(bound.feasible);
  CHECK(bound.grid_minimum - bound.slack <= rat(2, 3));
}

TEST_CASE("zero prices give a zero infimum") {
  MmsInstance m = fixtures::priced_quad();
  for (Mode& mode : m.modes) mode.price = 0;
  const auto avg = min_average_cost(m, fixtures::unit_box(), kEps);
  REQUIRE(avg.feasible);
  CHECK(avg.infimum == 0);
}

TEST_CASE("the weighted optimum accepts the higher peak") {
  const CostWeights weights{1, 1};
  const auto out = optimize_weighted(fixtures::priced_quad(), fixtures::unit_box(),
                                     make_point({rat(1, 2), rat(1, 2)}), weights, kEps);
  REQUIRE(out.feasible);
  CHECK(out.chosen_peak_level == 4);
  CHECK(out.avg_infimum == rat(2, 3));
  CHECK(out.weighted_infimum == 4 + rat(2, 3));

  // the runner-up level scores exactly 5
  MmsInstance trio = fixtures::priced_quad();
  trio.modes.pop_back();
  const auto at3 = min_average_cost(trio, fixtures::unit_box(), kEps);
  CHECK(Rational(3) + at3.infimum == 5);
}

TEST_CASE("peak-only weighting keeps the minimum peak") {
  const CostWeights weights{0, 1};
  const auto out = optimize_weighted(fixtures::priced_quad(), fixtures::unit_box(),
                                     make_point({rat(1, 2), rat(1, 2)}), weights, kEps);
  REQUIRE(out.feasible);
  CHECK(out.chosen_peak_level == 3);
  CHECK(out.peak <= 3);
  CHECK(out.avg_infimum == 2);
}

TEST_CASE("average-only weighting uses the whole mode set") {
  const CostWeights weights{1, 0};
  const auto out = optimize_weighted(fixtures::priced_quad(), fixtures::unit_box(),
                                     make_point({rat(1, 2), rat(1, 2)}), weights, kEps);
  REQUIRE(out.feasible);
  CHECK(out.avg_infimum == rat(2, 3));
  CHECK(out.avg_realized - out.avg_infimum <= kEps);
}

TEST_CASE("cost weights must not both vanish") {
  CHECK_THROWS_AS(optimize_weighted(fixtures::priced_quad(), fixtures::unit_box(),
                                    make_point({rat(1, 2), rat(1, 2)}), CostWeights{0, 0}, kEps),
                  std::invalid_argument);
}

TEST_CASE("period averages weigh dwells by price") {
  const MmsInstance quad = fixtures::priced_quad();
  const auto two_step = PeriodicController::make({}, {{"m1", 1}, {"m4", 1}});
  CHECK(average_cost_of(two_step, quad) == 2);
  const auto solo = PeriodicController::make({}, {{"m2", rat(7, 2)}});
  CHECK(average_cost_of(solo, quad) == 3);
}

TEST_CASE("the realized controller's average equals the reported realized cost") {
  const auto avg = min_average_cost(fixtures::priced_quad(), fixtures::unit_box(), kEps);
  REQUIRE(avg.feasible);
  const auto realized = synthesis::realize_controller(
      avg.pruned, fixtures::unit_box(), make_point({rat(1, 2), rat(1, 2)}), avg.realizing,
      avg.vars);
  CHECK(average_cost_of(realized.controller, fixtures::priced_quad()) == avg.realized_cost);
  CHECK(avg.realized_cost - avg.infimum <= kEps);
}

TEST_CASE("feasibility is monotone in the price cutoff") {
  gen::SplitMix64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const MmsInstance m = random_priced(rng, 5);
    SafeBox box;
    box.lower = RatVec::Constant(m.num_vars, Rational(-1));
    box.upper = RatVec::Constant(m.num_vars, Rational(1));
    std::vector<Rational> levels;
    for (const Mode& mode : m.modes) levels.push_back(mode.price);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    bool seen_feasible = false;
    Rational last_avg;
    bool have_avg = false;
    for (const Rational& level : levels) {
      MmsInstance sub;
      sub.num_vars = m.num_vars;
      for (const Mode& mode : m.modes)
        if (mode.price <= level) sub.modes.push_back(mode);
      const auto d = synthesis::decide(sub, box);
      if (seen_feasible) CHECK(d.feasible);  // supersets stay feasible
      if (d.feasible) {
        seen_feasible = true;
        const auto avg = min_average_cost(sub, box, kEps);
        REQUIRE(avg.feasible);
        if (have_avg) CHECK(avg.infimum <= last_avg);  // more modes never cost more
        last_avg = avg.infimum;
        have_avg = true;
      }
    }
  }
}

TEST_CASE("the narrowing search equals the full level scan") {
  gen::SplitMix64 rng(131);
  int compared = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const MmsInstance m = random_priced(rng, 6);
    SafeBox box;
    box.lower = RatVec::Constant(m.num_vars, Rational(-1));
    box.upper = RatVec::Constant(m.num_vars, Rational(1));
    const RatVec x0 = RatVec::Constant(m.num_vars, Rational(0));
    CostWeights weights;
    weights.mu_peak = rng.uniform(1, 3);
    weights.mu_avg = rng.uniform(0, 3);

    const auto narrowed = optimize_weighted(m, box, x0, weights, kEps);
    const auto scanned = optimize_weighted_full_scan(m, box, x0, weights, kEps);
    CHECK(narrowed.feasible == scanned.feasible);
    if (narrowed.feasible) {
      CHECK(narrowed.chosen_peak_level == scanned.chosen_peak_level);
      CHECK(narrowed.weighted_infimum == scanned.weighted_infimum);
      ++compared;
    }
  }
  CHECK(compared > 30);
}

TEST_CASE("implicit solves agree with the materialized product space") {
  gen::SplitMix64 rng(173);
  for (int trial = 0; trial < 12; ++trial) {
    // two or three zones, one or two settings each, mildly random shape
    std::vector<fixtures::ZoneSketch> sketches;
    const long zones = rng.uniform(2, 3);
    for (long z = 0; z < zones; ++z) {
      fixtures::ZoneSketch sk;
      const long settings = rng.uniform(1, 2);
      long eq = rng.uniform(19, 24);
      long pw = rng.uniform(1, 4);
      for (long s = 0; s < settings; ++s) {
        sk.equilibria.push_back(eq);
        sk.powers.push_back(pw);
        eq += rng.uniform(3, 9);
        pw += rng.uniform(1, 4);
      }
      sketches.push_back(sk);
    }
    const BuildingSpec building = make_building(sketches, 10, 18, 22);
    const MmsInstance product = explicit_of(building);
    RatVec x0 = RatVec::Constant(building.zone_count(), Rational(20));

    const auto pk_implicit = min_peak_cost(building, x0);
    const auto pk_explicit = min_peak_cost(product, building.comfort, x0);
    REQUIRE(pk_implicit.feasible == pk_explicit.feasible);
    if (!pk_implicit.feasible) continue;
    CHECK(pk_implicit.p_min == pk_explicit.p_min);

    const CostWeights weights{1, 1};
    const auto w_implicit = optimize_weighted(building, x0, weights, kEps);
    const auto w_explicit = optimize_weighted(product, building.comfort, x0, weights, kEps);
    REQUIRE(w_implicit.feasible);
    REQUIRE(w_explicit.feasible);
    CHECK(w_implicit.chosen_peak_level == w_explicit.chosen_peak_level);
    CHECK(w_implicit.weighted_infimum == w_explicit.weighted_infimum);
    CHECK(w_implicit.avg_infimum == w_explicit.avg_infimum);
  }
}

TEST_CASE("settings that change the decay rate agree across both paths") {
  // a strong setting may also change the thermal coupling, not just the drive
  BuildingSpec b;
  {
    ZoneSpec z;
    z.off_decay = rat(1, 2);
    z.off_drive = rat(5, 1);  // equilibrium 10
    z.settings.push_back({rat(1, 2), rat(21, 2), rat(3, 2)});  // eq 21, a unchanged
    z.settings.push_back({rat(3, 2), rat(75, 2), rat(4, 1)});  // eq 25, a tripled
    b.zones.push_back(z);
  }
  {
    ZoneSpec z;
    z.off_decay = rat(1, 4);
    z.off_drive = rat(5, 2);
    z.settings.push_back({rat(1, 1), rat(23, 1), rat(2, 1)});  // eq 23, a quadrupled
    b.zones.push_back(z);
  }
  b.comfort.lower = RatVec::Constant(2, Rational(18));
  b.comfort.upper = RatVec::Constant(2, Rational(22));
  b.validate();

  MmsInstance product = explicit_of(b);
  const RatVec x0 = make_point({20, 20});
  const auto pk_i = min_peak_cost(b, x0);
  const auto pk_e = min_peak_cost(product, b.comfort, x0);
  REQUIRE(pk_i.feasible);
  REQUIRE(pk_e.feasible);
  CHECK(pk_i.p_min == pk_e.p_min);

  const auto w_i = optimize_weighted(b, x0, CostWeights{1, 1}, kEps);
  const auto w_e = optimize_weighted(product, b.comfort, x0, CostWeights{1, 1}, kEps);
  REQUIRE(w_i.feasible);
  CHECK(w_i.chosen_peak_level == w_e.chosen_peak_level);
  CHECK(w_i.avg_infimum == w_e.avg_infimum);
  CHECK(w_i.weighted_infimum == w_e.weighted_infimum);
}

TEST_CASE("a pinned zone is handled by the implicit pipeline") {
  // zone 1's only holding point is the lower bound itself: off equilibrium
  // equals the floor, and its single setting shoots past the ceiling
  BuildingSpec building = make_building({{{21}, {2}}, {{40}, {3}}}, 18, 18, 22);
  building.zones[1].off_drive = 18;  // off holds exactly at the floor
  RatVec x0 = make_point({20, 19});
  const auto pk = min_peak_cost(building, x0);
  REQUIRE(pk.feasible);
  CHECK(pk.p_min == 0);  // off everywhere already holds both zones

  const MmsInstance product = explicit_of(building);
  const auto pk_explicit = min_peak_cost(product, building.comfort, x0);
  REQUIRE(pk_explicit.feasible);
  CHECK(pk_explicit.p_min == pk.p_min);
}
