#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mms/building.hpp"
#include "mms/core.hpp"
#include "mms/types.hpp"

namespace mms {
namespace simulate {

struct Horizon {
  enum class Kind { Time, Periods, Actions };
  Kind kind = Kind::Periods;
  Rational time;    // Kind::Time
  long count = 0;   // Kind::Periods / Kind::Actions

  static Horizon periods(long n) { return {Kind::Periods, 0, n}; }
  static Horizon actions(long n) { return {Kind::Actions, 0, n}; }
  static Horizon duration(Rational t) { return {Kind::Time, std::move(t), 0}; }
};

template <typename F>
struct Trajectory {
  struct Point {
    F time;
    Vec<F> state;
    std::string mode;  // mode entered at (or active during) this point
  };
  struct Violation {
    F time;
    Eigen::Index var;
    bool lower;
  };

  std::vector<Point> switch_points;
  std::vector<Point> samples;
  bool safe = true;
  std::optional<Violation> first_violation;
};

template <typename F>
struct SimOptions {
  F guard = F(1e-9L);                // tolerance band around the box bounds
  std::optional<F> sample_step;      // also emit uniformly sampled states
};

// Composes the closed-form segment flow along the controller's timed actions
// and checks the box at every switch point (and sample, when sampling).
// Unsafe trajectories are returned with safe = false, never thrown.
template <typename F>
Trajectory<F> run(const MmsInstance& instance, const SafeBox& box, const Vec<F>& x0,
                  const PeriodicController& controller, const Horizon& horizon,
                  const SimOptions<F>& options = {});

// Per-variable affine map of one full period: x' = contraction * x + offset.
// The fixed point offset/(1-contraction) is where switch-point states of a
// safe periodic controller converge.
template <typename F>
struct PeriodMap {
  Vec<F> contraction;        // in (0,1) for a positive-time period
  Vec<F> one_minus;          // 1 - contraction, formed without cancellation
  Vec<F> offset;
  Vec<F> fixed_point;
};

template <typename F>
PeriodMap<F> analyze_period(const MmsInstance& instance, const PeriodicController& controller);

// State sampled on a uniform grid across an arbitrarily long horizon: period
// counts are collapsed through the affine period map instead of enumerating
// switches, so horizons of billions of periods stay cheap.
template <typename F>
Trajectory<F> sample_periodic(const MmsInstance& instance, const SafeBox& box, const Vec<F>& x0,
                              const PeriodicController& controller, const Rational& duration,
                              const Rational& step, const SimOptions<F>& options = {});

struct LazyStep {
  BuildingSpec::Choice choice;
  std::vector<Eigen::Index> flagged;  // zones where no setting can hold the temperature
};

// Threshold baseline: top 5% of a zone's range drops its heater to the
// minimum setting; bottom 5% engages the least-power setting that holds the
// zone, after first switching off every zone above 10% of its range.
template <typename F>
LazyStep lazy_controller_step(const BuildingSpec& building, const Vec<F>& state,
                              const BuildingSpec::Choice& current);

struct RunStats {
  Rational peak_power = 0;
  Rational avg_power = 0;
  long mode_switch_count = 0;
  Rational min_dwell_observed = 0;
};

template <typename F>
struct LazyRun {
  Trajectory<F> trajectory;
  RunStats stats;
  std::vector<std::pair<F, BuildingSpec::Choice>> schedule;  // choice per sample step
};

// Simulates the lazy controller on a uniform grid: the choice is re-evaluated
// at each step and held constant in between.
template <typename F>
LazyRun<F> run_lazy(const BuildingSpec& building, const Vec<F>& x0, const Rational& duration,
                    const Rational& step, const SimOptions<F>& options = {});

// (worse - better) / worse, in percent; zero when nothing was spent
Rational savings_percent(const Rational& worse, const Rational& better);

template <typename F>
struct ComparisonResult {
  bool feasible = false;
  Rational epsilon;  // realization slack used for the optimal side
  RunStats optimal;
  RunStats lazy;
  Rational savings_peak_percent;
  Rational savings_avg_percent;
  bool optimal_safe = false;
  bool lazy_safe = false;
  Trajectory<F> optimal_trajectory;  // sampled on the grid
  Trajectory<F> lazy_trajectory;
  Rational p_min;          // minimum feasible peak level
  Rational avg_infimum;    // average-cost infimum within that peak
  PeriodicController optimal_controller;
  FrequencyVector optimal_frequency;
  Rational optimal_scale;
  MmsInstance support;     // modes the optimal controller cycles through
};

// Synthesizes the minimum-peak controller, optimizes its average, and runs it
// against the lazy baseline over the given horizon at the sampling step.
// feasible = false when no safe controller exists at all.
template <typename F>
ComparisonResult<F> compare(const BuildingSpec& building, const RatVec& x0,
                            const Rational& horizon, const Rational& step,
                            const SimOptions<F>& options = {});

}  // namespace simulate
}  // namespace mms
