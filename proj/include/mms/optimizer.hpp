#pragma once

#include <optional>
#include <vector>

#include "mms/building.hpp"
#include "mms/synthesis.hpp"
#include "mms/types.hpp"

namespace mms {
namespace optimizer {

struct CostWeights {
  Rational mu_avg = 0;
  Rational mu_peak = 0;

  void validate() const;  // rejects negative or all-zero weights
};

// Infimum of the long-run average cost over safe controllers restricted to
// the instance's mode set, together with a strictly feasible vector whose
// cost is within epsilon of it. The infimum itself may sit on the critical
// boundary and be unattainable.
struct AvgCostResult {
  bool feasible = false;
  Rational infimum;
  FrequencyVector optimum;    // closure point attaining the infimum
  FrequencyVector realizing;  // strictly feasible mix, cost <= infimum + epsilon
  Rational realized_cost;
  MmsInstance pruned;         // surviving modes after critical elimination
  std::vector<Eigen::Index> vars;
};

AvgCostResult min_average_cost(const MmsInstance& instance, const SafeBox& box,
                               const Rational& epsilon);

struct PeakResult {
  bool feasible = false;
  Rational p_min;
  std::vector<std::string> mode_ids;  // modes with price <= p_min
};

// Least price level whose mode set admits a safe controller. Uses doubling
// on the candidate-set size over modes sorted by price, then binary search
// on the bracketed price levels.
PeakResult min_peak_cost(const MmsInstance& instance, const SafeBox& box, const RatVec& x0);
PeakResult min_peak_cost(const BuildingSpec& building, const RatVec& x0);

struct OptimizationResult {
  bool feasible = false;
  PeriodicController controller;
  FrequencyVector frequency;   // realizing vector behind the controller
  Rational scale;
  Rational peak;               // max price among positive-dwell period actions
  Rational avg_infimum;
  Rational avg_realized;
  Rational weighted_infimum;   // mu_peak * p_star + mu_avg * avg_infimum
  Rational chosen_peak_level;  // p_star
  Rational epsilon;
  std::vector<std::string> surviving_modes;
};

// Weighted peak/average optimization. mu_peak = 0 reduces to the average
// infimum over all modes; mu_avg = 0 keeps the minimum peak level and then
// optimizes the average within it. Otherwise the peak bracket is narrowed by
// the iterated bound p' = p_min + (mu_avg/mu_peak)(optavg(p_min) - optavg(p'))
// and every price level inside the bracket is scored.
OptimizationResult optimize_weighted(const MmsInstance& instance, const SafeBox& box,
                                     const RatVec& x0, const CostWeights& weights,
                                     const Rational& epsilon);
OptimizationResult optimize_weighted(const BuildingSpec& building, const RatVec& x0,
                                     const CostWeights& weights, const Rational& epsilon);

// Plain scan over every distinct price level of an explicit instance.
OptimizationResult optimize_weighted_full_scan(const MmsInstance& instance, const SafeBox& box,
                                               const RatVec& x0, const CostWeights& weights,
                                               const Rational& epsilon);

// Long-run average cost of a periodic controller: the period's time-weighted
// mean price. The prefix never contributes.
Rational average_cost_of(const PeriodicController& controller, const MmsInstance& instance);

// Safe controllability of a building's implicit mode space, optionally capped
// by price. The witness is strictly feasible; surviving_modes is its support
// materialized as explicit modes in (price, id) order.
struct BuildingDecision {
  bool feasible = false;
  FrequencyVector witness;
  std::vector<Eigen::Index> vars;
  MmsInstance support;
};

BuildingDecision decide_building(const BuildingSpec& building,
                                 std::optional<Rational> price_cap);

// Controller over the building's full implicit space from the interior x0.
synthesis::Outcome synthesize_building(const BuildingSpec& building, const RatVec& x0);

// Builds the cyclic controller realizing a strictly feasible frequency vector
// over `pruned` (canonical mode order), from the interior point x0.
synthesis::Outcome realize_controller(const MmsInstance& pruned, const SafeBox& box,
                                      const RatVec& x0, const FrequencyVector& f,
                                      const std::vector<Eigen::Index>& vars);

}  // namespace optimizer
}  // namespace mms
