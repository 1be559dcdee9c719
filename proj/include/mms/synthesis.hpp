#pragma once

#include <optional>
#include <vector>

#include "mms/core.hpp"
#include "mms/lp.hpp"
#include "mms/types.hpp"

namespace mms {
namespace synthesis {

struct Outcome {
  bool feasible = false;
  PeriodicController controller;
  FrequencyVector frequency;
  Rational scale;  // dwell-time scale: period dwell of mode m is frequency(m) * scale
  std::vector<std::string> surviving_modes;
  std::vector<Eigen::Index> surviving_vars;
};

// Weak feasibility over the frequency simplex: nonnegative mean drift at
// every lower bound, nonpositive at every upper bound.
std::optional<FrequencyVector> find_good_vector(const MmsInstance& instance, const SafeBox& box);

struct PrunedSystem {
  bool feasible = false;
  MmsInstance instance;               // surviving modes, canonical order preserved
  std::vector<Eigen::Index> vars;     // variables still constraining the system
  FrequencyVector witness;            // weak witness over the pruned system
};

// Repeatedly tests each remaining variable for strict satisfiability; a
// variable that is critical in every good vector gets its mismatched modes
// removed and is dropped from the constraint set.
PrunedSystem eliminate_criticals(const MmsInstance& instance, const SafeBox& box,
                                 const FrequencyVector& good_witness);

// Result of the full decision pipeline, shared by synthesize and the
// optimizer: prune criticals, then maximize the margin of the all-strict
// system over the pruned modes.
struct Decision {
  bool feasible = false;
  MmsInstance pruned;
  std::vector<Eigen::Index> vars;
  FrequencyVector strict_witness;
  Rational margin;  // maximized strictness margin, > 0 when feasible
};

Decision decide(const MmsInstance& instance, const SafeBox& box);

// Dwell-time scale guaranteeing safety of the cyclic controller built from f:
// the minimum over remaining variables of
//   (a) the margin of x0 to the box over the worst drift at x0 (first-cycle
//       excursion bound), and
//   (b) strict drift margin / (d * K * (sum_m f(m) a_i)^2), where d bounds
//       equilibrium spreads and K is the period length (contraction bound).
// Throws when x0 is not strictly interior or f is not strictly feasible.
Rational dwell_scale(const MmsInstance& instance, const SafeBox& box, const RatVec& x0,
                     const FrequencyVector& f, const std::vector<Eigen::Index>& vars,
                     std::optional<Eigen::Index> period_len = std::nullopt);

// Full pipeline: decide safe controllability from x0 and construct a periodic
// controller cycling the surviving modes in canonical order with dwells
// frequency(m) * scale. Unused surviving modes keep zero dwell.
// Throws std::invalid_argument when x0 is not strictly interior.
Outcome synthesize(const MmsInstance& instance, const SafeBox& box, const RatVec& x0);

// Cyclic controller realizing a strictly feasible frequency vector over the
// given (already pruned) instance, from the interior point x0.
Outcome realize_controller(const MmsInstance& pruned, const SafeBox& box, const RatVec& x0,
                           const FrequencyVector& f, const std::vector<Eigen::Index>& vars);

// Builds the weak/strict frequency LP over `instance` restricted to the given
// variables. Row 0 is the simplex equality; rows 1 + 2k and 2 + 2k are the
// lower/upper drift rows of vars[k].
lp::LinearProgram frequency_lp(const MmsInstance& instance, const SafeBox& box,
                               const std::vector<Eigen::Index>& vars);

FrequencyVector frequency_from_assignment(const MmsInstance& instance,
                                          const std::vector<Rational>& assignment);

}  // namespace synthesis
}  // namespace mms
