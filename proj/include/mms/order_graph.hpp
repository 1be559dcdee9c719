#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mms/synthesis.hpp"
#include "mms/types.hpp"

namespace mms {
namespace order_graph {

// Directed constraint on which mode may follow which; controllers must start
// at `initial` and follow edges forever. A self-loop permits staying in a
// mode across consecutive actions.
struct OrderSpec {
  std::vector<std::pair<std::string, std::string>> edges;
  std::string initial;

  void validate(const MmsInstance& instance) const;
};

// Maximal strongly connected components reachable from the initial mode,
// ordered by their smallest mode index. Components are lists of mode indices.
std::vector<std::vector<Eigen::Index>> scc_candidates(const MmsInstance& instance,
                                                      const OrderSpec& spec);

// Closed walk inside the component visiting every component mode at least
// once, using only component-internal edges. Throws when the component admits
// no closed walk (a single mode without a self-loop).
std::vector<Eigen::Index> rho_sequence(const MmsInstance& instance, const OrderSpec& spec,
                                       const std::vector<Eigen::Index>& component);

// Safe controllability under the order constraint: each reachable component
// is tried with its visiting walk as the forced cycling order; on success a
// finite prefix walks the graph from the initial mode to the walk's head and
// the periodic part is rescaled conservatively for the interval of states the
// prefix can end in.
synthesis::Outcome synthesize_ordered(const MmsInstance& instance, const SafeBox& box,
                                      const RatVec& x0, const OrderSpec& spec);

// Direct scan of a controller's unrolled mode sequence: starts at the initial
// mode and every consecutive pair (including the period wrap) is an edge.
bool complies(const PeriodicController& controller, const OrderSpec& spec);

}  // namespace order_graph
}  // namespace mms
