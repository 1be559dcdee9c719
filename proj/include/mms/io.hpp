#pragma once

#include <json.hpp>

#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "mms/building.hpp"
#include "mms/optimizer.hpp"
#include "mms/order_graph.hpp"
#include "mms/simulate.hpp"
#include "mms/types.hpp"

namespace mms {
namespace io {

using Json = nlohmann::ordered_json;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rationals serialize as {"num": "...", "den": "..."}; parsing also accepts
// plain integers and exact decimal or fraction strings ("3/4", "20.5").
Json rational_to_json(const Rational& q);
Rational rational_from_json(const Json& j, const std::string& where);

// An instance file carries either an explicit mode list or an implicit
// multi-zone building, plus the safe box and the starting point.
struct Problem {
  std::optional<MmsInstance> instance;
  std::optional<BuildingSpec> building;
  SafeBox box;
  RatVec x0;
  std::optional<order_graph::OrderSpec> order;

  bool is_implicit() const { return building.has_value(); }
  const MmsInstance& explicit_instance() const;
};

Problem problem_from_json(const Json& j);
Json problem_to_json(const Problem& p);
Problem load_problem(const std::string& path);
void save_json(const Json& j, const std::string& path);
Json load_json(const std::string& path);

struct ControllerFile {
  PeriodicController controller;
  FrequencyVector frequency;
  Rational scale;
};

Json controller_to_json(const PeriodicController& controller, const FrequencyVector& frequency,
                        const Rational& scale);
ControllerFile controller_from_json(const Json& j);

Json optimization_to_json(const optimizer::OptimizationResult& result,
                          const optimizer::CostWeights& weights);

Json stats_to_json(const simulate::RunStats& stats);

// CSV rows: time, x_1..x_N, mode, power. Sampled points when present,
// switch points otherwise.
template <typename F>
void write_csv(std::ostream& os, const simulate::Trajectory<F>& trajectory,
               const std::function<Rational(const std::string&)>& price_of);

// price lookups for the CSV power column
std::function<Rational(const std::string&)> price_lookup(const MmsInstance& instance);
std::function<Rational(const std::string&)> price_lookup(const BuildingSpec& building);

}  // namespace io
}  // namespace mms
