#pragma once

#include <deque>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "mms/types.hpp"

namespace mms {

struct HeaterSetting {
  Rational decay;   // > 0
  Rational drive;
  Rational power;   // >= 0, energy cost per time unit while selected
};

struct ZoneSpec {
  Rational off_decay;  // > 0
  Rational off_drive;
  std::vector<HeaterSetting> settings;  // may be empty (unheated zone)
};

// Implicit mode space: one mode per admissible joint heater choice. A choice
// assigns each zone either off (-1) or one of its setting indices.
struct BuildingSpec {
  std::vector<ZoneSpec> zones;
  SafeBox comfort;
  std::optional<int> max_active;  // cap on simultaneously-on heaters

  using Choice = std::vector<int>;

  void validate() const;
  Eigen::Index zone_count() const { return static_cast<Eigen::Index>(zones.size()); }

  bool admissible(const Choice& choice) const;
  Rational choice_price(const Choice& choice) const;
  std::string choice_id(const Choice& choice) const;  // '-' for off, base-36 digit otherwise
  std::pair<Rational, Rational> zone_dynamics(std::size_t zone, int entry) const;  // (decay, drive)

  // Total number of admissible choices (product space, cap-filtered).
  Rational mode_space_size() const;
};

// Mode for one joint choice: price is the summed power of selected settings.
// Throws on out-of-range indices or a violated cap.
Mode materialize_mode(const BuildingSpec& building, const BuildingSpec::Choice& choice);

// Inverse of choice_id; empty when the string is not a valid encoding.
std::optional<BuildingSpec::Choice> parse_choice_id(const BuildingSpec& building,
                                                    const std::string& id);

// Yields every admissible joint choice exactly once, prices non-decreasing,
// ties broken by lexicographic choice. Frontier memory stays proportional to
// the explored boundary, not the product space.
class ModeCursor {
 public:
  explicit ModeCursor(const BuildingSpec& building);

  std::optional<Mode> next();
  const Rational* peek_price();  // nullptr once exhausted
  std::optional<BuildingSpec::Choice> peek_choice();

  std::size_t nodes_created() const { return nodes_created_; }
  std::size_t frontier_size() const { return heap_.size(); }
  std::size_t ready_size() const { return ready_.size(); }

 private:
  struct Node {
    Rational price;
    std::vector<int> ranks;            // per zone: 0 = off, r >= 1 = ladder position
    BuildingSpec::Choice choice;       // original setting indices, -1 = off
    int last_active = 0;               // highest index with rank > 0 (0 for the base node)
    int on_count = 0;
  };
  struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
      if (a.price != b.price) return a.price > b.price;
      return a.choice > b.choice;
    }
  };

  void expand(const Node& node);
  void drain_price_class();

  const BuildingSpec* building_;
  std::vector<std::vector<std::size_t>> ladders_;  // per zone, setting indices by (power, index)
  std::priority_queue<Node, std::vector<Node>, NodeOrder> heap_;
  std::deque<Node> ready_;
  std::size_t nodes_created_ = 0;
};

// All admissible modes with price <= cap, in (price, lexicographic) order.
std::vector<Mode> modes_up_to(const BuildingSpec& building, const Rational& cap);

}  // namespace mms
