#include "mms/building.hpp"

#include <algorithm>
#include <stdexcept>

namespace mms {

void BuildingSpec::validate() const {
  if (zones.empty()) throw std::invalid_argument("building needs at least one zone");
  comfort.validate();
  if (comfort.dim() != zone_count())
    throw std::invalid_argument("comfort box dimension must equal the zone count");
  if (max_active && *max_active < 0)
    throw std::invalid_argument("max_active must be nonnegative");
  for (std::size_t z = 0; z < zones.size(); ++z) {
    const ZoneSpec& zone = zones[z];
    if (zone.off_decay <= 0)
      throw std::invalid_argument("zone " + std::to_string(z) +
                                  ": off decay rate must be strictly positive");
    if (zone.settings.size() > 36)
      throw std::invalid_argument("zone " + std::to_string(z) + ": at most 36 settings");
    for (std::size_t s = 0; s < zone.settings.size(); ++s) {
      if (zone.settings[s].decay <= 0)
        throw std::invalid_argument("zone " + std::to_string(z) + " setting " +
                                    std::to_string(s) + ": decay rate must be strictly positive");
      if (zone.settings[s].power < 0)
        throw std::invalid_argument("zone " + std::to_string(z) + " setting " +
                                    std::to_string(s) + ": power must be nonnegative");
    }
  }
}

bool BuildingSpec::admissible(const Choice& choice) const {
  if (choice.size() != zones.size()) return false;
  int on = 0;
  for (std::size_t z = 0; z < zones.size(); ++z) {
    const int c = choice[z];
    if (c < -1 || c >= static_cast<int>(zones[z].settings.size())) return false;
    if (c >= 0) ++on;
  }
  return !max_active || on <= *max_active;
}

Rational BuildingSpec::choice_price(const Choice& choice) const {
  Rational total = 0;
  for (std::size_t z = 0; z < zones.size(); ++z)
    if (choice[z] >= 0) total += zones[z].settings[static_cast<std::size_t>(choice[z])].power;
  return total;
}

std::string BuildingSpec::choice_id(const Choice& choice) const {
  static const char digits[] = "0123456789abcdefghijklmnopqrstuvwxyz";
  std::string id;
  id.reserve(choice.size());
  for (int c : choice) id.push_back(c < 0 ? '-' : digits[c]);
  return id;
}

std::pair<Rational, Rational> BuildingSpec::zone_dynamics(std::size_t zone, int entry) const {
  const ZoneSpec& z = zones[zone];
  if (entry < 0) return {z.off_decay, z.off_drive};
  const HeaterSetting& s = z.settings[static_cast<std::size_t>(entry)];
  return {s.decay, s.drive};
}

Rational BuildingSpec::mode_space_size() const {
  if (!max_active) {
    Rational total = 1;
    for (const ZoneSpec& z : zones) total *= Rational(static_cast<long>(z.settings.size() + 1));
    return total;
  }
  // count choices with at most max_active zones switched on
  std::vector<Rational> by_on_count(zones.size() + 1, Rational(0));
  by_on_count[0] = 1;
  for (const ZoneSpec& z : zones) {
    std::vector<Rational> next(by_on_count.size(), Rational(0));
    for (std::size_t k = 0; k < by_on_count.size(); ++k) {
      if (by_on_count[k] == 0) continue;
      next[k] += by_on_count[k];  // off
      if (k + 1 < next.size())
        next[k + 1] += by_on_count[k] * Rational(static_cast<long>(z.settings.size()));
    }
    by_on_count = std::move(next);
  }
  Rational total = 0;
  for (std::size_t k = 0; k <= static_cast<std::size_t>(*max_active) && k < by_on_count.size();
       ++k)
    total += by_on_count[k];
  return total;
}

Mode materialize_mode(const BuildingSpec& building, const BuildingSpec::Choice& choice) {
  if (choice.size() != building.zones.size())
    throw std::invalid_argument("choice must assign every zone");
  int on = 0;
  for (std::size_t z = 0; z < choice.size(); ++z) {
    if (choice[z] < -1 || choice[z] >= static_cast<int>(building.zones[z].settings.size()))
      throw std::out_of_range("setting index out of range for zone " + std::to_string(z));
    if (choice[z] >= 0) ++on;
  }
  if (building.max_active && on > *building.max_active)
    throw std::invalid_argument("choice exceeds the cap on simultaneously-on heaters");

  Mode m;
  m.id = building.choice_id(choice);
  m.decay.resize(building.zone_count());
  m.drive.resize(building.zone_count());
  m.price = 0;
  for (std::size_t z = 0; z < choice.size(); ++z) {
    const auto [a, b] = building.zone_dynamics(z, choice[z]);
    m.decay(static_cast<Eigen::Index>(z)) = a;
    m.drive(static_cast<Eigen::Index>(z)) = b;
    if (choice[z] >= 0)
      m.price += building.zones[z].settings[static_cast<std::size_t>(choice[z])].power;
  }
  return m;
}

std::optional<BuildingSpec::Choice> parse_choice_id(const BuildingSpec& building,
                                                    const std::string& id) {
  if (id.size() != building.zones.size()) return std::nullopt;
  BuildingSpec::Choice choice;
  for (std::size_t z = 0; z < id.size(); ++z) {
    const char c = id[z];
    int entry;
    if (c == '-') {
      entry = -1;
    } else if (c >= '0' && c <= '9') {
      entry = c - '0';
    } else if (c >= 'a' && c <= 'z') {
      entry = c - 'a' + 10;
    } else {
      return std::nullopt;
    }
    if (entry >= static_cast<int>(building.zones[z].settings.size())) return std::nullopt;
    choice.push_back(entry);
  }
  return choice;
}

ModeCursor::ModeCursor(const BuildingSpec& building) : building_(&building) {
  building.validate();
  ladders_.resize(building.zones.size());
  for (std::size_t z = 0; z < building.zones.size(); ++z) {
    auto& ladder = ladders_[z];
    ladder.resize(building.zones[z].settings.size());
    for (std::size_t s = 0; s < ladder.size(); ++s) ladder[s] = s;
    std::sort(ladder.begin(), ladder.end(), [&](std::size_t a, std::size_t b) {
      const auto& sa = building.zones[z].settings[a];
      const auto& sb = building.zones[z].settings[b];
      if (sa.power != sb.power) return sa.power < sb.power;
      return a < b;
    });
  }
  Node base;
  base.price = 0;
  base.ranks.assign(building.zones.size(), 0);
  base.choice.assign(building.zones.size(), -1);
  base.last_active = 0;
  base.on_count = 0;
  heap_.push(std::move(base));
  ++nodes_created_;
}

void ModeCursor::expand(const Node& node) {
  const std::size_t zones = building_->zones.size();
  for (std::size_t z = static_cast<std::size_t>(node.last_active); z < zones; ++z) {
    const auto& ladder = ladders_[z];
    const int rank = node.ranks[z];
    if (rank >= static_cast<int>(ladder.size())) continue;  // top of this zone's ladder
    const bool turning_on = rank == 0;
    if (turning_on && building_->max_active && node.on_count >= *building_->max_active) continue;

    Node succ = node;
    succ.ranks[z] = rank + 1;
    const std::size_t setting = ladder[static_cast<std::size_t>(rank)];
    const Rational old_power =
        rank == 0 ? Rational(0)
                  : building_->zones[z].settings[ladder[static_cast<std::size_t>(rank - 1)]].power;
    succ.price = node.price + building_->zones[z].settings[setting].power - old_power;
    succ.choice[z] = static_cast<int>(setting);
    succ.last_active = static_cast<int>(z);
    succ.on_count = node.on_count + (turning_on ? 1 : 0);
    heap_.push(std::move(succ));
    ++nodes_created_;
  }
}

void ModeCursor::drain_price_class() {
  if (heap_.empty()) return;
  const Rational price = heap_.top().price;
  std::vector<Node> batch;
  while (!heap_.empty() && heap_.top().price == price) {
    Node node = heap_.top();
    heap_.pop();
    expand(node);  // equal-price successors join this same drain
    batch.push_back(std::move(node));
  }
  std::sort(batch.begin(), batch.end(),
            [](const Node& a, const Node& b) { return a.choice < b.choice; });
  for (Node& n : batch) ready_.push_back(std::move(n));
}

const Rational* ModeCursor::peek_price() {
  if (!ready_.empty()) return &ready_.front().price;
  if (heap_.empty()) return nullptr;
  return &heap_.top().price;
}

std::optional<BuildingSpec::Choice> ModeCursor::peek_choice() {
  if (ready_.empty()) drain_price_class();
  if (ready_.empty()) return std::nullopt;
  return ready_.front().choice;
}

std::optional<Mode> ModeCursor::next() {
  if (ready_.empty()) drain_price_class();
  if (ready_.empty()) return std::nullopt;
  Node node = std::move(ready_.front());
  ready_.pop_front();
  return materialize_mode(*building_, node.choice);
}

std::vector<Mode> modes_up_to(const BuildingSpec& building, const Rational& cap) {
  if (cap < 0) throw std::invalid_argument("price cap must be nonnegative");
  std::vector<Mode> out;
  ModeCursor cursor(building);
  while (const Rational* p = cursor.peek_price()) {
    if (*p > cap) break;
    out.push_back(*cursor.next());
  }
  return out;
}

}  // namespace mms
