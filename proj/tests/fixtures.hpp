#pragma once

// Shared fixtures: the two-room/one-heater apartment and the priced
// four-mode system used across the suites.

#include <vector>

#include "mms/building.hpp"
#include "mms/types.hpp"

namespace fixtures {

using mms::Mode;
using mms::MmsInstance;
using mms::Rational;
using mms::RatVec;
using mms::SafeBox;

inline Mode make_mode(const std::string& id, std::vector<long> drive, long price = 0,
                      std::vector<long> decay = {}) {
  Mode m;
  m.id = id;
  const std::size_t n = drive.size();
  m.decay.resize(static_cast<Eigen::Index>(n));
  m.drive.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    m.decay(static_cast<Eigen::Index>(i)) = decay.empty() ? Rational(1) : Rational(decay[i]);
    m.drive(static_cast<Eigen::Index>(i)) = Rational(drive[i]);
  }
  m.price = price;
  return m;
}

inline SafeBox make_box(std::vector<long> lo, std::vector<long> hi) {
  SafeBox box;
  box.lower.resize(static_cast<Eigen::Index>(lo.size()));
  box.upper.resize(static_cast<Eigen::Index>(hi.size()));
  for (std::size_t i = 0; i < lo.size(); ++i) {
    box.lower(static_cast<Eigen::Index>(i)) = lo[i];
    box.upper(static_cast<Eigen::Index>(i)) = hi[i];
  }
  return box;
}

inline RatVec make_point(std::vector<Rational> values) {
  RatVec x(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) x(static_cast<Eigen::Index>(i)) = values[i];
  return x;
}

// Two rooms, one heater that can warm only one of them at a time. Off rooms
// drift to 12, heated rooms to 30; comfort is [18, 22] in both rooms.
inline MmsInstance two_room_apartment() {
  MmsInstance m;
  m.num_vars = 2;
  m.modes = {make_mode("m1", {12, 12}), make_mode("m2", {30, 12}), make_mode("m3", {12, 30})};
  return m;
}

inline SafeBox two_room_box() { return make_box({18, 18}, {22, 22}); }

// Four priced modes over [0,1]^2; the cheap trio holds the box at average
// cost 2 while adding the expensive fourth mode drops the average below 1.
inline MmsInstance priced_quad() {
  MmsInstance m;
  m.num_vars = 2;
  m.modes = {make_mode("m1", {-1, -1}, 0), make_mode("m2", {2, -1}, 3),
             make_mode("m3", {-1, 2}, 3), make_mode("m4", {5, 5}, 4)};
  return m;
}

inline SafeBox unit_box() { return make_box({0, 0}, {1, 1}); }

inline mms::FrequencyVector freq(std::vector<std::pair<std::string, Rational>> entries) {
  mms::FrequencyVector f;
  for (auto& [id, w] : entries) f.weights[id] = w;
  return f;
}

// zone described as (equilibria, powers) with unit decay and off-drift to
// `outside`; equilibrium e means drive = e
struct ZoneSketch {
  std::vector<long> equilibria;
  std::vector<long> powers;
};

inline mms::BuildingSpec make_building(std::vector<ZoneSketch> zones, long outside, long lo,
                                       long hi) {
  mms::BuildingSpec b;
  for (const ZoneSketch& sketch : zones) {
    mms::ZoneSpec zone;
    zone.off_decay = 1;
    zone.off_drive = outside;
    for (std::size_t s = 0; s < sketch.equilibria.size(); ++s) {
      mms::HeaterSetting setting;
      setting.decay = 1;
      setting.drive = sketch.equilibria[s];
      setting.power = sketch.powers[s];
      zone.settings.push_back(setting);
    }
    b.zones.push_back(std::move(zone));
  }
  const auto n = static_cast<Eigen::Index>(zones.size());
  b.comfort.lower = RatVec::Constant(n, Rational(lo));
  b.comfort.upper = RatVec::Constant(n, Rational(hi));
  return b;
}

}  // namespace fixtures
