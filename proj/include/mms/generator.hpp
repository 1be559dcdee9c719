#pragma once

#include <cstdint>

#include "mms/io.hpp"

namespace mms {
namespace gen {

// Named PRNG so generated files are reproducible bit for bit; the seed and
// full configuration are echoed into the output header.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  long uniform(long lo, long hi) {  // inclusive bounds
    return lo + static_cast<long>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
};

// Multi-zone heating benchmark parameters. Time is measured in hours and
// temperatures in degrees C; every drawn quantity lives on a small rational
// grid so instances stay exact.
struct GeneratorConfig {
  int zones = 8;
  int settings_per_zone = 6;
  Rational outside_temp = 10;
  Rational comfort_lo = 18;
  Rational comfort_hi = 22;
  long decay_min_centi = 15;   // zone decay rate, hundredths per hour
  long decay_max_centi = 35;
  long base_eq_min_deci = 210;  // weakest setting equilibrium, tenths of a degree
  long base_eq_max_deci = 216;
  long eq_step_min_deci = 15;   // equilibrium gap between settings
  long eq_step_max_deci = 22;
  long eff_min_centi = 35;      // power per unit of thermal drive
  long eff_max_centi = 50;
  long x0_min_deci = 183;       // starting temperature, near the operating floor
  long x0_max_deci = 188;
  std::uint64_t seed = 1;

  static GeneratorConfig from_json(const io::Json& j);
  io::Json to_json() const;
};

io::Problem generate_building(const GeneratorConfig& config);

// Full instance file including the generator provenance header.
io::Json generate_building_file(const GeneratorConfig& config);

}  // namespace gen
}  // namespace mms
