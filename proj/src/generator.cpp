#include "mms/generator.hpp"

namespace mms {
namespace gen {

GeneratorConfig GeneratorConfig::from_json(const io::Json& j) {
  GeneratorConfig c;
  auto get_int = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j.at(key).template get<long>();
  };
  auto get_rat = [&](const char* key, Rational& slot) {
    if (j.contains(key)) slot = io::rational_from_json(j.at(key), key);
  };
  if (j.contains("zones")) c.zones = j.at("zones").get<int>();
  if (j.contains("settings_per_zone")) c.settings_per_zone = j.at("settings_per_zone").get<int>();
  get_rat("outside_temp", c.outside_temp);
  get_rat("comfort_lo", c.comfort_lo);
  get_rat("comfort_hi", c.comfort_hi);
  get_int("decay_min_centi", c.decay_min_centi);
  get_int("decay_max_centi", c.decay_max_centi);
  get_int("base_eq_min_deci", c.base_eq_min_deci);
  get_int("base_eq_max_deci", c.base_eq_max_deci);
  get_int("eq_step_min_deci", c.eq_step_min_deci);
  get_int("eq_step_max_deci", c.eq_step_max_deci);
  get_int("eff_min_centi", c.eff_min_centi);
  get_int("eff_max_centi", c.eff_max_centi);
  get_int("x0_min_deci", c.x0_min_deci);
  get_int("x0_max_deci", c.x0_max_deci);
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (c.zones <= 0 || c.settings_per_zone < 0)
    throw io::ParseError("generator config: zones must be positive");
  return c;
}

io::Json GeneratorConfig::to_json() const {
  io::Json j;
  j["zones"] = zones;
  j["settings_per_zone"] = settings_per_zone;
  j["outside_temp"] = io::rational_to_json(outside_temp);
  j["comfort_lo"] = io::rational_to_json(comfort_lo);
  j["comfort_hi"] = io::rational_to_json(comfort_hi);
  j["decay_min_centi"] = decay_min_centi;
  j["decay_max_centi"] = decay_max_centi;
  j["base_eq_min_deci"] = base_eq_min_deci;
  j["base_eq_max_deci"] = base_eq_max_deci;
  j["eq_step_min_deci"] = eq_step_min_deci;
  j["eq_step_max_deci"] = eq_step_max_deci;
  j["eff_min_centi"] = eff_min_centi;
  j["eff_max_centi"] = eff_max_centi;
  j["x0_min_deci"] = x0_min_deci;
  j["x0_max_deci"] = x0_max_deci;
  j["seed"] = seed;
  return j;
}

io::Problem generate_building(const GeneratorConfig& config) {
  SplitMix64 rng(config.seed);
  io::Problem p;
  BuildingSpec building;

  const Eigen::Index n = config.zones;
  building.comfort.lower = RatVec::Constant(n, config.comfort_lo);
  building.comfort.upper = RatVec::Constant(n, config.comfort_hi);
  p.x0.resize(n);

  for (int z = 0; z < config.zones; ++z) {
    ZoneSpec zone;
    const Rational decay = rat(rng.uniform(config.decay_min_centi, config.decay_max_centi), 100);
    const Rational base_eq = rat(rng.uniform(config.base_eq_min_deci, config.base_eq_max_deci), 10);
    const Rational step = rat(rng.uniform(config.eq_step_min_deci, config.eq_step_max_deci), 10);
    const Rational efficiency = rat(rng.uniform(config.eff_min_centi, config.eff_max_centi), 100);
    p.x0(z) = rat(rng.uniform(config.x0_min_deci, config.x0_max_deci), 10);

    zone.off_decay = decay;
    zone.off_drive = decay * config.outside_temp;
    // settings_per_zone counts heater states including off
    for (int s = 0; s + 1 < config.settings_per_zone; ++s) {
      HeaterSetting setting;
      const Rational equilibrium = base_eq + Rational(s) * step;
      setting.decay = decay;
      setting.drive = decay * equilibrium;
      setting.power = efficiency * decay * (equilibrium - config.outside_temp);
      zone.settings.push_back(std::move(setting));
    }
    building.zones.push_back(std::move(zone));
  }
  building.validate();
  p.box = building.comfort;
  p.building = std::move(building);
  return p;
}

io::Json generate_building_file(const GeneratorConfig& config) {
  const io::Problem p = generate_building(config);
  io::Json body = io::problem_to_json(p);
  io::Json j;
  io::Json header;
  header["prng"] = "splitmix64";
  header["seed"] = config.seed;
  header["config"] = config.to_json();
  j["generator"] = std::move(header);
  j["outside_temp"] = io::rational_to_json(config.outside_temp);
  for (auto& [key, value] : body.items()) j[key] = std::move(value);
  return j;
}

}  // namespace gen
}  // namespace mms
