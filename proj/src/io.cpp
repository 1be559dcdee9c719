#include "mms/io.hpp"

#include <fstream>

namespace mms {
namespace io {

Json rational_to_json(const Rational& q) {
  Json j;
  j["num"] = q.get_num().get_str();
  j["den"] = q.get_den().get_str();
  return j;
}

Rational rational_from_json(const Json& j, const std::string& where) {
  try {
    if (j.is_number_integer()) return Rational(static_cast<long>(j.get<long long>()));
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_object()) {
      if (!j.contains("num") || !j.contains("den"))
        throw ParseError(where + ": rational object needs num and den");
      const auto piece = [&](const char* key) -> mpz_class {
        const Json& v = j.at(key);
        if (v.is_number_integer()) return mpz_class(static_cast<long>(v.get<long long>()));
        if (v.is_string()) return mpz_class(v.get<std::string>());
        throw ParseError(where + ": " + key + " must be an integer or string");
      };
      const mpz_class num = piece("num");
      const mpz_class den = piece("den");
      if (sgn(den) == 0) throw ParseError(where + ": zero denominator");
      Rational q(num, den);
      q.canonicalize();
      return q;
    }
  } catch (const std::invalid_argument& e) {
    throw ParseError(where + ": " + e.what());
  }
  throw ParseError(where + ": expected a rational (integer, string or {num, den})");
}

namespace {

RatVec rational_vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  RatVec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = rational_from_json(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

Json rational_vector_to_json(const RatVec& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(rational_to_json(v(i)));
  return arr;
}

SafeBox box_from_json(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("l") || !j.contains("u"))
    throw ParseError(where + ": expected {l: [...], u: [...]}");
  SafeBox box;
  box.lower = rational_vector(j.at("l"), where + ".l");
  box.upper = rational_vector(j.at("u"), where + ".u");
  try {
    box.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(where + ": " + e.what());
  }
  return box;
}

MmsInstance instance_from_json(const Json& j) {
  MmsInstance instance;
  if (!j.contains("vars") || !j.at("vars").is_number_integer())
    throw ParseError("explicit instance needs an integer 'vars' field");
  instance.num_vars = j.at("vars").get<long>();
  if (!j.contains("modes") || !j.at("modes").is_array())
    throw ParseError("explicit instance needs a 'modes' array");
  for (std::size_t k = 0; k < j.at("modes").size(); ++k) {
    const Json& mj = j.at("modes")[k];
    const std::string where = "modes[" + std::to_string(k) + "]";
    Mode m;
    if (!mj.contains("id") || !mj.at("id").is_string())
      throw ParseError(where + ": mode needs a string id");
    m.id = mj.at("id").get<std::string>();
    m.decay = rational_vector(mj.at("a"), where + ".a");
    m.drive = rational_vector(mj.at("b"), where + ".b");
    if (mj.contains("price")) m.price = rational_from_json(mj.at("price"), where + ".price");
    instance.modes.push_back(std::move(m));
  }
  try {
    instance.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  return instance;
}

BuildingSpec building_from_json(const Json& j) {
  BuildingSpec b;
  std::optional<Rational> outside;
  if (j.contains("outside_temp"))
    outside = rational_from_json(j.at("outside_temp"), "outside_temp");
  if (!j.at("zones").is_array()) throw ParseError("'zones' must be an array");
  for (std::size_t z = 0; z < j.at("zones").size(); ++z) {
    const Json& zj = j.at("zones")[z];
    const std::string where = "zones[" + std::to_string(z) + "]";
    ZoneSpec zone;
    if (!zj.contains("off") || !zj.at("off").contains("a"))
      throw ParseError(where + ".off: needs at least the decay rate a");
    zone.off_decay = rational_from_json(zj.at("off").at("a"), where + ".off.a");
    if (zj.at("off").contains("b")) {
      zone.off_drive = rational_from_json(zj.at("off").at("b"), where + ".off.b");
    } else if (outside) {
      zone.off_drive = zone.off_decay * *outside;
    } else {
      throw ParseError(where + ".off: needs b (or a top-level outside_temp)");
    }
    if (zj.contains("settings")) {
      for (std::size_t s = 0; s < zj.at("settings").size(); ++s) {
        const Json& sj = zj.at("settings")[s];
        const std::string sw = where + ".settings[" + std::to_string(s) + "]";
        HeaterSetting setting;
        setting.decay = rational_from_json(sj.at("a"), sw + ".a");
        setting.drive = rational_from_json(sj.at("b"), sw + ".b");
        setting.power = rational_from_json(sj.at("power"), sw + ".power");
        zone.settings.push_back(std::move(setting));
      }
    }
    b.zones.push_back(std::move(zone));
  }
  b.comfort = box_from_json(j.at("comfort"), "comfort");
  if (j.contains("max_active")) {
    if (!j.at("max_active").is_number_integer())
      throw ParseError("max_active must be an integer");
    b.max_active = j.at("max_active").get<int>();
  }
  try {
    b.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  return b;
}

}  // namespace

const MmsInstance& Problem::explicit_instance() const {
  if (!instance) throw ParseError("operation requires an explicit-mode instance file");
  return *instance;
}

Problem problem_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("instance file must be a JSON object");
  Problem p;
  const bool has_explicit = j.contains("modes");
  const bool has_implicit = j.contains("zones");
  if (has_explicit == has_implicit)
    throw ParseError("instance file must contain exactly one of 'modes' or 'zones'");

  if (has_explicit) {
    p.instance = instance_from_json(j);
    p.box = box_from_json(j.at("box"), "box");
    if (p.box.dim() != p.instance->num_vars)
      throw ParseError("box dimension must equal 'vars'");
    if (j.contains("order_graph")) {
      const Json& gj = j.at("order_graph");
      order_graph::OrderSpec spec;
      if (!gj.contains("edges") || !gj.at("edges").is_array())
        throw ParseError("order_graph needs an 'edges' array");
      for (const Json& e : gj.at("edges")) {
        if (!e.is_array() || e.size() != 2)
          throw ParseError("order_graph edges must be [from, to] pairs");
        spec.edges.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
      }
      if (!gj.contains("initial")) throw ParseError("order_graph needs an 'initial' mode");
      spec.initial = gj.at("initial").get<std::string>();
      try {
        spec.validate(*p.instance);
      } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
      }
      p.order = std::move(spec);
    }
  } else {
    p.building = building_from_json(j);
    p.box = p.building->comfort;
    if (j.contains("order_graph"))
      throw ParseError("order graphs are only supported for explicit instances");
  }

  if (!j.contains("x0")) throw ParseError("instance file needs a starting point x0");
  p.x0 = rational_vector(j.at("x0"), "x0");
  if (p.x0.size() != p.box.dim())
    throw ParseError("x0 dimension must match the box");
  return p;
}

Json problem_to_json(const Problem& p) {
  Json j;
  if (p.instance) {
    j["vars"] = static_cast<long>(p.instance->num_vars);
    Json modes = Json::array();
    for (const Mode& m : p.instance->modes) {
      Json mj;
      mj["id"] = m.id;
      mj["a"] = rational_vector_to_json(m.decay);
      mj["b"] = rational_vector_to_json(m.drive);
      mj["price"] = rational_to_json(m.price);
      modes.push_back(std::move(mj));
    }
    j["modes"] = std::move(modes);
    Json box;
    box["l"] = rational_vector_to_json(p.box.lower);
    box["u"] = rational_vector_to_json(p.box.upper);
    j["box"] = std::move(box);
    if (p.order) {
      Json gj;
      Json edges = Json::array();
      for (const auto& [from, to] : p.order->edges) edges.push_back(Json::array({from, to}));
      gj["edges"] = std::move(edges);
      gj["initial"] = p.order->initial;
      j["order_graph"] = std::move(gj);
    }
  } else {
    Json zones = Json::array();
    for (const ZoneSpec& z : p.building->zones) {
      Json zj;
      Json off;
      off["a"] = rational_to_json(z.off_decay);
      off["b"] = rational_to_json(z.off_drive);
      zj["off"] = std::move(off);
      Json settings = Json::array();
      for (const HeaterSetting& s : z.settings) {
        Json sj;
        sj["a"] = rational_to_json(s.decay);
        sj["b"] = rational_to_json(s.drive);
        sj["power"] = rational_to_json(s.power);
        settings.push_back(std::move(sj));
      }
      zj["settings"] = std::move(settings);
      zones.push_back(std::move(zj));
    }
    j["zones"] = std::move(zones);
    Json comfort;
    comfort["l"] = rational_vector_to_json(p.building->comfort.lower);
    comfort["u"] = rational_vector_to_json(p.building->comfort.upper);
    j["comfort"] = std::move(comfort);
    if (p.building->max_active) j["max_active"] = *p.building->max_active;
  }
  j["x0"] = rational_vector_to_json(p.x0);
  return j;
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

Problem load_problem(const std::string& path) { return problem_from_json(load_json(path)); }

void save_json(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

Json controller_to_json(const PeriodicController& controller, const FrequencyVector& frequency,
                        const Rational& scale) {
  Json j;
  auto actions = [](const std::vector<TimedAction>& list) {
    Json arr = Json::array();
    for (const TimedAction& a : list) {
      Json aj;
      aj["mode"] = a.mode;
      aj["dwell"] = rational_to_json(a.dwell);
      arr.push_back(std::move(aj));
    }
    return arr;
  };
  j["prefix"] = actions(controller.prefix);
  j["period"] = actions(controller.period);
  j["s"] = rational_to_json(scale);
  Json freq;
  for (const auto& [id, w] : frequency.weights) freq[id] = rational_to_json(w);
  j["frequency"] = std::move(freq);
  j["min_dwell"] = rational_to_json(controller.min_dwell);
  return j;
}

ControllerFile controller_from_json(const Json& j) {
  ControllerFile out;
  auto actions = [&](const Json& arr, const std::string& where) {
    std::vector<TimedAction> list;
    if (!arr.is_array()) throw ParseError(where + ": expected an array");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const Json& aj = arr[k];
      TimedAction a;
      a.mode = aj.at("mode").get<std::string>();
      a.dwell = rational_from_json(aj.at("dwell"), where + ".dwell");
      if (a.dwell < 0) throw ParseError(where + ": negative dwell");
      list.push_back(std::move(a));
    }
    return list;
  };
  std::vector<TimedAction> prefix =
      j.contains("prefix") ? actions(j.at("prefix"), "prefix") : std::vector<TimedAction>{};
  std::vector<TimedAction> period = actions(j.at("period"), "period");
  try {
    out.controller = PeriodicController::make(std::move(prefix), std::move(period));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  if (j.contains("min_dwell")) {
    const Rational stated = rational_from_json(j.at("min_dwell"), "min_dwell");
    if (stated != out.controller.min_dwell)
      throw ParseError("min_dwell does not match the controller's dwells");
  }
  if (j.contains("frequency")) {
    for (const auto& [id, wj] : j.at("frequency").items())
      out.frequency.weights[id] = rational_from_json(wj, "frequency." + id);
  }
  if (j.contains("s")) out.scale = rational_from_json(j.at("s"), "s");
  return out;
}

Json optimization_to_json(const optimizer::OptimizationResult& result,
                          const optimizer::CostWeights& weights) {
  Json j;
  j["feasible"] = result.feasible;
  j["mu_avg"] = rational_to_json(weights.mu_avg);
  j["mu_peak"] = rational_to_json(weights.mu_peak);
  if (!result.feasible) return j;
  j["p_star"] = rational_to_json(result.chosen_peak_level);
  j["peak"] = rational_to_json(result.peak);
  j["avg_infimum"] = rational_to_json(result.avg_infimum);
  j["avg_realized"] = rational_to_json(result.avg_realized);
  j["weighted_infimum"] = rational_to_json(result.weighted_infimum);
  j["epsilon"] = rational_to_json(result.epsilon);
  j["controller"] = controller_to_json(result.controller, result.frequency, result.scale);
  return j;
}

Json stats_to_json(const simulate::RunStats& stats) {
  Json j;
  j["peak_power"] = rational_to_json(stats.peak_power);
  j["peak_power_approx"] = to_double(stats.peak_power);
  j["avg_power"] = rational_to_json(stats.avg_power);
  j["avg_power_approx"] = to_double(stats.avg_power);
  j["mode_switch_count"] = stats.mode_switch_count;
  j["min_dwell_observed"] = rational_to_json(stats.min_dwell_observed);
  return j;
}

template <typename F>
void write_csv(std::ostream& os, const simulate::Trajectory<F>& trajectory,
               const std::function<Rational(const std::string&)>& price_of) {
  const auto& rows = trajectory.samples.empty() ? trajectory.switch_points : trajectory.samples;
  if (rows.empty()) return;
  const Eigen::Index n = rows.front().state.size();
  os << "time";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x_" << (i + 1);
  os << ",mode,power\n";
  for (const auto& row : rows) {
    os << FloatOps<F>::str(row.time);
    for (Eigen::Index i = 0; i < n; ++i) os << "," << FloatOps<F>::str(row.state(i));
    os << "," << row.mode << "," << to_double(price_of(row.mode)) << "\n";
  }
}

template void write_csv<double>(std::ostream&, const simulate::Trajectory<double>&,
                                const std::function<Rational(const std::string&)>&);
template void write_csv<long double>(std::ostream&, const simulate::Trajectory<long double>&,
                                     const std::function<Rational(const std::string&)>&);
template void write_csv<__float128>(std::ostream&, const simulate::Trajectory<__float128>&,
                                    const std::function<Rational(const std::string&)>&);

std::function<Rational(const std::string&)> price_lookup(const MmsInstance& instance) {
  return [&instance](const std::string& id) -> Rational {
    const Mode* m = instance.find_mode(id);
    return m == nullptr ? Rational(0) : m->price;
  };
}

std::function<Rational(const std::string&)> price_lookup(const BuildingSpec& building) {
  return [&building](const std::string& id) -> Rational {
    const auto choice = parse_choice_id(building, id);
    return choice ? building.choice_price(*choice) : Rational(0);
  };
}

}  // namespace io
}  // namespace mms
