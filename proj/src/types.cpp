#include "mms/types.hpp"

#include <set>
#include <stdexcept>

namespace mms {

void MmsInstance::validate() const {
  if (num_vars <= 0) throw std::invalid_argument("instance needs at least one variable");
  if (modes.empty()) throw std::invalid_argument("instance needs at least one mode");
  std::set<std::string> seen;
  for (const Mode& m : modes) {
    if (m.id.empty()) throw std::invalid_argument("mode with empty id");
    if (!seen.insert(m.id).second)
      throw std::invalid_argument("duplicate mode id '" + m.id + "'");
    if (m.decay.size() != num_vars || m.drive.size() != num_vars)
      throw std::invalid_argument("mode '" + m.id + "': coefficient count must equal num_vars");
    for (Eigen::Index i = 0; i < num_vars; ++i) {
      if (m.decay(i) <= 0)
        throw std::invalid_argument("mode '" + m.id + "': decay rate a[" + std::to_string(i) +
                                    "] must be strictly positive");
    }
    if (m.price < 0)
      throw std::invalid_argument("mode '" + m.id + "': price must be nonnegative");
  }
}

const Mode* MmsInstance::find_mode(const std::string& id) const {
  for (const Mode& m : modes)
    if (m.id == id) return &m;
  return nullptr;
}

Eigen::Index MmsInstance::mode_index(const std::string& id) const {
  for (Eigen::Index i = 0; i < mode_count(); ++i)
    if (modes[static_cast<std::size_t>(i)].id == id) return i;
  return -1;
}

MmsInstance MmsInstance::restricted_to(const std::vector<std::string>& ids) const {
  MmsInstance out;
  out.num_vars = num_vars;
  for (const Mode& m : modes) {
    for (const std::string& id : ids) {
      if (m.id == id) {
        out.modes.push_back(m);
        break;
      }
    }
  }
  return out;
}

void SafeBox::validate() const {
  if (lower.size() != upper.size())
    throw std::invalid_argument("box bounds must have equal dimension");
  if (lower.size() == 0) throw std::invalid_argument("box must have at least one dimension");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower(i) < upper(i)))
      throw std::invalid_argument("box requires l[" + std::to_string(i) + "] < u[" +
                                  std::to_string(i) + "]");
  }
}

bool SafeBox::contains(const RatVec& x) const {
  for (Eigen::Index i = 0; i < dim(); ++i)
    if (x(i) < lower(i) || x(i) > upper(i)) return false;
  return true;
}

bool SafeBox::strictly_inside(const RatVec& x) const {
  for (Eigen::Index i = 0; i < dim(); ++i)
    if (!(lower(i) < x(i) && x(i) < upper(i))) return false;
  return true;
}

Rational FrequencyVector::sum() const {
  Rational s = 0;
  for (const auto& [id, w] : weights) s += w;
  return s;
}

bool FrequencyVector::valid_over(const MmsInstance& instance) const {
  for (const auto& [id, w] : weights) {
    if (w < 0) return false;
    if (instance.find_mode(id) == nullptr) return false;
  }
  return sum() == 1;
}

std::vector<std::string> FrequencyVector::support() const {
  std::vector<std::string> out;
  for (const auto& [id, w] : weights)
    if (w > 0) out.push_back(id);
  return out;
}

PeriodicController PeriodicController::make(std::vector<TimedAction> prefix,
                                            std::vector<TimedAction> period) {
  if (period.empty()) throw std::invalid_argument("controller period must be nonempty");
  PeriodicController c;
  c.prefix = std::move(prefix);
  c.period = std::move(period);
  bool any_positive = false;
  Rational least;
  auto scan = [&](const std::vector<TimedAction>& actions) {
    for (const TimedAction& a : actions) {
      if (a.dwell < 0) throw std::invalid_argument("negative dwell");
      if (a.dwell > 0 && (!any_positive || a.dwell < least)) {
        least = a.dwell;
        any_positive = true;
      }
    }
  };
  scan(c.prefix);
  bool period_positive = false;
  for (const TimedAction& a : c.period)
    if (a.dwell > 0) period_positive = true;
  scan(c.period);
  if (!period_positive)
    throw std::invalid_argument("controller period must contain a positive dwell");
  c.min_dwell = least;
  return c;
}

Rational PeriodicController::period_time() const {
  Rational t = 0;
  for (const TimedAction& a : period) t += a.dwell;
  return t;
}

}  // namespace mms
