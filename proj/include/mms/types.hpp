#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mms/rational.hpp"

namespace mms {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RatVec = Vec<Rational>;

// One joint actuator setting. Per variable i the dynamics while the mode is
// active are dx_i/dt = drive(i) - decay(i) * x_i with decay(i) > 0, so the
// coordinate relaxes toward the equilibrium drive(i)/decay(i).
struct Mode {
  std::string id;
  RatVec decay;  // strictly positive
  RatVec drive;
  Rational price = 0;  // cost per time unit

  Rational equilibrium(Eigen::Index i) const { return drive(i) / decay(i); }
};

struct MmsInstance {
  Eigen::Index num_vars = 0;
  std::vector<Mode> modes;

  // Throws std::invalid_argument on dimension mismatch, duplicate ids,
  // non-positive decay rates or negative prices.
  void validate() const;

  Eigen::Index mode_count() const { return static_cast<Eigen::Index>(modes.size()); }
  const Mode* find_mode(const std::string& id) const;
  Eigen::Index mode_index(const std::string& id) const;  // -1 when absent

  MmsInstance restricted_to(const std::vector<std::string>& ids) const;
};

// Hyperrectangular safe set: lower(i) <= x_i <= upper(i), lower < upper.
struct SafeBox {
  RatVec lower;
  RatVec upper;

  void validate() const;
  Eigen::Index dim() const { return lower.size(); }
  bool contains(const RatVec& x) const;
  bool strictly_inside(const RatVec& x) const;
  Rational width(Eigen::Index i) const { return upper(i) - lower(i); }
};

// Long-run fraction of time per mode; nonnegative weights summing to one.
struct FrequencyVector {
  std::map<std::string, Rational> weights;

  Rational weight(const std::string& id) const {
    auto it = weights.find(id);
    return it == weights.end() ? Rational(0) : it->second;
  }
  Rational sum() const;
  bool valid_over(const MmsInstance& instance) const;

  std::vector<std::string> support() const;
};

struct TimedAction {
  std::string mode;
  Rational dwell;  // >= 0; zero dwell marks an unused mode kept in the cycle
};

// Infinite repetition of `period` after the finite `prefix`. Non-Zeno: at
// least one period action has positive dwell.
struct PeriodicController {
  std::vector<TimedAction> prefix;
  std::vector<TimedAction> period;
  Rational min_dwell;  // least strictly positive dwell across prefix + period

  static PeriodicController make(std::vector<TimedAction> prefix,
                                 std::vector<TimedAction> period);

  Rational period_time() const;
};

}  // namespace mms
