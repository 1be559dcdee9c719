#pragma once

#include <vector>

#include "mms/precision.hpp"
#include "mms/types.hpp"

namespace mms {

// State after staying in `mode` for time t from x0:
//   x_i(t) = eq_i + (x0_i - eq_i) * exp(-decay_i * t),  eq_i = drive_i/decay_i.
// Coordinate-wise monotone in t; every value lies between x0_i and eq_i.
template <typename F>
Vec<F> flow_segment(const Vec<F>& x0, const Mode& mode, F t);

// Mean instantaneous drift of variable `var` at level y under frequency mix f:
//   sum_m f(m) * (drive_m - decay_m * y).
// Exactly linear in f; strictly decreasing in y.
Rational mean_drift(const MmsInstance& instance, const FrequencyVector& f,
                    Eigen::Index var, const Rational& y);

enum class VectorClass { NotGood, GoodWithCriticals, Implementable };

struct CriticalBound {
  Eigen::Index var;
  bool at_lower;  // false: critical at the upper bound
};

struct Classification {
  VectorClass cls;
  std::vector<CriticalBound> criticals;
};

// A frequency vector is good when every variable has nonnegative mean drift
// at its lower bound and nonpositive at its upper bound. It is implementable
// when additionally every critical bound is matched by the equilibria of all
// modes the vector actually uses.
Classification classify(const MmsInstance& instance, const SafeBox& box,
                        const FrequencyVector& f);

extern template Vec<double> flow_segment<double>(const Vec<double>&, const Mode&, double);
extern template Vec<long double> flow_segment<long double>(const Vec<long double>&, const Mode&,
                                                           long double);
extern template Vec<__float128> flow_segment<__float128>(const Vec<__float128>&, const Mode&,
                                                         __float128);

}  // namespace mms
