#include "mms/core.hpp"

#include <stdexcept>

namespace mms {

template <typename F>
Vec<F> flow_segment(const Vec<F>& x0, const Mode& mode, F t) {
  if (x0.size() != mode.decay.size())
    throw std::invalid_argument("flow_segment: state dimension mismatch");
  if (t < F(0)) throw std::invalid_argument("flow_segment: negative time");
  Vec<F> x(x0.size());
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    const F a = to_fp<F>(mode.decay(i));
    const F eq = to_fp<F>(mode.drive(i)) / a;
    // x + (eq - x) * (1 - e^{-at}): identical closed form, but conditioned
    // well for dwells far below the time constant
    x(i) = x0(i) + (eq - x0(i)) * (-FloatOps<F>::expm1(-a * t));
  }
  return x;
}

template Vec<double> flow_segment<double>(const Vec<double>&, const Mode&, double);
template Vec<long double> flow_segment<long double>(const Vec<long double>&, const Mode&,
                                                    long double);
template Vec<__float128> flow_segment<__float128>(const Vec<__float128>&, const Mode&,
                                                  __float128);

Rational mean_drift(const MmsInstance& instance, const FrequencyVector& f,
                    Eigen::Index var, const Rational& y) {
  if (var < 0 || var >= instance.num_vars)
    throw std::out_of_range("mean_drift: variable index out of range");
  Rational acc = 0;
  for (const Mode& m : instance.modes) {
    const Rational w = f.weight(m.id);
    if (w == 0) continue;
    acc += w * (m.drive(var) - m.decay(var) * y);
  }
  return acc;
}

Classification classify(const MmsInstance& instance, const SafeBox& box,
                        const FrequencyVector& f) {
  Classification result;
  result.cls = VectorClass::Implementable;
  bool pinned_ok = true;
  for (Eigen::Index i = 0; i < instance.num_vars; ++i) {
    const Rational at_lower = mean_drift(instance, f, i, box.lower(i));
    const Rational at_upper = mean_drift(instance, f, i, box.upper(i));
    if (at_lower < 0 || at_upper > 0) return {VectorClass::NotGood, {}};
    if (at_lower == 0) {
      result.criticals.push_back({i, true});
      for (const Mode& m : instance.modes)
        if (f.weight(m.id) > 0 && m.equilibrium(i) != box.lower(i)) pinned_ok = false;
    }
    if (at_upper == 0) {
      result.criticals.push_back({i, false});
      for (const Mode& m : instance.modes)
        if (f.weight(m.id) > 0 && m.equilibrium(i) != box.upper(i)) pinned_ok = false;
    }
  }
  if (!result.criticals.empty() && !pinned_ok) result.cls = VectorClass::GoodWithCriticals;
  return result;
}

}  // namespace mms
