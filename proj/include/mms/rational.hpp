#pragma once

#include <gmpxx.h>

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mms {

// Exact arithmetic scalar used for all instance data and feasibility logic.
using Rational = mpq_class;

inline Rational rat(long num, long den = 1) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline Rational rat_abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

inline const Rational& rat_min(const Rational& a, const Rational& b) { return b < a ? b : a; }
inline const Rational& rat_max(const Rational& a, const Rational& b) { return a < b ? b : a; }

// Accepts "7", "-3/4" and plain decimal notation like "20.5" (parsed exactly).
Rational parse_rational(const std::string& text);

std::string to_string(const Rational& q);

namespace detail {

// Floating approximation of an arbitrary-size integer: top bits plus a power
// of two, so values far outside the double range still convert cleanly.
template <typename F>
F mpz_to_fp(const mpz_class& z) {
  if (sgn(z) == 0) return F(0);
  mpz_class mag = abs(z);
  const std::size_t bits = mpz_sizeinbase(mag.get_mpz_t(), 2);
  long shift = 0;
  constexpr std::size_t kKeep = 192;  // more than any supported significand
  if (bits > kKeep) {
    shift = static_cast<long>(bits - kKeep);
    mpz_tdiv_q_2exp(mag.get_mpz_t(), mag.get_mpz_t(), static_cast<mp_bitcnt_t>(shift));
  }
  F value(0);
  const std::size_t limbs = mpz_size(mag.get_mpz_t());
  for (std::size_t i = limbs; i-- > 0;) {
    const mp_limb_t limb = mpz_getlimbn(mag.get_mpz_t(), static_cast<mp_size_t>(i));
    value = value * F(18446744073709551616.0L) + F(limb);  // 2^64
  }
  while (shift > 0) {
    const long step = shift > 512 ? 512 : shift;
    value = value * F(std::ldexp(1.0, static_cast<int>(step)));
    shift -= step;
  }
  return sgn(z) < 0 ? -value : value;
}

}  // namespace detail

template <typename F>
F to_fp(const Rational& q) {
  if (sgn(q) == 0) return F(0);
  const mpz_class& num = q.get_num();
  const mpz_class& den = q.get_den();
  const long bn = static_cast<long>(mpz_sizeinbase(num.get_mpz_t(), 2));
  const long bd = static_cast<long>(mpz_sizeinbase(den.get_mpz_t(), 2));
  // Rebalance so neither conversion overflows even when both operands are huge.
  if (bn > 512 || bd > 512) {
    const long scale = (bn > bd ? bn : bd) - 256;
    mpz_class n2 = num, d2 = den;
    if (scale > 0) {
      mpz_tdiv_q_2exp(n2.get_mpz_t(), n2.get_mpz_t(), static_cast<mp_bitcnt_t>(scale));
      mpz_tdiv_q_2exp(d2.get_mpz_t(), d2.get_mpz_t(), static_cast<mp_bitcnt_t>(scale));
      if (sgn(d2) == 0) {
        // |value| exceeds 2^256 times the largest finite magnitude of interest
        const F huge = F(std::ldexp(1.0, 1000));
        return sgn(q) < 0 ? -huge * huge : huge * huge;
      }
      return detail::mpz_to_fp<F>(n2) / detail::mpz_to_fp<F>(d2);
    }
  }
  return detail::mpz_to_fp<F>(num) / detail::mpz_to_fp<F>(den);
}

inline double to_double(const Rational& q) { return q.get_d(); }

}  // namespace mms

namespace Eigen {

template <>
struct NumTraits<mms::Rational> : GenericNumTraits<mms::Rational> {
  using Real = mms::Rational;
  using NonInteger = mms::Rational;
  using Literal = long;
  using Nested = mms::Rational;
  static inline Real epsilon() { return Real(0); }
  static inline Real dummy_precision() { return Real(0); }
  static inline int digits10() { return 0; }
  enum {
    IsInteger = 0,
    IsSigned = 1,
    IsComplex = 0,
    RequireInitialization = 1,
    ReadCost = 6,
    AddCost = 150,
    MulCost = 100
  };
};

}  // namespace Eigen
