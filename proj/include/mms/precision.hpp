#pragma once

#include <quadmath.h>

#include <cmath>
#include <cstdlib>
#include <string>

namespace mms {

// Simulation scalar widths selectable at runtime via MMS_PRECISION=64|80|128.
// Feasibility logic never uses these; it is exact.
enum class Precision { Bits64, Bits80, Bits128 };

inline Precision precision_from_env() {
  const char* raw = std::getenv("MMS_PRECISION");
  if (raw == nullptr) return Precision::Bits80;
  const std::string v(raw);
  if (v == "64") return Precision::Bits64;
  if (v == "80") return Precision::Bits80;
  if (v == "128") return Precision::Bits128;
  return Precision::Bits80;
}

template <typename F>
struct FloatOps;

template <>
struct FloatOps<double> {
  static double exp(double x) { return std::exp(x); }
  static double expm1(double x) { return std::expm1(x); }
  static double abs(double x) { return std::fabs(x); }
  static double log(double x) { return std::log(x); }
  static std::string str(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
  }
};

template <>
struct FloatOps<long double> {
  static long double exp(long double x) { return std::exp(x); }
  static long double expm1(long double x) { return std::expm1(x); }
  static long double abs(long double x) { return std::fabs(x); }
  static long double log(long double x) { return std::log(x); }
  static std::string str(long double x) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.21Lg", x);
    return buf;
  }
};

template <>
struct FloatOps<__float128> {
  static __float128 exp(__float128 x) { return expq(x); }
  static __float128 expm1(__float128 x) { return expm1q(x); }
  static __float128 abs(__float128 x) { return fabsq(x); }
  static __float128 log(__float128 x) { return logq(x); }
  static std::string str(__float128 x) {
    char buf[128];
    quadmath_snprintf(buf, sizeof(buf), "%.34Qg", x);
    return buf;
  }
};

}  // namespace mms
