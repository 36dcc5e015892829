#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "posmod/errors.hpp"

namespace posmod {

// Arbitrary-precision rationals back the exact coefficient domain.  Floats
// are the solver domain; the only sanctioned lossy conversion is to_double.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

// Exact conversion: every finite double is a dyadic rational.
inline Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw Error("cannot convert non-finite double to rational");
  if (x == 0.0) return Rational(0);
  int exp = 0;
  double mant = std::frexp(x, &exp);  // x = mant * 2^exp, |mant| in [0.5, 1)
  // 53 doublings make the mantissa integral.
  long long scaled = static_cast<long long>(std::ldexp(mant, 53));
  Rational r(scaled);
  int shift = exp - 53;
  if (shift >= 0)
    r *= Rational(BigInt(1) << shift);
  else
    r /= Rational(BigInt(1) << (-shift));
  return r;
}

// Best rational approximation with denominator <= max_den, by the
// continued-fraction convergent walk.  Used to round solver output back
// into the exact domain for identity checks.
inline Rational rationalize(double x, std::int64_t max_den = 1000000) {
  if (!std::isfinite(x)) throw Error("cannot rationalize non-finite double");
  if (max_den < 1) throw Error("rationalize: max_den must be positive");
  const bool neg = x < 0;
  double v = neg ? -x : x;
  // Convergents p/q of the continued fraction of v.
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double frac = v;
  for (int it = 0; it < 64; ++it) {
    double fl = std::floor(frac);
    if (fl > 9.2e18) break;
    std::int64_t a = static_cast<std::int64_t>(fl);
    // Overflow-safe candidate q; stop at the denominator cap.
    if (q1 != 0 && a > (std::numeric_limits<std::int64_t>::max() - q0) / q1) break;
    std::int64_t q2 = a * q1 + q0;
    if (q2 > max_den) {
      // Take the best semiconvergent still under the cap.
      std::int64_t k = (max_den - q0) / (q1 == 0 ? 1 : q1);
      if (q1 != 0 && k > 0) {
        std::int64_t ps = k * p1 + p0, qs = k * q1 + q0;
        // Choose between p1/q1 and the semiconvergent by absolute error.
        double e1 = std::abs(v - double(p1) / double(q1));
        double es = std::abs(v - double(ps) / double(qs));
        if (es < e1) { p1 = ps; q1 = qs; }
      }
      break;
    }
    std::int64_t p2 = a * p1 + p0;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    double rem = frac - fl;
    if (rem < 1e-18) break;
    frac = 1.0 / rem;
  }
  if (q1 == 0) throw Error("rationalize: value out of range");
  Rational r{BigInt(p1), BigInt(q1)};
  return neg ? Rational(-r) : r;
}

inline std::string to_string(const Rational& q) {
  return q.str();
}

}  // namespace posmod
