#pragma once

// Scalar reference versions of the transcendental kernels used inside the
// walker loop.  kernel_avx2.cpp mirrors every operation here one-for-one, so
// both backends round identically (the library builds with
// -ffp-contract=off).  Accuracy is within a few ulp of libm on the ranges
// used; see tests/test_kernel.cpp.

#include <bit>
#include <cmath>
#include <cstdint>

namespace tadlab::fastmath {

inline constexpr std::uint64_t kOneBits = 0x3FF0000000000000ULL;
inline constexpr std::uint64_t kMantMask = 0x000FFFFFFFFFFFFFULL;
inline constexpr std::uint64_t kExpShiftBits = 0x4330000000000000ULL;  // 2^52
inline constexpr double kTwo52 = 4503599627370496.0;
inline constexpr double kSqrt2 = 1.41421356237309514547;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kLg1 = 6.666666666666735130e-01;
inline constexpr double kLg2 = 3.999999999940941908e-01;
inline constexpr double kLg3 = 2.857142874366239149e-01;
inline constexpr double kLg4 = 2.222219843214978396e-01;
inline constexpr double kLg5 = 1.818357216161805012e-01;
inline constexpr double kLg6 = 1.531383769920937332e-01;
inline constexpr double kLg7 = 1.479819860511658591e-01;

inline constexpr double kTwoPi = 6.28318530717958647693;
inline constexpr double kTwoOverPi = 6.36619772367581382433e-01;
inline constexpr double kPio2Hi = 1.57079632673412561417e+00;
inline constexpr double kPio2Lo = 6.07710050650619224932e-11;

// Taylor coefficients on |y| <= pi/4.
inline constexpr double kS1 = -1.0 / 6.0;
inline constexpr double kS2 = 1.0 / 120.0;
inline constexpr double kS3 = -1.0 / 5040.0;
inline constexpr double kS4 = 1.0 / 362880.0;
inline constexpr double kS5 = -1.0 / 39916800.0;
inline constexpr double kS6 = 1.0 / 6227020800.0;
inline constexpr double kS7 = -1.0 / 1307674368000.0;
inline constexpr double kC1 = 1.0 / 24.0;
inline constexpr double kC2 = -1.0 / 720.0;
inline constexpr double kC3 = 1.0 / 40320.0;
inline constexpr double kC4 = -1.0 / 3628800.0;
inline constexpr double kC5 = 1.0 / 479001600.0;
inline constexpr double kC6 = -1.0 / 87178291200.0;
inline constexpr double kC7 = 1.0 / 20922789888000.0;

/// 52 random mantissa bits -> [0, 1).
inline double uniform52(std::uint64_t bits) {
  return std::bit_cast<double>((bits >> 12) | kOneBits) - 1.0;
}

/// Natural log for positive normal doubles.
inline double log(double u) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(u);
  const double field = std::bit_cast<double>((bits >> 52) | kExpShiftBits) - kTwo52;
  double e = field - 1023.0;
  double m = std::bit_cast<double>((bits & kMantMask) | kOneBits);
  if (m > kSqrt2) {
    m = m * 0.5;
    e = e + 1.0;
  }
  const double f = m - 1.0;
  const double s = f / (2.0 + f);
  const double z = s * s;
  const double w = z * z;
  const double t1 = w * (kLg2 + w * (kLg4 + w * kLg6));
  const double t2 = z * (kLg1 + w * (kLg3 + w * (kLg5 + w * kLg7)));
  const double r = t2 + t1;
  const double hfsq = 0.5 * f * f;
  return e * kLn2Hi - ((hfsq - (s * (hfsq + r) + e * kLn2Lo)) - f);
}

inline double sin_poly(double y, double z) {
  return y + y * z * (kS1 + z * (kS2 + z * (kS3 + z * (kS4 + z * (kS5 + z * (kS6 + z * kS7))))));
}

inline double cos_poly(double z) {
  return (1.0 - 0.5 * z) +
         z * z * (kC1 + z * (kC2 + z * (kC3 + z * (kC4 + z * (kC5 + z * (kC6 + z * kC7))))));
}

struct SinCos {
  double s;
  double c;
};

// Rotate (sin y, cos y) by q quarter turns, q in {0, 1, 2, 3, 4}.
inline SinCos rotate_quadrant(double s, double c, double q) {
  if (q == 1.0) return {c, -s};
  if (q == 2.0) return {-s, -c};
  if (q == 3.0) return {-c, s};
  return {s, c};
}

/// sin and cos of 2 pi u for u in [0, 1).
inline SinCos sincos_turn(double u) {
  const double q = std::nearbyint(4.0 * u);
  const double r = u - 0.25 * q;
  const double y = r * kTwoPi;
  const double z = y * y;
  return rotate_quadrant(sin_poly(y, z), cos_poly(z), q);
}

/// sin(x) for |x| up to ~1e6.
inline double sin(double x) {
  const double k = std::nearbyint(x * kTwoOverPi);
  const double y = (x - k * kPio2Hi) - k * kPio2Lo;
  const double q = k - 4.0 * std::floor(k * 0.25);
  const double z = y * y;
  return rotate_quadrant(sin_poly(y, z), cos_poly(z), q).s;
}

struct NormalPair {
  double z0;
  double z1;
};

/// Box–Muller on two raw 64-bit draws.
inline NormalPair box_muller(std::uint64_t b1, std::uint64_t b2) {
  const double u1 = 1.0 - uniform52(b1);  // (0, 1]
  const double u2 = uniform52(b2);
  const double r = std::sqrt(-2.0 * log(u1));
  const SinCos sc = sincos_turn(u2);
  return {r * sc.c, r * sc.s};
}

}  // namespace tadlab::fastmath
