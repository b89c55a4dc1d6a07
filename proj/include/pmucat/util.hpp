#pragma once

#include <cmath>
#include <cstdint>

namespace pmucat {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr std::int64_t kMicrosPerSecond = 1'000'000;

/// Mathematical modulo: result is in [0, m) even for negative x.
inline std::int64_t floor_mod(std::int64_t x, std::int64_t m) {
    std::int64_t r = x % m;
    return r < 0 ? r + m : r;
}

/// Normalize an angle into [-pi, pi).
inline double wrap_angle(double a) {
    a = std::fmod(a + kPi, kTwoPi);
    if (a < 0) a += kTwoPi;
    return a - kPi;
}

/// Fraction-of-second of an absolute microsecond timestamp, in [0, 1e6).
inline std::int64_t frac_of_second_us(std::int64_t t_us) {
    return floor_mod(t_us, kMicrosPerSecond);
}

}  // namespace pmucat
