#pragma once

#include <numbers>

namespace fmcw {

/// Speed of light in vacuum, m/s (exact by SI definition).
inline constexpr double kSpeedOfLight = 299'792'458.0;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Timeline instants are kept in extended precision. A 200 ms frame at
/// 77 GHz needs sub-1e-18 s resolution for the carrier phase to stay
/// accurate to micro-radians once chirp-relative offsets are formed.
using TimePoint = long double;

}  // namespace fmcw
