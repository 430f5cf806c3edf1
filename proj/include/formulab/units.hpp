#ifndef FORMULAB_UNITS_HPP_
#define FORMULAB_UNITS_HPP_

#include <numbers>

namespace formulab {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace formulab

#endif  // FORMULAB_UNITS_HPP_
