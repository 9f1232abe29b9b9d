#pragma once

#include <numbers>

// Time is measured in nanoseconds throughout, so frequencies are cycles/ns
// (GHz) and angular frequencies are rad/ns.
namespace biphoton {

template <typename Scalar = double>
constexpr Scalar cycles_per_ns_from_mhz(Scalar mhz) {
  return mhz * Scalar(1e-3);
}

template <typename Scalar = double>
constexpr Scalar angular_from_mhz(Scalar mhz) {
  return Scalar(2) * std::numbers::pi_v<Scalar> * cycles_per_ns_from_mhz(mhz);
}

template <typename Scalar = double>
constexpr Scalar mhz_from_angular(Scalar omega) {
  return omega / (Scalar(2) * std::numbers::pi_v<Scalar>) * Scalar(1e3);
}

}  // namespace biphoton
