#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "biphoton/quadrature.hpp"
#include "biphoton/wavepacket.hpp"

namespace biphoton {

template <typename Scalar = double>
inline constexpr Scalar unbounded_window = std::numeric_limits<Scalar>::infinity();

namespace detail {

template <typename Scalar>
void require_theta(Scalar theta) {
  if (!(theta >= 0) || std::isnan(theta))
    throw std::invalid_argument("theta must be non-negative");
}

// int exp(-|tau|/tau0) exp(i k theta tau / tau0) dtau / (2 tau0)
template <typename Scalar>
Scalar lorentzian(Scalar k_theta) {
  return Scalar(1) / (Scalar(1) + k_theta * k_theta);
}

}  // namespace detail

// Unmodulated coherence of the symmetric double-exponential biphoton,
// theta = delta_omega * tau0.
template <typename Scalar>
Scalar zeta_unmodulated(Scalar theta) {
  detail::require_theta(theta);
  return Scalar(1) / (2 * (1 + theta * theta));
}

// Coherence under synchronous square-wave modulation of both photons
// (triangular biphoton envelope at the frequency difference).
template <typename Scalar>
Scalar zeta_triangular(Scalar theta) {
  detail::require_theta(theta);
  if (theta == Scalar(0)) return Scalar(0.5);
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar x = std::tanh(pi / (2 * theta));
  const Scalar t2 = theta * theta;
  const Scalar one_plus = 1 + t2;
  return (pi * x - theta + pi * x * t2 + t2 * theta) /
         (2 * x * (pi - x * theta) * one_plus * one_plus);
}

// Coherence under the cosinusoidal envelope |(1 + e^{i dw tau})/2|^2.
template <typename Scalar>
Scalar zeta_cosinusoidal(Scalar theta) {
  detail::require_theta(theta);
  const Scalar t2 = theta * theta;
  return (2 + 7 * t2 + 2 * t2 * t2) / (2 * (2 + t2) * (1 + 4 * t2));
}

// Coherence under the periodic sinc^2 envelope |(1/s) sum_{n=1..s} e^{i n dw tau}|^2,
// expanded as (1/s^2) sum_k (s - |k|) e^{i k dw tau}. Each Fourier term turns the
// integrals into Lorentzians in (k - 1) theta (numerator) and k theta (denominator).
template <typename Scalar>
Scalar zeta_sinc2(Scalar theta, int terms) {
  detail::require_theta(theta);
  if (terms < 2) throw std::invalid_argument("periodic sinc^2 modulation needs at least 2 terms");
  CompensatedSum<Scalar> numerator;
  CompensatedSum<Scalar> denominator;
  for (int k = -(terms - 1); k <= terms - 1; ++k) {
    const Scalar weight = Scalar(terms - std::abs(k));
    numerator.add(weight * detail::lorentzian(Scalar(k - 1) * theta));
    denominator.add(weight * detail::lorentzian(Scalar(k) * theta));
  }
  return numerator.value() / (2 * denominator.value());
}

namespace detail {

// Panel boundaries on [-reach, reach]: zero, half periods of the fastest
// oscillation present, and the kinks of a square-wave envelope.
template <typename Scalar>
std::vector<Scalar> coherence_breakpoints(const BiphotonWavepacket<Scalar>& wp,
                                          const ModulationSpec<Scalar>& mod, Scalar reach) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar dw = std::abs(wp.delta_omega());
  const Scalar omega = envelope_angular_frequency(mod, wp.delta_omega());
  const Scalar fastest = dw + Scalar(envelope_max_harmonic(mod)) * omega;
  const Scalar tau_min = std::min(wp.tau_left(), wp.tau_right());
  Scalar step = 2 * tau_min;
  if (fastest > 0) step = std::min(step, pi / fastest);

  std::vector<Scalar> points;
  const auto panels = static_cast<long long>(std::ceil(reach / step));
  points.reserve(static_cast<std::size_t>(2 * panels + 1));
  for (long long i = -panels; i <= panels; ++i)
    points.push_back(std::clamp(Scalar(i) * step, -reach, reach));

  if (mod.kind == ModulationKind::SquareWave && omega > 0) {
    const Scalar period = 2 * pi / omega;
    const Scalar shift = mod.phase_offset / (2 * pi);
    const Scalar corners[3] = {Scalar(0), mod.duty, 1 - mod.duty};
    const auto cycles = static_cast<long long>(std::ceil(reach / period)) + 1;
    for (long long n = -cycles; n <= cycles; ++n)
      for (Scalar c : corners) {
        const Scalar tau = (Scalar(n) + c - shift) * period;
        if (tau > -reach && tau < reach) points.push_back(tau);
      }
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return points;
}

template <typename Scalar>
Scalar integration_reach(const BiphotonWavepacket<Scalar>& wp, Scalar window) {
  // Beyond 40 decay constants the integrands are below double precision.
  const Scalar tail = 40 * std::max(wp.tau_left(), wp.tau_right());
  return std::min(window, tail);
}

template <typename Scalar>
void require_window(Scalar window) {
  if (!(window > 0)) throw std::invalid_argument("coincidence window must be positive");
}

// Common period of M(tau) and the carrier e^{-i dw tau}; 0 when they share none.
template <typename Scalar>
Scalar integrand_period(const BiphotonWavepacket<Scalar>& wp, const ModulationSpec<Scalar>& mod) {
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  const Scalar dw = std::abs(wp.delta_omega());
  const Scalar omega = envelope_angular_frequency(mod, wp.delta_omega());
  if (dw == Scalar(0)) return omega > 0 ? two_pi / omega : Scalar(0);
  if (omega == Scalar(0) || std::abs(omega - dw) <= Scalar(1e-12) * dw) return two_pi / dw;
  return Scalar(0);
}

// int_0^reach f(u) du where f(u + period) = e^{-rate period} f(u): one period
// by quadrature, the repeats as a geometric series, then the partial period.
// `points` are panel boundaries covering [0, period].
template <typename Scalar, typename F>
auto fold_periodic(F&& f, Scalar rate, Scalar period, Scalar reach,
                   const std::vector<Scalar>& points, const QuadratureOptions<Scalar>& options) {
  const Scalar cycles = std::floor(reach / period);
  const Scalar rest = reach - cycles * period;
  const auto one = integrate_panels(f, std::span<const Scalar>(points), options);
  std::vector<Scalar> partial;
  for (Scalar p : points)
    if (p < rest) partial.push_back(p);
  partial.push_back(rest);
  const auto tail = integrate_panels(f, std::span<const Scalar>(partial), options);
  const Scalar series = std::expm1(-rate * cycles * period) / std::expm1(-rate * period);
  return one * series + std::exp(-rate * cycles * period) * tail;
}

// Panel boundaries on [0, period] for u = tau (side = +1) or u = -tau (side = -1).
template <typename Scalar>
std::vector<Scalar> one_sided_points(const std::vector<Scalar>& symmetric, int side) {
  std::vector<Scalar> points;
  for (Scalar p : symmetric)
    if (Scalar(side) * p >= 0) points.push_back(Scalar(side) * p);
  std::sort(points.begin(), points.end());
  return points;
}

}  // namespace detail

// Windowed complex coherence by adaptive quadrature:
//   zeta_W = int_{-W}^{W} M phi_HV phi_VH e^{-i dw tau} dtau
//            / int_{-W}^{W} M (|phi_HV|^2 + |phi_VH|^2) dtau
// which reduces to the closed forms for symmetric wavepackets and W = inf.
template <typename Scalar>
std::complex<Scalar> zeta_numeric(const BiphotonWavepacket<Scalar>& wp,
                                  const ModulationSpec<Scalar>& mod,
                                  Scalar window = unbounded_window<Scalar>,
                                  const QuadratureOptions<Scalar>& options = {}) {
  detail::require_window(window);
  mod.validate();
  const Scalar dw = wp.delta_omega();
  const Scalar reach = detail::integration_reach(wp, window);
  const auto numerator_at = [&](Scalar tau) {
    const Scalar weight = eval_envelope(mod, dw, tau) * wp.amplitude(Ordering::HV, tau) *
                          wp.amplitude(Ordering::VH, tau);
    return std::complex<Scalar>(weight * std::cos(dw * tau), -weight * std::sin(dw * tau));
  };
  const auto intensity_at = [&](Ordering ordering, Scalar tau) {
    const Scalar a = wp.amplitude(ordering, tau);
    return eval_envelope(mod, dw, tau) * a * a;
  };

  std::complex<Scalar> numerator;
  Scalar denominator = 0;
  const Scalar period = detail::integrand_period(wp, mod);
  if (period > 0 && reach >= 4 * period) {
    // Each side is a periodic function times a decaying exponential.
    const auto symmetric = detail::coherence_breakpoints(wp, mod, period);
    const Scalar product_rate = (1 / wp.tau_left() + 1 / wp.tau_right()) / 2;
    for (int side : {1, -1}) {
      const auto points = detail::one_sided_points(symmetric, side);
      const Scalar s = Scalar(side);
      numerator += detail::fold_periodic([&](Scalar u) { return numerator_at(s * u); },
                                         product_rate, period, reach, points, options);
      // |phi_HV|^2 decays with tau_right for tau > 0 and tau_left for tau < 0.
      const Scalar hv_rate = 1 / (side > 0 ? wp.tau_right() : wp.tau_left());
      const Scalar vh_rate = 1 / (side > 0 ? wp.tau_left() : wp.tau_right());
      denominator += detail::fold_periodic([&](Scalar u) { return intensity_at(Ordering::HV, s * u); },
                                           hv_rate, period, reach, points, options);
      denominator += detail::fold_periodic([&](Scalar u) { return intensity_at(Ordering::VH, s * u); },
                                           vh_rate, period, reach, points, options);
    }
  } else {
    const auto points = detail::coherence_breakpoints(wp, mod, reach);
    const std::span<const Scalar> panels(points);
    numerator = integrate_panels(numerator_at, panels, options);
    denominator = integrate_panels(
        [&](Scalar tau) { return intensity_at(Ordering::HV, tau) + intensity_at(Ordering::VH, tau); },
        panels, options);
  }
  if (!(denominator > 0))
    throw QuadratureError("modulated pair weight vanishes inside the coincidence window");
  return numerator / denominator;
}

// Relative rate of true coincidences inside [-W, W]: int_{-W}^{W} M p dtau / mean(M),
// with p the normalized pair-delay density. Equals the delay fraction when
// unmodulated.
template <typename Scalar>
Scalar windowed_pair_fraction(const BiphotonWavepacket<Scalar>& wp,
                              const ModulationSpec<Scalar>& mod, Scalar window,
                              const QuadratureOptions<Scalar>& options = {}) {
  detail::require_window(window);
  mod.validate();
  const Scalar dw = wp.delta_omega();
  if (envelope_angular_frequency(mod, dw) == Scalar(0))
    return wp.delay_fraction_within(window) * eval_envelope(mod, dw, Scalar(0));
  const Scalar reach = detail::integration_reach(wp, window);
  const auto points = detail::coherence_breakpoints(wp, mod, reach);
  const Scalar weighted = integrate_panels(
      [&](Scalar tau) { return eval_envelope(mod, dw, tau) * wp.delay_density(tau); },
      std::span<const Scalar>(points), options);
  return weighted / envelope_mean(mod, dw);
}

// True when the closed forms apply exactly.
template <typename Scalar>
bool has_closed_form(const BiphotonWavepacket<Scalar>& wp, const ModulationSpec<Scalar>& mod,
                     Scalar window) {
  if (!wp.is_symmetric() || !std::isinf(window)) return false;
  if (mod.kind == ModulationKind::None) return true;
  if (mod.phase_offset != Scalar(0)) return false;
  if (!mod.matched() && std::abs(envelope_angular_frequency(mod, wp.delta_omega()) -
                                 std::abs(wp.delta_omega())) >
                            Scalar(1e-15) * std::abs(wp.delta_omega()))
    return false;
  return mod.kind != ModulationKind::SquareWave || mod.duty == Scalar(0.5);
}

template <typename Scalar>
Scalar zeta_closed_form(Scalar theta, const ModulationSpec<Scalar>& mod) {
  switch (mod.kind) {
    case ModulationKind::None: return zeta_unmodulated(theta);
    case ModulationKind::SquareWave: return zeta_triangular(theta);
    case ModulationKind::Cosinusoidal: return zeta_cosinusoidal(theta);
    case ModulationKind::PeriodicSinc2: return zeta_sinc2(theta, mod.terms);
  }
  return zeta_unmodulated(theta);
}

// Coherence by closed form when one applies, by quadrature otherwise.
template <typename Scalar>
std::complex<Scalar> coherence(const BiphotonWavepacket<Scalar>& wp,
                               const ModulationSpec<Scalar>& mod,
                               Scalar window = unbounded_window<Scalar>) {
  detail::require_window(window);
  mod.validate();
  if (has_closed_form(wp, mod, window))
    return {zeta_closed_form(std::abs(wp.theta()), mod), Scalar(0)};
  return zeta_numeric(wp, mod, window);
}

// Normalized overlap F = 2 zeta of the two interfering two-photon wavefunctions
// for a symmetric biphoton with envelope matched to the frequency difference.
template <typename Scalar>
Scalar interference_fidelity(Scalar theta, const ModulationSpec<Scalar>& mod) {
  detail::require_theta(theta);
  mod.validate();
  const auto wp = BiphotonWavepacket<Scalar>::symmetric(Scalar(1), theta);
  return 2 * std::abs(coherence(wp, mod));
}

}  // namespace biphoton
