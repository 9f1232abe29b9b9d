#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace biphoton {

enum class Ordering { HV, VH };

// Double-exponential two-photon amplitude of the biphoton as a function of
// the detection-time difference tau = t2 - t1 (ns):
//   phi_HV(tau) = exp(-tau / (2 tau_right))  for tau >= 0
//               = exp( tau / (2 tau_left))   for tau <  0
//   phi_VH(tau) = phi_HV(-tau)
// so the time constants are intensity (|phi|^2) decay constants. The carrier
// phase common to both orderings is unobservable and dropped; only the
// frequency difference delta_omega = omega_s - omega_i (rad/ns) is kept.
template <typename Scalar = double>
class BiphotonWavepacket {
 public:
  BiphotonWavepacket(Scalar tau_left, Scalar tau_right, Scalar delta_omega = Scalar(0))
      : tau_left_(tau_left), tau_right_(tau_right), delta_omega_(delta_omega) {
    if (!(tau_left > 0) || !(tau_right > 0) || !std::isfinite(tau_left) ||
        !std::isfinite(tau_right))
      throw std::invalid_argument("wavepacket time constants must be positive and finite");
    if (!std::isfinite(delta_omega))
      throw std::invalid_argument("frequency difference must be finite");
  }

  static BiphotonWavepacket symmetric(Scalar tau0, Scalar delta_omega = Scalar(0)) {
    return BiphotonWavepacket(tau0, tau0, delta_omega);
  }

  // Carrier frequencies only enter through their difference.
  static BiphotonWavepacket from_carriers(Scalar tau_left, Scalar tau_right, Scalar omega_s,
                                          Scalar omega_i) {
    return BiphotonWavepacket(tau_left, tau_right, omega_s - omega_i);
  }

  // The measured source: 21 ns and 24 ns decay constants.
  static BiphotonWavepacket measured(Scalar delta_omega = Scalar(0)) {
    return BiphotonWavepacket(Scalar(21), Scalar(24), delta_omega);
  }

  Scalar tau_left() const { return tau_left_; }
  Scalar tau_right() const { return tau_right_; }
  Scalar delta_omega() const { return delta_omega_; }
  bool is_symmetric() const { return tau_left_ == tau_right_; }

  BiphotonWavepacket with_delta_omega(Scalar delta_omega) const {
    return BiphotonWavepacket(tau_left_, tau_right_, delta_omega);
  }

  // theta = delta_omega * tau0 for the symmetric case; mean time constant otherwise.
  Scalar theta() const { return delta_omega_ * (tau_left_ + tau_right_) / 2; }

  Scalar amplitude(Ordering ordering, Scalar tau) const {
    const Scalar t = ordering == Ordering::HV ? tau : -tau;
    return t >= 0 ? std::exp(-t / (2 * tau_right_)) : std::exp(t / (2 * tau_left_));
  }

  // int |phi_HV|^2 dtau (= int |phi_VH|^2 dtau).
  Scalar intensity_norm() const { return tau_left_ + tau_right_; }

  // Normalized density of the pair delay, (|phi_HV|^2 + |phi_VH|^2) / 2.
  Scalar delay_density(Scalar tau) const {
    const Scalar hv = amplitude(Ordering::HV, tau);
    const Scalar vh = amplitude(Ordering::VH, tau);
    return (hv * hv + vh * vh) / (2 * intensity_norm());
  }

  // Probability that |tau| <= window under delay_density.
  Scalar delay_fraction_within(Scalar window) const {
    if (!(window > 0)) return Scalar(0);
    if (std::isinf(window)) return Scalar(1);
    return (tau_right_ * -std::expm1(-window / tau_right_) +
            tau_left_ * -std::expm1(-window / tau_left_)) /
           intensity_norm();
  }

 private:
  Scalar tau_left_;
  Scalar tau_right_;
  Scalar delta_omega_;
};

template <typename Scalar>
std::complex<Scalar> eval_biphoton_amplitude(const BiphotonWavepacket<Scalar>& wp,
                                             Ordering ordering, Scalar tau) {
  return {wp.amplitude(ordering, tau), Scalar(0)};
}

enum class ModulationKind { None, SquareWave, Cosinusoidal, PeriodicSinc2 };

// Passive amplitude modulation of the pair.
//
// frequency is in cycles/ns; 0 means "matched" to the pair's frequency
// difference. For SquareWave it is the per-photon drive frequency f and the
// intensity transmission |S(t)|^2 is a 0/1 square wave of period 1/(2f), so
// the biphoton envelope M(tau) = (1/T) int |S(t)|^2 |S(t+tau)|^2 dt is a
// triangle wave at 2f. For Cosinusoidal and PeriodicSinc2, frequency is the
// envelope frequency itself and the envelope is applied to the pair
// (conditional modulation of one photon).
//
// phase_offset shifts the second arm's modulation (radians of one envelope
// cycle); it makes the envelope non-even and the coherence complex.
template <typename Scalar = double>
struct ModulationSpec {
  ModulationKind kind = ModulationKind::None;
  Scalar frequency = Scalar(0);
  Scalar duty = Scalar(0.5);
  int terms = 2;
  bool conditional = false;
  Scalar phase_offset = Scalar(0);

  static ModulationSpec none() { return {}; }
  static ModulationSpec square_wave(Scalar frequency = Scalar(0), Scalar duty = Scalar(0.5)) {
    return {ModulationKind::SquareWave, frequency, duty, 2, false, Scalar(0)};
  }
  static ModulationSpec cosinusoidal(Scalar frequency = Scalar(0)) {
    return {ModulationKind::Cosinusoidal, frequency, Scalar(0.5), 2, true, Scalar(0)};
  }
  static ModulationSpec periodic_sinc2(int terms, Scalar frequency = Scalar(0)) {
    return {ModulationKind::PeriodicSinc2, frequency, Scalar(0.5), terms, true, Scalar(0)};
  }

  bool matched() const { return frequency == Scalar(0); }

  void validate() const {
    if (!(frequency >= 0) || !std::isfinite(frequency))
      throw std::invalid_argument("modulation frequency must be finite and non-negative");
    if (kind == ModulationKind::SquareWave && !(duty > 0 && duty <= 1))
      throw std::invalid_argument("square-wave duty cycle must lie in (0, 1]");
    if (kind == ModulationKind::PeriodicSinc2 && terms < 2)
      throw std::invalid_argument("periodic sinc^2 modulation needs at least 2 terms");
    if (!std::isfinite(phase_offset))
      throw std::invalid_argument("modulation phase offset must be finite");
  }
};

inline std::string to_string(ModulationKind kind) {
  switch (kind) {
    case ModulationKind::None: return "none";
    case ModulationKind::SquareWave: return "square";
    case ModulationKind::Cosinusoidal: return "cosine";
    case ModulationKind::PeriodicSinc2: return "sinc2";
  }
  return "none";
}

inline ModulationKind modulation_kind_from_string(const std::string& name) {
  if (name == "none") return ModulationKind::None;
  if (name == "square" || name == "triangular") return ModulationKind::SquareWave;
  if (name == "cosine" || name == "cosinusoidal") return ModulationKind::Cosinusoidal;
  if (name == "sinc2") return ModulationKind::PeriodicSinc2;
  throw std::invalid_argument("unknown modulation kind '" + name + "'");
}

// Angular frequency (rad/ns) of the biphoton envelope M(tau).
template <typename Scalar>
Scalar envelope_angular_frequency(const ModulationSpec<Scalar>& mod, Scalar delta_omega) {
  if (mod.kind == ModulationKind::None) return Scalar(0);
  if (mod.matched()) return std::abs(delta_omega);
  const Scalar omega = 2 * std::numbers::pi_v<Scalar> * mod.frequency;
  return mod.kind == ModulationKind::SquareWave ? 2 * omega : omega;
}

// Period of M(tau) in ns; infinite for a static envelope.
template <typename Scalar>
Scalar envelope_period(const ModulationSpec<Scalar>& mod, Scalar delta_omega) {
  const Scalar omega = envelope_angular_frequency(mod, delta_omega);
  return omega > 0 ? 2 * std::numbers::pi_v<Scalar> / omega
                   : std::numeric_limits<Scalar>::infinity();
}

// Highest harmonic of the envelope frequency present in M (0 for a
// static envelope; the square-wave triangle has a kinked, infinite series and
// is handled through its breakpoints instead).
template <typename Scalar>
int envelope_max_harmonic(const ModulationSpec<Scalar>& mod) {
  switch (mod.kind) {
    case ModulationKind::None: return 0;
    case ModulationKind::SquareWave: return 1;
    case ModulationKind::Cosinusoidal: return 1;
    case ModulationKind::PeriodicSinc2: return mod.terms - 1;
  }
  return 0;
}

// Time average of M(tau) over one period.
template <typename Scalar>
Scalar envelope_mean(const ModulationSpec<Scalar>& mod, Scalar delta_omega) {
  if (envelope_angular_frequency(mod, delta_omega) == Scalar(0)) return Scalar(1);
  switch (mod.kind) {
    case ModulationKind::None: return Scalar(1);
    case ModulationKind::SquareWave: return mod.duty * mod.duty;
    case ModulationKind::Cosinusoidal: return Scalar(0.5);
    case ModulationKind::PeriodicSinc2: return Scalar(1) / Scalar(mod.terms);
  }
  return Scalar(1);
}

namespace detail {

template <typename Scalar>
Scalar fractional_part(Scalar x) {
  return x - std::floor(x);
}

// Transmission of the 0/1 square wave at cycle fraction u.
template <typename Scalar>
Scalar square_wave_intensity(Scalar duty, Scalar u) {
  return fractional_part(u) < duty ? Scalar(1) : Scalar(0);
}

// Overlap of [0, d) with [u, u + d) on the unit circle.
template <typename Scalar>
Scalar square_wave_overlap(Scalar duty, Scalar u) {
  u = fractional_part(u);
  return std::max(Scalar(0), duty - u) + std::max(Scalar(0), u + duty - 1);
}

template <typename Scalar>
Scalar periodic_sinc2(int terms, Scalar x) {
  const Scalar y = std::remainder(x, 2 * std::numbers::pi_v<Scalar>);
  const Scalar denom = std::sin(y / 2);
  if (denom == Scalar(0)) return Scalar(1);
  const Scalar ratio = std::sin(Scalar(terms) * y / 2) / (Scalar(terms) * denom);
  return ratio * ratio;
}

}  // namespace detail

// Biphoton envelope M(tau) in [0, 1].
template <typename Scalar>
Scalar eval_envelope(const ModulationSpec<Scalar>& mod, Scalar delta_omega, Scalar tau) {
  mod.validate();
  const Scalar omega = envelope_angular_frequency(mod, delta_omega);
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  switch (mod.kind) {
    case ModulationKind::None:
      return Scalar(1);
    case ModulationKind::SquareWave: {
      const Scalar shift = mod.phase_offset / two_pi;
      if (omega == Scalar(0))
        return detail::square_wave_intensity(mod.duty, Scalar(0)) *
               detail::square_wave_intensity(mod.duty, shift);
      return detail::square_wave_overlap(mod.duty, omega * tau / two_pi + shift);
    }
    case ModulationKind::Cosinusoidal: {
      const Scalar c = std::cos((omega * tau + mod.phase_offset) / 2);
      return c * c;
    }
    case ModulationKind::PeriodicSinc2:
      return detail::periodic_sinc2(mod.terms, omega * tau + mod.phase_offset);
  }
  return Scalar(1);
}

// Intensity transmission |m_arm(t)|^2 of a synchronous per-photon modulator
// at absolute time t (arm is 1 or 2).
template <typename Scalar>
Scalar photon_transmission(const ModulationSpec<Scalar>& mod, Scalar delta_omega, int arm,
                           Scalar t) {
  mod.validate();
  switch (mod.kind) {
    case ModulationKind::None:
      return Scalar(1);
    case ModulationKind::SquareWave: {
      const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
      const Scalar omega = envelope_angular_frequency(mod, delta_omega);
      const Scalar shift = arm == 2 ? mod.phase_offset / two_pi : Scalar(0);
      return detail::square_wave_intensity(mod.duty, omega * t / two_pi + shift);
    }
    case ModulationKind::Cosinusoidal:
    case ModulationKind::PeriodicSinc2:
      break;
  }
  throw std::invalid_argument(to_string(mod.kind) +
                              " modulation has no per-photon factorization; use conditional mode");
}

}  // namespace biphoton
