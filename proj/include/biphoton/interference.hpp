#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "biphoton/coherence.hpp"
#include "biphoton/entanglement.hpp"
#include "biphoton/wavepacket.hpp"

namespace biphoton {

template <typename Scalar = double>
struct Histogram {
  std::vector<Scalar> bin_edges;  // ns, strictly increasing
  std::vector<Scalar> counts;     // one per bin

  std::size_t bins() const { return counts.size(); }
  Scalar bin_center(std::size_t i) const { return (bin_edges[i] + bin_edges[i + 1]) / 2; }
  Scalar total() const {
    CompensatedSum<Scalar> sum;
    for (Scalar c : counts) sum.add(c);
    return sum.value();
  }
};

template <typename Scalar = double>
struct WindowSweep {
  std::vector<Scalar> windows;   // ns, strictly increasing
  std::vector<Scalar> s_values;  // |S|
  Scalar frequency_difference = Scalar(0);  // cycles/ns
  ModulationSpec<Scalar> modulation;
};

template <typename Scalar>
std::vector<Scalar> linear_grid(Scalar first, Scalar last, std::size_t points) {
  if (points < 2 || !(last > first)) throw std::invalid_argument("grid needs first < last and >= 2 points");
  std::vector<Scalar> grid(points);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = first + (last - first) * Scalar(i) / Scalar(points - 1);
  return grid;
}

// Normalized HOM coincidence probability (1 - 2|zeta|)/2; 0 is a full dip and
// 1/2 the distinguishable-photon baseline.
template <typename Scalar>
Scalar hom_coincidence(const BiphotonWavepacket<Scalar>& wp, const ModulationSpec<Scalar>& mod,
                       Scalar delta_omega) {
  const auto shifted = wp.with_delta_omega(delta_omega);
  return (1 - 2 * std::abs(coherence(shifted, mod))) / 2;
}

namespace detail {

// int_{t0}^{t1} [e^{-t/r} + e^{-t/l} + 2 e^{-g t} cos(w t)] dt for 0 <= t0 <= t1,
// the beat intensity on the tau >= 0 side with g = (1/r + 1/l)/2.
template <typename Scalar>
Scalar beat_segment(Scalar t0, Scalar t1, Scalar right, Scalar left, Scalar omega) {
  const auto decay = [](Scalar t, Scalar tau) { return -tau * std::exp(-t / tau); };
  const Scalar g = (1 / right + 1 / left) / 2;
  const auto cross = [&](Scalar t) {
    return 2 * std::exp(-g * t) * (omega * std::sin(omega * t) - g * std::cos(omega * t)) /
           (g * g + omega * omega);
  };
  return (decay(t1, right) - decay(t0, right)) + (decay(t1, left) - decay(t0, left)) +
         (cross(t1) - cross(t0));
}

}  // namespace detail

// Time-resolved two-photon interference G(tau) = |phi_HV + e^{i dw tau} phi_VH|^2,
// integrated exactly over each bin.
template <typename Scalar>
Histogram<Scalar> beat_histogram(const BiphotonWavepacket<Scalar>& wp, Scalar delta_omega,
                                 std::span<const Scalar> edges) {
  if (!(delta_omega >= 0)) throw std::invalid_argument("frequency difference must be >= 0");
  if (edges.size() < 2) throw std::invalid_argument("histogram needs at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1]))
      throw std::invalid_argument("histogram edges must be strictly increasing");

  // On tau < 0, G(tau) = G_mirror(-tau) with the time constants swapped.
  const auto integral = [&](Scalar a, Scalar b) {
    Scalar total = 0;
    if (b > 0)
      total += detail::beat_segment(std::max(a, Scalar(0)), b, wp.tau_right(), wp.tau_left(),
                                    delta_omega);
    if (a < 0)
      total += detail::beat_segment(-std::min(b, Scalar(0)), -a, wp.tau_left(), wp.tau_right(),
                                    delta_omega);
    return total;
  };

  Histogram<Scalar> h;
  h.bin_edges.assign(edges.begin(), edges.end());
  h.counts.resize(edges.size() - 1);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    h.counts[i] = std::max(Scalar(0), integral(edges[i], edges[i + 1]));
  return h;
}

// Bin centers of strict interior local minima.
template <typename Scalar>
std::vector<Scalar> local_minima(const Histogram<Scalar>& h) {
  std::vector<Scalar> minima;
  for (std::size_t i = 1; i + 1 < h.bins(); ++i)
    if (h.counts[i] < h.counts[i - 1] && h.counts[i] <= h.counts[i + 1])
      minima.push_back(h.bin_center(i));
  return minima;
}

// Post-selected state at coincidence window W, including accidentals epsilon(W)
// and the split ratio from the imperfection model.
template <typename Scalar>
TwoQubitState<Scalar> post_selected_state(const BiphotonWavepacket<Scalar>& wp,
                                          const ModulationSpec<Scalar>& mod, Scalar window,
                                          const ImperfectionModel<Scalar>& imperfections) {
  imperfections.validate();
  const auto zeta = coherence(wp, mod, window);
  Scalar eps = 0;
  if (std::holds_alternative<Scalar>(imperfections.accidentals))
    eps = std::get<Scalar>(imperfections.accidentals);
  else if (std::get<AccidentalRates<Scalar>>(imperfections.accidentals).accidental_rate > 0)
    eps = imperfections.accidental_fraction(window, windowed_pair_fraction(wp, mod, window));
  return build_state(zeta, StateImperfections<Scalar>{eps, imperfections.split_ratio});
}

// |S| at canonical CHSH angles for each coincidence window.
template <typename Scalar>
WindowSweep<Scalar> chsh_vs_window(const BiphotonWavepacket<Scalar>& wp,
                                   const ModulationSpec<Scalar>& mod, Scalar delta_omega,
                                   const ImperfectionModel<Scalar>& imperfections,
                                   std::span<const Scalar> windows) {
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (!(windows[i] > 0)) throw std::invalid_argument("coincidence windows must be positive");
    if (i > 0 && !(windows[i] > windows[i - 1]))
      throw std::invalid_argument("coincidence windows must be strictly increasing");
  }
  const auto shifted = wp.with_delta_omega(delta_omega);
  WindowSweep<Scalar> sweep;
  sweep.windows.assign(windows.begin(), windows.end());
  sweep.frequency_difference = delta_omega / (2 * std::numbers::pi_v<Scalar>);
  sweep.modulation = mod;
  sweep.s_values.reserve(windows.size());
  for (Scalar w : windows) {
    const auto state = post_selected_state(shifted, mod, w, imperfections);
    sweep.s_values.push_back(std::abs(chsh_fixed(state, ChshAngles<Scalar>{}, imperfections.basis_error)));
  }
  return sweep;
}

}  // namespace biphoton
