#pragma once

#include <array>
#include <optional>

#include "biphoton/entanglement.hpp"
#include "biphoton/wavepacket.hpp"

namespace biphoton {

// Measured values the imperfection model is fitted to. The degenerate pair
// fixes concurrence and purity; a nondegenerate, unmodulated purity can be
// added as a third target.
struct CalibrationTargets {
  double concurrence = 0.71;
  double purity = 0.81;
  std::optional<double> nondegenerate_purity;
  double nondegenerate_delta_f_mhz = 50;
  double reference_window = 100;  // ns
  std::array<double, 2> basis_error{0.0, 0.0};

  double concurrence_tolerance = 0.02;
  double purity_tolerance = 0.02;
  double nondegenerate_purity_tolerance = 0.05;

  void validate() const;
};

struct StateSummary {
  double concurrence = 0;
  double purity = 0;
};

struct CalibrationResult {
  // Accidentals in rate form (pair rate 1/ns), so the fraction follows the
  // window and the modulation.
  ImperfectionModel<double> model;
  double accidental_fraction = 0;  // at the reference window
  StateSummary degenerate;
  std::optional<StateSummary> nondegenerate;
  int evaluations = 0;
};

// Least-squares fit of (accidental fraction, split ratio t^2 >= 1/2) with
// residuals scaled by the target tolerances. Throws InfeasibleTargetsError if
// the best fit misses any target by more than its tolerance.
CalibrationResult fit_imperfections(const CalibrationTargets& targets,
                                    const BiphotonWavepacket<double>& wavepacket =
                                        BiphotonWavepacket<double>::measured());

// Concurrence and purity of the post-selected state.
StateSummary predict(const BiphotonWavepacket<double>& wavepacket,
                     const ModulationSpec<double>& modulation, double window,
                     const ImperfectionModel<double>& imperfections);

}  // namespace biphoton
