#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "biphoton/calibration.hpp"
#include "biphoton/entanglement.hpp"
#include "biphoton/montecarlo.hpp"
#include "biphoton/wavepacket.hpp"

namespace biphoton {

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A scenario file: "key = value" lines under [section] headers, '#' comments.
//
//   [scenario]       name
//   [wavepacket]     tau_left_ns, tau_right_ns
//   [modulation]     kind (none|square|cosine|sinc2), frequency_mhz (0 = matched),
//                    duty, terms, conditional, phase_offset_rad
//   [imperfections]  accidental_fraction | accidental_rate_per_ns2 + pair_rate_per_ns,
//                    split_ratio, basis_error_a_rad, basis_error_b_rad
//   [run]            delta_f_mhz, pair_rate_per_ns, pairs_per_setting, seed, window_ns,
//                    background_rate_per_ns, workers
//   [sweep]          window_min_ns, window_max_ns, window_points,
//                    frequency_min_mhz, frequency_max_mhz, frequency_points
//   [calibration]    target_concurrence, target_purity, target_nondegenerate_purity,
//                    nondegenerate_delta_f_mhz, reference_window_ns, and the
//                    fitted_* values written by the fit
//
// Unknown sections or keys, duplicates and malformed values are errors.
struct ScenarioConfig {
  std::string name = "default";
  double tau_left = 21;
  double tau_right = 24;
  ModulationSpec<double> modulation;
  ImperfectionModel<double> imperfections;
  bool has_imperfections = false;

  double delta_f_mhz = 0;
  double pair_rate = 1e-6;
  std::uint64_t pairs_per_setting = 1'000'000;
  std::uint64_t seed = 1;
  double window = 100;
  std::optional<double> background_rate;
  unsigned workers = 0;

  double window_min = 1;
  double window_max = 100;
  std::size_t window_points = 100;
  double frequency_min_mhz = 0;
  double frequency_max_mhz = 200;
  std::size_t frequency_points = 41;

  std::optional<CalibrationTargets> calibration;
  std::map<std::string, double> fitted;  // fitted_* values, informational

  BiphotonWavepacket<double> wavepacket() const;  // at delta_f_mhz
  void validate() const;
};

ScenarioConfig parse_scenario(std::istream& in, const std::string& source = "<input>");
ScenarioConfig load_scenario(const std::string& path);

// Monte Carlo configuration. Without an explicit background rate the
// imperfection model's accidentals are converted to equal per-arm rates that
// give the same accidental fraction at the run window.
RunConfig to_run_config(const ScenarioConfig& scenario);

// Writes a loadable file holding [imperfections] and [calibration] sections.
void write_imperfections(std::ostream& out, const CalibrationResult& result,
                         const CalibrationTargets& targets);

}  // namespace biphoton
