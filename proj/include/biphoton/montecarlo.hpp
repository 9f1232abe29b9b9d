#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "biphoton/entanglement.hpp"
#include "biphoton/polarization.hpp"
#include "biphoton/tomography.hpp"
#include "biphoton/wavepacket.hpp"

namespace biphoton {

enum class Outcome : std::uint8_t { Reject = 0, Pass = 1 };
enum class Origin : std::uint8_t { Pair = 0, Accidental = 1 };

// One detector click. `id` is shared by the two photons of a pair and is
// unique for background clicks; like `origin` it is never read by the
// coincidence analysis.
struct DetectionEvent {
  int arm = 1;  // 1 or 2
  double time = 0;  // ns
  Outcome outcome = Outcome::Reject;
  Origin origin = Origin::Pair;
  std::uint64_t id = 0;

  friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

// Time-ordered clicks of both arms over [0, duration).
struct EventStream {
  std::vector<DetectionEvent> events;
  double duration = 0;

  std::size_t count(int arm) const;
  friend bool operator==(const EventStream&, const EventStream&) = default;
};

struct RunConfig {
  double pair_rate = 1e-6;  // 1/ns
  double duration = 1e6;    // ns
  BiphotonWavepacket<double> wavepacket = BiphotonWavepacket<double>::measured();
  ModulationSpec<double> modulation;
  std::array<Analyzer<double>, 2> analyzers{Analyzer<double>::horizontal(),
                                            Analyzer<double>::horizontal()};
  std::array<double, 2> accidental_rate{0.0, 0.0};  // 1/ns per arm
  double split_ratio = 0.5;
  std::uint64_t seed = 1;
  unsigned workers = 1;  // 0 = all cores; never changes the output

  void validate() const;
};

// Pairs emitted as a Poisson process, delays drawn from the normalized
// (|phi_HV|^2 + |phi_VH|^2)/2, polarization outcomes by the Born rule on
// |psi(tau)> ~ t^2 phi_HV |HV> + r^2 e^{i dw tau} phi_VH |VH>.
EventStream generate_pairs(const RunConfig& config);

// Synchronous mode: each click survives with its arm's |m(t)|^2.
// Conditional mode: both clicks of a pair survive together with M(tau).
// Decisions are keyed by event id, so they do not depend on stream order.
EventStream thin_by_modulation(const EventStream& stream, const ModulationSpec<double>& modulation,
                               double delta_omega, std::uint64_t seed);

// Adds per-arm Poisson background clicks with fair-coin outcomes.
EventStream inject_accidentals(const EventStream& stream, const RunConfig& config);

// generate_pairs, thin_by_modulation, inject_accidentals.
EventStream simulate_stream(const RunConfig& config);

struct CoincidenceCounts {
  // Indexed by outcome of arm 1 then arm 2: pass-pass, pass-reject, reject-pass, reject-reject.
  std::uint64_t pp = 0, pr = 0, rp = 0, rr = 0;

  std::uint64_t total() const { return pp + pr + rp + rr; }
  double correlation() const;
  double correlation_variance() const;
};

// Greedy matching in time order: each arm-1 click takes the nearest unused
// arm-2 click with |t1 - t2| <= window.
CoincidenceCounts count_coincidences(const EventStream& stream, double window);

// Delays t2 - t1 of matched coincidences, in match order.
std::vector<double> coincidence_delays(const EventStream& stream, double window);

// One analyzer setting and the stream recorded with it.
struct MeasurementRun {
  MeasurementSetting setting;
  EventStream stream;
};

// Simulates one stream per setting, each seeded from (config.seed, setting id),
// and hands it to `visit` (possibly from several threads at once). Basis
// errors rotate the analyzers actually installed, not the recorded setting.
void for_each_setting(const RunConfig& config, std::span<const MeasurementSetting> settings,
                      const std::array<double, 2>& basis_error,
                      const std::function<void(std::size_t, const MeasurementRun&)>& visit);

// Keeps every stream; for small runs.
std::vector<MeasurementRun> measure_settings(const RunConfig& config,
                                             std::span<const MeasurementSetting> settings,
                                             const std::array<double, 2>& basis_error = {0.0, 0.0});

// Counts only, one entry per setting; streams are dropped as they are analyzed.
std::vector<CoincidenceCounts> measure_coincidences(const RunConfig& config,
                                                    std::span<const MeasurementSetting> settings,
                                                    double window,
                                                    const std::array<double, 2>& basis_error = {0.0, 0.0});

std::vector<CoincidenceCounts> coincidence_analysis(std::span<const MeasurementRun> runs,
                                                    double window);

// The four linear-polarizer CHSH settings in chsh_fixed order.
std::vector<MeasurementSetting> chsh_settings(const ChshAngles<double>& angles = {});

struct ChshEstimate {
  double s = 0;
  double standard_error = 0;
  std::array<double, 4> correlations{};
  std::array<std::uint64_t, 4> coincidences{};
};

// S from four runs in chsh_fixed order; throws InsufficientCountsError when a
// setting has fewer than `minimum_coincidences`.
ChshEstimate estimate_chsh(std::span<const CoincidenceCounts> counts,
                           std::uint64_t minimum_coincidences = 100);
ChshEstimate estimate_chsh(std::span<const MeasurementRun> runs, double window,
                           std::uint64_t minimum_coincidences = 100);

// Tomography records: pass-pass coincidences out of all coincidences.
std::vector<CountRecord> to_count_records(std::span<const MeasurementSetting> settings,
                                          std::span<const CoincidenceCounts> counts);
std::vector<CountRecord> to_count_records(std::span<const MeasurementRun> runs, double window);

// CSV: arm,time_ns,outcome,origin with outcome pass|reject and origin pair|accidental.
void write_events_csv(std::ostream& out, const EventStream& stream);
EventStream read_events_csv(std::istream& in);

// Binary, little-endian: "BPEV", u16 version (1), f64 duration_ns, u64 record
// count, then per event a u16 payload length (19) followed by u8 arm,
// u8 outcome, u8 origin, f64 time_ns, u64 id.
void write_events_binary(std::ostream& out, const EventStream& stream);
EventStream read_events_binary(std::istream& in);

}  // namespace biphoton
