#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "biphoton/coherence.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/interference.hpp"
#include "biphoton/montecarlo.hpp"
#include "biphoton/units.hpp"
#include "support.hpp"

using namespace biphoton;
using doctest::Approx;

namespace {

RunConfig sparse(double pairs, double pair_rate = 1e-8) {
  RunConfig config;
  config.pair_rate = pair_rate;
  config.duration = pairs / pair_rate;
  return config;
}

double pass_fraction(const CoincidenceCounts& c) { return double(c.pp) / double(c.total()); }

// Histogram of delays on equal bins over [-half, half].
std::vector<double> histogram(const std::vector<double>& delays, double half, int bins) {
  std::vector<double> h(bins, 0.0);
  for (double d : delays) {
    const int i = int(std::floor((d + half) / (2 * half) * bins));
    if (i >= 0 && i < bins) h[i] += 1;
  }
  return h;
}

}  // namespace

TEST_CASE("streams are reproducible and independent of worker count") {
  auto config = sparse(200000);
  config.modulation = ModulationSpec<double>::square_wave();
  config.wavepacket = BiphotonWavepacket<double>::measured(angular_from_mhz(50.0));
  config.accidental_rate = {2e-8, 3e-8};
  const auto a = simulate_stream(config);
  const auto b = simulate_stream(config);
  config.workers = 3;
  const auto c = simulate_stream(config);
  CHECK(a == b);
  CHECK(a == c);
  config.seed = 2;
  CHECK_FALSE(simulate_stream(config) == a);
  CHECK(std::is_sorted(a.events.begin(), a.events.end(),
                       [](const DetectionEvent& x, const DetectionEvent& y) { return x.time < y.time; }));
}

TEST_CASE("per-setting runs do not depend on worker count") {
  auto config = sparse(20000, 1e-6);
  const auto settings = standard_settings();
  const auto one = measure_coincidences(config, std::span<const MeasurementSetting>(settings), 100.0);
  config.workers = 4;
  const auto many = measure_coincidences(config, std::span<const MeasurementSetting>(settings), 100.0);
  const auto runs = measure_settings(config, std::span<const MeasurementSetting>(settings));
  const auto again = coincidence_analysis(std::span<const MeasurementRun>(runs), 100.0);
  for (std::size_t k = 0; k < settings.size(); ++k) {
    CHECK(one[k].pp == many[k].pp);
    CHECK(one[k].rr == many[k].rr);
    CHECK(one[k].pp == again[k].pp);
    CHECK(one[k].pr == again[k].pr);
  }
}

TEST_CASE("HH analyzers see no pass-pass coincidences") {
  const auto config = sparse(100000, 1e-9);
  const auto counts = count_coincidences(simulate_stream(config), 100.0);
  CHECK(counts.pp == 0);
  CHECK(counts.total() > 90000);
}

TEST_CASE("DD pass fraction follows the windowed coherence") {
  const double window = 100;
  for (double theta : {0.0, 7.0686}) {
    auto config = sparse(1e6);
    config.wavepacket = BiphotonWavepacket<double>::symmetric(22.5, theta / 22.5);
    config.analyzers = {Analyzer<double>::diagonal(), Analyzer<double>::diagonal()};
    const auto counts = count_coincidences(simulate_stream(config), window);
    const double zeta = coherence(config.wavepacket, ModulationSpec<double>::none(), window).real();
    const double expected = (1 + 2 * zeta) / 4;
    const double sd = std::sqrt(expected * (1 - expected) / counts.total());
    CAPTURE(theta);
    CHECK(std::abs(pass_fraction(counts) - expected) <= 3 * sd);
    if (theta == 0) CHECK(expected == Approx(0.5).epsilon(1e-6));
  }
}

TEST_CASE("split ratio weights the exit ports") {
  auto config = sparse(100000);
  config.split_ratio = 0.7;
  config.analyzers = {Analyzer<double>::horizontal(), Analyzer<double>::vertical()};
  const auto counts = count_coincidences(simulate_stream(config), 200.0);
  const double expected = 0.49 / (0.49 + 0.09);
  CHECK(std::abs(pass_fraction(counts) - expected) <= 4 * std::sqrt(expected * (1 - expected) / counts.total()));
}

TEST_CASE("synchronous square wave passes half of each arm") {
  auto config = sparse(200000);
  config.modulation = ModulationSpec<double>::square_wave();
  config.wavepacket = BiphotonWavepacket<double>::measured(angular_from_mhz(50.0));
  const auto raw = generate_pairs(config);
  const auto kept = thin_by_modulation(raw, config.modulation, config.wavepacket.delta_omega(), config.seed);
  for (int arm : {1, 2}) {
    const double n = double(raw.count(arm));
    CHECK(std::abs(double(kept.count(arm)) / n - 0.5) <= 3 * std::sqrt(0.25 / n));
  }
  CHECK(thin_by_modulation(raw, ModulationSpec<double>::none(), config.wavepacket.delta_omega(), 3) == raw);
}

TEST_CASE("coincidence delays follow the modulated pair density") {
  auto config = sparse(300000);
  config.modulation = ModulationSpec<double>::square_wave();
  config.wavepacket = BiphotonWavepacket<double>::measured(angular_from_mhz(50.0));
  const double half = 100;
  const int bins = 50;
  const auto delays = coincidence_delays(simulate_stream(config), half);
  const auto observed = histogram(delays, half, bins);

  const double dw = config.wavepacket.delta_omega();
  const auto density = [&](double t) {
    return eval_envelope(config.modulation, dw, t) * config.wavepacket.delay_density(t);
  };
  std::vector<double> expected(bins);
  double norm = 0;
  for (int i = 0; i < bins; ++i) {
    const double lo = -half + 2 * half * i / bins;
    expected[i] = testing::panel_integral(density, lo, lo + 2 * half / bins, 0.5);
    norm += expected[i];
  }
  for (double& e : expected) e *= double(delays.size()) / norm;
  CHECK(testing::chi_square_p_value(observed, expected) > 0.01);
}

TEST_CASE("conditional and synchronous square modulation give the same delays") {
  auto config = sparse(300000);
  config.wavepacket = BiphotonWavepacket<double>::measured(angular_from_mhz(50.0));
  config.modulation = ModulationSpec<double>::square_wave();
  const auto synchronous = coincidence_delays(simulate_stream(config), 100.0);
  config.modulation.conditional = true;
  config.seed = 99;
  const auto conditional = coincidence_delays(simulate_stream(config), 100.0);
  CHECK(testing::two_sample_p_value(histogram(synchronous, 100, 50), histogram(conditional, 100, 50)) > 0.01);
  const double ratio = double(conditional.size()) / double(synchronous.size());
  CHECK(ratio == Approx(1.0).epsilon(0.02));
}

TEST_CASE("background clicks arrive at the configured rates") {
  auto config = sparse(10, 1e-12);
  config.duration = 1e9;
  config.accidental_rate = {2e-4, 5e-4};
  const auto stream = inject_accidentals(EventStream{{}, config.duration}, config);
  for (int arm : {1, 2}) {
    const double expected = config.accidental_rate[arm - 1] * config.duration;
    CHECK(std::abs(double(stream.count(arm)) - expected) <= 3 * std::sqrt(expected));
  }
  std::size_t passes = 0;
  for (const auto& e : stream.events) {
    CHECK(e.origin == Origin::Accidental);
    passes += e.outcome == Outcome::Pass;
  }
  CHECK(std::abs(double(passes) / stream.events.size() - 0.5) < 0.01);

  const auto pairs = generate_pairs(sparse(1000));
  auto silent = sparse(1000);
  silent.accidental_rate = {0.0, 0.0};
  CHECK(inject_accidentals(pairs, silent) == pairs);
}

TEST_CASE("uncorrelated clicks coincide at 2 W r1 r2") {
  auto config = sparse(1, 1e-12);
  config.duration = 1e10;
  config.accidental_rate = {1e-4, 1e-4};
  const double window = 10;
  const auto counts = count_coincidences(inject_accidentals(EventStream{{}, config.duration}, config), window);
  const double expected = 2 * window * 1e-4 * 1e-4 * config.duration;
  CHECK(std::abs(double(counts.total()) - expected) <= 3 * std::sqrt(expected));
}

TEST_CASE("coincidence total includes true pairs and accidentals") {
  RunConfig config;
  config.pair_rate = 1e-5;
  config.duration = 1e10;
  config.accidental_rate = {1e-4, 1e-4};
  const double window = 10;
  const auto counts = count_coincidences(simulate_stream(config), window);
  const double p = config.pair_rate, r1 = config.accidental_rate[0], r2 = config.accidental_rate[1];
  const double fraction = config.wavepacket.delay_fraction_within(window);
  const double expected = config.duration * (p * fraction + 2 * window * (r1 + p) * (r2 + p));
  CHECK(std::abs(double(counts.total()) - expected) <= 3 * std::sqrt(expected));

  // The accidental fraction of the imperfection model at the same rates.
  ImperfectionModel<double> model;
  model.accidentals = AccidentalRates<double>{(r1 + p) * (r2 + p), p};
  const double eps = model.accidental_fraction(window, fraction);
  const double measured_eps = 1 - config.duration * p * fraction / double(counts.total());
  CHECK(std::abs(measured_eps - eps) <= 3 * std::sqrt(eps * (1 - eps) / counts.total()));
}

TEST_CASE("greedy matching on hand-made streams") {
  EventStream empty;
  CHECK(count_coincidences(empty, 10.0).total() == 0);

  const auto click = [](int arm, double t, Outcome o) { return DetectionEvent{arm, t, o, Origin::Pair, 0}; };
  EventStream one{{click(1, 5.0, Outcome::Pass), click(2, 10.0, Outcome::Reject)}, 20.0};
  CHECK(count_coincidences(one, 10.0).pr == 1);
  CHECK(count_coincidences(one, 2.0).total() == 0);
  CHECK(count_coincidences(one, 5.0).total() == 1);

  EventStream nearest{{click(2, 0.0, Outcome::Reject), click(1, 4.0, Outcome::Pass), click(2, 5.0, Outcome::Pass)},
                      10.0};
  const auto c = count_coincidences(nearest, 6.0);
  CHECK(c.pp == 1);
  CHECK(c.total() == 1);
  CHECK(coincidence_delays(nearest, 6.0) == std::vector<double>{1.0});
}

TEST_CASE("CHSH estimate at degeneracy") {
  auto config = sparse(1e6, 1e-6);
  const auto settings = chsh_settings();
  for (std::size_t k = 0; k < settings.size(); ++k) CHECK(settings[k].id == 100 + int(k));
  const double window = 100;
  const auto counts = measure_coincidences(config, std::span<const MeasurementSetting>(settings), window);
  const auto estimate = estimate_chsh(std::span<const CoincidenceCounts>(counts));
  const double exact = chsh_fixed(post_selected_state(config.wavepacket, config.modulation, window,
                                                      ImperfectionModel<double>::ideal()));
  CHECK(std::abs(estimate.s - exact) <= 3 * estimate.standard_error);
  CHECK(std::abs(std::abs(estimate.s) - 2 * std::numbers::sqrt2) <= 0.01);
}

TEST_CASE("matched modulation keeps the violation at a 100 ns window") {
  auto config = sparse(2e5, 1e-6);
  config.wavepacket = BiphotonWavepacket<double>::measured(angular_from_mhz(20.0));
  config.modulation = ModulationSpec<double>::cosinusoidal();
  const auto settings = chsh_settings();
  const auto counts = measure_coincidences(config, std::span<const MeasurementSetting>(settings), 100.0);
  const auto estimate = estimate_chsh(std::span<const CoincidenceCounts>(counts));
  CHECK((std::abs(estimate.s) - 2) / estimate.standard_error > 10);
}

TEST_CASE("CHSH needs enough coincidences") {
  std::vector<CoincidenceCounts> few(4, CoincidenceCounts{10, 10, 10, 10});
  CHECK_THROWS_AS(estimate_chsh(std::span<const CoincidenceCounts>(few)), InsufficientCountsError);
  CHECK(estimate_chsh(std::span<const CoincidenceCounts>(few), 40).s == Approx(0.0));
}

TEST_CASE("count records and correlations") {
  const CoincidenceCounts c{30, 10, 20, 40};
  CHECK(c.correlation() == Approx(0.4));
  CHECK(c.correlation_variance() == Approx((1 - 0.16) / 100));
  const auto settings = standard_settings();
  const std::vector<CoincidenceCounts> counts(settings.size(), c);
  const auto records = to_count_records(std::span<const MeasurementSetting>(settings),
                                        std::span<const CoincidenceCounts>(counts));
  CHECK(records[3].counts == 30);
  CHECK(records[3].integration == 100);
  CHECK(records[3].setting.id == 3);
}

TEST_CASE("event files round trip") {
  auto config = sparse(3000, 1e-6);
  config.accidental_rate = {1e-6, 1e-6};
  const auto stream = simulate_stream(config);

  std::stringstream binary;
  write_events_binary(binary, stream);
  CHECK(read_events_binary(binary) == stream);

  std::stringstream csv;
  write_events_csv(csv, stream);
  const auto back = read_events_csv(csv);
  REQUIRE(back.events.size() == stream.events.size());
  for (std::size_t i = 0; i < back.events.size(); ++i) {
    CHECK(back.events[i].arm == stream.events[i].arm);
    CHECK(back.events[i].time == stream.events[i].time);
    CHECK(back.events[i].outcome == stream.events[i].outcome);
    CHECK(back.events[i].origin == stream.events[i].origin);
  }

  std::stringstream junk("NOPE and more bytes here");
  CHECK_THROWS(read_events_binary(junk));
  std::stringstream truncated(binary.str().substr(0, 40));
  CHECK_THROWS(read_events_binary(truncated));
}

TEST_CASE("run configuration validation") {
  RunConfig config;
  config.pair_rate = -1;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = RunConfig{};
  config.split_ratio = 1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = RunConfig{};
  config.accidental_rate = {-1.0, 0.0};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}
