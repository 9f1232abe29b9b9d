#include <doctest.h>

#include <cmath>
#include <numbers>

#include "biphoton/interference.hpp"
#include "biphoton/units.hpp"

using namespace biphoton;
using doctest::Approx;

// HOM dip depth follows the coherence directly.
TEST_CASE("hom coincidence identity") {
  const auto wp = BiphotonWavepacket<double>::symmetric(22.5);
  for (double mhz : {0.0, 5.0, 30.0, 120.0})
    for (const auto& mod : {ModulationSpec<double>::none(), ModulationSpec<double>::cosinusoidal()}) {
      const double dw = angular_from_mhz(mhz);
      const double zeta = std::abs(coherence(wp.with_delta_omega(dw), mod));
      CHECK(hom_coincidence(wp, mod, dw) == Approx((1 - 2 * zeta) / 2));
    }
  CHECK(hom_coincidence(wp, ModulationSpec<double>::none(), 0.0) == Approx(0.0).epsilon(1e-14));
}

TEST_CASE("beat minima are spaced by the inverse frequency difference") {
  const auto wp = BiphotonWavepacket<double>::symmetric(22.5);
  const auto edges = linear_grid(0.0, 200.0, 20001);
  for (double mhz : {43.0, 60.0}) {
    const auto h = beat_histogram(wp, angular_from_mhz(mhz), std::span<const double>(edges));
    const auto minima = local_minima(h);
    REQUIRE(minima.size() >= 3);
    for (std::size_t i = 1; i < minima.size(); ++i)
      CHECK(minima[i] - minima[i - 1] == Approx(1e3 / mhz).epsilon(2e-3));
  }
}

TEST_CASE("beat histogram mass") {
  const double tau0 = 22.5;
  const auto wp = BiphotonWavepacket<double>::symmetric(tau0);
  const auto edges = linear_grid(-3000.0, 3000.0, 6001);
  for (double theta : {0.0, 0.4, 3.0}) {
    const auto h = beat_histogram(wp, theta / tau0, std::span<const double>(edges));
    CHECK(h.total() == Approx(4 * tau0 * (1 + 2 * zeta_unmodulated(theta))).epsilon(1e-10));
  }
}

TEST_CASE("beat histogram of an asymmetric packet integrates piecewise") {
  const BiphotonWavepacket<double> wp(21, 24);
  const double dw = angular_from_mhz(43.0);
  const std::vector<double> coarse{-40.0, 40.0};
  const std::vector<double> fine{-40.0, -3.0, 0.0, 11.0, 40.0};
  const double whole = beat_histogram(wp, dw, std::span<const double>(coarse)).total();
  const double split = beat_histogram(wp, dw, std::span<const double>(fine)).total();
  CHECK(whole == Approx(split).epsilon(1e-12));
}

TEST_CASE("histogram input validation") {
  const auto wp = BiphotonWavepacket<double>::symmetric(22.5);
  const std::vector<double> bad{0.0, 0.0, 1.0};
  CHECK_THROWS_AS(beat_histogram(wp, 0.1, std::span<const double>(bad)), std::invalid_argument);
  CHECK_THROWS_AS(beat_histogram(wp, -0.1, std::span<const double>(bad)), std::invalid_argument);
  CHECK_THROWS_AS(linear_grid(1.0, 1.0, 5), std::invalid_argument);
}

TEST_CASE("unmodulated CHSH settles from the Bell value to the wide-window limit") {
  const auto wp = BiphotonWavepacket<double>::symmetric(22.5);
  const double dw = angular_from_mhz(20.0);
  const std::vector<double> windows{0.01, 2000.0};
  const auto sweep = chsh_vs_window(wp, ModulationSpec<double>::none(), dw, ImperfectionModel<double>::ideal(),
                                    std::span<const double>(windows));
  CHECK(sweep.s_values[0] == Approx(2 * std::numbers::sqrt2).epsilon(1e-6));
  CHECK(sweep.s_values[1] == Approx(std::numbers::sqrt2 * (1 + 2 * zeta_unmodulated(dw * 22.5))).epsilon(1e-9));
  CHECK(sweep.frequency_difference == Approx(0.02));
}

TEST_CASE("modulation revives the CHSH violation at wide windows") {
  const auto wp = BiphotonWavepacket<double>::measured();
  const std::vector<double> windows{100.0};
  const double dw = angular_from_mhz(20.0);
  const auto ideal = ImperfectionModel<double>::ideal();
  const double plain = chsh_vs_window(wp, ModulationSpec<double>::none(), dw, ideal, std::span<const double>(windows))
                           .s_values[0];
  const double revived =
      chsh_vs_window(wp, ModulationSpec<double>::cosinusoidal(), dw, ideal, std::span<const double>(windows)).s_values[0];
  CHECK(revived - plain > 0.1);
  CHECK(revived > 2);
}

TEST_CASE("post-selected state applies window-dependent accidentals") {
  const auto wp = BiphotonWavepacket<double>::measured();
  ImperfectionModel<double> model;
  model.accidentals = AccidentalRates<double>{1e-3, 1.0};
  const auto narrow = post_selected_state(wp, ModulationSpec<double>::none(), 10.0, model);
  const auto wide = post_selected_state(wp, ModulationSpec<double>::none(), 100.0, model);
  CHECK(narrow(TwoQubitBasis::HH, TwoQubitBasis::HH).real() < wide(TwoQubitBasis::HH, TwoQubitBasis::HH).real());
  const double fraction = model.accidental_fraction(100.0, wp.delay_fraction_within(100.0));
  CHECK(wide(TwoQubitBasis::HH, TwoQubitBasis::HH).real() == Approx(fraction / 4));
}
