#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "biphoton/entanglement.hpp"
#include "support.hpp"

using namespace biphoton;
using doctest::Approx;

TEST_CASE("concurrence, purity and CHSH of the post-selected family") {
  for (double zeta = 0; zeta <= 0.5; zeta += 0.025) {
    const auto state = build_state(zeta);
    CAPTURE(zeta);
    CHECK(concurrence(state) == Approx(2 * zeta).epsilon(1e-12));
    CHECK(purity(state) == Approx(0.5 + 2 * zeta * zeta).epsilon(1e-12));
    CHECK(chsh_fixed(state) == Approx(-std::numbers::sqrt2 * (1 + 2 * zeta)).epsilon(1e-12));
  }
}

TEST_CASE("complex coherence keeps |zeta| in the entanglement") {
  const auto state = build_state(std::polar(0.3, 1.1));
  CHECK(concurrence(state) == Approx(0.6));
  CHECK(std::arg(state(TwoQubitBasis::HV, TwoQubitBasis::VH)) == Approx(1.1));
}

TEST_CASE("accidentals and split ratio") {
  const double zeta = 0.4;
  double previous = 1;
  for (double eps = 0; eps < 0.9; eps += 0.1) {
    const double c = concurrence(build_state(zeta, {eps, 0.5}));
    CHECK(c <= previous + 1e-15);
    previous = c;
  }
  const double t2 = 0.7, r2 = 0.3;
  const auto state = build_state(zeta, {0.0, t2});
  CHECK(std::abs(state(TwoQubitBasis::HV, TwoQubitBasis::VH)) ==
        Approx(2 * zeta * t2 * r2 / (t2 * t2 + r2 * r2)));
  CHECK(state(TwoQubitBasis::HV, TwoQubitBasis::HV).real() == Approx(t2 * t2 / (t2 * t2 + r2 * r2)));
  const auto mixed = build_state(zeta, {0.2, 0.5});
  CHECK(mixed(TwoQubitBasis::HH, TwoQubitBasis::HH).real() == Approx(0.05));
}

TEST_CASE("reference states") {
  CHECK(purity(TwoQubitState<double>::maximally_mixed()) == Approx(0.25));
  CHECK(concurrence(TwoQubitState<double>::maximally_mixed()) == 0.0);
  const auto bell = TwoQubitState<double>::pure(bell_psi_plus<double>());
  CHECK(concurrence(bell) == Approx(1.0));
  CHECK(chsh_optimal(bell) == Approx(2 * std::numbers::sqrt2));
}

TEST_CASE("Tsirelson bound and optimal dominates fixed angles") {
  std::mt19937_64 engine(2718);
  for (int i = 0; i < 1000; ++i) {
    const auto state = testing::random_state(engine);
    const double optimal = chsh_optimal(state);
    CHECK(optimal <= 2 * std::numbers::sqrt2 + 1e-12);
    CHECK(std::abs(chsh_fixed(state)) <= optimal + 1e-12);
    CHECK(concurrence(state) >= 0);
    CHECK(concurrence(state) <= 1 + 1e-12);
  }
}

TEST_CASE("local unitaries leave the invariants unchanged") {
  std::mt19937_64 engine(31);
  for (int i = 0; i < 50; ++i) {
    const auto state = testing::random_state(engine);
    const auto moved = state.transformed(testing::random_local_unitary(engine));
    CHECK(concurrence(moved) == Approx(concurrence(state)).epsilon(1e-9));
    CHECK(purity(moved) == Approx(purity(state)).epsilon(1e-12));
    CHECK(chsh_optimal(moved) == Approx(chsh_optimal(state)).epsilon(1e-9));
  }
}

TEST_CASE("trace distance") {
  std::mt19937_64 engine(5);
  const auto a = testing::random_state(engine);
  const auto b = testing::random_state(engine);
  CHECK(trace_distance(a, a) == Approx(0.0).epsilon(1e-14));
  CHECK(trace_distance(a, b) == Approx(trace_distance(b, a)));
  CHECK(trace_distance(a, b) <= 1.0);
  const auto bell = TwoQubitState<double>::pure(bell_psi_plus<double>());
  Vector4c<double> hh = Vector4c<double>::Zero();
  hh(0) = 1;
  CHECK(trace_distance(bell, TwoQubitState<double>::pure(hh)) == Approx(1.0));
}

TEST_CASE("state validation") {
  Matrix4c<double> m = Matrix4c<double>::Identity() / 2.0;
  CHECK_THROWS_AS(TwoQubitState<double>{m}, std::invalid_argument);
  m = Matrix4c<double>::Zero();
  m(0, 0) = 1.5;
  m(1, 1) = -0.5;
  CHECK_THROWS_AS(TwoQubitState<double>{m}, std::invalid_argument);
  CHECK_NOTHROW(TwoQubitState<double>::unchecked(m));
  CHECK_FALSE(TwoQubitState<double>::unchecked(m).is_physical());
}

TEST_CASE("basis errors only rotate the analyzers") {
  const auto bell = build_state(0.5);
  const double offset = 0.05;
  const double rotated = chsh_fixed(bell, {}, {offset, 0.0});
  CHECK(std::abs(rotated) < 2 * std::numbers::sqrt2);
  CHECK(std::abs(rotated) > 2.7);
}
