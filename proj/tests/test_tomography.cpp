#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "biphoton/errors.hpp"
#include "biphoton/tomography.hpp"
#include "support.hpp"

using namespace biphoton;
using doctest::Approx;

namespace {
std::vector<MeasurementSetting> settings = standard_settings();
std::span<const MeasurementSetting> all() { return settings; }
}  // namespace

TEST_CASE("sixteen settings give a full-rank map") {
  REQUIRE(settings.size() == 16);
  for (std::size_t i = 0; i < settings.size(); ++i) CHECK(settings[i].id == int(i));
  const Eigen::MatrixXd map = measurement_map(all());
  CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(map).rank() == 16);
}

TEST_CASE("map rows reproduce Born probabilities") {
  std::mt19937_64 engine(8);
  const auto state = testing::random_state(engine);
  Eigen::VectorXd r(16);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      r(4 * i + j) = state.expectation(kron(pauli<double>(i), pauli<double>(j)));
  const Eigen::VectorXd p = measurement_map(all()) * r;
  for (std::size_t k = 0; k < settings.size(); ++k)
    CHECK(p(Eigen::Index(k)) == Approx(state.expectation(settings[k].projector())).epsilon(1e-12));
}

TEST_CASE("linear inversion recovers exact frequencies") {
  std::mt19937_64 engine(9);
  for (int k = 0; k < 10; ++k) {
    const auto state = testing::random_state(engine);
    const auto records = expected_counts(state, all(), 1'000'000'000'000ULL);
    CHECK(trace_distance(linear_inversion(records), state) < 1e-9);
  }
}

TEST_CASE("twelve settings are not informationally complete") {
  std::mt19937_64 engine(10);
  const auto records = expected_counts(testing::random_state(engine), all(), 1000);
  std::vector<CountRecord> partial(records.begin(), records.begin() + 12);
  CHECK_THROWS_AS(linear_inversion(partial), SingularMapError);
}

TEST_CASE("simulated counts are binomial and reproducible") {
  const auto state = build_state(0.3);
  const std::uint64_t n = 200000;
  const auto a = simulate_counts(state, all(), n, 77);
  const auto b = simulate_counts(state, all(), n, 77);
  const auto c = simulate_counts(state, all(), n, 78);
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].counts == b[k].counts);
    differs = differs || a[k].counts != c[k].counts;
    const double p = state.expectation(settings[k].projector());
    const double sd = std::sqrt(n * p * (1 - p)) + 1e-9;
    CHECK(std::abs(double(a[k].counts) - n * p) <= 5 * sd + 1);
  }
  CHECK(differs);
}

TEST_CASE("maximum likelihood on a Bell state") {
  const auto bell = build_state(0.5);
  const auto mle = mle_reconstruct(expected_counts(bell, all(), 100'000'000));
  CHECK(concurrence(mle.state) == Approx(1.0).epsilon(1e-6));
  CHECK(mle.state.is_physical());
}

TEST_CASE("maximum likelihood recovers a partially coherent state") {
  const auto mle = mle_reconstruct(simulate_counts(build_state(0.25), all(), 1'000'000, 3));
  CHECK(std::abs(concurrence(mle.state) - 0.5) <= 0.02);
}

TEST_CASE("maximum likelihood on white noise") {
  const auto mle = mle_reconstruct(expected_counts(TwoQubitState<double>::maximally_mixed(), all(), 1'000'000));
  CHECK(concurrence(mle.state) == Approx(0.0).epsilon(1e-6));
  CHECK(purity(mle.state) == Approx(0.25).epsilon(1e-6));
}

TEST_CASE("log-likelihood never decreases and improves on the start") {
  std::mt19937_64 engine(12);
  const auto records = simulate_counts(testing::random_state(engine), all(), 5000, 4);
  const auto mle = mle_reconstruct(records);
  REQUIRE(mle.log_likelihood_history.size() >= 2);
  for (std::size_t i = 1; i < mle.log_likelihood_history.size(); ++i)
    CHECK(mle.log_likelihood_history[i] >= mle.log_likelihood_history[i - 1] - 1e-15);
  CHECK(mle.converged);
  CHECK(mle.log_likelihood == Approx(log_likelihood(mle.state, records)).epsilon(1e-12));
  CHECK(mle.state.is_physical());
}

TEST_CASE("MLE stays physical where linear inversion does not") {
  // Few counts on a pure state push the linear estimate outside the state space.
  const auto records = simulate_counts(build_state(0.5), all(), 50, 19);
  const auto linear = linear_inversion(records);
  const auto mle = mle_reconstruct(records);
  CHECK_FALSE(linear.is_physical());
  CHECK(mle.state.is_physical());
  CHECK(mle.log_likelihood >= log_likelihood(TwoQubitState<double>::maximally_mixed(), records));
}

TEST_CASE("count CSV round trip") {
  const auto records = simulate_counts(build_state(0.4), all(), 1234, 5);
  std::stringstream io;
  write_counts_csv(io, records);
  const auto back = read_counts_csv(io);
  REQUIRE(back.size() == records.size());
  for (std::size_t k = 0; k < records.size(); ++k) {
    CHECK(back[k].setting.id == records[k].setting.id);
    CHECK(back[k].counts == records[k].counts);
    CHECK(back[k].integration == records[k].integration);
    CHECK(back[k].setting.a.orientation == records[k].setting.a.orientation);
    CHECK(back[k].setting.b.ellipticity == records[k].setting.b.ellipticity);
  }
  std::istringstream bad("setting_id,projector_angles,counts,integration\n0,1;2,3,4\n");
  CHECK_THROWS(read_counts_csv(bad));
}
