#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "biphoton/entanglement.hpp"
#include "biphoton/polarization.hpp"

namespace biphoton {

// Two-qubit projective setting Pi_a (x) Pi_b.
struct MeasurementSetting {
  int id = 0;
  Analyzer<double> a;
  Analyzer<double> b;

  Matrix4c<double> projector() const { return kron(a.projector(), b.projector()); }
};

// Coincidences passing both analyzers out of `integration` detected pairs.
struct CountRecord {
  MeasurementSetting setting;
  std::uint64_t counts = 0;
  std::uint64_t integration = 0;
};

// {H, V, D, R} x {H, V, D, R}; id = 4 * index_a + index_b.
std::vector<MeasurementSetting> standard_settings();

// Real 16 x 16 map from Pauli coefficients r_ij (rho = sum r_ij s_i (x) s_j / 4)
// to the pass probabilities of each setting.
Eigen::MatrixXd measurement_map(std::span<const MeasurementSetting> settings);

// Binomial counts with success probability Tr[rho Pi], deterministic per seed.
std::vector<CountRecord> simulate_counts(const TwoQubitState<double>& state,
                                         std::span<const MeasurementSetting> settings,
                                         std::uint64_t pairs_per_setting, std::uint64_t seed);

// Exact expected frequencies written as counts out of `integration` (no noise).
std::vector<CountRecord> expected_counts(const TwoQubitState<double>& state,
                                         std::span<const MeasurementSetting> settings,
                                         std::uint64_t integration);

// Least-squares inverse of the measurement map; Hermitian and trace one, but
// possibly with negative eigenvalues. Throws SingularMapError below full rank.
TwoQubitState<double> linear_inversion(std::span<const CountRecord> records);

struct MleOptions {
  double tolerance = 1e-10;  // on the per-trial log-likelihood improvement
  int max_iterations = 10'000;
};

struct MleResult {
  TwoQubitState<double> state;
  int iterations = 0;
  bool converged = false;
  double log_likelihood = 0;                   // per trial
  std::vector<double> log_likelihood_history;  // one entry per accepted iterate
};

// Maximum-likelihood state under independent binomial likelihoods, with the
// positivity-enforcing factorization rho = G^dag G / Tr[G^dag G] and gradient
// ascent G <- G (I + eta K), K = R - Tr[R rho] I, backtracking on eta.
MleResult mle_reconstruct(std::span<const CountRecord> records, const MleOptions& options = {});

// Per-trial binomial log-likelihood of a state.
double log_likelihood(const TwoQubitState<double>& state, std::span<const CountRecord> records);

// CSV columns: setting_id,projector_angles,counts,integration where
// projector_angles = "theta_a;chi_a;theta_b;chi_b" (orientation and ellipticity, rad).
void write_counts_csv(std::ostream& out, std::span<const CountRecord> records);
std::vector<CountRecord> read_counts_csv(std::istream& in);

}  // namespace biphoton
