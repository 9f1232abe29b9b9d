#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "biphoton/polarization.hpp"

namespace biphoton {

// Post-selected polarization state of the pair: 4x4 Hermitian, unit trace,
// positive semidefinite, basis (HH, HV, VH, VV).
template <typename Scalar = double>
class TwoQubitState {
 public:
  using Matrix = Matrix4c<Scalar>;

  static constexpr Scalar hermiticity_tolerance = Scalar(1e-12);
  static constexpr Scalar trace_tolerance = Scalar(1e-12);
  static constexpr Scalar eigenvalue_floor = Scalar(-1e-10);

  // Validates and clamps eigenvalues in [-1e-10, 0) to zero.
  explicit TwoQubitState(const Matrix& rho) : rho_(rho) {
    check_hermitian_unit_trace(rho_);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(rho_));
    const auto& values = solver.eigenvalues();
    if (values.minCoeff() < eigenvalue_floor)
      throw std::invalid_argument("density matrix has a negative eigenvalue " +
                                  std::to_string(double(values.minCoeff())));
    if (values.minCoeff() < 0) {
      const auto clamped = values.cwiseMax(Scalar(0));
      rho_ = solver.eigenvectors() * clamped.template cast<Complex<Scalar>>().asDiagonal() *
             solver.eigenvectors().adjoint();
      rho_ /= rho_.trace().real();
    }
    rho_ = hermitian_part(rho_);
  }

  // Hermitian, unit-trace matrix that may have negative eigenvalues, such as a
  // linear-inversion tomography estimate.
  static TwoQubitState unchecked(const Matrix& rho) {
    check_hermitian_unit_trace(rho);
    TwoQubitState state;
    state.rho_ = hermitian_part(rho);
    return state;
  }

  static TwoQubitState pure(const Vector4c<Scalar>& psi) {
    const Vector4c<Scalar> v = psi / psi.norm();
    return TwoQubitState(v * v.adjoint());
  }

  static TwoQubitState maximally_mixed() {
    return TwoQubitState(Matrix::Identity() / Scalar(4));
  }

  const Matrix& matrix() const { return rho_; }
  Complex<Scalar> operator()(TwoQubitBasis row, TwoQubitBasis col) const {
    return rho_(static_cast<int>(row), static_cast<int>(col));
  }

  Eigen::Matrix<Scalar, 4, 1> eigenvalues() const {
    return Eigen::SelfAdjointEigenSolver<Matrix>(rho_, Eigen::EigenvaluesOnly).eigenvalues();
  }
  bool is_physical() const { return eigenvalues().minCoeff() >= eigenvalue_floor; }

  TwoQubitState transformed(const Matrix& unitary) const {
    return TwoQubitState(unitary * rho_ * unitary.adjoint());
  }

  Scalar expectation(const Matrix& observable) const {
    return (rho_ * observable).trace().real();
  }

 private:
  TwoQubitState() = default;

  static Matrix hermitian_part(const Matrix& m) { return (m + m.adjoint()) / Scalar(2); }

  static void check_hermitian_unit_trace(const Matrix& rho) {
    if (!rho.allFinite()) throw std::invalid_argument("density matrix has non-finite entries");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > hermiticity_tolerance)
      throw std::invalid_argument("density matrix is not Hermitian");
    if (std::abs(rho.trace() - Complex<Scalar>(1)) > trace_tolerance)
      throw std::invalid_argument("density matrix trace is not 1");
  }

  Matrix rho_ = Matrix::Identity() / Scalar(4);
};

// Accidentals specified by rates. accidental_rate is the uncorrelated
// coincidence rate per ns of full window width (r1 * r2 for independent
// Poisson singles, 1/ns^2); pair_rate is the true pair rate (1/ns).
template <typename Scalar = double>
struct AccidentalRates {
  Scalar accidental_rate = Scalar(0);
  Scalar pair_rate = Scalar(1);
};

template <typename Scalar = double>
struct ImperfectionModel {
  // Either a fixed accidental fraction epsilon in [0, 1) or rates from which
  // epsilon(W) = r_acc 2W / (r_acc 2W + pair_rate F(W)) is computed.
  std::variant<Scalar, AccidentalRates<Scalar>> accidentals = Scalar(0);
  // Beamsplitter transmissivity t^2 (r^2 = 1 - t^2).
  Scalar split_ratio = Scalar(0.5);
  // Analyzer orientation offsets per arm (rad). They act on the measurement
  // settings, never on the state.
  std::array<Scalar, 2> basis_error{Scalar(0), Scalar(0)};

  static ImperfectionModel ideal() { return {}; }

  void validate() const {
    if (const auto* eps = std::get_if<Scalar>(&accidentals)) {
      if (!(*eps >= 0 && *eps < 1))
        throw std::invalid_argument("accidental fraction must lie in [0, 1)");
    } else {
      const auto& rates = std::get<AccidentalRates<Scalar>>(accidentals);
      if (!(rates.accidental_rate >= 0) || !(rates.pair_rate > 0))
        throw std::invalid_argument("accidental rate must be >= 0 and pair rate > 0");
    }
    if (!(split_ratio > 0 && split_ratio < 1))
      throw std::invalid_argument("split ratio must lie in (0, 1)");
    if (!std::isfinite(basis_error[0]) || !std::isfinite(basis_error[1]))
      throw std::invalid_argument("basis errors must be finite");
  }

  // epsilon(W); true_fraction = F(W), the relative rate of true coincidences in the window.
  Scalar accidental_fraction(Scalar window, Scalar true_fraction) const {
    if (const auto* eps = std::get_if<Scalar>(&accidentals)) return *eps;
    const auto& rates = std::get<AccidentalRates<Scalar>>(accidentals);
    const Scalar accidental = rates.accidental_rate * 2 * window;
    if (accidental == Scalar(0)) return Scalar(0);
    return accidental / (accidental + rates.pair_rate * true_fraction);
  }
};

// Imperfections resolved at one coincidence window.
template <typename Scalar = double>
struct StateImperfections {
  Scalar accidental_fraction = Scalar(0);
  Scalar split_ratio = Scalar(0.5);
};

// Post-selected state with coherence zeta between HV and VH.
//
// Ideal: diag(0, 1/2, 1/2, 0) with rho(HV,VH) = zeta. A split ratio t^2 weights
// the exit-port amplitudes by t^2 (HV) and r^2 (VH), giving populations
// (t^4, r^4)/(t^4 + r^4) and coherence 2 zeta t^2 r^2/(t^4 + r^4) (which is zeta
// at t^2 = 1/2). Accidentals then mix in white noise: (1 - eps) rho + eps I/4.
template <typename Scalar>
TwoQubitState<Scalar> build_state(Complex<Scalar> zeta,
                                  const StateImperfections<Scalar>& imperfections = {}) {
  if (std::abs(zeta) > Scalar(0.5) + Scalar(1e-12))
    throw std::invalid_argument("coherence magnitude exceeds 1/2");
  const Scalar eps = imperfections.accidental_fraction;
  const Scalar t2 = imperfections.split_ratio;
  if (!(eps >= 0 && eps < 1)) throw std::invalid_argument("accidental fraction must lie in [0, 1)");
  if (!(t2 > 0 && t2 < 1)) throw std::invalid_argument("split ratio must lie in (0, 1)");
  const Scalar r2 = 1 - t2;
  const Scalar norm = t2 * t2 + r2 * r2;

  using C = Complex<Scalar>;
  Matrix4c<Scalar> rho = Matrix4c<Scalar>::Zero();
  rho(1, 1) = C(t2 * t2 / norm);
  rho(2, 2) = C(r2 * r2 / norm);
  rho(1, 2) = zeta * (2 * t2 * r2 / norm);
  rho(2, 1) = std::conj(rho(1, 2));
  rho = (1 - eps) * rho + (eps / 4) * Matrix4c<Scalar>::Identity();
  return TwoQubitState<Scalar>(rho);
}

template <typename Scalar>
TwoQubitState<Scalar> build_state(Scalar zeta, const StateImperfections<Scalar>& imperfections = {}) {
  return build_state(Complex<Scalar>(zeta), imperfections);
}

// Wootters concurrence. The eigenvalues of rho (sy x sy) rho* (sy x sy) are
// taken from the Hermitian similar matrix sqrt(rho) rho~ sqrt(rho).
template <typename Scalar>
Scalar concurrence(const TwoQubitState<Scalar>& state) {
  using Matrix = Matrix4c<Scalar>;
  const Matrix flip = kron(pauli<Scalar>(2), pauli<Scalar>(2));
  const Matrix& rho = state.matrix();
  const Matrix tilde = flip * rho.conjugate() * flip;

  Eigen::SelfAdjointEigenSolver<Matrix> rho_solver(rho);
  const auto root_values =
      rho_solver.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt().template cast<Complex<Scalar>>();
  const Matrix root = rho_solver.eigenvectors() * root_values.asDiagonal() *
                      rho_solver.eigenvectors().adjoint();
  const Matrix r = root * tilde * root;
  Eigen::Matrix<Scalar, 4, 1> lambda =
      Eigen::SelfAdjointEigenSolver<Matrix>((r + r.adjoint()) / Scalar(2), Eigen::EigenvaluesOnly)
          .eigenvalues()
          .cwiseMax(Scalar(0))
          .cwiseSqrt();
  std::sort(lambda.data(), lambda.data() + 4, std::greater<Scalar>());
  return std::max(Scalar(0), lambda(0) - lambda(1) - lambda(2) - lambda(3));
}

template <typename Scalar>
Scalar purity(const TwoQubitState<Scalar>& state) {
  return state.matrix().squaredNorm();
}

// Correlation <A (x) B> of two dichotomic analyzers.
template <typename Scalar>
Scalar correlation(const TwoQubitState<Scalar>& state, const Analyzer<Scalar>& a,
                   const Analyzer<Scalar>& b) {
  return state.expectation(kron(a.observable(), b.observable()));
}

template <typename Scalar = double>
struct ChshAngles {
  Scalar a = Scalar(0);
  Scalar a_prime = std::numbers::pi_v<Scalar> / 4;
  Scalar b = -std::numbers::pi_v<Scalar> / 8;
  Scalar b_prime = std::numbers::pi_v<Scalar> / 8;

  // The four settings in the order (a,b), (a,b'), (a',b), (a',b').
  std::array<std::array<Scalar, 2>, 4> settings() const {
    return {{{a, b}, {a, b_prime}, {a_prime, b}, {a_prime, b_prime}}};
  }
};

// S = E(a,b) + E(a,b') + E(a',b) - E(a',b') with linear polarizers; offsets
// rotate each arm's analyzer (basis errors). Signed: the canonical angles give
// S = -sqrt2 (1 + 2 zeta) for the ideal post-selected family.
template <typename Scalar>
Scalar chsh_fixed(const TwoQubitState<Scalar>& state, const ChshAngles<Scalar>& angles = {},
                  const std::array<Scalar, 2>& offsets = {Scalar(0), Scalar(0)}) {
  Scalar s = 0;
  int index = 0;
  for (const auto& [alpha, beta] : angles.settings()) {
    const Scalar e = correlation(state, Analyzer<Scalar>::linear(alpha + offsets[0]),
                                 Analyzer<Scalar>::linear(beta + offsets[1]));
    s += index == 3 ? -e : e;
    ++index;
  }
  return s;
}

// T_ij = Tr[rho sigma_i (x) sigma_j], i, j in {x, y, z}.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> correlation_tensor(const TwoQubitState<Scalar>& state) {
  Eigen::Matrix<Scalar, 3, 3> t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      t(i, j) = state.expectation(kron(pauli<Scalar>(i + 1), pauli<Scalar>(j + 1)));
  return t;
}

// Maximal CHSH value over all analyzer settings: 2 sqrt(m1 + m2), m1 >= m2 the
// two largest eigenvalues of T^T T.
template <typename Scalar>
Scalar chsh_optimal(const TwoQubitState<Scalar>& state) {
  const auto t = correlation_tensor(state);
  Eigen::Matrix<Scalar, 3, 1> m =
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, 3, 3>>(t.transpose() * t,
                                                                  Eigen::EigenvaluesOnly)
          .eigenvalues();
  return 2 * std::sqrt(std::max(Scalar(0), m(2) + m(1)));
}

template <typename Scalar>
Scalar trace_distance(const TwoQubitState<Scalar>& a, const TwoQubitState<Scalar>& b) {
  const Matrix4c<Scalar> diff = a.matrix() - b.matrix();
  return Eigen::SelfAdjointEigenSolver<Matrix4c<Scalar>>((diff + diff.adjoint()) / Scalar(2),
                                                          Eigen::EigenvaluesOnly)
             .eigenvalues()
             .cwiseAbs()
             .sum() /
         2;
}

}  // namespace biphoton
