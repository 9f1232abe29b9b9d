#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

// Single- and two-qubit polarization algebra in the {H, V} basis. Two-qubit
// operators use the basis order (HH, HV, VH, VV), arm 1 first.
namespace biphoton {

template <typename Scalar>
using Complex = std::complex<Scalar>;
template <typename Scalar>
using Matrix2c = Eigen::Matrix<Complex<Scalar>, 2, 2>;
template <typename Scalar>
using Vector2c = Eigen::Matrix<Complex<Scalar>, 2, 1>;
template <typename Scalar>
using Matrix4c = Eigen::Matrix<Complex<Scalar>, 4, 4>;
template <typename Scalar>
using Vector4c = Eigen::Matrix<Complex<Scalar>, 4, 1>;

enum class TwoQubitBasis { HH = 0, HV = 1, VH = 2, VV = 3 };

template <typename Scalar = double>
Matrix2c<Scalar> pauli(int index) {
  using C = Complex<Scalar>;
  Matrix2c<Scalar> m;
  switch (index) {
    case 0: m << C(1), C(0), C(0), C(1); break;
    case 1: m << C(0), C(1), C(1), C(0); break;
    case 2: m << C(0), C(0, -1), C(0, 1), C(0); break;
    default: m << C(1), C(0), C(0), C(-1); break;
  }
  return m;
}

template <typename Derived1, typename Derived2>
auto kron(const Eigen::MatrixBase<Derived1>& a, const Eigen::MatrixBase<Derived2>& b) {
  using Scalar = typename Derived1::Scalar;
  Eigen::Matrix<Scalar, Derived1::RowsAtCompileTime * Derived2::RowsAtCompileTime,
                Derived1::ColsAtCompileTime * Derived2::ColsAtCompileTime>
      out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Polarization analyzer (waveplates + polarizer) passing the elliptical state
// with major-axis orientation `orientation` and ellipticity angle `ellipticity`
// (0 = linear, +pi/4 = right circular (|H> + i|V>)/sqrt2).
template <typename Scalar = double>
struct Analyzer {
  Scalar orientation = Scalar(0);
  Scalar ellipticity = Scalar(0);

  static Analyzer linear(Scalar angle) { return {angle, Scalar(0)}; }
  static Analyzer horizontal() { return linear(Scalar(0)); }
  static Analyzer vertical() { return linear(std::numbers::pi_v<Scalar> / 2); }
  static Analyzer diagonal() { return linear(std::numbers::pi_v<Scalar> / 4); }
  static Analyzer right_circular() { return {Scalar(0), std::numbers::pi_v<Scalar> / 4}; }

  // Pass state of the analyzer rotated by `delta` (e.g. a miscalibrated mount).
  Analyzer rotated(Scalar delta) const { return {orientation + delta, ellipticity}; }
  // Pass state orthogonal to this one (the "reject" port).
  Analyzer orthogonal() const {
    return {orientation + std::numbers::pi_v<Scalar> / 2, -ellipticity};
  }

  Vector2c<Scalar> jones() const {
    using C = Complex<Scalar>;
    const Scalar ct = std::cos(orientation), st = std::sin(orientation);
    const Scalar cc = std::cos(ellipticity), sc = std::sin(ellipticity);
    Vector2c<Scalar> v;
    v << C(ct * cc, -st * sc), C(st * cc, ct * sc);
    return v;
  }

  Matrix2c<Scalar> projector() const {
    const Vector2c<Scalar> v = jones();
    return v * v.adjoint();
  }

  // Dichotomic observable 2 P - I (+1 pass, -1 reject).
  Matrix2c<Scalar> observable() const {
    return Scalar(2) * projector() - Matrix2c<Scalar>::Identity();
  }
};

template <typename Scalar>
Vector4c<Scalar> bell_psi_plus() {
  Vector4c<Scalar> v = Vector4c<Scalar>::Zero();
  v(1) = v(2) = Complex<Scalar>(Scalar(1) / std::sqrt(Scalar(2)));
  return v;
}

// Random single-qubit unitary from a random unit quaternion; `normal` draws
// standard normal deviates.
template <typename Scalar, typename NormalDraw>
Matrix2c<Scalar> random_unitary2(NormalDraw&& normal) {
  using C = Complex<Scalar>;
  Scalar q[4];
  Scalar norm = 0;
  for (auto& x : q) {
    x = normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : q) x /= norm;
  Matrix2c<Scalar> u;
  u << C(q[0], q[1]), C(q[2], q[3]), C(-q[2], q[3]), C(q[0], -q[1]);
  return u;
}

}  // namespace biphoton
