#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "biphoton/errors.hpp"

namespace biphoton {

template <typename Scalar = double>
struct QuadratureOptions {
  Scalar rel_tol = Scalar(1e-9);
  Scalar abs_tol = Scalar(0);
  int max_depth = 40;
  std::size_t max_evaluations = 400'000'000;
};

// Neumaier summation. The complex overload compensates each component.
template <typename T>
class CompensatedSum {
 public:
  void add(T x) {
    const T t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      carry_ += (sum_ - t) + x;
    else
      carry_ += (x - t) + sum_;
    sum_ = t;
  }
  T value() const { return sum_ + carry_; }

 private:
  T sum_{};
  T carry_{};
};

template <typename Scalar>
class CompensatedSum<std::complex<Scalar>> {
 public:
  void add(std::complex<Scalar> x) {
    re_.add(x.real());
    im_.add(x.imag());
  }
  std::complex<Scalar> value() const { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum<Scalar> re_;
  CompensatedSum<Scalar> im_;
};

namespace detail {

template <typename Scalar>
struct GaussKronrod15 {
  static constexpr std::array<Scalar, 8> nodes{
      Scalar(0.991455371120812639206854697526329L), Scalar(0.949107912342758524526189684047851L),
      Scalar(0.864864423359769072789712788640926L), Scalar(0.741531185599394439863864773280788L),
      Scalar(0.586087235467691130294144845693013L), Scalar(0.405845151377397166906606412076961L),
      Scalar(0.207784955007898467600689403773245L), Scalar(0)};
  static constexpr std::array<Scalar, 8> kronrod_weights{
      Scalar(0.022935322010529224963732008058970L), Scalar(0.063092092629978553290700663189204L),
      Scalar(0.104790010322250183839876322541518L), Scalar(0.140653259715525918745189590510238L),
      Scalar(0.169004726639267902826583426598550L), Scalar(0.190350578064785409913256402421014L),
      Scalar(0.204432940075298892414161999234649L), Scalar(0.209482141084727828012999174891714L)};
  // Gauss-7 weights on nodes[1], nodes[3], nodes[5], nodes[7].
  static constexpr std::array<Scalar, 4> gauss_weights{
      Scalar(0.129484966168869693270611432679082L), Scalar(0.279705391489276667901467771423780L),
      Scalar(0.381830050505118944950369775488975L), Scalar(0.417959183673469387755102040816327L)};
};

template <typename R, typename Scalar>
struct PanelEstimate {
  R value;
  Scalar error;
  Scalar magnitude;  // Kronrod estimate of the integral of |f|
};

template <typename Scalar, typename F>
auto gauss_kronrod15(F& f, Scalar a, Scalar b) {
  using R = std::decay_t<decltype(f(a))>;
  using Rule = GaussKronrod15<Scalar>;
  const Scalar center = (a + b) / 2;
  const Scalar half = (b - a) / 2;

  const R fc = f(center);
  R kronrod = fc * Rule::kronrod_weights[7];
  R gauss = fc * Rule::gauss_weights[3];
  Scalar magnitude = std::abs(fc) * Rule::kronrod_weights[7];
  for (int j = 0; j < 7; ++j) {
    const Scalar dx = half * Rule::nodes[j];
    const R f1 = f(center - dx);
    const R f2 = f(center + dx);
    kronrod += (f1 + f2) * Rule::kronrod_weights[j];
    magnitude += (std::abs(f1) + std::abs(f2)) * Rule::kronrod_weights[j];
    if (j % 2 == 1) gauss += (f1 + f2) * Rule::gauss_weights[j / 2];
  }
  return PanelEstimate<R, Scalar>{kronrod * half, std::abs((kronrod - gauss) * half),
                                  magnitude * std::abs(half)};
}

template <typename Scalar, typename F, typename R>
void integrate_recursive(F& f, Scalar a, Scalar b, const PanelEstimate<R, Scalar>& estimate,
                         int depth, Scalar density, const QuadratureOptions<Scalar>& options,
                         std::size_t& evaluations, CompensatedSum<R>& sum) {
  const Scalar share = std::max(estimate.magnitude, density * (b - a));
  const Scalar tolerance = std::max(options.abs_tol, options.rel_tol * share);
  if (estimate.error <= tolerance || estimate.magnitude == Scalar(0)) {
    sum.add(estimate.value);
    return;
  }
  if (depth >= options.max_depth || evaluations > options.max_evaluations)
    throw QuadratureError("adaptive quadrature did not reach relative tolerance on [" +
                          std::to_string(double(a)) + ", " + std::to_string(double(b)) + "]");
  const Scalar mid = (a + b) / 2;
  const auto left = gauss_kronrod15(f, a, mid);
  const auto right = gauss_kronrod15(f, mid, b);
  evaluations += 30;
  integrate_recursive(f, a, mid, left, depth + 1, density, options, evaluations, sum);
  integrate_recursive(f, mid, b, right, depth + 1, density, options, evaluations, sum);
}

}  // namespace detail

// Adaptive Gauss-Kronrod (7/15) over consecutive panels [p0,p1], [p1,p2], ...
// A panel is bisected until |K15 - G7| <= max(abs_tol, rel_tol * s), where s is
// the larger of the panel's own int|f| and its width share of the total int|f|.
// The summed error bound is therefore at most 2 rel_tol int|f|, and panels in
// negligible tails are not refined to their own relative precision.
// Panel sums are accumulated with compensation, so callers can cut an
// oscillatory integrand at its half periods without losing the cancellation.
template <typename Scalar, typename F>
auto integrate_panels(F&& f, std::span<const Scalar> breakpoints,
                      const QuadratureOptions<Scalar>& options = {}) {
  using R = std::decay_t<decltype(f(breakpoints[0]))>;
  std::vector<detail::PanelEstimate<R, Scalar>> estimates;
  estimates.reserve(breakpoints.size());
  CompensatedSum<Scalar> magnitude;
  Scalar length = 0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const Scalar a = breakpoints[i];
    const Scalar b = breakpoints[i + 1];
    if (!(b > a)) {
      estimates.push_back({R{}, Scalar(0), Scalar(0)});
      continue;
    }
    estimates.push_back(detail::gauss_kronrod15(f, a, b));
    magnitude.add(estimates.back().magnitude);
    length += b - a;
  }
  const Scalar density = length > 0 ? magnitude.value() / length : Scalar(0);

  CompensatedSum<R> sum;
  std::size_t evaluations = 15 * estimates.size();
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const Scalar a = breakpoints[i];
    const Scalar b = breakpoints[i + 1];
    if (!(b > a)) continue;
    detail::integrate_recursive(f, a, b, estimates[i], 0, density, options, evaluations, sum);
  }
  return sum.value();
}

template <typename Scalar, typename F>
auto integrate(F&& f, Scalar a, Scalar b, const QuadratureOptions<Scalar>& options = {}) {
  const std::array<Scalar, 2> ends{a, b};
  return integrate_panels(std::forward<F>(f), std::span<const Scalar>(ends), options);
}

}  // namespace biphoton
