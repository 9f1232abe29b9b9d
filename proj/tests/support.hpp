#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "biphoton/entanglement.hpp"
#include "biphoton/tomography.hpp"

namespace testing {

using biphoton::Matrix4c;
using biphoton::TwoQubitState;

// Full-rank random state rho = G G^dag / Tr from a complex Ginibre matrix.
inline TwoQubitState<double> random_state(std::mt19937_64& engine) {
  std::normal_distribution<double> normal;
  Matrix4c<double> g;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = {normal(engine), normal(engine)};
  Matrix4c<double> rho = g * g.adjoint();
  rho /= rho.trace().real();
  return TwoQubitState<double>((rho + rho.adjoint()) / 2.0);
}

inline Matrix4c<double> random_local_unitary(std::mt19937_64& engine) {
  std::normal_distribution<double> normal;
  auto draw = [&] { return normal(engine); };
  return biphoton::kron(biphoton::random_unitary2<double>(draw), biphoton::random_unitary2<double>(draw));
}

// Integral of f over [a, b] split into panels of at most `step`, each by
// 61-point Gauss-Kronrod.
inline double panel_integral(const std::function<double(double)>& f, double a, double b, double step) {
  double total = 0;
  const int panels = std::max(1, int(std::ceil((b - a) / step)));
  for (int i = 0; i < panels; ++i) {
    const double lo = a + (b - a) * i / panels;
    const double hi = a + (b - a) * (i + 1) / panels;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-13);
  }
  return total;
}

// Integral of f over consecutive panels [p0, p1], [p1, p2], ... by 61-point
// Gauss-Kronrod.
inline double panel_integral(const std::function<double(double)>& f, const std::vector<double>& points) {
  double total = 0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i)
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, points[i], points[i + 1], 15, 1e-13);
  return total;
}

// Coherence of a symmetric biphoton (tau0) under envelope m at frequency
// difference dw, on [-window, window]; kinks of m must fall on multiples of
// `step`.
inline double oracle_zeta(double tau0, double dw, const std::function<double(double)>& m,
                          double window, double step) {
  const double reach = std::min(window, 60 * tau0);
  const auto num = [&](double t) { return m(t) * std::exp(-std::abs(t) / tau0) * std::cos(dw * t); };
  const auto den = [&](double t) { return 2 * m(t) * std::exp(-std::abs(t) / tau0); };
  return panel_integral(num, -reach, reach, step) / panel_integral(den, -reach, reach, step);
}

// Sinc^2 comb coherence by expanding |sum_n e^{i n x}|^2 into all s^2 cross
// terms, each a Lorentzian.
inline double oracle_zeta_sinc2_double_sum(double theta, int s) {
  double num = 0, den = 0;
  for (int n = 1; n <= s; ++n)
    for (int m = 1; m <= s; ++m) {
      const double k = n - m;
      num += 1 / (1 + (k - 1) * (k - 1) * theta * theta);
      den += 1 / (1 + k * k * theta * theta);
    }
  return num / (2 * den);
}

// Pearson chi-square goodness of fit over bins with expected >= 5.
inline double chi_square_p_value(const std::vector<double>& observed, const std::vector<double>& expected,
                                 int constraints = 1) {
  double stat = 0;
  int bins = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] < 5) continue;
    stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    ++bins;
  }
  boost::math::chi_squared dist(bins - constraints);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Two-sample chi-square homogeneity test on binned counts.
inline double two_sample_p_value(const std::vector<double>& a, const std::vector<double>& b) {
  double na = 0, nb = 0;
  for (double x : a) na += x;
  for (double x : b) nb += x;
  const double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
  double stat = 0;
  int bins = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] + b[i] < 10) continue;
    const double d = ka * a[i] - kb * b[i];
    stat += d * d / (a[i] + b[i]);
    ++bins;
  }
  boost::math::chi_squared dist(bins - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Sampling spread of the MLE concurrence when counts are drawn from `state`
// with the integrations of `records`: the statistical error of a tomography
// estimate under the hypothesis that the data came from `state`.
inline double model_concurrence_sigma(const TwoQubitState<double>& state,
                                      const std::vector<biphoton::CountRecord>& records, int resamples,
                                      std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::vector<double> values;
  for (int r = 0; r < resamples; ++r) {
    auto drawn = records;
    for (auto& rec : drawn) {
      const double p = std::clamp(state.expectation(rec.setting.projector()), 0.0, 1.0);
      std::binomial_distribution<std::uint64_t> draw(rec.integration, p);
      rec.counts = draw(engine);
    }
    values.push_back(biphoton::concurrence(biphoton::mle_reconstruct(drawn).state));
  }
  double mean = 0;
  for (double v : values) mean += v;
  mean /= values.size();
  double var = 0;
  for (double v : values) var += (v - mean) * (v - mean);
  return std::sqrt(var / (values.size() - 1));
}

}  // namespace testing
