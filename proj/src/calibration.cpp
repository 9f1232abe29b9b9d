#include "biphoton/calibration.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "biphoton/errors.hpp"
#include "biphoton/interference.hpp"
#include "biphoton/units.hpp"

namespace biphoton {

void CalibrationTargets::validate() const {
  if (!(concurrence >= 0 && concurrence <= 1))
    throw std::invalid_argument("target concurrence must lie in [0, 1]");
  if (!(purity >= 0.25 && purity <= 1)) throw std::invalid_argument("target purity must lie in [1/4, 1]");
  if (nondegenerate_purity && !(*nondegenerate_purity >= 0.25 && *nondegenerate_purity <= 1))
    throw std::invalid_argument("target nondegenerate purity must lie in [1/4, 1]");
  if (!(nondegenerate_delta_f_mhz > 0)) throw std::invalid_argument("nondegenerate detuning must be positive");
  if (!(reference_window > 0)) throw std::invalid_argument("reference window must be positive");
  if (!(concurrence_tolerance > 0 && purity_tolerance > 0 && nondegenerate_purity_tolerance > 0))
    throw std::invalid_argument("calibration tolerances must be positive");
}

StateSummary predict(const BiphotonWavepacket<double>& wavepacket,
                     const ModulationSpec<double>& modulation, double window,
                     const ImperfectionModel<double>& imperfections) {
  const auto state = post_selected_state(wavepacket, modulation, window, imperfections);
  return {concurrence(state), purity(state)};
}

namespace {

// x = (a, b): eps = a^2 / (1 + a^2), t^2 = 1/2 + b^2 / (2 (1 + b^2)).
double fraction_from(double a) { return a * a / (1 + a * a); }
double split_from(double b) { return 0.5 + 0.5 * b * b / (1 + b * b); }
double parameter_for_fraction(double eps) { return std::sqrt(eps / (1 - eps)); }

struct ForwardModel {
  std::complex<double> zeta_degenerate;
  std::optional<std::complex<double>> zeta_nondegenerate;

  StateSummary evaluate(std::complex<double> zeta, double eps, double t2) const {
    const auto state = build_state(zeta, StateImperfections<double>{eps, t2});
    return {concurrence(state), purity(state)};
  }
};

struct Residuals {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const ForwardModel* model = nullptr;
  const CalibrationTargets* targets = nullptr;
  int* evaluations = nullptr;

  int inputs() const { return 2; }
  int values() const { return targets->nondegenerate_purity ? 3 : 2; }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    ++*evaluations;
    const double eps = fraction_from(x(0));
    const double t2 = split_from(x(1));
    const auto degenerate = model->evaluate(model->zeta_degenerate, eps, t2);
    f(0) = (degenerate.concurrence - targets->concurrence) / targets->concurrence_tolerance;
    f(1) = (degenerate.purity - targets->purity) / targets->purity_tolerance;
    if (targets->nondegenerate_purity) {
      const auto other = model->evaluate(*model->zeta_nondegenerate, eps, t2);
      f(2) = (other.purity - *targets->nondegenerate_purity) /
             targets->nondegenerate_purity_tolerance;
    }
    return 0;
  }
};

}  // namespace

CalibrationResult fit_imperfections(const CalibrationTargets& targets,
                                    const BiphotonWavepacket<double>& wavepacket) {
  targets.validate();
  const double window = targets.reference_window;
  const auto none = ModulationSpec<double>::none();
  const auto degenerate_wp = wavepacket.with_delta_omega(0);
  const auto detuned_wp =
      wavepacket.with_delta_omega(angular_from_mhz(targets.nondegenerate_delta_f_mhz));

  ForwardModel model{coherence(degenerate_wp, none, window), std::nullopt};
  if (targets.nondegenerate_purity) model.zeta_nondegenerate = coherence(detuned_wp, none, window);

  int evaluations = 0;
  Residuals residuals;
  residuals.model = &model;
  residuals.targets = &targets;
  residuals.evaluations = &evaluations;

  Eigen::VectorXd best;
  double best_norm = std::numeric_limits<double>::infinity();
  for (double eps0 : {0.02, 0.1, 0.3})
    for (double b0 : {0.0, 0.3, 1.0}) {
      Eigen::VectorXd x(2);
      x << parameter_for_fraction(eps0), b0;
      Eigen::NumericalDiff<Residuals> numeric(residuals);
      Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Residuals>> solver(numeric);
      solver.parameters.maxfev = 2000;
      solver.parameters.xtol = 1e-14;
      solver.parameters.ftol = 1e-14;
      solver.minimize(x);
      Eigen::VectorXd f(residuals.values());
      residuals(x, f);
      if (f.norm() < best_norm) {
        best_norm = f.norm();
        best = x;
      }
    }

  // Boundary solutions (no accidentals, balanced splitter) are reached only
  // asymptotically by the parametrization; take them when they fit as well.
  for (int snap = 1; snap <= 3; ++snap) {
    Eigen::VectorXd x = best;
    if (snap & 1) x(0) = 0;
    if (snap & 2) x(1) = 0;
    Eigen::VectorXd f(residuals.values());
    residuals(x, f);
    if (f.norm() <= best_norm) {
      best_norm = f.norm();
      best = x;
    }
  }

  const double eps = fraction_from(best(0));
  const double t2 = split_from(best(1));
  CalibrationResult result;
  result.accidental_fraction = eps;
  result.degenerate = model.evaluate(model.zeta_degenerate, eps, t2);
  if (model.zeta_nondegenerate)
    result.nondegenerate = model.evaluate(*model.zeta_nondegenerate, eps, t2);
  result.evaluations = evaluations;

  const double pair_fraction = windowed_pair_fraction(degenerate_wp, none, window);
  result.model.accidentals =
      AccidentalRates<double>{eps * pair_fraction / (2 * window * (1 - eps)), 1.0};
  result.model.split_ratio = t2;
  result.model.basis_error = targets.basis_error;

  std::ostringstream miss;
  if (std::abs(result.degenerate.concurrence - targets.concurrence) > targets.concurrence_tolerance)
    miss << " concurrence " << result.degenerate.concurrence << " (target " << targets.concurrence << ")";
  if (std::abs(result.degenerate.purity - targets.purity) > targets.purity_tolerance)
    miss << " purity " << result.degenerate.purity << " (target " << targets.purity << ")";
  if (targets.nondegenerate_purity &&
      std::abs(result.nondegenerate->purity - *targets.nondegenerate_purity) >
          targets.nondegenerate_purity_tolerance)
    miss << " nondegenerate purity " << result.nondegenerate->purity << " (target "
         << *targets.nondegenerate_purity << ")";
  if (!miss.str().empty())
    throw InfeasibleTargetsError("no imperfection parameters reproduce the targets; best fit gives" +
                                 miss.str());
  return result;
}

}  // namespace biphoton
