#include "biphoton/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "biphoton/errors.hpp"
#include "biphoton/random.hpp"

namespace biphoton {

namespace {

using Matrix4 = Matrix4c<double>;

std::vector<Analyzer<double>> tomography_analyzers() {
  return {Analyzer<double>::horizontal(), Analyzer<double>::vertical(),
          Analyzer<double>::diagonal(), Analyzer<double>::right_circular()};
}

Matrix4 pauli_product(int index) { return kron(pauli<double>(index / 4), pauli<double>(index % 4)); }

double pass_probability(const Matrix4& rho, const Matrix4& projector) {
  return std::clamp((rho * projector).trace().real(), 0.0, 1.0);
}

}  // namespace

std::vector<MeasurementSetting> standard_settings() {
  const auto analyzers = tomography_analyzers();
  std::vector<MeasurementSetting> settings;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) settings.push_back({4 * i + j, analyzers[i], analyzers[j]});
  return settings;
}

Eigen::MatrixXd measurement_map(std::span<const MeasurementSetting> settings) {
  Eigen::MatrixXd map(static_cast<Eigen::Index>(settings.size()), 16);
  for (std::size_t s = 0; s < settings.size(); ++s) {
    const Matrix4 projector = settings[s].projector();
    for (int k = 0; k < 16; ++k)
      map(static_cast<Eigen::Index>(s), k) = (projector * pauli_product(k)).trace().real() / 4;
  }
  return map;
}

std::vector<CountRecord> simulate_counts(const TwoQubitState<double>& state,
                                         std::span<const MeasurementSetting> settings,
                                         std::uint64_t pairs_per_setting, std::uint64_t seed) {
  if (pairs_per_setting < 1) throw std::invalid_argument("pairs_per_setting must be >= 1");
  std::vector<CountRecord> records;
  records.reserve(settings.size());
  for (const auto& setting : settings) {
    const double p = pass_probability(state.matrix(), setting.projector());
    std::mt19937_64 engine(
        rng::derive(seed, rng::Purpose::Counts, {static_cast<std::uint64_t>(setting.id)}));
    std::binomial_distribution<std::uint64_t> draw(pairs_per_setting, p);
    records.push_back({setting, draw(engine), pairs_per_setting});
  }
  return records;
}

std::vector<CountRecord> expected_counts(const TwoQubitState<double>& state,
                                         std::span<const MeasurementSetting> settings,
                                         std::uint64_t integration) {
  std::vector<CountRecord> records;
  for (const auto& setting : settings) {
    const double p = pass_probability(state.matrix(), setting.projector());
    records.push_back(
        {setting, static_cast<std::uint64_t>(std::llround(p * double(integration))), integration});
  }
  return records;
}

TwoQubitState<double> linear_inversion(std::span<const CountRecord> records) {
  std::vector<MeasurementSetting> settings;
  Eigen::VectorXd frequencies(static_cast<Eigen::Index>(records.size()));
  for (std::size_t s = 0; s < records.size(); ++s) {
    if (records[s].integration == 0) throw std::invalid_argument("record with zero integration");
    settings.push_back(records[s].setting);
    frequencies(static_cast<Eigen::Index>(s)) =
        double(records[s].counts) / double(records[s].integration);
  }
  const Eigen::MatrixXd map = measurement_map(settings);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(map);
  qr.setThreshold(1e-10);
  if (qr.rank() < 16)
    throw SingularMapError("measurement map has rank " + std::to_string(qr.rank()) +
                           " < 16; settings are not informationally complete");
  const Eigen::VectorXd coefficients = qr.solve(frequencies);

  Matrix4 rho = Matrix4::Zero();
  for (int k = 0; k < 16; ++k) rho += coefficients(k) / 4 * pauli_product(k);
  rho /= rho.trace().real();
  rho = (rho + rho.adjoint()) / 2.0;
  return TwoQubitState<double>::unchecked(rho);
}

namespace {

struct Likelihood {
  std::vector<Matrix4> projectors;
  std::vector<double> counts;
  std::vector<double> trials;
  double total_trials = 0;

  explicit Likelihood(std::span<const CountRecord> records) {
    for (const auto& r : records) {
      if (r.counts > r.integration) throw std::invalid_argument("counts exceed integration");
      projectors.push_back(r.setting.projector());
      counts.push_back(double(r.counts));
      trials.push_back(double(r.integration));
      total_trials += double(r.integration);
    }
    if (!(total_trials > 0)) throw std::invalid_argument("records carry no trials");
  }

  double value(const Matrix4& rho) const {
    double sum = 0;
    for (std::size_t s = 0; s < projectors.size(); ++s) {
      const double p = pass_probability(rho, projectors[s]);
      const double fails = trials[s] - counts[s];
      if (counts[s] > 0) sum += counts[s] * std::log(p);
      if (fails > 0) sum += fails * std::log1p(-p);
    }
    return sum / total_trials;
  }

  // dL/drho, normalized per trial.
  Matrix4 gradient(const Matrix4& rho) const {
    Matrix4 r = Matrix4::Zero();
    for (std::size_t s = 0; s < projectors.size(); ++s) {
      const double p = pass_probability(rho, projectors[s]);
      const double fails = trials[s] - counts[s];
      double w = 0;
      if (counts[s] > 0) w += counts[s] / p;
      if (fails > 0) w -= fails / (1 - p);
      r += (w / total_trials) * projectors[s];
    }
    return r;
  }
};

Matrix4 normalized(const Matrix4& g) {
  const Matrix4 a = g.adjoint() * g;
  return a / a.trace().real();
}

Matrix4 initial_factor(std::span<const CountRecord> records) {
  Matrix4 start = Matrix4::Identity() / 4.0;
  try {
    const Matrix4 inverted = linear_inversion(records).matrix();
    Eigen::SelfAdjointEigenSolver<Matrix4> solver(inverted);
    const Eigen::Vector4d clipped = solver.eigenvalues().cwiseMax(0.0);
    if (clipped.sum() > 0) {
      const Matrix4 physical = solver.eigenvectors() *
                               (clipped / clipped.sum()).cast<std::complex<double>>().asDiagonal() *
                               solver.eigenvectors().adjoint();
      // A trace of white noise keeps G full rank so the multiplicative update can
      // still grow any eigenvalue. More than this leaves slowly decaying weight
      // in directions where the likelihood is quartic in G.
      start = (1 - 1e-6) * physical + 1e-6 * Matrix4::Identity() / 4.0;
    }
  } catch (const SingularMapError&) {
  }
  Eigen::SelfAdjointEigenSolver<Matrix4> solver(start);
  return solver.eigenvectors() *
         solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().cast<std::complex<double>>().asDiagonal() *
         solver.eigenvectors().adjoint();
}

}  // namespace

double log_likelihood(const TwoQubitState<double>& state, std::span<const CountRecord> records) {
  return Likelihood(records).value(state.matrix());
}

MleResult mle_reconstruct(std::span<const CountRecord> records, const MleOptions& options) {
  if (records.empty()) throw std::invalid_argument("mle_reconstruct needs at least one record");
  const Likelihood likelihood(records);

  Matrix4 g = initial_factor(records);
  Matrix4 rho = normalized(g);
  double current = likelihood.value(rho);
  MleResult result{TwoQubitState<double>(rho), 0, false, current, {current}};

  double step = 1.0;
  for (int iteration = 1; iteration <= options.max_iterations; ++iteration) {
    const Matrix4 r = likelihood.gradient(rho);
    const Matrix4 k = r - (r * rho).trace().real() * Matrix4::Identity();

    bool accepted = false;
    double candidate_value = current;
    Matrix4 candidate_g;
    for (step = std::min(step * 2, 1e6); step > 1e-30; step /= 2) {
      candidate_g = g * (Matrix4::Identity() + step * k);
      const double value = likelihood.value(normalized(candidate_g));
      if (std::isfinite(value) && value > current) {
        candidate_value = value;
        accepted = true;
        break;
      }
    }
    result.iterations = iteration;
    if (!accepted) {
      result.converged = true;
      break;
    }
    const double improvement = candidate_value - current;
    g = candidate_g / std::sqrt((candidate_g.adjoint() * candidate_g).trace().real());
    rho = normalized(g);
    current = candidate_value;
    result.log_likelihood_history.push_back(current);
    if (improvement < options.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.state = TwoQubitState<double>(rho);
  result.log_likelihood = current;
  return result;
}

void write_counts_csv(std::ostream& out, std::span<const CountRecord> records) {
  out << "setting_id,projector_angles,counts,integration\n";
  out << std::setprecision(17);
  for (const auto& r : records)
    out << r.setting.id << ',' << r.setting.a.orientation << ';' << r.setting.a.ellipticity << ';'
        << r.setting.b.orientation << ';' << r.setting.b.ellipticity << ',' << r.counts << ','
        << r.integration << '\n';
}

std::vector<CountRecord> read_counts_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("setting_id,projector_angles,counts,integration", 0) != 0)
    throw std::invalid_argument("count CSV must start with the setting_id,projector_angles,counts,integration header");
  std::vector<CountRecord> records;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::stringstream fields(line);
    std::string id, angles, counts, integration;
    if (!std::getline(fields, id, ',') || !std::getline(fields, angles, ',') ||
        !std::getline(fields, counts, ',') || !std::getline(fields, integration))
      throw std::invalid_argument("malformed count CSV line " + std::to_string(line_number));
    std::stringstream angle_fields(angles);
    double values[4];
    for (double& v : values) {
      std::string token;
      if (!std::getline(angle_fields, token, ';'))
        throw std::invalid_argument("malformed projector angles on line " + std::to_string(line_number));
      v = std::stod(token);
    }
    CountRecord r;
    r.setting.id = std::stoi(id);
    r.setting.a = {values[0], values[1]};
    r.setting.b = {values[2], values[3]};
    r.counts = std::stoull(counts);
    r.integration = std::stoull(integration);
    if (r.counts > r.integration)
      throw std::invalid_argument("counts exceed integration on line " + std::to_string(line_number));
    records.push_back(r);
  }
  return records;
}

}  // namespace biphoton
