#include "biphoton/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "biphoton/errors.hpp"
#include "biphoton/parallel.hpp"
#include "biphoton/random.hpp"

namespace biphoton {

namespace {

// Expected events per generation block. Blocks are fixed by the rates alone,
// so the worker count cannot change the output.
constexpr double events_per_block = 65536;

bool time_order(const DetectionEvent& x, const DetectionEvent& y) {
  if (x.time != y.time) return x.time < y.time;
  if (x.arm != y.arm) return x.arm < y.arm;
  return x.id < y.id;
}

struct Block {
  double start;
  double length;
};

std::vector<Block> blocks_for(double rate, double duration) {
  const double length = events_per_block / rate;
  const auto count = static_cast<std::size_t>(std::ceil(duration / length));
  std::vector<Block> blocks;
  blocks.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    const double start = double(b) * length;
    blocks.push_back({start, std::min(length, duration - start)});
  }
  return blocks;
}

// Sorted Poisson arrival times in one block.
std::vector<double> arrivals(std::uint64_t seed, double rate, const Block& block) {
  rng::Stream stream(seed);
  std::poisson_distribution<std::uint64_t> count(rate * block.length);
  std::vector<double> times(count(stream.engine()));
  for (double& t : times) t = block.start + stream.uniform() * block.length;
  std::sort(times.begin(), times.end());
  return times;
}

std::vector<DetectionEvent> concatenate(std::vector<std::vector<DetectionEvent>>& parts) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  std::vector<DetectionEvent> all;
  all.reserve(total);
  for (auto& p : parts) {
    all.insert(all.end(), p.begin(), p.end());
    p.clear();
    p.shrink_to_fit();
  }
  return all;
}

double sample_delay(const BiphotonWavepacket<double>& wp, std::uint64_t seed, std::uint64_t id) {
  // The delay density is symmetric; each side is a mixture of the two
  // exponentials weighted by their areas.
  const double norm = wp.tau_left() + wp.tau_right();
  const double pick = rng::uniform_at(seed, rng::Purpose::Delay, {id, 0});
  const double tau_c = pick * norm < wp.tau_right() ? wp.tau_right() : wp.tau_left();
  const double magnitude = -tau_c * std::log1p(-rng::uniform_at(seed, rng::Purpose::Delay, {id, 1}));
  return rng::uniform_at(seed, rng::Purpose::Delay, {id, 2}) < 0.5 ? magnitude : -magnitude;
}

// Born-rule outcomes for arm 1 and arm 2 given the pair state at delay tau.
std::pair<Outcome, Outcome> sample_outcomes(const RunConfig& config, double tau, std::uint64_t id) {
  using C = std::complex<double>;
  const auto& wp = config.wavepacket;
  const double t2 = config.split_ratio;
  const double r2 = 1 - t2;
  Vector4c<double> psi = Vector4c<double>::Zero();
  psi(1) = t2 * wp.amplitude(Ordering::HV, tau);
  psi(2) = r2 * wp.amplitude(Ordering::VH, tau) * std::polar(1.0, wp.delta_omega() * tau);
  psi /= psi.norm();

  const std::array<Vector2c<double>, 2> a{config.analyzers[0].jones(),
                                          config.analyzers[0].orthogonal().jones()};
  const std::array<Vector2c<double>, 2> b{config.analyzers[1].jones(),
                                          config.analyzers[1].orthogonal().jones()};
  std::array<double, 4> probability{};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      C amplitude = 0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          amplitude += std::conj(a[x](i)) * std::conj(b[y](j)) * psi(2 * i + j);
      probability[2 * x + y] = std::norm(amplitude);
    }
  const double total = probability[0] + probability[1] + probability[2] + probability[3];
  const double u = rng::uniform_at(config.seed, rng::Purpose::Outcome, {id}) * total;
  double cumulative = 0;
  int pick = 3;
  for (int k = 0; k < 4; ++k) {
    cumulative += probability[k];
    if (u < cumulative) {
      pick = k;
      break;
    }
  }
  return {pick < 2 ? Outcome::Pass : Outcome::Reject, pick % 2 == 0 ? Outcome::Pass : Outcome::Reject};
}

}  // namespace

std::size_t EventStream::count(int arm) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [arm](const auto& e) { return e.arm == arm; }));
}

void RunConfig::validate() const {
  if (!(pair_rate >= 0) || !std::isfinite(pair_rate))
    throw std::invalid_argument("pair rate must be finite and >= 0");
  if (!(duration > 0) || !std::isfinite(duration))
    throw std::invalid_argument("run duration must be positive and finite");
  for (double r : accidental_rate)
    if (!(r >= 0) || !std::isfinite(r))
      throw std::invalid_argument("accidental rates must be finite and >= 0");
  if (!(split_ratio > 0 && split_ratio < 1))
    throw std::invalid_argument("split ratio must lie in (0, 1)");
  modulation.validate();
}

EventStream generate_pairs(const RunConfig& config) {
  config.validate();
  EventStream out;
  out.duration = config.duration;
  if (config.pair_rate == 0) return out;

  const auto blocks = blocks_for(config.pair_rate, config.duration);
  std::vector<std::vector<DetectionEvent>> parts(blocks.size());
  parallel_for(blocks.size(), config.workers, [&](std::size_t b) {
    const auto emissions =
        arrivals(rng::derive(config.seed, rng::Purpose::Emission, {b}), config.pair_rate, blocks[b]);
    auto& part = parts[b];
    part.reserve(2 * emissions.size());
    for (std::size_t i = 0; i < emissions.size(); ++i) {
      const std::uint64_t id = (std::uint64_t(b) << 32) | i;
      const double tau = sample_delay(config.wavepacket, config.seed, id);
      const auto [o1, o2] = sample_outcomes(config, tau, id);
      const double t1 = emissions[i] + std::max(0.0, -tau);
      part.push_back({1, t1, o1, Origin::Pair, id});
      part.push_back({2, t1 + tau, o2, Origin::Pair, id});
    }
  });
  out.events = concatenate(parts);
  std::sort(out.events.begin(), out.events.end(), time_order);
  return out;
}

EventStream thin_by_modulation(const EventStream& stream, const ModulationSpec<double>& modulation,
                               double delta_omega, std::uint64_t seed) {
  modulation.validate();
  if (modulation.kind == ModulationKind::None) return stream;
  EventStream out;
  out.duration = stream.duration;
  out.events.reserve(stream.events.size());

  if (!modulation.conditional) {
    for (const auto& e : stream.events) {
      const double keep = photon_transmission(modulation, delta_omega, e.arm, e.time);
      if (rng::uniform_at(seed, rng::Purpose::Thinning, {e.id, std::uint64_t(e.arm)}) < keep)
        out.events.push_back(e);
    }
    return out;
  }

  // Conditional: the pair's delay sets the survival probability of both clicks.
  struct Partners {
    double t1 = 0, t2 = 0;
    int seen = 0;
  };
  std::unordered_map<std::uint64_t, Partners> pairs;
  pairs.reserve(stream.events.size() / 2 + 1);
  for (const auto& e : stream.events) {
    auto& p = pairs[e.id];
    (e.arm == 1 ? p.t1 : p.t2) = e.time;
    p.seen |= e.arm;
  }
  for (const auto& e : stream.events) {
    const auto& p = pairs.at(e.id);
    if (p.seen != 3) {
      out.events.push_back(e);
      continue;
    }
    const double keep = eval_envelope(modulation, delta_omega, p.t2 - p.t1);
    if (rng::uniform_at(seed, rng::Purpose::Thinning, {e.id}) < keep) out.events.push_back(e);
  }
  return out;
}

EventStream inject_accidentals(const EventStream& stream, const RunConfig& config) {
  config.validate();
  std::vector<std::vector<DetectionEvent>> parts;
  for (int arm = 1; arm <= 2; ++arm) {
    const double rate = config.accidental_rate[arm - 1];
    if (rate == 0) continue;
    const auto blocks = blocks_for(rate, stream.duration);
    const std::size_t first = parts.size();
    parts.resize(first + blocks.size());
    parallel_for(blocks.size(), config.workers, [&](std::size_t b) {
      const std::uint64_t block_seed =
          rng::derive(config.seed, rng::Purpose::Accidentals, {std::uint64_t(arm), b});
      const auto times = arrivals(block_seed, rate, blocks[b]);
      rng::Stream coin(rng::derive(block_seed, {0}));
      auto& part = parts[first + b];
      part.reserve(times.size());
      for (std::size_t i = 0; i < times.size(); ++i) {
        const std::uint64_t id =
            (std::uint64_t(1) << 63) | (std::uint64_t(arm) << 56) | (std::uint64_t(b) << 32) | i;
        part.push_back({arm, times[i], coin.uniform() < 0.5 ? Outcome::Pass : Outcome::Reject,
                        Origin::Accidental, id});
      }
    });
  }
  if (parts.empty()) return stream;
  const auto background = concatenate(parts);
  EventStream out;
  out.duration = stream.duration;
  out.events.reserve(stream.events.size() + background.size());
  out.events = stream.events;
  const auto middle = out.events.insert(out.events.end(), background.begin(), background.end());
  std::sort(middle, out.events.end(), time_order);
  std::inplace_merge(out.events.begin(), middle, out.events.end(), time_order);
  return out;
}

EventStream simulate_stream(const RunConfig& config) {
  auto stream = generate_pairs(config);
  stream = thin_by_modulation(stream, config.modulation, config.wavepacket.delta_omega(), config.seed);
  return inject_accidentals(stream, config);
}

double CoincidenceCounts::correlation() const {
  const auto n = total();
  if (n == 0) return 0;
  return (double(pp) + double(rr) - double(pr) - double(rp)) / double(n);
}

double CoincidenceCounts::correlation_variance() const {
  const auto n = total();
  if (n == 0) return 0;
  const double e = correlation();
  return (1 - e * e) / double(n);
}

namespace {

template <typename OnMatch>
void match_coincidences(const EventStream& stream, double window, OnMatch&& on_match) {
  if (!(window > 0)) throw std::invalid_argument("coincidence window must be positive");
  std::vector<const DetectionEvent*> second;
  second.reserve(stream.events.size() / 2 + 1);
  for (const auto& e : stream.events)
    if (e.arm == 2) second.push_back(&e);
  std::vector<char> used(second.size(), 0);

  std::size_t low = 0;
  for (const auto& e : stream.events) {
    if (e.arm != 1) continue;
    while (low < second.size() && (used[low] || e.time - second[low]->time > window)) ++low;
    std::size_t best = second.size();
    double best_distance = 0;
    for (std::size_t j = low; j < second.size() && second[j]->time - e.time <= window; ++j) {
      if (used[j]) continue;
      const double distance = std::abs(second[j]->time - e.time);
      if (distance > window) continue;
      if (best == second.size() || distance < best_distance) {
        best = j;
        best_distance = distance;
      }
    }
    if (best == second.size()) continue;
    used[best] = 1;
    on_match(e, *second[best]);
  }
}

}  // namespace

CoincidenceCounts count_coincidences(const EventStream& stream, double window) {
  CoincidenceCounts counts;
  match_coincidences(stream, window, [&](const DetectionEvent& a, const DetectionEvent& b) {
    const bool pa = a.outcome == Outcome::Pass;
    const bool pb = b.outcome == Outcome::Pass;
    if (pa && pb) ++counts.pp;
    else if (pa) ++counts.pr;
    else if (pb) ++counts.rp;
    else ++counts.rr;
  });
  return counts;
}

std::vector<double> coincidence_delays(const EventStream& stream, double window) {
  std::vector<double> delays;
  match_coincidences(stream, window, [&](const DetectionEvent& a, const DetectionEvent& b) {
    delays.push_back(b.time - a.time);
  });
  return delays;
}

void for_each_setting(const RunConfig& config, std::span<const MeasurementSetting> settings,
                      const std::array<double, 2>& basis_error,
                      const std::function<void(std::size_t, const MeasurementRun&)>& visit) {
  config.validate();
  parallel_for(settings.size(), config.workers, [&](std::size_t s) {
    RunConfig run = config;
    run.workers = 1;
    run.analyzers = {settings[s].a.rotated(basis_error[0]), settings[s].b.rotated(basis_error[1])};
    run.seed = rng::derive(config.seed, rng::Purpose::Setting,
                           {static_cast<std::uint64_t>(settings[s].id)});
    const MeasurementRun measured{settings[s], simulate_stream(run)};
    visit(s, measured);
  });
}

std::vector<MeasurementRun> measure_settings(const RunConfig& config,
                                             std::span<const MeasurementSetting> settings,
                                             const std::array<double, 2>& basis_error) {
  std::vector<MeasurementRun> runs(settings.size());
  for_each_setting(config, settings, basis_error,
                   [&](std::size_t s, const MeasurementRun& run) { runs[s] = run; });
  return runs;
}

std::vector<CoincidenceCounts> measure_coincidences(const RunConfig& config,
                                                    std::span<const MeasurementSetting> settings,
                                                    double window,
                                                    const std::array<double, 2>& basis_error) {
  std::vector<CoincidenceCounts> counts(settings.size());
  for_each_setting(config, settings, basis_error, [&](std::size_t s, const MeasurementRun& run) {
    counts[s] = count_coincidences(run.stream, window);
  });
  return counts;
}

std::vector<CoincidenceCounts> coincidence_analysis(std::span<const MeasurementRun> runs,
                                                    double window) {
  std::vector<CoincidenceCounts> counts;
  counts.reserve(runs.size());
  for (const auto& run : runs) counts.push_back(count_coincidences(run.stream, window));
  return counts;
}

std::vector<MeasurementSetting> chsh_settings(const ChshAngles<double>& angles) {
  std::vector<MeasurementSetting> settings;
  int id = 100;
  for (const auto& [alpha, beta] : angles.settings())
    settings.push_back({id++, Analyzer<double>::linear(alpha), Analyzer<double>::linear(beta)});
  return settings;
}

ChshEstimate estimate_chsh(std::span<const CoincidenceCounts> counts,
                           std::uint64_t minimum_coincidences) {
  if (counts.size() != 4) throw std::invalid_argument("CHSH needs exactly four settings");
  ChshEstimate estimate;
  double variance = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    estimate.coincidences[k] = counts[k].total();
    if (counts[k].total() < minimum_coincidences)
      throw InsufficientCountsError("CHSH setting " + std::to_string(k) + " has " +
                                    std::to_string(counts[k].total()) + " coincidences, need " +
                                    std::to_string(minimum_coincidences));
    estimate.correlations[k] = counts[k].correlation();
    estimate.s += k == 3 ? -estimate.correlations[k] : estimate.correlations[k];
    variance += counts[k].correlation_variance();
  }
  estimate.standard_error = std::sqrt(variance);
  return estimate;
}

ChshEstimate estimate_chsh(std::span<const MeasurementRun> runs, double window,
                           std::uint64_t minimum_coincidences) {
  const auto counts = coincidence_analysis(runs, window);
  return estimate_chsh(std::span<const CoincidenceCounts>(counts), minimum_coincidences);
}

std::vector<CountRecord> to_count_records(std::span<const MeasurementSetting> settings,
                                          std::span<const CoincidenceCounts> counts) {
  if (settings.size() != counts.size())
    throw std::invalid_argument("one coincidence count per setting required");
  std::vector<CountRecord> records;
  records.reserve(settings.size());
  for (std::size_t s = 0; s < settings.size(); ++s)
    records.push_back({settings[s], counts[s].pp, counts[s].total()});
  return records;
}

std::vector<CountRecord> to_count_records(std::span<const MeasurementRun> runs, double window) {
  std::vector<MeasurementSetting> settings;
  for (const auto& run : runs) settings.push_back(run.setting);
  const auto counts = coincidence_analysis(runs, window);
  return to_count_records(std::span<const MeasurementSetting>(settings),
                          std::span<const CoincidenceCounts>(counts));
}

}  // namespace biphoton
