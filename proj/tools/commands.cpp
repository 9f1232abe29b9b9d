#include "commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "biphoton/calibration.hpp"
#include "biphoton/coherence.hpp"
#include "biphoton/entanglement.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/interference.hpp"
#include "biphoton/montecarlo.hpp"
#include "biphoton/parallel.hpp"
#include "biphoton/scenario.hpp"
#include "biphoton/tomography.hpp"
#include "biphoton/units.hpp"

namespace biphoton::cli {

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string number(double x) {
  std::ostringstream s;
  s << std::setprecision(12) << x;
  return s.str();
}

// "min:max:points"
std::vector<double> parse_range(const std::string& text, bool logarithmic, const std::string& flag) {
  std::vector<std::string> parts;
  std::stringstream stream(text);
  for (std::string part; std::getline(stream, part, ':');) parts.push_back(part);
  double low = 0, high = 0;
  long long points = 0;
  try {
    if (parts.size() != 3) throw std::invalid_argument("three fields");
    std::size_t used = 0;
    low = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument("min");
    high = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument("max");
    points = std::stoll(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument("points");
  } catch (const std::exception&) {
    throw UsageError(flag + " expects min:max:points, got '" + text + "'");
  }
  if (!(high > low) || points < 2 || !std::isfinite(low) || !std::isfinite(high))
    throw UsageError(flag + " needs min < max and at least 2 points");
  if (!logarithmic) return linear_grid(low, high, static_cast<std::size_t>(points));
  if (!(low > 0)) throw UsageError(flag + " with --log needs min > 0");
  auto grid = linear_grid(std::log10(low), std::log10(high), static_cast<std::size_t>(points));
  for (double& x : grid) x = std::pow(10.0, x);
  return grid;
}

// Writes to the --output file when given, to `fallback` otherwise.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw UsageError("cannot write output file '" + path + "'");
    stream_ = &file_;
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

ModulationSpec<double> modulation_from(const std::string& kind, double frequency_mhz, int terms) {
  ModulationSpec<double> mod;
  try {
    mod.kind = modulation_kind_from_string(kind);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  mod.frequency = cycles_per_ns_from_mhz(frequency_mhz);
  mod.terms = terms;
  mod.conditional = mod.kind == ModulationKind::Cosinusoidal || mod.kind == ModulationKind::PeriodicSinc2;
  mod.validate();
  return mod;
}

// Imperfections: explicit file, then the scenario's own section, then a fit to
// the default targets.
ImperfectionModel<double> resolve_imperfections(const std::string& path, const ScenarioConfig& scenario,
                                                std::ostream& out) {
  if (!path.empty()) {
    const auto loaded = load_scenario(path);
    if (!loaded.has_imperfections) throw UsageError("'" + path + "' has no [imperfections] section");
    out << "# imperfections=" << path << '\n';
    return loaded.imperfections;
  }
  if (scenario.has_imperfections) {
    out << "# imperfections=scenario\n";
    return scenario.imperfections;
  }
  CalibrationTargets targets;
  targets.nondegenerate_purity = 0.45;
  const auto fit = fit_imperfections(targets, scenario.wavepacket().with_delta_omega(0));
  out << "# imperfections=fit(C=" << number(targets.concurrence) << ",P=" << number(targets.purity)
      << ",P_nondegenerate=" << number(*targets.nondegenerate_purity)
      << ") accidental_fraction=" << number(fit.accidental_fraction)
      << " split_ratio=" << number(fit.model.split_ratio) << '\n';
  return fit.model;
}

ScenarioConfig scenario_from(const std::string& path) {
  return path.empty() ? ScenarioConfig{} : load_scenario(path);
}

struct Common {
  std::string output;
  std::string config;
  unsigned workers = 0;
};

void add_common(CLI::App* cmd, Common& common, bool with_config = true) {
  cmd->add_option("-o,--output", common.output, "Output file (default: stdout)");
  if (with_config) cmd->add_option("-c,--config", common.config, "Scenario file");
}

// ---------------------------------------------------------------- zeta-sweep

struct ZetaSweep {
  Common common;
  std::vector<double> thetas;
  std::string range;
  bool logarithmic = false;
  int terms = 100;
  std::string fidelity_modulation = "none";

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("zeta-sweep", "Coherence of each modulation scheme versus theta = dw tau0");
    add_common(cmd, common, false);
    cmd->add_option("--theta", thetas, "Comma-separated theta values")->delimiter(',');
    cmd->add_option("--theta-range", range, "min:max:points (default 0:20:201)");
    cmd->add_flag("--log", logarithmic, "Logarithmic spacing for --theta-range");
    cmd->add_option("--sinc-terms", terms, "Terms s of the periodic sinc^2 envelope")->capture_default_str();
    cmd->add_option("--fidelity-modulation", fidelity_modulation, "Scheme for the fidelity column")
        ->capture_default_str();
    cmd->callback([this, cmd] { selected = cmd; });
  }

  int execute(std::ostream& fallback) const {
    if (!thetas.empty() && !range.empty()) throw UsageError("give --theta or --theta-range, not both");
    const auto grid = !thetas.empty() ? thetas : parse_range(range.empty() ? "0:20:201" : range, logarithmic, "--theta-range");
    for (double t : grid)
      if (!(t >= 0) || !std::isfinite(t)) throw UsageError("theta values must be finite and >= 0");
    if (terms < 2) throw UsageError("--sinc-terms must be >= 2");
    const auto fidelity_mod = modulation_from(fidelity_modulation, 0, terms);

    Sink sink(common.output, fallback);
    auto& out = *sink;
    out << "# schema=biphoton.zeta-sweep.v1 sinc_terms=" << terms
        << " fidelity_modulation=" << to_string(fidelity_mod.kind) << '\n';
    out << "theta,zeta_unmod,zeta_tri,zeta_cos,zeta_sinc2,fidelity\n";
    for (double t : grid)
      out << number(t) << ',' << number(zeta_unmodulated(t)) << ',' << number(zeta_triangular(t)) << ','
          << number(zeta_cosinusoidal(t)) << ',' << number(zeta_sinc2(t, terms)) << ','
          << number(interference_fidelity(t, fidelity_mod)) << '\n';
    return success;
  }

  CLI::App* selected = nullptr;
};

// ----------------------------------------------------------------- hom-sweep

struct HomSweep {
  Common common;
  std::string range = "0:200:41";
  double tau0 = 22.5;
  int terms = 100;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("hom-sweep", "HOM coincidence probability versus frequency difference");
    add_common(cmd, common, false);
    cmd->add_option("--delta-f-range", range, "min:max:points in MHz")->capture_default_str();
    cmd->add_option("--tau0", tau0, "Symmetric decay constant (ns)")->capture_default_str();
    cmd->add_option("--sinc-terms", terms, "Terms s of the periodic sinc^2 envelope")->capture_default_str();
    cmd->callback([this, cmd] { selected = cmd; });
  }

  int execute(std::ostream& fallback) const {
    const auto grid = parse_range(range, false, "--delta-f-range");
    if (grid.front() < 0) throw UsageError("frequency differences must be >= 0");
    const auto wp = BiphotonWavepacket<double>::symmetric(tau0);
    const std::array<ModulationSpec<double>, 4> mods{
        ModulationSpec<double>::none(), ModulationSpec<double>::square_wave(),
        ModulationSpec<double>::cosinusoidal(), ModulationSpec<double>::periodic_sinc2(terms)};
    Sink sink(common.output, fallback);
    auto& out = *sink;
    out << "# schema=biphoton.hom-sweep.v1 tau0_ns=" << number(tau0) << " sinc_terms=" << terms << '\n';
    out << "delta_f_mhz,theta,p_unmod,p_tri,p_cos,p_sinc2\n";
    for (double f : grid) {
      const double dw = angular_from_mhz(f);
      out << number(f) << ',' << number(dw * tau0);
      for (const auto& mod : mods) out << ',' << number(hom_coincidence(wp, mod, dw));
      out << '\n';
    }
    return success;
  }

  CLI::App* selected = nullptr;
};

// ---------------------------------------------------------------------- beat

struct Beat {
  Common common;
  double delta_f_mhz = 43;
  double tau_left = 22.5;
  double tau_right = 22.5;
  std::string range = "-150:150:601";

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("beat", "Time-resolved two-photon beat histogram");
    add_common(cmd, common, false);
    cmd->add_option("--delta-f-mhz", delta_f_mhz, "Frequency difference (MHz)")->capture_default_str();
    cmd->add_option("--tau-left", tau_left, "Decay constant for tau < 0 (ns)")->capture_default_str();
    cmd->add_option("--tau-right", tau_right, "Decay constant for tau > 0 (ns)")->capture_default_str();
    cmd->add_option("--edges", range, "Bin edges min:max:count in ns")->capture_default_str();
    cmd->callback([this, cmd] { selected = cmd; });
  }

  int execute(std::ostream& fallback) const {
    const auto edges = parse_range(range, false, "--edges");
    if (delta_f_mhz < 0) throw UsageError("--delta-f-mhz must be >= 0");
    const BiphotonWavepacket<double> wp(tau_left, tau_right);
    const auto h = beat_histogram(wp, angular_from_mhz(delta_f_mhz), std::span<const double>(edges));
    const auto minima = local_minima(h);
    Sink sink(common.output, fallback);
    auto& out = *sink;
    out << "# schema=biphoton.beat.v1 delta_f_mhz=" << number(delta_f_mhz) << '\n';
    out << "# minima_ns=";
    for (std::size_t i = 0; i < minima.size(); ++i) out << (i ? ";" : "") << number(minima[i]);
    out << '\n';
    out << "bin_start_ns,bin_end_ns,counts\n";
    for (std::size_t i = 0; i < h.bins(); ++i)
      out << number(h.bin_edges[i]) << ',' << number(h.bin_edges[i + 1]) << ',' << number(h.counts[i]) << '\n';
    return success;
  }

  CLI::App* selected = nullptr;
};

// --------------------------------------------------- concurrence-vs-frequency

struct ConcurrenceVsFrequency {
  Common common;
  std::string imperfections;
  std::string modulation = "none";
  std::string range;
  double window = 100;
  int terms = 100;
  CLI::Option* window_option = nullptr;
  CLI::Option* modulation_option = nullptr;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("concurrence-vs-frequency",
                                   "Ideal and calibrated concurrence and purity versus frequency difference");
    add_common(cmd, common);
    cmd->add_option("--imperfections", imperfections, "Imperfection file from fit-imperfections");
    modulation_option = cmd->add_option("--modulation", modulation, "none|square|cosine|sinc2 (matched)");
    cmd->add_option("--delta-f-range", range, "min:max:points in MHz (default from the scenario)");
    window_option = cmd->add_option("--window", window, "Coincidence half-width W (ns)");
    cmd->add_option("--sinc-terms", terms, "Terms s of the periodic sinc^2 envelope")->capture_default_str();
    cmd->add_option("--workers", common.workers, "Threads (0 = all cores)");
    cmd->callback([this, cmd] { selected = cmd; });
  }

  int execute(std::ostream& fallback) const {
    auto scenario = scenario_from(common.config);
    if (window_option->count()) scenario.window = window;
    if (modulation_option->count()) scenario.modulation = modulation_from(modulation, 0, terms);
    if (!(scenario.window > 0)) throw UsageError("--window must be positive");
    const auto grid = range.empty() ? linear_grid(scenario.frequency_min_mhz, scenario.frequency_max_mhz,
                                                  scenario.frequency_points)
                                    : parse_range(range, false, "--delta-f-range");
    if (grid.front() < 0) throw UsageError("frequency differences must be >= 0");

    Sink sink(common.output, fallback);
    auto& out = *sink;
    out << "# schema=biphoton.concurrence-vs-frequency.v1 modulation=" << to_string(scenario.modulation.kind)
        << " window_ns=" << number(scenario.window) << '\n';
    const auto model = resolve_imperfections(imperfections, scenario, out);
    const double tau0 = (scenario.tau_left + scenario.tau_right) / 2;

    std::vector<std::string> rows(grid.size());
    parallel_for(grid.size(), common.workers, [&](std::size_t i) {
      const double dw = angular_from_mhz(grid[i]);
      const auto ideal = predict(BiphotonWavepacket<double>::symmetric(tau0, dw), scenario.modulation,
                                 unbounded_window<double>, ImperfectionModel<double>::ideal());
      const auto calibrated = predict(scenario.wavepacket().with_delta_omega(dw), scenario.modulation,
                                      scenario.window, model);
      rows[i] = number(grid[i]) + ',' + number(dw * tau0) + ',' + number(ideal.concurrence) + ',' +
                number(ideal.purity) + ',' + number(calibrated.concurrence) + ',' + number(calibrated.purity);
    });
    out << "delta_f_mhz,theta,C_ideal,purity_ideal,C_calibrated,purity_calibrated\n";
    for (const auto& row : rows) out << row << '\n';
    return success;
  }

  CLI::App* selected = nullptr;
};

// --------------------------------------------------------------- chsh-window

struct ChshWindow {
  Common common;
  std::string imperfections;
  std::string modulation = "cosine";
  std::string range;
  double delta_f_mhz = 20;
  int terms = 100;
  CLI::Option* delta_option = nullptr;
  CLI::Option* modulation_option = nullptr;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("chsh-window", "CHSH |S| versus coincidence window");
    add_common(cmd, common);
    cmd->add_option("--imperfections", imperfections, "Imperfection file from fit-imperfections");
    delta_option = cmd->add_option("--delta-f-mhz", delta_f_mhz, "Frequency difference (MHz, default 20)");
    modulation_option =
        cmd->add_option("--modulation", modulation, "Scheme for the modulated columns (default cosine, matched)");
    cmd->add_option("--window-range", range, "min:max:points in ns (default from the scenario)");
    cmd->add_option("--sinc-terms", terms, "Terms s of the periodic sinc^2 envelope")->capture_default_str();
    cmd->add_option("--workers", common.workers, "Threads (0 = all cores)");
    cmd->callback([this, cmd] { selected = cmd; });
  }

  int execute(std::ostream& fallback) const {
    auto scenario = scenario_from(common.config);
    if (delta_option->count() || common.config.empty()) scenario.delta_f_mhz = delta_f_mhz;
    if (modulation_option->count() || scenario.modulation.kind == ModulationKind::None)
      scenario.modulation = modulation_from(modulation, 0, terms);
    const auto windows = range.empty() ? linear_grid(scenario.window_min, scenario.window_max,
                                                     scenario.window_points)
                                       : parse_range(range, false, "--window-range");
    if (!(windows.front() > 0)) throw UsageError("windows must be positive");

    Sink sink(common.output, fallback);
    auto& out = *sink;
    out << "# schema=biphoton.chsh-window.v1 delta_f_mhz=" << number(scenario.delta_f_mhz)
        << " modulation=" << to_string(scenario.modulation.kind) << '\n';
    const auto model = resolve_imperfections(imperfections, scenario, out);
    const auto wp = scenario.wavepacket();
    const auto ideal_wp = BiphotonWavepacket<double>::symmetric((scenario.tau_left + scenario.tau_right) / 2,
                                                                wp.delta_omega());
    const auto none = ModulationSpec<double>::none();

    std::vector<std::array<double, 3>> s(windows.size());
    parallel_for(windows.size(), common.workers, [&](std::size_t i) {
      const std::array<double, 1> w{windows[i]};
      s[i] = {chsh_vs_window(wp, none, wp.delta_omega(), model, std::span<const double>(w)).s_values[0],
              chsh_vs_window(wp, scenario.modulation, wp.delta_omega(), model, std::span<const double>(w)).s_values[0],
              chsh_vs_window(ideal_wp, scenario.modulation, wp.delta_omega(), ImperfectionModel<double>::ideal(),
                             std::span<const double>(w)).s_values[0]};
    });
    for (std::size_t i = 1; i < windows.size(); ++i)
      if (s[i - 1][0] > 2 && s[i][0] <= 2) {
        out << "# S_unmodulated_crosses_2_between_ns=" << number(windows[i - 1]) << ';' << number(windows[i]) << '\n';
        break;
      }
    out << "window,S_unmodulated,S_modulated,S_ideal\n";
    for (std::size_t i = 0; i < windows.size(); ++i)
      out << number(windows[i]) << ',' << number(s[i][0]) << ',' << number(s[i][1]) << ',' << number(s[i][2]) << '\n';
    return success;
  }

  CLI::App* selected = nullptr;
};

// ---------------------------------------------------------------- montecarlo

struct MonteCarlo {
  Common common;
  std::uint64_t seed = 1;
  std::uint64_t pairs = 0;
  double delta_f_mhz = 0;
  std::string modulation = "none";
  bool conditional = false;
  double window = 100;
  std::string events = "binary";
  std::string imperfections;
  int terms = 100;
  CLI::Option* seed_option = nullptr;
  CLI::Option* pairs_option = nullptr;
  CLI::Option* delta_option = nullptr;
  CLI::Option* modulation_option = nullptr;
  CLI::Option* window_option = nullptr;
  CLI::Option* workers_option = nullptr;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("montecarlo", "Event-level simulation with tomography and CHSH analysis");
    cmd->add_option("-o,--output", common.output, "Output directory")->required();
    cmd->add_option("-c,--config", common.config, "Scenario file");
    seed_option = cmd->add_option("--seed", seed, "Master seed");
    pairs_option = cmd->add_option("--pairs", pairs, "Expected emitted pairs per setting");
    delta_option = cmd->add_option("--delta-f-mhz", delta_f_mhz, "Frequency difference (MHz)");
    modulation_option = cmd->add_option("--modulation", modulation, "none|square|cosine|sinc2 (matched)");
    cmd->add_flag("--conditional", conditional, "Apply square-wave modulation conditionally to the pair");
    window_option = cmd->add_option("--window", window, "Coincidence half-width W (ns)");
    cmd->add_option("--events", events, "Event files: binary|csv|none")->capture_default_str();
    cmd->add_option("--imperfections", imperfections, "Imperfection file from fit-imperfections");
    cmd->add_option("--sinc-terms", terms, "Terms s of the periodic sinc^2 envelope")->capture_default_str();
    workers_option = cmd->add_option("--workers", common.workers, "Threads (0 = all cores)");
    cmd->callback([this, cmd] { selected = cmd; });
  }

  int execute(std::ostream& report) const {
    auto scenario = scenario_from(common.config);
    if (seed_option->count()) scenario.seed = seed;
    if (pairs_option->count()) {
      if (pairs == 0) throw UsageError("--pairs must be >= 1");
      scenario.pairs_per_setting = pairs;
    }
    if (delta_option->count()) scenario.delta_f_mhz = delta_f_mhz;
    if (modulation_option->count()) scenario.modulation = modulation_from(modulation, 0, terms);
    if (conditional) scenario.modulation.conditional = true;
    if (window_option->count()) scenario.window = window;
    if (workers_option->count()) scenario.workers = common.workers;
    if (!imperfections.empty()) {
      const auto loaded = load_scenario(imperfections);
      scenario.imperfections = loaded.imperfections;
      scenario.has_imperfections = loaded.has_imperfections;
    }
    if (events != "binary" && events != "csv" && events != "none")
      throw UsageError("--events must be binary, csv or none");
    scenario.validate();

    namespace fs = std::filesystem;
    const fs::path dir(common.output);
    std::error_code ec;
    fs::create_directories(dir / "events", ec);
    if (ec) throw UsageError("cannot create output directory '" + dir.string() + "': " + ec.message());

    const auto run = to_run_config(scenario);
    const auto tomo = standard_settings();
    const auto chsh = chsh_settings();
    const auto& basis_error = scenario.imperfections.basis_error;

    const auto measure = [&](const std::vector<MeasurementSetting>& settings, const std::string& group) {
      std::vector<CoincidenceCounts> counts(settings.size());
      for_each_setting(run, settings, basis_error, [&](std::size_t s, const MeasurementRun& measured) {
        counts[s] = count_coincidences(measured.stream, scenario.window);
        if (events == "none") return;
        const auto stem = dir / "events" / (group + "_" + std::to_string(measured.setting.id));
        if (events == "csv") {
          std::ofstream file(stem.string() + ".csv");
          write_events_csv(file, measured.stream);
          if (!file) throw std::runtime_error("failed writing " + stem.string() + ".csv");
        } else {
          std::ofstream file(stem.string() + ".bin", std::ios::binary);
          write_events_binary(file, measured.stream);
          if (!file) throw std::runtime_error("failed writing " + stem.string() + ".bin");
        }
      });
      return counts;
    };
    const auto tomo_counts = measure(tomo, "tomography");
    const auto chsh_counts = measure(chsh, "chsh");

    {
      std::ofstream file(dir / "analysis.csv");
      file << "# schema=biphoton.montecarlo-analysis.v1\n";
      file << "group,setting_id,theta_a,chi_a,theta_b,chi_b,pp,pr,rp,rr\n";
      const auto rows = [&](const std::vector<MeasurementSetting>& settings,
                            const std::vector<CoincidenceCounts>& counts, const char* group) {
        for (std::size_t s = 0; s < settings.size(); ++s)
          file << group << ',' << settings[s].id << ',' << number(settings[s].a.orientation) << ','
               << number(settings[s].a.ellipticity) << ',' << number(settings[s].b.orientation) << ','
               << number(settings[s].b.ellipticity) << ',' << counts[s].pp << ',' << counts[s].pr << ','
               << counts[s].rp << ',' << counts[s].rr << '\n';
      };
      rows(tomo, tomo_counts, "tomography");
      rows(chsh, chsh_counts, "chsh");
      if (!file) throw std::runtime_error("failed writing analysis.csv");
    }
    {
      std::ofstream file(dir / "counts.csv");
      write_counts_csv(file, to_count_records(std::span<const MeasurementSetting>(tomo),
                                              std::span<const CoincidenceCounts>(tomo_counts)));
    }

    const auto estimate = estimate_chsh(std::span<const CoincidenceCounts>(chsh_counts));
    const auto records = to_count_records(std::span<const MeasurementSetting>(tomo),
                                          std::span<const CoincidenceCounts>(tomo_counts));
    const auto mle = mle_reconstruct(records);
    const auto analytic = post_selected_state(run.wavepacket, run.modulation, scenario.window, scenario.imperfections);
    const double s_analytic = chsh_fixed(analytic, ChshAngles<double>{}, basis_error);

    std::ofstream file(dir / "summary.csv");
    file << "# schema=biphoton.montecarlo-summary.v1 seed=" << scenario.seed
         << " pairs_per_setting=" << scenario.pairs_per_setting << " delta_f_mhz=" << number(scenario.delta_f_mhz)
         << " modulation=" << to_string(scenario.modulation.kind)
         << (scenario.modulation.conditional ? "(conditional)" : "") << " window_ns=" << number(scenario.window)
         << '\n';
    file << "quantity,estimate,standard_error,analytic\n";
    file << "S," << number(estimate.s) << ',' << number(estimate.standard_error) << ',' << number(s_analytic) << '\n';
    file << "concurrence," << number(concurrence(mle.state)) << ",," << number(concurrence(analytic)) << '\n';
    file << "purity," << number(purity(mle.state)) << ",," << number(purity(analytic)) << '\n';
    file << "coherence," << number(std::abs(mle.state.matrix()(1, 2))) << ",,"
         << number(std::abs(analytic.matrix()(1, 2))) << '\n';
    file << "mle_iterations," << mle.iterations << ",,\n";
    if (!file) throw std::runtime_error("failed writing summary.csv");

    report << "S = " << number(estimate.s) << " +/- " << number(estimate.standard_error) << " (analytic "
           << number(s_analytic) << ")\n";
    report << "C = " << number(concurrence(mle.state)) << " (analytic " << number(concurrence(analytic)) << ")\n";
    report << "wrote " << (dir / "summary.csv").string() << '\n';
    return success;
  }

  CLI::App* selected = nullptr;
};

// --------------------------------------------------------- fit-imperfections

struct FitImperfections {
  Common common;
  CalibrationTargets targets;
  double nondegenerate = 0;
  double tau_left = 21;
  double tau_right = 24;
  CLI::Option* nondegenerate_option = nullptr;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("fit-imperfections",
                                   "Fit accidentals and split ratio to measured concurrence and purity");
    add_common(cmd, common, false);
    cmd->add_option("--concurrence", targets.concurrence, "Degenerate concurrence")->capture_default_str();
    cmd->add_option("--purity", targets.purity, "Degenerate purity")->capture_default_str();
    nondegenerate_option =
        cmd->add_option("--nondegenerate-purity", nondegenerate, "Unmodulated purity at --nondegenerate-delta-f-mhz");
    cmd->add_option("--nondegenerate-delta-f-mhz", targets.nondegenerate_delta_f_mhz, "Detuning of that purity")
        ->capture_default_str();
    cmd->add_option("--window", targets.reference_window, "Reference coincidence half-width (ns)")
        ->capture_default_str();
    cmd->add_option("--basis-error-a", targets.basis_error[0], "Arm-1 analyzer offset (rad)")->capture_default_str();
    cmd->add_option("--basis-error-b", targets.basis_error[1], "Arm-2 analyzer offset (rad)")->capture_default_str();
    cmd->add_option("--tau-left", tau_left, "Decay constant for tau < 0 (ns)")->capture_default_str();
    cmd->add_option("--tau-right", tau_right, "Decay constant for tau > 0 (ns)")->capture_default_str();
    cmd->callback([this, cmd] { selected = cmd; });
  }

  int execute(std::ostream& fallback) const {
    auto t = targets;
    if (nondegenerate_option->count()) t.nondegenerate_purity = nondegenerate;
    try {
      t.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const auto result = fit_imperfections(t, BiphotonWavepacket<double>(tau_left, tau_right));
    Sink sink(common.output, fallback);
    write_imperfections(*sink, result, t);
    return success;
  }

  CLI::App* selected = nullptr;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Biphoton interference, entanglement and CHSH simulator"};
  app.require_subcommand(1);
  ZetaSweep zeta;
  HomSweep hom;
  Beat beat;
  ConcurrenceVsFrequency concurrence_cmd;
  ChshWindow chsh;
  MonteCarlo montecarlo;
  FitImperfections fit;
  zeta.attach(app);
  hom.attach(app);
  beat.attach(app);
  concurrence_cmd.attach(app);
  chsh.attach(app);
  montecarlo.attach(app);
  fit.attach(app);

  std::vector<std::string> argv_storage{"biphoton"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? success : usage_error;
  }

  try {
    if (zeta.selected) return zeta.execute(out);
    if (hom.selected) return hom.execute(out);
    if (beat.selected) return beat.execute(out);
    if (concurrence_cmd.selected) return concurrence_cmd.execute(out);
    if (chsh.selected) return chsh.execute(out);
    if (montecarlo.selected) return montecarlo.execute(out);
    if (fit.selected) return fit.execute(out);
    err << "error: no command given\n";
    return usage_error;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const InfeasibleTargetsError& e) {
    err << "error: " << e.what() << '\n';
    return numerical_failure;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return numerical_failure;
  }
}

}  // namespace biphoton::cli
