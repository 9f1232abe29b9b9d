#include "biphoton/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>

#include "biphoton/coherence.hpp"
#include "biphoton/units.hpp"

namespace biphoton {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Entry {
  std::string value;
  std::string where;
};

double to_double(const Entry& e, const std::string& key) {
  double value = 0;
  const char* begin = e.value.data();
  const char* end = begin + e.value.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value))
    throw ScenarioError(e.where + ": '" + key + "' expects a finite number, got '" + e.value + "'");
  return value;
}

std::uint64_t to_unsigned(const Entry& e, const std::string& key) {
  std::uint64_t value = 0;
  const char* begin = e.value.data();
  const char* end = begin + e.value.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw ScenarioError(e.where + ": '" + key + "' expects a non-negative integer, got '" + e.value + "'");
  return value;
}

bool to_bool(const Entry& e, const std::string& key) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  throw ScenarioError(e.where + ": '" + key + "' expects true or false, got '" + e.value + "'");
}

using Setter = std::function<void(ScenarioConfig&, const Entry&, const std::string&)>;

CalibrationTargets& targets(ScenarioConfig& c) {
  if (!c.calibration) c.calibration.emplace();
  return *c.calibration;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"scenario.name", [](auto& c, const auto& e, const auto&) { c.name = e.value; }},
      {"wavepacket.tau_left_ns", [](auto& c, const auto& e, const auto& k) { c.tau_left = to_double(e, k); }},
      {"wavepacket.tau_right_ns", [](auto& c, const auto& e, const auto& k) { c.tau_right = to_double(e, k); }},
      {"modulation.kind",
       [](auto& c, const auto& e, const auto&) {
         try {
           c.modulation.kind = modulation_kind_from_string(e.value);
         } catch (const std::invalid_argument& error) {
           throw ScenarioError(e.where + ": " + error.what());
         }
         c.modulation.conditional = c.modulation.kind == ModulationKind::Cosinusoidal ||
                                    c.modulation.kind == ModulationKind::PeriodicSinc2;
       }},
      {"modulation.frequency_mhz",
       [](auto& c, const auto& e, const auto& k) { c.modulation.frequency = cycles_per_ns_from_mhz(to_double(e, k)); }},
      {"modulation.duty", [](auto& c, const auto& e, const auto& k) { c.modulation.duty = to_double(e, k); }},
      {"modulation.terms",
       [](auto& c, const auto& e, const auto& k) { c.modulation.terms = static_cast<int>(to_unsigned(e, k)); }},
      {"modulation.conditional", [](auto& c, const auto& e, const auto& k) { c.modulation.conditional = to_bool(e, k); }},
      {"modulation.phase_offset_rad", [](auto& c, const auto& e, const auto& k) { c.modulation.phase_offset = to_double(e, k); }},
      {"imperfections.accidental_fraction",
       [](auto& c, const auto& e, const auto& k) {
         if (std::holds_alternative<AccidentalRates<double>>(c.imperfections.accidentals))
           throw ScenarioError(e.where + ": give either accidental_fraction or accidental rates, not both");
         c.imperfections.accidentals = to_double(e, k);
       }},
      {"imperfections.accidental_rate_per_ns2",
       [](auto& c, const auto& e, const auto& k) {
         auto* rates = std::get_if<AccidentalRates<double>>(&c.imperfections.accidentals);
         if (!rates) {
           if (std::get<double>(c.imperfections.accidentals) != 0)
             throw ScenarioError(e.where + ": give either accidental_fraction or accidental rates, not both");
           c.imperfections.accidentals = AccidentalRates<double>{};
           rates = std::get_if<AccidentalRates<double>>(&c.imperfections.accidentals);
         }
         rates->accidental_rate = to_double(e, k);
       }},
      {"imperfections.pair_rate_per_ns",
       [](auto& c, const auto& e, const auto& k) {
         auto* rates = std::get_if<AccidentalRates<double>>(&c.imperfections.accidentals);
         if (!rates) {
           if (std::get<double>(c.imperfections.accidentals) != 0)
             throw ScenarioError(e.where + ": give either accidental_fraction or accidental rates, not both");
           c.imperfections.accidentals = AccidentalRates<double>{};
           rates = std::get_if<AccidentalRates<double>>(&c.imperfections.accidentals);
         }
         rates->pair_rate = to_double(e, k);
       }},
      {"imperfections.split_ratio", [](auto& c, const auto& e, const auto& k) { c.imperfections.split_ratio = to_double(e, k); }},
      {"imperfections.basis_error_a_rad", [](auto& c, const auto& e, const auto& k) { c.imperfections.basis_error[0] = to_double(e, k); }},
      {"imperfections.basis_error_b_rad", [](auto& c, const auto& e, const auto& k) { c.imperfections.basis_error[1] = to_double(e, k); }},
      {"run.delta_f_mhz", [](auto& c, const auto& e, const auto& k) { c.delta_f_mhz = to_double(e, k); }},
      {"run.pair_rate_per_ns", [](auto& c, const auto& e, const auto& k) { c.pair_rate = to_double(e, k); }},
      {"run.pairs_per_setting", [](auto& c, const auto& e, const auto& k) { c.pairs_per_setting = to_unsigned(e, k); }},
      {"run.seed", [](auto& c, const auto& e, const auto& k) { c.seed = to_unsigned(e, k); }},
      {"run.window_ns", [](auto& c, const auto& e, const auto& k) { c.window = to_double(e, k); }},
      {"run.background_rate_per_ns", [](auto& c, const auto& e, const auto& k) { c.background_rate = to_double(e, k); }},
      {"run.workers", [](auto& c, const auto& e, const auto& k) { c.workers = static_cast<unsigned>(to_unsigned(e, k)); }},
      {"sweep.window_min_ns", [](auto& c, const auto& e, const auto& k) { c.window_min = to_double(e, k); }},
      {"sweep.window_max_ns", [](auto& c, const auto& e, const auto& k) { c.window_max = to_double(e, k); }},
      {"sweep.window_points", [](auto& c, const auto& e, const auto& k) { c.window_points = to_unsigned(e, k); }},
      {"sweep.frequency_min_mhz", [](auto& c, const auto& e, const auto& k) { c.frequency_min_mhz = to_double(e, k); }},
      {"sweep.frequency_max_mhz", [](auto& c, const auto& e, const auto& k) { c.frequency_max_mhz = to_double(e, k); }},
      {"sweep.frequency_points", [](auto& c, const auto& e, const auto& k) { c.frequency_points = to_unsigned(e, k); }},
      {"calibration.target_concurrence", [](auto& c, const auto& e, const auto& k) { targets(c).concurrence = to_double(e, k); }},
      {"calibration.target_purity", [](auto& c, const auto& e, const auto& k) { targets(c).purity = to_double(e, k); }},
      {"calibration.target_nondegenerate_purity",
       [](auto& c, const auto& e, const auto& k) { targets(c).nondegenerate_purity = to_double(e, k); }},
      {"calibration.nondegenerate_delta_f_mhz",
       [](auto& c, const auto& e, const auto& k) { targets(c).nondegenerate_delta_f_mhz = to_double(e, k); }},
      {"calibration.reference_window_ns",
       [](auto& c, const auto& e, const auto& k) { targets(c).reference_window = to_double(e, k); }},
  };
  return table;
}

const std::set<std::string> fitted_keys = {"fitted_accidental_fraction", "fitted_concurrence",
                                           "fitted_purity", "fitted_nondegenerate_purity"};

}  // namespace

BiphotonWavepacket<double> ScenarioConfig::wavepacket() const {
  return BiphotonWavepacket<double>(tau_left, tau_right, angular_from_mhz(delta_f_mhz));
}

void ScenarioConfig::validate() const {
  (void)wavepacket();
  modulation.validate();
  imperfections.validate();
  if (!(pair_rate > 0)) throw ScenarioError("run.pair_rate_per_ns must be positive");
  if (pairs_per_setting == 0) throw ScenarioError("run.pairs_per_setting must be >= 1");
  if (!(window > 0)) throw ScenarioError("run.window_ns must be positive");
  if (background_rate && !(*background_rate >= 0))
    throw ScenarioError("run.background_rate_per_ns must be >= 0");
  if (!(window_min > 0 && window_max > window_min) || window_points < 2)
    throw ScenarioError("sweep windows need 0 < window_min_ns < window_max_ns and >= 2 points");
  if (!(frequency_min_mhz >= 0 && frequency_max_mhz > frequency_min_mhz) || frequency_points < 2)
    throw ScenarioError("sweep frequencies need 0 <= frequency_min_mhz < frequency_max_mhz and >= 2 points");
  if (calibration) calibration->validate();
}

ScenarioConfig parse_scenario(std::istream& in, const std::string& source) {
  ScenarioConfig config;
  std::string section;
  std::set<std::string> seen;
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    const std::string where = source + ":" + std::to_string(number);
    const auto hash = line.find('#');
    const std::string text = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ScenarioError(where + ": malformed section header '" + text + "'");
      section = trim(text.substr(1, text.size() - 2));
      static const std::set<std::string> sections = {"scenario", "wavepacket", "modulation", "imperfections",
                                                     "run", "sweep", "calibration"};
      if (!sections.count(section)) throw ScenarioError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ScenarioError(where + ": expected 'key = value', got '" + text + "'");
    if (section.empty()) throw ScenarioError(where + ": key outside of any [section]");
    const std::string key = trim(text.substr(0, eq));
    const Entry entry{trim(text.substr(eq + 1)), where};
    const std::string full = section + "." + key;
    if (!seen.insert(full).second) throw ScenarioError(where + ": duplicate key '" + full + "'");
    if (entry.value.empty()) throw ScenarioError(where + ": '" + full + "' has no value");

    if (section == "calibration" && fitted_keys.count(key)) {
      config.fitted[key] = to_double(entry, full);
      continue;
    }
    const auto& table = setters();
    const auto it = table.find(full);
    if (it == table.end()) throw ScenarioError(where + ": unknown key '" + key + "' in [" + section + "]");
    it->second(config, entry, full);
    if (section == "imperfections") config.has_imperfections = true;
  }
  try {
    config.validate();
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::invalid_argument& error) {
    throw ScenarioError(source + ": " + error.what());
  }
  return config;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  return parse_scenario(in, path);
}

RunConfig to_run_config(const ScenarioConfig& scenario) {
  scenario.validate();
  RunConfig run;
  run.pair_rate = scenario.pair_rate;
  run.duration = double(scenario.pairs_per_setting) / scenario.pair_rate;
  run.wavepacket = scenario.wavepacket();
  run.modulation = scenario.modulation;
  run.split_ratio = scenario.imperfections.split_ratio;
  run.seed = scenario.seed;
  run.workers = scenario.workers;

  double background = 0;
  if (scenario.background_rate) {
    background = *scenario.background_rate;
  } else {
    // r1 r2 = eps F / (2 W (1 - eps)) in units of the true pair rate.
    const auto& accidentals = scenario.imperfections.accidentals;
    double relative = 0;
    if (const auto* rates = std::get_if<AccidentalRates<double>>(&accidentals)) {
      relative = rates->accidental_rate / rates->pair_rate;
    } else if (const double eps = std::get<double>(accidentals); eps > 0) {
      const double f = windowed_pair_fraction(run.wavepacket, run.modulation, scenario.window);
      relative = eps * f / (2 * scenario.window * (1 - eps));
    }
    const double surviving_pairs = run.pair_rate * envelope_mean(run.modulation, run.wavepacket.delta_omega());
    background = std::sqrt(relative * surviving_pairs);
  }
  run.accidental_rate = {background, background};
  return run;
}

void write_imperfections(std::ostream& out, const CalibrationResult& result,
                         const CalibrationTargets& targets) {
  const auto& rates = std::get<AccidentalRates<double>>(result.model.accidentals);
  out << std::setprecision(15);
  out << "# biphoton imperfection parameters v1\n";
  out << "[imperfections]\n";
  out << "accidental_rate_per_ns2 = " << rates.accidental_rate << '\n';
  out << "pair_rate_per_ns = " << rates.pair_rate << '\n';
  out << "split_ratio = " << result.model.split_ratio << '\n';
  out << "basis_error_a_rad = " << result.model.basis_error[0] << '\n';
  out << "basis_error_b_rad = " << result.model.basis_error[1] << '\n';
  out << "\n[calibration]\n";
  out << "target_concurrence = " << targets.concurrence << '\n';
  out << "target_purity = " << targets.purity << '\n';
  if (targets.nondegenerate_purity)
    out << "target_nondegenerate_purity = " << *targets.nondegenerate_purity << '\n';
  out << "nondegenerate_delta_f_mhz = " << targets.nondegenerate_delta_f_mhz << '\n';
  out << "reference_window_ns = " << targets.reference_window << '\n';
  out << "fitted_accidental_fraction = " << result.accidental_fraction << '\n';
  out << "fitted_concurrence = " << result.degenerate.concurrence << '\n';
  out << "fitted_purity = " << result.degenerate.purity << '\n';
  if (result.nondegenerate)
    out << "fitted_nondegenerate_purity = " << result.nondegenerate->purity << '\n';
}

}  // namespace biphoton
