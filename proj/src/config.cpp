#include "jpa/config.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "jpa/graph.hpp"
#include "jpa/util.hpp"

namespace jpa {

using nlohmann::json;

namespace {

class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
      errors_.push_back(path + ": expected an object");
      return;
    }
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!allowed.count(it.key())) errors_.push_back(path + "." + it.key() + ": unknown key");
  }

  template <class T>
  bool get(const json& obj, const std::string& key, const std::string& path, T& out) {
    if (!obj.is_object() || !obj.contains(key)) return false;
    try {
      out = obj.at(key).get<T>();
      return true;
    } catch (const json::exception&) {
      errors_.push_back(path + "." + key + ": wrong type");
      return false;
    }
  }

  // Non-negative JSON integers only; get<> would wrap negative values.
  template <class T>
  bool count(const json& obj, const std::string& key, const std::string& path, T& out) {
    if (!obj.is_object() || !obj.contains(key)) return false;
    if (!obj.at(key).is_number_unsigned()) {
      errors_.push_back(path + "." + key + ": must be a non-negative integer");
      return false;
    }
    out = obj.at(key).get<T>();
    return true;
  }

  // Numbers only, finite.
  bool number(const json& obj, const std::string& key, const std::string& path, double& out) {
    double v = 0.0;
    if (!get(obj, key, path, v)) return false;
    if (!std::isfinite(v)) {
      errors_.push_back(path + "." + key + ": must be finite");
      return false;
    }
    out = v;
    return true;
  }

  bool numbers(const json& obj, const std::string& key, const std::string& path, std::vector<double>& out) {
    if (!obj.is_object() || !obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (v.is_number()) {
      out = {v.get<double>()};
      return true;
    }
    std::vector<double> tmp;
    if (!get(obj, key, path, tmp)) return false;
    for (double x : tmp)
      if (!std::isfinite(x)) {
        errors_.push_back(path + "." + key + ": entries must be finite");
        return false;
      }
    out = tmp;
    return true;
  }

 private:
  std::vector<std::string>& errors_;
};

std::string layout_problem(const ModeLayout& layout) {
  try {
    layout.validate();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

std::vector<std::string> config_violations(const ExperimentConfig& cfg) {
  std::vector<std::string> v = cfg.cavity.violations();
  const std::string lp = layout_problem(cfg.layout);
  if (!lp.empty()) v.push_back("layout: " + lp);
  if (lp.empty()) {
    try {
      pump_mode_pairs(cfg.pumps, cfg.layout);
    } catch (const Error& e) {
      v.push_back(std::string("pumps: ") + e.what());
    }
    if (cfg.sim.dt > 0.0) {
      const double nyq = 0.5 / cfg.sim.dt;
      for (std::size_t i = 0; i < cfg.layout.n_modes(); ++i)
        if (std::abs(cfg.layout.centers[i]) + 0.5 * cfg.layout.bandwidth > nyq)
          v.push_back("layout: mode " + std::to_string(i + 1) + " extends beyond the Nyquist frequency of sim.dt");
    }
  }
  const double bw = lp.empty() ? cfg.layout.bandwidth : 0.0;
  for (auto& s : settings_violations(cfg.sim, cfg.cavity, bw)) v.push_back("sim: " + s);
  for (double a : cfg.sweep.a_values)
    if (!(a >= 0.0)) v.push_back("sweep.a_values: entries must be >= 0");
  if (cfg.analysis.n_batches < 2) v.push_back("analysis.n_batches must be >= 2");
  if (cfg.analysis.method == AnalysisMethod::MonteCarlo && cfg.sim.n_trajectories < cfg.analysis.n_batches)
    v.push_back("sim.n_trajectories must be >= analysis.n_batches");
  if (!(cfg.analysis.gme_grid_step > 0.0 && cfg.analysis.gme_grid_step <= 1.0))
    v.push_back("analysis.gme_grid_step must be in (0, 1]");
  if (cfg.analysis.oracle_quad_points < 1) v.push_back("analysis.oracle_quad_points must be >= 1");
  if (cfg.outputs.format != "csv" && cfg.outputs.format != "json") v.push_back("outputs.format must be csv or json");
  return v;
}

ExperimentConfig validate_config(const std::string& raw) {
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw ConfigInvalid({std::string("config is not valid JSON: ") + e.what()});
  }
  std::vector<std::string> errors;
  Reader rd(errors);
  rd.check_keys(doc, "config", {"scenario", "cavity", "pumps", "layout", "sim", "sweep", "analysis", "outputs"});
  if (!errors.empty()) throw ConfigInvalid(errors);

  ExperimentConfig cfg;
  rd.get(doc, "scenario", "config", cfg.scenario);
  Preset preset;
  const bool is_preset = cfg.scenario == "tripartite" || cfg.scenario == "quadripartite";
  if (cfg.scenario == "tripartite") preset = tripartite_preset();
  else if (cfg.scenario == "quadripartite") preset = quadripartite_preset();
  else if (cfg.scenario != "custom") errors.push_back("scenario must be tripartite, quadripartite or custom");
  if (is_preset) cfg.cavity = preset.cavity;

  // cavity
  const json cav = doc.value("cavity", json::object());
  rd.check_keys(cav, "cavity", {"omega_r_hz", "kappa_hz", "gamma_hz", "kerr_hz", "delta_r_hz", "temperature_k"});
  double x;
  if (rd.number(cav, "omega_r_hz", "cavity", x)) cfg.cavity.omega_r = kTwoPi * x;
  if (rd.number(cav, "kappa_hz", "cavity", x)) cfg.cavity.kappa = kTwoPi * x;
  if (rd.number(cav, "gamma_hz", "cavity", x)) cfg.cavity.gamma = kTwoPi * x;
  if (rd.number(cav, "kerr_hz", "cavity", x)) cfg.cavity.kerr = kTwoPi * x;
  if (rd.number(cav, "delta_r_hz", "cavity", x)) cfg.cavity.delta_r = kTwoPi * x;
  if (rd.number(cav, "temperature_k", "cavity", x)) cfg.cavity.temperature = x;

  // pumps
  const json pj = doc.value("pumps", json::object());
  rd.check_keys(pj, "pumps", {"detunings_hz", "amplitude_a", "phases_deg", "omega_sigma_hz"});
  std::vector<double> det, amp, ph;
  if (is_preset) {
    for (const auto& t : preset.pumps.tones()) {
      det.push_back(t.detuning / kTwoPi);
      amp.push_back(t.amplitude / preset.cavity.total_rate());
      ph.push_back(t.phase * 180.0 / kPi);
    }
  }
  const bool have_det = rd.numbers(pj, "detunings_hz", "pumps", det);
  if (!rd.numbers(pj, "amplitude_a", "pumps", amp) && have_det && !is_preset) amp = {0.1};
  if (!rd.numbers(pj, "phases_deg", "pumps", ph) && have_det && (ph.size() != det.size())) ph.assign(det.size(), 90.0);
  if (!is_preset && !have_det) errors.push_back("pumps.detunings_hz is required for a custom scenario");
  if (amp.size() == 1 && det.size() > 1) amp.assign(det.size(), amp[0]);
  if (amp.size() != det.size()) errors.push_back("pumps.amplitude_a must be a number or one entry per tone");
  if (ph.size() != det.size()) errors.push_back("pumps.phases_deg must have one entry per tone");
  for (double a : amp)
    if (!(a >= 0.0)) errors.push_back("pumps.amplitude_a must be >= 0");
  double omega_sigma = 0.0;
  const bool have_sigma = rd.number(pj, "omega_sigma_hz", "pumps", x);
  if (have_sigma) omega_sigma = kTwoPi * x;

  // layout
  if (is_preset) cfg.layout = preset.layout;
  const json lj = doc.value("layout", json::object());
  rd.check_keys(lj, "layout", {"centers_hz", "bandwidth_hz", "guard_hz"});
  rd.numbers(lj, "centers_hz", "layout", cfg.layout.centers);
  rd.number(lj, "bandwidth_hz", "layout", cfg.layout.bandwidth);
  rd.number(lj, "guard_hz", "layout", cfg.layout.guard);
  if (!is_preset && cfg.layout.centers.empty()) errors.push_back("layout.centers_hz is required for a custom scenario");

  if (!errors.empty()) throw ConfigInvalid(errors);

  const double G = cfg.cavity.total_rate();
  std::vector<PumpTone> tones;
  for (std::size_t i = 0; i < det.size(); ++i) tones.push_back({kTwoPi * det[i], amp[i] * G, ph[i] * kPi / 180.0});
  try {
    cfg.pumps = PumpConfig(tones, have_sigma ? omega_sigma : 0.0);
  } catch (const ConfigInvalid& e) {
    for (const auto& v : e.violations()) errors.push_back("pumps: " + v);
    throw ConfigInvalid(errors);
  }
  if (have_sigma) cfg.cavity = retune(cfg.cavity, cfg.pumps);

  // sim
  const json sj = doc.value("sim", json::object());
  rd.check_keys(sj, "sim", {"dt_s", "transient_s", "record_s", "n_trajectories", "seed", "overflow_photons"});
  std::size_t ntraj = 200;
  std::uint64_t seed = 1;
  rd.count(sj, "n_trajectories", "sim", ntraj);
  rd.count(sj, "seed", "sim", seed);
  if (layout_problem(cfg.layout).empty() && cfg.cavity.violations().empty()) {
    cfg.sim = default_settings(cfg.cavity, cfg.layout, ntraj, seed);
  } else {
    cfg.sim.n_trajectories = ntraj;
    cfg.sim.seed = seed;
  }
  double record = cfg.sim.duration - cfg.sim.transient;
  if (rd.number(sj, "dt_s", "sim", x)) cfg.sim.dt = x;
  if (rd.number(sj, "transient_s", "sim", x)) cfg.sim.transient = x;
  if (rd.number(sj, "record_s", "sim", x)) record = x;
  cfg.sim.duration = cfg.sim.transient + record;
  rd.number(sj, "overflow_photons", "sim", cfg.sim.overflow_photons);

  // sweep
  const json wj = doc.value("sweep", json::object());
  rd.check_keys(wj, "sweep", {"a_values", "dphi_deg"});
  rd.numbers(wj, "a_values", "sweep", cfg.sweep.a_values);
  rd.numbers(wj, "dphi_deg", "sweep", cfg.sweep.dphi_deg);

  // analysis
  const json aj = doc.value("analysis", json::object());
  rd.check_keys(aj, "analysis", {"method", "symmetrize", "compensate_cavity_phase", "two_vs_two", "n_batches",
                                 "gme_grid_step", "oracle_quad_points"});
  std::string method = "monte_carlo";
  rd.get(aj, "method", "analysis", method);
  if (method == "monte_carlo") cfg.analysis.method = AnalysisMethod::MonteCarlo;
  else if (method == "analytic") cfg.analysis.method = AnalysisMethod::Analytic;
  else errors.push_back("analysis.method must be monte_carlo or analytic");
  rd.get(aj, "symmetrize", "analysis", cfg.analysis.symmetrize);
  rd.get(aj, "compensate_cavity_phase", "analysis", cfg.analysis.compensate_cavity_phase);
  rd.get(aj, "two_vs_two", "analysis", cfg.analysis.two_vs_two);
  rd.count(aj, "n_batches", "analysis", cfg.analysis.n_batches);
  rd.number(aj, "gme_grid_step", "analysis", cfg.analysis.gme_grid_step);
  rd.count(aj, "oracle_quad_points", "analysis", cfg.analysis.oracle_quad_points);

  // outputs
  const json oj = doc.value("outputs", json::object());
  rd.check_keys(oj, "outputs", {"directory", "format", "dump_traces"});
  rd.get(oj, "directory", "outputs", cfg.outputs.directory);
  rd.get(oj, "format", "outputs", cfg.outputs.format);
  rd.get(oj, "dump_traces", "outputs", cfg.outputs.dump_traces);

  for (auto& v : config_violations(cfg)) errors.push_back(v);
  if (!errors.empty()) throw ConfigInvalid(errors);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::string raw;
  try {
    raw = read_file(path);
  } catch (const Error& e) {
    throw ConfigInvalid({e.what()});
  }
  return validate_config(raw);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["scenario"] = cfg.scenario;
  j["cavity"] = {{"omega_r_hz", cfg.cavity.omega_r / kTwoPi},   {"kappa_hz", cfg.cavity.kappa / kTwoPi},
                 {"gamma_hz", cfg.cavity.gamma / kTwoPi},       {"kerr_hz", cfg.cavity.kerr / kTwoPi},
                 {"delta_r_hz", cfg.cavity.delta_r / kTwoPi},   {"temperature_k", cfg.cavity.temperature}};
  std::vector<double> det, amp, ph;
  for (const auto& t : cfg.pumps.tones()) {
    det.push_back(t.detuning / kTwoPi);
    amp.push_back(t.amplitude / cfg.cavity.total_rate());
    ph.push_back(t.phase * 180.0 / kPi);
  }
  j["pumps"] = {{"detunings_hz", det}, {"amplitude_a", amp}, {"phases_deg", ph}};
  j["layout"] = {{"centers_hz", cfg.layout.centers}, {"bandwidth_hz", cfg.layout.bandwidth}, {"guard_hz", cfg.layout.guard}};
  j["sim"] = {{"dt_s", cfg.sim.dt},
              {"transient_s", cfg.sim.transient},
              {"record_s", cfg.sim.duration - cfg.sim.transient},
              {"n_trajectories", cfg.sim.n_trajectories},
              {"seed", cfg.sim.seed},
              {"overflow_photons", cfg.sim.overflow_photons}};
  j["sweep"] = {{"a_values", cfg.sweep.a_values}, {"dphi_deg", cfg.sweep.dphi_deg}};
  j["analysis"] = {{"method", cfg.analysis.method == AnalysisMethod::MonteCarlo ? "monte_carlo" : "analytic"},
                   {"symmetrize", cfg.analysis.symmetrize},
                   {"compensate_cavity_phase", cfg.analysis.compensate_cavity_phase},
                   {"two_vs_two", cfg.analysis.two_vs_two},
                   {"n_batches", cfg.analysis.n_batches},
                   {"gme_grid_step", cfg.analysis.gme_grid_step},
                   {"oracle_quad_points", cfg.analysis.oracle_quad_points}};
  j["outputs"] = {{"directory", cfg.outputs.directory}, {"format", cfg.outputs.format}, {"dump_traces", cfg.outputs.dump_traces}};
  return j.dump(2) + "\n";
}

}  // namespace jpa
