#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "jpa/calibration.hpp"
#include "jpa/config.hpp"
#include "jpa/covariance.hpp"
#include "jpa/entanglement.hpp"
#include "jpa/graph.hpp"
#include "jpa/scenario.hpp"
#include "jpa/util.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace jpa;

namespace {

struct Common {
  std::string config_path;
  std::string out;
  std::string format;
  std::uint64_t seed = 0;
  bool have_seed = false;
  unsigned jobs = 1;
  std::size_t trajectories = 0;
  std::string method;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON configuration file");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->add_option_function<std::uint64_t>("--seed", [&c](const std::uint64_t& s) { c.seed = s; c.have_seed = true; },
                                         "master seed");
  app->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--trajectories", c.trajectories, "Monte-Carlo trajectories per point");
  app->add_option("--method", c.method, "monte_carlo or analytic")->check(CLI::IsMember({"monte_carlo", "analytic"}));
}

json base_document(const Common& c, json fallback) {
  json doc = c.config_path.empty() ? std::move(fallback) : json::parse(read_file(c.config_path), nullptr, true, true);
  if (!doc.is_object()) throw ConfigInvalid({"config: top level must be an object"});
  if (c.have_seed) doc["sim"]["seed"] = c.seed;
  if (c.trajectories) doc["sim"]["n_trajectories"] = c.trajectories;
  if (!c.out.empty()) doc["outputs"]["directory"] = c.out;
  if (!c.format.empty()) doc["outputs"]["format"] = c.format;
  if (!c.method.empty()) doc["analysis"]["method"] = c.method;
  return doc;
}

void write_manifest(const ExperimentConfig& cfg, const std::string& dir, std::vector<std::string> files,
                    const std::string& command) {
  write_file((fs::path(dir) / "manifest.json").string(), manifest_json(cfg, dir, files, command));
}

void run_and_write(const ExperimentConfig& cfg, unsigned jobs, const std::string& command) {
  const ScenarioReport rep = run_scenario(cfg, jobs);
  const auto files = write_report(rep, cfg.outputs.directory, cfg.outputs.format);
  write_manifest(cfg, cfg.outputs.directory, files, command);
  std::cout << "wrote " << files.size() + 1 << " files to " << cfg.outputs.directory << "\n";
}

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> v;
  const auto n = static_cast<long>(std::llround((hi - lo) / step));
  for (long k = 0; k <= n; ++k) v.push_back(std::round((lo + static_cast<double>(k) * step) * 1e9) / 1e9);
  return v;
}

int cmd_simulate(const Common& c) {
  if (c.config_path.empty()) throw ConfigInvalid({"simulate requires --config"});
  const ExperimentConfig cfg = validate_config(base_document(c, json::object()).dump());
  run_and_write(cfg, c.jobs, "simulate");
  return 0;
}

int cmd_analyze(const Common& c, const std::string& input, bool two_vs_two, bool symmetrize) {
  CovarianceMatrix cov = read_covariance_csv(input, Units::VacuumQuarter);
  cov.validate();
  require_physical(cov);
  json extra;
  if (symmetrize && cov.n_modes() >= 2) {
    auto s = symmetrize_covariance(cov);
    cov = s.cov;
    extra["symmetrization_angles"] = s.angles;
  }
  const PptResult ppt = ppt_full_inseparability(cov, two_vs_two);
  GmeResult gme;
  const bool have_gme = cov.n_modes() == 3 || cov.n_modes() == 4;
  if (have_gme) gme = optimize_gme(cov);
  json report = json::parse(entanglement_report_json(cov, ppt, have_gme ? &gme : nullptr));
  if (!extra.empty()) report.update(extra);
  const std::string text = report.dump(2) + "\n";
  if (c.out.empty()) {
    std::cout << text;
  } else {
    fs::create_directories(c.out);
    write_file((fs::path(c.out) / "entanglement.json").string(), text);
  }
  return 0;
}

int cmd_graph(const Common& c, const std::string& scenario, bool bs_search, double threshold) {
  json fb = {{"scenario", scenario}};
  const ExperimentConfig cfg = validate_config(base_document(c, fb).dump());
  PumpConfig pumps = cfg.pumps;
  std::ostringstream info;
  if (bs_search) {
    const auto r = find_bs_suppressing_phases(cfg.cavity, pumps, cfg.layout);
    info << "# bs_search found=" << (r.found ? 1 : 0) << " residual=" << format_double(r.residual) << " phases_deg=";
    for (std::size_t i = 0; i < r.phases.size(); ++i)
      info << (i ? "," : "") << format_double(r.phases[i] * 180.0 / kPi);
    info << "\n";
    if (r.found) pumps = pumps.with_phases(r.phases);
  }
  const auto m = build_interaction_matrix(cfg.cavity, pumps, cfg.layout);
  const HGraph g = extract_graph(invert_interaction(m), threshold);
  const std::string edges = info.str() + graph_edge_list(g);
  if (c.out.empty()) {
    std::cout << edges;
  } else {
    fs::create_directories(c.out);
    write_file((fs::path(c.out) / "graph_edges.txt").string(), edges);
    write_file((fs::path(c.out) / "graph.dot").string(), graph_dot(g));
  }
  return 0;
}

std::vector<ResonancePoint> read_resonance_csv(const std::string& path) {
  std::vector<ResonancePoint> pts;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line, ',');
    if (f.size() != 3) throw Error(ErrorCode::Io, path + ":" + std::to_string(lineno) + ": expected 3 columns");
    try {
      pts.push_back({kTwoPi * std::stod(f[0]), cplx(std::stod(f[1]), std::stod(f[2]))});
    } catch (const std::exception&) {
      if (pts.empty()) continue;  // header
      throw Error(ErrorCode::Io, path + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  return pts;
}

int cmd_calibrate(const Common& c, const std::string& kind, const std::string& input) {
  json j;
  if (kind == "friis") {
    const auto fit = friis_fit(read_noise_sweep_csv(input));
    j = {{"kind", "friis"},         {"gain_db", fit.gain_db},         {"se_gain_db", fit.se_gain_db},
         {"t_preamp_k", fit.t_preamp}, {"se_t_preamp_k", fit.se_t_preamp}, {"n_points", fit.n_points}};
  } else {
    const auto fit = fit_resonance(read_resonance_csv(input));
    j = {{"kind", "resonance"},
         {"omega_r_hz", fit.omega_r / kTwoPi},
         {"kappa_hz", fit.kappa / kTwoPi},
         {"gamma_hz", fit.gamma / kTwoPi},
         {"se_omega_r_hz", fit.se_omega_r / kTwoPi},
         {"se_kappa_hz", fit.se_kappa / kTwoPi},
         {"se_gamma_hz", fit.se_gamma / kTwoPi},
         {"residual_rms", fit.residual_norm},
         {"iterations", fit.iterations}};
  }
  const std::string text = j.dump(2) + "\n";
  if (c.out.empty()) {
    std::cout << text;
  } else {
    fs::create_directories(c.out);
    write_file((fs::path(c.out) / ("calibration_" + kind + ".json")).string(), text);
  }
  return 0;
}

int reproduce_gain_map(const Common& c, double kerr_hz) {
  const std::string dir = c.out.empty() ? "out/gain-map" : c.out;
  CavityParams p;
  p.kerr = kTwoPi * kerr_hz;
  std::vector<double> det;
  for (double f : grid(-4e6, 4e6, 0.25e6)) det.push_back(kTwoPi * f);
  GainMapOptions o;
  o.seed = c.have_seed ? c.seed : 7;
  o.jobs = c.jobs;
  if (c.trajectories) o.n_trajectories = c.trajectories;
  const GainMap map = simulate_gain_map(p, det, grid(0.0, 0.6, 0.05), o);
  fs::create_directories(dir);
  write_file((fs::path(dir) / "gain_map.csv").string(), gain_map_csv(map));
  json m = {{"tool", "jpa"}, {"version", version_string()}, {"command", "reproduce gain-map"},
            {"seed", o.seed}, {"kerr_hz", kerr_hz}, {"n_trajectories", o.n_trajectories},
            {"files", {{{"file", "gain_map.csv"}, {"sha256", sha256_hex(read_file((fs::path(dir) / "gain_map.csv").string()))}}}}};
  write_file((fs::path(dir) / "manifest.json").string(), m.dump(2) + "\n");
  std::cout << "wrote 2 files to " << dir << "\n";
  return 0;
}

int reproduce_phase_response(const Common& c) {
  const std::string dir = c.out.empty() ? "out/phase-response" : c.out;
  const Preset pre = tripartite_preset();
  std::ostringstream os;
  os << "offset_hz,phase_deg,offset_phase_deg\n";
  for (double f : grid(-10e6, 10e6, 0.1e6))
    os << format_double(f) << ','
       << format_double(cavity_phase_response(pre.cavity.omega_r + kTwoPi * f, pre.cavity) * 180.0 / kPi) << ','
       << format_double(phase_offset_from_resonance(kTwoPi * f, pre.cavity) * 180.0 / kPi) << '\n';
  std::ostringstream corr;
  corr << "pump,detuning_hz,nominal_phase_deg,correction_deg,applied_phase_deg\n";
  const PumpConfig applied = with_cavity_phase_response(pre.pumps, pre.cavity);
  for (std::size_t d = 0; d < pre.pumps.size(); ++d)
    corr << d + 1 << ',' << format_double(pre.pumps[d].detuning / kTwoPi) << ','
         << format_double(pre.pumps[d].phase * 180.0 / kPi) << ','
         << format_double(pump_phase_correction(pre.pumps[d].detuning, pre.cavity) * 180.0 / kPi) << ','
         << format_double(applied[d].phase * 180.0 / kPi) << '\n';
  fs::create_directories(dir);
  write_file((fs::path(dir) / "phase_response.csv").string(), os.str());
  write_file((fs::path(dir) / "pump_corrections.csv").string(), corr.str());
  std::cout << "wrote 2 files to " << dir << "\n";
  return 0;
}

int reproduce_graphs(const Common& c) {
  const std::string dir = c.out.empty() ? "out/graphs" : c.out;
  fs::create_directories(dir);
  for (const auto& pre : {tripartite_preset(), quadripartite_preset()}) {
    const auto g = extract_graph(invert_interaction(build_interaction_matrix(pre.cavity, pre.pumps, pre.layout)));
    write_file((fs::path(dir) / (pre.name + "_edges.txt")).string(), graph_edge_list(g));
    write_file((fs::path(dir) / (pre.name + ".dot")).string(), graph_dot(g));
    const auto bs = find_bs_suppressing_phases(pre.cavity, pre.pumps, pre.layout);
    if (bs.found) {
      const auto gb = extract_graph(
          invert_interaction(build_interaction_matrix(pre.cavity, pre.pumps.with_phases(bs.phases), pre.layout)));
      write_file((fs::path(dir) / (pre.name + "_bs_cancelled_edges.txt")).string(), graph_edge_list(gb));
      write_file((fs::path(dir) / (pre.name + "_bs_cancelled.dot")).string(), graph_dot(gb));
    }
  }
  std::cout << "wrote graphs to " << dir << "\n";
  return 0;
}

int cmd_reproduce(const Common& c, const std::string& id, double kerr_hz) {
  if (id == "gain-map") return reproduce_gain_map(c, kerr_hz);
  if (id == "phase-response") return reproduce_phase_response(c);
  if (id == "graphs") return reproduce_graphs(c);
  json doc;
  if (id == "tripartite-gme") {
    doc = {{"scenario", "tripartite"},
           {"sweep", {{"a_values", grid(0.02, 0.44, 0.02)}, {"dphi_deg", {-120.0, -90.0, 90.0}}}},
           {"analysis", {{"method", "analytic"}}}};
  } else if (id == "tripartite-ppt") {
    doc = {{"scenario", "tripartite"},
           {"sweep", {{"a_values", grid(0.02, 0.34, 0.04)}, {"dphi_deg", grid(-180.0, 170.0, 10.0)}}},
           {"analysis", {{"method", "analytic"}}}};
  } else if (id == "quadripartite-ppt") {
    doc = {{"scenario", "quadripartite"},
           {"sweep", {{"a_values", grid(0.01, 0.2, 0.01)}}},
           {"analysis", {{"method", "analytic"}, {"two_vs_two", true}}}};
  } else if (id == "quadripartite-covariance") {
    doc = {{"scenario", "quadripartite"}, {"analysis", {{"method", "analytic"}, {"symmetrize", true}}}};
  } else {
    throw ConfigInvalid({"unknown figure id '" + id +
                         "' (tripartite-gme, tripartite-ppt, quadripartite-ppt, quadripartite-covariance, "
                         "gain-map, phase-response, graphs)"});
  }
  doc["outputs"]["directory"] = "out/" + id;
  json merged = base_document(c, doc);
  if (!c.config_path.empty()) {
    // A supplied config replaces the figure defaults key by key.
    doc.merge_patch(merged);
    merged = doc;
  }
  const ExperimentConfig cfg = validate_config(merged.dump());
  run_and_write(cfg, c.jobs, "reproduce " + id);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-tone parametric cavity simulation and entanglement analysis"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  Common c;
  auto* sim = app.add_subcommand("simulate", "run a configured scenario and write the report bundle");
  add_common(sim, c);

  std::string input;
  bool two_vs_two = false, symmetrize = false;
  auto* ana = app.add_subcommand("analyze", "entanglement report for a covariance CSV");
  add_common(ana, c);
  ana->add_option("input", input, "covariance CSV")->required();
  ana->add_flag("--two-vs-two", two_vs_two, "include 2-vs-2 PPT cuts");
  ana->add_flag("--symmetrize", symmetrize, "apply TMS symmetrization first");

  std::string scenario = "tripartite";
  bool bs_search = false;
  double threshold = 1e-6;
  auto* gr = app.add_subcommand("graph", "H-graph edge list of a pump configuration");
  add_common(gr, c);
  gr->add_option("--scenario", scenario, "preset when no --config is given")
      ->check(CLI::IsMember({"tripartite", "quadripartite"}));
  gr->add_flag("--bs-search", bs_search, "apply BS-suppressing phases when they exist");
  gr->add_option("--threshold", threshold, "relative edge threshold");

  std::string kind;
  auto* cal = app.add_subcommand("calibrate", "fit a calibration sweep");
  add_common(cal, c);
  cal->add_option("--kind", kind, "friis or resonance")->required()->check(CLI::IsMember({"friis", "resonance"}));
  cal->add_option("input", input, "sweep CSV")->required();

  std::string id;
  double kerr_hz = 1e3;
  auto* rep = app.add_subcommand("reproduce", "regenerate a figure-equivalent table");
  add_common(rep, c);
  rep->add_option("id", id, "figure id")->required();
  rep->add_option("--kerr-hz", kerr_hz, "Kerr constant K/2pi for gain-map");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(c);
    if (ana->parsed()) return cmd_analyze(c, input, two_vs_two, symmetrize);
    if (gr->parsed()) return cmd_graph(c, scenario, bs_search, threshold);
    if (cal->parsed()) return cmd_calibrate(c, kind, input);
    if (rep->parsed()) return cmd_reproduce(c, id, kerr_hz);
  } catch (const ConfigInvalid& e) {
    std::cerr << "config error:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << error_name(e.code()) << ": " << e.what() << "\n";
    return is_config_error(e.code()) ? 2 : 3;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
