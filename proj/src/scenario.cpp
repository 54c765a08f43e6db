#include "jpa/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <sstream>

#include "jpa/calibration.hpp"
#include "jpa/graph.hpp"
#include "jpa/util.hpp"

#ifndef JPA_VERSION
#define JPA_VERSION "0.1.0"
#endif

namespace jpa {

std::string version_string() { return JPA_VERSION; }

SimulatedCovariance simulate_covariance(const CavityParams& params, const PumpConfig& pumps, const ModeLayout& layout,
                                        const SimSettings& settings, unsigned jobs, std::size_t n_batches,
                                        DemodOptions demod) {
  const std::size_t n = settings.n_trajectories;
  if (n_batches < 2 || n < n_batches)
    throw Error(ErrorCode::InsufficientData, "need n_trajectories >= n_batches >= 2");
  const std::size_t n_samples = settings.record_steps();
  const double t0 = static_cast<double>(settings.transient_steps()) * settings.dt + 0.5 * settings.dt;
  const Demodulator demodulator(layout, n_samples, settings.dt, t0, demod);
  SimulatedCovariance out;
  out.batches.assign(n_batches, CovarianceAccumulator(2 * layout.n_modes()));
  parallel_for(n_batches, jobs, [&](std::size_t b) {
    const std::size_t lo = b * n / n_batches, hi = (b + 1) * n / n_batches;
    for (std::size_t t = lo; t < hi; ++t) {
      const FieldTrace tr = integrate_trajectory(params, pumps, settings, t);
      out.batches[b].add(demodulator(tr.b_out));
    }
  });
  out.estimate = combine_batches(out.batches, Units::VacuumQuarter);
  return out;
}

double jackknife_se(const std::vector<CovarianceAccumulator>& batches,
                    const std::function<double(const CovarianceMatrix&)>& stat) {
  const std::size_t B = batches.size();
  if (B < 2) return 0.0;
  std::vector<double> th(B);
  for (std::size_t leave = 0; leave < B; ++leave) {
    CovarianceAccumulator acc(batches[0].dim());
    for (std::size_t b = 0; b < B; ++b)
      if (b != leave) acc.merge(batches[b]);
    th[leave] = stat(CovarianceMatrix(acc.covariance(), Units::VacuumQuarter));
  }
  double mean = 0.0;
  for (double t : th) mean += t;
  mean /= static_cast<double>(B);
  double ss = 0.0;
  for (double t : th) ss += (t - mean) * (t - mean);
  return std::sqrt(ss * static_cast<double>(B - 1) / static_cast<double>(B));
}

PumpConfig pumps_for_point(const ExperimentConfig& cfg, const double* a, const double* dphi) {
  PumpConfig p = cfg.pumps;
  if (a) p = p.with_normalized_amplitude(*a, cfg.cavity);
  if (dphi && p.size() > 0) {
    std::vector<double> ph;
    for (const auto& t : p.tones()) ph.push_back(t.phase);
    ph.front() += 0.5 * *dphi;
    ph.back() -= 0.5 * *dphi;
    p = p.with_phases(ph);
  }
  if (cfg.analysis.compensate_cavity_phase) p = with_cavity_phase_response(p, cfg.cavity);
  return p;
}

// Distinct but reproducible stream per sweep point.
static std::uint64_t point_seed(std::uint64_t seed, std::size_t point) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(point), 0x706f696eu};
  std::uint32_t w[2];
  seq.generate(w, w + 2);
  return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

ScenarioReport run_scenario(const ExperimentConfig& cfg, unsigned jobs) {
  auto v = config_violations(cfg);
  if (!v.empty()) throw ConfigInvalid(v);
  ScenarioReport rep;
  rep.config = cfg;
  std::vector<std::pair<const double*, const double*>> grid;
  std::vector<double> dphi_rad;
  for (double d : cfg.sweep.dphi_deg) dphi_rad.push_back(d * kPi / 180.0);
  const std::size_t na = std::max<std::size_t>(cfg.sweep.a_values.size(), 1);
  const std::size_t nd = std::max<std::size_t>(dphi_rad.size(), 1);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nd; ++j)
      grid.push_back({cfg.sweep.a_values.empty() ? nullptr : &cfg.sweep.a_values[i],
                      dphi_rad.empty() ? nullptr : &dphi_rad[j]});

  for (std::size_t k = 0; k < grid.size(); ++k) {
    PointResult pr;
    pr.index = k;
    pr.a = grid[k].first ? *grid[k].first
                         : (cfg.pumps.size() ? cfg.pumps.normalized_amplitude(0, cfg.cavity) : 0.0);
    pr.dphi_deg = grid[k].second ? *grid[k].second * 180.0 / kPi : 0.0;
    try {
      const PumpConfig pumps = pumps_for_point(cfg, grid[k].first, grid[k].second);
      for (const auto& t : pumps.tones()) pr.phases.push_back(t.phase);
      OracleOptions oo;
      oo.quad_points = cfg.analysis.oracle_quad_points;
      std::vector<CovarianceAccumulator> batches;
      if (cfg.analysis.method == AnalysisMethod::Analytic) {
        pr.cov = analytic_output_covariance(cfg.cavity, pumps, cfg.layout, oo);
        pr.std_error = Eigen::MatrixXd::Zero(pr.cov.data.rows(), pr.cov.data.cols());
        pr.oracle = pr.cov;
        pr.have_oracle = true;
      } else {
        SimSettings s = cfg.sim;
        s.seed = point_seed(cfg.sim.seed, k);
        auto sim = simulate_covariance(cfg.cavity, pumps, cfg.layout, s, jobs, cfg.analysis.n_batches);
        pr.cov = sim.estimate.cov;
        pr.std_error = sim.estimate.std_error;
        batches = std::move(sim.batches);
        if (cfg.cavity.kerr == 0.0) {
          pr.oracle = analytic_output_covariance(cfg.cavity, pumps, cfg.layout, oo);
          pr.have_oracle = true;
          for (Eigen::Index r = 0; r < pr.cov.data.rows(); ++r)
            for (Eigen::Index c = 0; c < pr.cov.data.cols(); ++c)
              if (pr.std_error(r, c) > 0.0)
                pr.max_z = std::max(pr.max_z, std::abs(pr.cov.data(r, c) - pr.oracle.data(r, c)) / pr.std_error(r, c));
        }
      }
      require_physical(pr.cov, &pr.std_error);
      CovarianceMatrix analysed = pr.cov;
      if (cfg.analysis.symmetrize && pr.cov.n_modes() >= 2) {
        auto sym = symmetrize_covariance(pr.cov);
        pr.angles = sym.angles;
        analysed = sym.cov;
      }
      pr.ppt = ppt_full_inseparability(analysed, cfg.analysis.two_vs_two);
      const std::size_t nm = analysed.n_modes();
      if (nm == 3 || nm == 4) pr.gme = optimize_gme(analysed, {cfg.analysis.gme_grid_step});
      if (!batches.empty()) {
        const auto angles = pr.angles;
        auto prep = [&](const CovarianceMatrix& c) { return angles.empty() ? c : rotate_covariance(c, angles); };
        pr.nu_min_se = jackknife_se(batches, [&](const CovarianceMatrix& c) { return ppt_full_inseparability(prep(c)).min_nu(); });
        if (nm == 3 || nm == 4)
          pr.s_se = jackknife_se(batches, [&](const CovarianceMatrix& c) {
            return gme_S(prep(c), pr.gme.weights_h, pr.gme.weights_g);
          });
      }
    } catch (const ConfigInvalid&) {
      throw;
    } catch (const Error& e) {
      throw Error(e.code(), "sweep point " + std::to_string(k) + " (A=" + format_double(pr.a) +
                                ", dphi=" + format_double(pr.dphi_deg) + " deg): " + e.what());
    }
    rep.points.push_back(std::move(pr));
  }
  return rep;
}

namespace {

std::string points_csv(const ScenarioReport& rep) {
  std::ostringstream os;
  if (rep.points.empty()) return "";
  const auto& p0 = rep.points.front();
  os << "point,a,dphi_deg";
  for (std::size_t d = 0; d < p0.phases.size(); ++d) os << ",phase" << d + 1 << "_deg";
  for (const auto& e : p0.ppt.entries) os << ",nu_" << e.label;
  os << ",nu_min,nu_min_se,fully_inseparable,s_value,s_se,base_mode";
  for (std::size_t i = 0; i < p0.gme.weights_h.size(); ++i) os << ",h" << i + 1;
  for (std::size_t i = 0; i < p0.gme.weights_g.size(); ++i) os << ",g" << i + 1;
  os << ",max_z_vs_oracle\n";
  for (const auto& p : rep.points) {
    os << p.index << ',' << format_double(p.a) << ',' << format_double(p.dphi_deg);
    for (double ph : p.phases) os << ',' << format_double(ph * 180.0 / kPi);
    for (const auto& e : p.ppt.entries) os << ',' << format_double(e.nu_min);
    os << ',' << format_double(p.ppt.min_nu()) << ',' << format_double(p.nu_min_se) << ','
       << (p.ppt.fully_inseparable ? 1 : 0) << ',' << format_double(p.gme.s_value) << ',' << format_double(p.s_se)
       << ',' << p.gme.base_mode + 1;
    for (double h : p.gme.weights_h) os << ',' << format_double(h);
    for (double g : p.gme.weights_g) os << ',' << format_double(g);
    os << ',' << (p.have_oracle && p.std_error.maxCoeff() > 0.0 ? format_double(p.max_z) : std::string("")) << '\n';
  }
  return os.str();
}

nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::vector<std::string> write_report(const ScenarioReport& rep, const std::string& dir, const std::string& format) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  auto put = [&](const std::string& name, const std::string& text) {
    write_file((std::filesystem::path(dir) / name).string(), text);
    files.push_back(name);
  };
  put("config.json", config_to_json(rep.config));
  CovarianceMetadata meta;
  for (double c : rep.config.layout.centers) {
    meta.frequencies.push_back(rep.config.cavity.omega_r / kTwoPi + c);
    meta.bandwidths.push_back(rep.config.layout.bandwidth);
  }
  if (format == "json") {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& p : rep.points) {
      nlohmann::ordered_json e;
      e["point"] = p.index;
      e["a"] = p.a;
      e["dphi_deg"] = p.dphi_deg;
      std::vector<double> deg;
      for (double ph : p.phases) deg.push_back(ph * 180.0 / kPi);
      e["phases_deg"] = deg;
      e["covariance_vacuum_quarter"] = matrix_json(p.cov.data);
      e["covariance_vacuum_unit"] = matrix_json(convert_units(p.cov, Units::VacuumUnit).data);
      e["std_error_vacuum_quarter"] = matrix_json(p.std_error);
      if (p.have_oracle) {
        e["oracle_vacuum_quarter"] = matrix_json(p.oracle.data);
        e["max_z_vs_oracle"] = p.max_z;
      }
      if (!p.angles.empty()) e["symmetrization_angles"] = p.angles;
      e["entanglement"] = nlohmann::ordered_json::parse(entanglement_report_json(p.cov, p.ppt, &p.gme));
      e["nu_min_se"] = p.nu_min_se;
      e["s_se"] = p.s_se;
      j.push_back(e);
    }
    put("report.json", j.dump(2) + "\n");
  } else {
    put("points.csv", points_csv(rep));
    for (const auto& p : rep.points) {
      const std::string stem = "covariance_p" + std::to_string(p.index);
      write_covariance_csv((std::filesystem::path(dir) / (stem + "_quarter.csv")).string(), p.cov, meta);
      files.push_back(stem + "_quarter.csv");
      files.push_back(stem + "_quarter.csv.json");
      write_covariance_csv((std::filesystem::path(dir) / (stem + "_unit.csv")).string(),
                           convert_units(p.cov, Units::VacuumUnit), meta);
      files.push_back(stem + "_unit.csv");
      files.push_back(stem + "_unit.csv.json");
      if (rep.config.analysis.method == AnalysisMethod::MonteCarlo) {
        put("stderr_p" + std::to_string(p.index) + "_quarter.csv", covariance_csv(CovarianceMatrix(p.std_error, Units::VacuumQuarter)));
        if (p.have_oracle) put("oracle_p" + std::to_string(p.index) + "_quarter.csv", covariance_csv(p.oracle));
      }
    }
  }
  return files;
}

std::string manifest_json(const ExperimentConfig& cfg, const std::string& dir, const std::vector<std::string>& files,
                          const std::string& command) {
  nlohmann::ordered_json j;
  j["tool"] = "jpa";
  j["version"] = version_string();
  j["command"] = command;
  j["config_sha256"] = sha256_hex(config_to_json(cfg));
  j["seed"] = cfg.sim.seed;
  nlohmann::ordered_json f = nlohmann::ordered_json::array();
  for (const auto& name : files)
    f.push_back({{"file", name}, {"sha256", sha256_hex(read_file((std::filesystem::path(dir) / name).string()))}});
  j["files"] = f;
  return j.dump(2) + "\n";
}

}  // namespace jpa
