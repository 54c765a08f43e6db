#pragma once

#include <string>
#include <vector>

#include "jpa/core.hpp"
#include "jpa/langevin.hpp"

namespace jpa {

struct SweepSpec {
  std::vector<double> a_values;  // normalized amplitude per tone; empty = configured amplitude
  std::vector<double> dphi_deg;  // first tone +dphi/2, last tone -dphi/2; empty = configured phases
};

enum class AnalysisMethod { MonteCarlo, Analytic };

struct AnalysisSpec {
  AnalysisMethod method = AnalysisMethod::MonteCarlo;
  bool symmetrize = false;
  bool compensate_cavity_phase = false;  // add pump_phase_correction to every tone
  bool two_vs_two = false;
  std::size_t n_batches = 20;
  double gme_grid_step = 0.05;
  std::size_t oracle_quad_points = 16;
};

struct OutputSpec {
  std::string directory = "out";
  std::string format = "csv";  // csv | json
  bool dump_traces = false;
};

struct ExperimentConfig {
  std::string scenario = "custom";  // tripartite | quadripartite | custom
  CavityParams cavity;
  PumpConfig pumps;
  ModeLayout layout;
  SimSettings sim;
  SweepSpec sweep;
  AnalysisSpec analysis;
  OutputSpec outputs;
};

// Parses a JSON document, fills scenario defaults and cross-checks layout against pumps, Nyquist
// and the stability guard. Throws ConfigInvalid listing every violation.
ExperimentConfig validate_config(const std::string& raw);
ExperimentConfig load_config(const std::string& path);

// Canonical JSON of the effective configuration (all defaults filled in).
std::string config_to_json(const ExperimentConfig& cfg);

// Cross-checks on an already assembled config; empty when valid.
std::vector<std::string> config_violations(const ExperimentConfig& cfg);

}  // namespace jpa
