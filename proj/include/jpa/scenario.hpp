#pragma once

#include <functional>
#include <string>
#include <vector>

#include "jpa/config.hpp"
#include "jpa/covariance.hpp"
#include "jpa/demod.hpp"
#include "jpa/entanglement.hpp"

namespace jpa {

struct SimulatedCovariance {
  CovarianceEstimate estimate;  // VacuumQuarter
  std::vector<CovarianceAccumulator> batches;
};

// Integrate, demodulate and accumulate trajectory by trajectory without keeping traces.
// Batches are contiguous index ranges, each reduced in index order, so the result does not depend
// on jobs.
SimulatedCovariance simulate_covariance(const CavityParams& params, const PumpConfig& pumps, const ModeLayout& layout,
                                        const SimSettings& settings, unsigned jobs = 1, std::size_t n_batches = 20,
                                        DemodOptions demod = {});

// Leave-one-batch-out jackknife standard error of a scalar statistic of the covariance.
double jackknife_se(const std::vector<CovarianceAccumulator>& batches,
                    const std::function<double(const CovarianceMatrix&)>& stat);

// Pump configuration of one sweep point: amplitude A on every tone, the first tone shifted by
// +dphi/2 and the last by -dphi/2 from the configured phases, then the cavity phase correction
// when enabled.
PumpConfig pumps_for_point(const ExperimentConfig& cfg, const double* a, const double* dphi_rad);

struct PointResult {
  std::size_t index = 0;
  double a = 0.0;
  double dphi_deg = 0.0;
  std::vector<double> phases;  // applied, rad
  CovarianceMatrix cov;        // VacuumQuarter
  Eigen::MatrixXd std_error;   // zero for the analytic method
  bool have_oracle = false;
  CovarianceMatrix oracle;
  double max_z = 0.0;          // max |cov - oracle| / SE over elements with SE > 0
  std::vector<double> angles;  // symmetrization angles when enabled
  PptResult ppt;
  GmeResult gme;
  double nu_min_se = 0.0, s_se = 0.0;
};

struct ScenarioReport {
  ExperimentConfig config;
  std::vector<PointResult> points;
};

// Every sweep point (cartesian product of a_values and dphi_deg, or the configured point).
// Errors are rethrown with the point in the message.
ScenarioReport run_scenario(const ExperimentConfig& cfg, unsigned jobs = 1);

// Writes points table, covariances (both unit tags), effective config and manifest. Returns the
// written file names in order.
std::vector<std::string> write_report(const ScenarioReport& report, const std::string& dir, const std::string& format);

std::string version_string();

// Manifest with SHA-256 of the effective config and of every listed file.
std::string manifest_json(const ExperimentConfig& cfg, const std::string& dir, const std::vector<std::string>& files,
                          const std::string& command);

}  // namespace jpa
