#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jpa/core.hpp"

namespace jpa {

// b_out / b_in = 1 - kappa / (-i(omega - omega_r) + (kappa + gamma)/2), linear cavity.
cplx reflection_response(double omega, const CavityParams& params);

struct ResonancePoint {
  double omega = 0.0;  // rad/s, absolute
  cplx response;
};

struct ResonanceFit {
  double omega_r = 0.0, kappa = 0.0, gamma = 0.0;
  double se_omega_r = 0.0, se_kappa = 0.0, se_gamma = 0.0;
  double residual_norm = 0.0;  // RMS of |model - data| over points
  std::size_t iterations = 0;
};

// Levenberg-Marquardt on the complex residuals. Throws FitDiverged when the data show no
// resonance (|1 - r|^2 contrast below 1.5) or the solver fails or ends unphysical.
ResonanceFit fit_resonance(const std::vector<ResonancePoint>& sweep);

// arg of reflection_response, wrapped to (-pi, pi].
double cavity_phase_response(double omega, const CavityParams& params);

// Phase picked up by a tone at omega_r + offset relative to one on resonance.
double phase_offset_from_resonance(double offset, const CavityParams& params);

// Pump phase correction for a tone at omega_sigma + detuning: half the cavity phase offset at
// omega_r + detuning, the outer mode that tone feeds in the equidistant schemes.
double pump_phase_correction(double detuning, const CavityParams& params);

// Applies pump_phase_correction to every tone.
PumpConfig with_cavity_phase_response(const PumpConfig& pumps, const CavityParams& params);

struct GainMapOptions {
  double record_time = 0.0;        // s; 0 selects 200/(kappa+gamma)
  double probe_snr_db = 40.0;      // probe power above the vacuum floor of one record bin
  std::size_t n_trajectories = 1;  // averaged per cell
  std::uint64_t seed = 7;
  unsigned jobs = 1;
};

struct GainMap {
  std::vector<double> detunings;   // probe offset from omega_r, rad/s
  std::vector<double> amplitudes;  // normalized A
  Eigen::MatrixXd gain_db;         // rows: amplitudes, cols: detunings
};

// Degenerate pump at 2 omega_r with a weak coherent probe; gain is the probe-line output power
// relative to A = 0 at the same detuning.
GainMap simulate_gain_map(const CavityParams& params, const std::vector<double>& probe_detunings,
                          const std::vector<double>& amplitudes, const GainMapOptions& opts = {});

struct KerrFit {
  double kerr = 0.0;
  double residual = 0.0;  // RMS dB difference
  std::vector<double> scan_k, scan_cost;
};

// 1-D search over K in [0, k_max]: coarse scan, then Brent refinement around the best point.
KerrFit fit_kerr(const GainMap& measured, const CavityParams& params, double k_max, const GainMapOptions& opts = {},
                 std::size_t scan_points = 13);

std::string gain_map_csv(const GainMap& map);

struct NoiseSweepPoint {
  double source_temperature = 0.0;  // K
  double power_density = 0.0;       // W/Hz
};

struct FriisFit {
  double gain_db = 0.0, se_gain_db = 0.0;
  double t_preamp = 0.0, se_t_preamp = 0.0;
  double gain_linear = 0.0;
  std::size_t n_points = 0;
};

// power_density = k_B G (T + T_preamp) fitted on points with T > min_temperature.
FriisFit friis_fit(const std::vector<NoiseSweepPoint>& sweep, double min_temperature = 0.2);

// CSV with header temperature_K,power_W_per_Hz.
std::vector<NoiseSweepPoint> read_noise_sweep_csv(const std::string& path);
std::string noise_sweep_csv(const std::vector<NoiseSweepPoint>& sweep);

}  // namespace jpa
