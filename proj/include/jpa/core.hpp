#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "jpa/errors.hpp"

namespace jpa {

using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kPlanck = 6.62607015e-34;
constexpr double kBoltzmann = 1.380649e-23;

// Wraps into (-pi, pi].
double wrap_phase(double phi);

// Mean thermal occupation at frequency f_hz; zero for T = 0.
double thermal_occupation(double f_hz, double temperature);

// coth(h f / 2 k_B T), i.e. 2 nbar + 1.
double thermal_factor(double f_hz, double temperature);

// All rates are angular (rad/s).
struct CavityParams {
  double omega_r = kTwoPi * 6.024e9;
  double kappa = kTwoPi * 4.44e6;
  double gamma = kTwoPi * 2.30e6;
  double kerr = 0.0;
  double delta_r = 0.0;
  double temperature = 0.02;

  double total_rate() const { return kappa + gamma; }
  // Throws ConfigInvalid on kappa <= 0, gamma < 0, temperature < 0 or non-finite fields.
  void validate() const;
  std::vector<std::string> violations() const;
};

struct PumpTone {
  double detuning = 0.0;   // relative to omega_sigma, rad/s
  double amplitude = 0.0;  // alpha, rad/s
  double phase = 0.0;      // rad, wrapped
};

class PumpConfig {
 public:
  PumpConfig() = default;
  // Detunings are re-centered on their mean (the shift is absorbed into
  // omega_sigma) and phases are wrapped.
  explicit PumpConfig(std::vector<PumpTone> tones, double omega_sigma = 0.0);

  const std::vector<PumpTone>& tones() const { return tones_; }
  std::size_t size() const { return tones_.size(); }
  const PumpTone& operator[](std::size_t i) const { return tones_.at(i); }
  double omega_sigma() const { return omega_sigma_; }

  double normalized_amplitude(std::size_t i, const CavityParams& params) const;

  PumpConfig with_phases(const std::vector<double>& phases) const;
  PumpConfig with_amplitudes(double alpha) const;
  PumpConfig with_normalized_amplitude(double a, const CavityParams& params) const;
  PumpConfig with_extra_tones(const std::vector<PumpTone>& extra) const;

 private:
  std::vector<PumpTone> tones_;
  double omega_sigma_ = 0.0;
};

// Sets delta_r = omega_r - omega_sigma/2. Only meaningful when omega_sigma is
// an absolute pump frequency; relative configs keep the configured delta_r.
CavityParams retune(const CavityParams& params, const PumpConfig& pumps);

struct ModeLayout {
  std::vector<double> centers;  // Hz, offsets from omega_sigma/2
  double bandwidth = 0.0;       // Hz
  double guard = 0.0;           // Hz

  std::size_t n_modes() const { return centers.size(); }
  // Throws Error(LayoutOverlap) when spacing < bandwidth + guard or centers unsorted.
  void validate() const;
};

enum class Units { VacuumQuarter, VacuumUnit };

const char* units_name(Units u);
Units parse_units(const std::string& s);

struct CovarianceMatrix {
  Eigen::MatrixXd data;
  Units units = Units::VacuumQuarter;

  CovarianceMatrix() = default;
  CovarianceMatrix(Eigen::MatrixXd d, Units u);

  std::size_t n_modes() const { return static_cast<std::size_t>(data.rows() / 2); }
  // Throws DimensionMismatch for odd or non-square, NotPositiveDefinite below -1e-9 trace.
  void validate() const;
};

CovarianceMatrix convert_units(const CovarianceMatrix& cov, Units target);
CovarianceMatrix vacuum_covariance(std::size_t n_modes, Units units);
Eigen::MatrixXd symplectic_form(std::size_t n_modes);

// Device presets. A is the normalized amplitude per tone.
struct Preset {
  std::string name;
  CavityParams cavity;
  PumpConfig pumps;
  ModeLayout layout;
};

Preset tripartite_preset(double a = 0.1, std::vector<double> phases = {kPi / 2, kPi / 2});
Preset quadripartite_preset(double a = 0.08, std::vector<double> phases = {kPi / 2, kPi / 2, kPi / 2});

}  // namespace jpa
