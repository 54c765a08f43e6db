#include "jpa/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace jpa {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::NumericalOverflow: return "NumericalOverflow";
    case ErrorCode::LayoutOverlap: return "LayoutOverlap";
    case ErrorCode::BandwidthExceeded: return "BandwidthExceeded";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NonPositiveGain: return "NonPositiveGain";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::InvalidModeSet: return "InvalidModeSet";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::UnmatchedPump: return "UnmatchedPump";
    case ErrorCode::SingularAtThreshold: return "SingularAtThreshold";
    case ErrorCode::NonRealResidue: return "NonRealResidue";
    case ErrorCode::UnsupportedTarget: return "UnsupportedTarget";
    case ErrorCode::FitDiverged: return "FitDiverged";
    case ErrorCode::DegenerateSweep: return "DegenerateSweep";
    case ErrorCode::PhysicalityViolation: return "PhysicalityViolation";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool is_config_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::LayoutOverlap:
    case ErrorCode::BandwidthExceeded:
    case ErrorCode::UnmatchedPump:
    case ErrorCode::UnsupportedTarget:
    case ErrorCode::Io:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidModeSet:
    case ErrorCode::IndexOutOfRange:
      return true;
    default:
      return false;
  }
}

static std::string join_violations(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += "; ";
    out += v[i];
  }
  return out;
}

ConfigInvalid::ConfigInvalid(std::vector<std::string> violations)
    : Error(ErrorCode::ConfigInvalid, join_violations(violations)), violations_(std::move(violations)) {}

double wrap_phase(double phi) {
  double w = std::remainder(phi, kTwoPi);  // [-pi, pi]
  if (w <= -kPi) w += kTwoPi;
  return w;
}

double thermal_occupation(double f_hz, double temperature) {
  if (temperature <= 0.0) return 0.0;
  double x = kPlanck * f_hz / (kBoltzmann * temperature);
  if (x > 700.0) return 0.0;
  return 1.0 / std::expm1(x);
}

double thermal_factor(double f_hz, double temperature) {
  return 2.0 * thermal_occupation(f_hz, temperature) + 1.0;
}

std::vector<std::string> CavityParams::violations() const {
  std::vector<std::string> v;
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(omega_r) || !finite(kappa) || !finite(gamma) || !finite(kerr) || !finite(delta_r) ||
      !finite(temperature))
    v.push_back("cavity: all fields must be finite");
  if (!(kappa > 0.0)) v.push_back("cavity.kappa must be > 0");
  if (!(gamma >= 0.0)) v.push_back("cavity.gamma must be >= 0");
  if (!(temperature >= 0.0)) v.push_back("cavity.temperature must be >= 0");
  return v;
}

void CavityParams::validate() const {
  auto v = violations();
  if (!v.empty()) throw ConfigInvalid(v);
}

PumpConfig::PumpConfig(std::vector<PumpTone> tones, double omega_sigma)
    : tones_(std::move(tones)), omega_sigma_(omega_sigma) {
  std::vector<std::string> bad;
  for (std::size_t i = 0; i < tones_.size(); ++i) {
    const auto& t = tones_[i];
    if (!(t.amplitude >= 0.0) || !std::isfinite(t.amplitude))
      bad.push_back("pump " + std::to_string(i) + ": amplitude must be finite and >= 0");
    if (!std::isfinite(t.phase)) bad.push_back("pump " + std::to_string(i) + ": phase must be finite");
    if (!std::isfinite(t.detuning)) bad.push_back("pump " + std::to_string(i) + ": detuning must be finite");
  }
  if (!bad.empty()) throw ConfigInvalid(bad);
  if (!tones_.empty()) {
    double mean = 0.0;
    for (const auto& t : tones_) mean += t.detuning;
    mean /= static_cast<double>(tones_.size());
    for (auto& t : tones_) {
      t.detuning -= mean;
      t.phase = wrap_phase(t.phase);
    }
    if (omega_sigma_ != 0.0) omega_sigma_ += mean;
  }
  for (std::size_t i = 0; i < tones_.size(); ++i)
    for (std::size_t j = i + 1; j < tones_.size(); ++j) {
      double scale = std::max({std::abs(tones_[i].detuning), std::abs(tones_[j].detuning), 1.0});
      if (std::abs(tones_[i].detuning - tones_[j].detuning) <= 1e-12 * scale)
        bad.push_back("pumps " + std::to_string(i) + " and " + std::to_string(j) + " share a detuning");
    }
  if (!bad.empty()) throw ConfigInvalid(bad);
}

double PumpConfig::normalized_amplitude(std::size_t i, const CavityParams& params) const {
  return tones_.at(i).amplitude / params.total_rate();
}

PumpConfig PumpConfig::with_phases(const std::vector<double>& phases) const {
  if (phases.size() != tones_.size())
    throw Error(ErrorCode::DimensionMismatch, "phase count does not match tone count");
  auto t = tones_;
  for (std::size_t i = 0; i < t.size(); ++i) t[i].phase = phases[i];
  return PumpConfig(t, omega_sigma_);
}

PumpConfig PumpConfig::with_amplitudes(double alpha) const {
  auto t = tones_;
  for (auto& x : t) x.amplitude = alpha;
  return PumpConfig(t, omega_sigma_);
}

PumpConfig PumpConfig::with_normalized_amplitude(double a, const CavityParams& params) const {
  return with_amplitudes(a * params.total_rate());
}

PumpConfig PumpConfig::with_extra_tones(const std::vector<PumpTone>& extra) const {
  auto t = tones_;
  t.insert(t.end(), extra.begin(), extra.end());
  return PumpConfig(t, omega_sigma_);
}

CavityParams retune(const CavityParams& params, const PumpConfig& pumps) {
  CavityParams out = params;
  if (pumps.omega_sigma() != 0.0) out.delta_r = params.omega_r - pumps.omega_sigma() / 2.0;
  return out;
}

void ModeLayout::validate() const {
  if (centers.empty()) throw Error(ErrorCode::LayoutOverlap, "layout has no modes");
  if (!(bandwidth > 0.0)) throw Error(ErrorCode::LayoutOverlap, "bandwidth must be > 0");
  if (!(guard >= 0.0)) throw Error(ErrorCode::LayoutOverlap, "guard must be >= 0");
  for (std::size_t i = 1; i < centers.size(); ++i) {
    double spacing = centers[i] - centers[i - 1];
    if (spacing < (bandwidth + guard) * (1.0 - 1e-9))
      throw Error(ErrorCode::LayoutOverlap, "modes " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                                " are closer than bandwidth + guard (or unsorted)");
  }
}

const char* units_name(Units u) { return u == Units::VacuumQuarter ? "VacuumQuarter" : "VacuumUnit"; }

Units parse_units(const std::string& s) {
  if (s == "VacuumQuarter") return Units::VacuumQuarter;
  if (s == "VacuumUnit") return Units::VacuumUnit;
  throw Error(ErrorCode::Io, "unknown units tag '" + s + "'");
}

CovarianceMatrix::CovarianceMatrix(Eigen::MatrixXd d, Units u) : data(std::move(d)), units(u) {}

void CovarianceMatrix::validate() const {
  if (data.rows() != data.cols() || data.rows() % 2 != 0 || data.rows() == 0)
    throw Error(ErrorCode::DimensionMismatch, "covariance must be a non-empty square 2N x 2N matrix");
  double scale = std::max(data.cwiseAbs().maxCoeff(), 1e-300);
  if ((data - data.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorCode::DimensionMismatch, "covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (data + data.transpose()), Eigen::EigenvaluesOnly);
  double tr = data.trace();
  if (es.eigenvalues().minCoeff() < -1e-9 * std::abs(tr))
    throw Error(ErrorCode::NotPositiveDefinite, "covariance has a negative eigenvalue");
}

CovarianceMatrix convert_units(const CovarianceMatrix& cov, Units target) {
  if (cov.units == target) return cov;
  if (target == Units::VacuumUnit) return CovarianceMatrix(cov.data * 4.0, target);
  return CovarianceMatrix(cov.data / 4.0, target);
}

CovarianceMatrix vacuum_covariance(std::size_t n_modes, Units units) {
  const double v = units == Units::VacuumUnit ? 1.0 : 0.25;
  return CovarianceMatrix(Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes) * v, units);
}

Eigen::MatrixXd symplectic_form(std::size_t n_modes) {
  Eigen::MatrixXd om = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (std::size_t k = 0; k < n_modes; ++k) {
    om(2 * k, 2 * k + 1) = 1.0;
    om(2 * k + 1, 2 * k) = -1.0;
  }
  return om;
}

Preset tripartite_preset(double a, std::vector<double> phases) {
  Preset p;
  p.name = "tripartite";
  p.cavity.omega_r = kTwoPi * 6.024e9;
  const double delta = kTwoPi * 2.0e6;
  const double alpha = a * p.cavity.total_rate();
  std::vector<PumpTone> tones{{-delta, alpha, phases.at(0)}, {delta, alpha, phases.at(1)}};
  p.pumps = PumpConfig(tones, 2.0 * p.cavity.omega_r);
  p.layout.centers = {-2.0e6, 0.0, 2.0e6};
  p.layout.bandwidth = 1.9e6;
  p.layout.guard = 0.1e6;
  p.cavity = retune(p.cavity, p.pumps);
  return p;
}

Preset quadripartite_preset(double a, std::vector<double> phases) {
  Preset p;
  p.name = "quadripartite";
  p.cavity.omega_r = kTwoPi * 5.978e9;
  const double delta = kTwoPi * 1.0e6;
  const double alpha = a * p.cavity.total_rate();
  std::vector<PumpTone> tones{{-delta, alpha, phases.at(0)}, {0.0, alpha, phases.at(1)}, {delta, alpha, phases.at(2)}};
  p.pumps = PumpConfig(tones, 2.0 * p.cavity.omega_r);
  p.layout.centers = {-0.75e6, -0.25e6, 0.25e6, 0.75e6};
  p.layout.bandwidth = 0.4e6;
  p.layout.guard = 0.1e6;
  p.cavity = retune(p.cavity, p.pumps);
  return p;
}

}  // namespace jpa
