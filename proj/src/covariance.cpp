#include "jpa/covariance.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "jpa/util.hpp"

namespace jpa {

CovarianceAccumulator::CovarianceAccumulator(std::size_t dim)
    : dim_(dim), sum_(Eigen::VectorXd::Zero(dim)), outer_(Eigen::MatrixXd::Zero(dim, dim)) {}

void CovarianceAccumulator::add_sample(const Eigen::VectorXd& v) {
  if (static_cast<std::size_t>(v.size()) != dim_) throw Error(ErrorCode::DimensionMismatch, "sample size mismatch");
  ++n_;
  sum_ += v;
  outer_.selfadjointView<Eigen::Lower>().rankUpdate(v);
}

void CovarianceAccumulator::add(const QuadratureRecord& rec) {
  if (2 * rec.modes.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "record mode count mismatch");
  if (rec.modes.empty()) return;
  const std::size_t len = rec.modes[0].size();
  for (const auto& m : rec.modes)
    if (m.size() != len) throw Error(ErrorCode::DimensionMismatch, "modes differ in length");
  // Batch the samples into a matrix so the rank update runs as one product.
  Eigen::MatrixXd X(dim_, len);
  for (std::size_t k = 0; k < rec.modes.size(); ++k)
    for (std::size_t s = 0; s < len; ++s) {
      X(2 * k, s) = rec.modes[k][s].real();
      X(2 * k + 1, s) = rec.modes[k][s].imag();
    }
  n_ += len;
  sum_ += X.rowwise().sum();
  outer_.selfadjointView<Eigen::Lower>().rankUpdate(X);
}

void CovarianceAccumulator::merge(const CovarianceAccumulator& other) {
  if (other.dim_ != dim_) throw Error(ErrorCode::DimensionMismatch, "accumulator dimension mismatch");
  n_ += other.n_;
  sum_ += other.sum_;
  outer_ += other.outer_;
}

Eigen::VectorXd CovarianceAccumulator::mean() const {
  if (n_ == 0) throw Error(ErrorCode::InsufficientData, "no samples");
  return sum_ / static_cast<double>(n_);
}

Eigen::MatrixXd CovarianceAccumulator::covariance() const {
  if (n_ < 2) throw Error(ErrorCode::InsufficientData, "need at least 2 samples, have " + std::to_string(n_));
  Eigen::MatrixXd full = outer_.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd mu = mean();
  Eigen::MatrixXd c = (full - static_cast<double>(n_) * mu * mu.transpose()) / static_cast<double>(n_ - 1);
  return 0.5 * (c + c.transpose());
}

static std::size_t ensemble_dim(const QuadratureEnsemble& ens) {
  std::size_t n = ens.layout.n_modes();
  if (n == 0 && !ens.trajectories.empty()) n = ens.trajectories[0].modes.size();
  return 2 * n;
}

CovarianceMatrix estimate_covariance(const QuadratureEnsemble& ens) {
  CovarianceAccumulator acc(ensemble_dim(ens));
  for (const auto& rec : ens.trajectories) acc.add(rec);
  return CovarianceMatrix(acc.covariance(), Units::VacuumQuarter);
}

CovarianceEstimate estimate_covariance_batched(const QuadratureEnsemble& ens, std::size_t n_batches) {
  const std::size_t n = ens.trajectories.size();
  if (n_batches < 2 || n < n_batches)
    throw Error(ErrorCode::InsufficientData, "need at least " + std::to_string(std::max<std::size_t>(n_batches, 2)) +
                                                 " trajectories for batching");
  std::vector<CovarianceAccumulator> batches(n_batches, CovarianceAccumulator(ensemble_dim(ens)));
  for (std::size_t t = 0; t < n; ++t) batches[t * n_batches / n].add(ens.trajectories[t]);
  return combine_batches(batches, Units::VacuumQuarter);
}

CovarianceEstimate combine_batches(const std::vector<CovarianceAccumulator>& batches, Units units) {
  if (batches.empty()) throw Error(ErrorCode::InsufficientData, "no batches");
  CovarianceAccumulator total(batches[0].dim());
  for (const auto& b : batches) total.merge(b);
  CovarianceEstimate out;
  out.cov = CovarianceMatrix(total.covariance(), units);
  out.n_samples = total.count();
  out.n_batches = batches.size();
  const auto d = static_cast<Eigen::Index>(total.dim());
  out.std_error = Eigen::MatrixXd::Zero(d, d);
  if (batches.size() < 2) return out;
  std::vector<Eigen::MatrixXd> covs;
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(d, d);
  for (const auto& b : batches) {
    covs.push_back(b.covariance());
    mean += covs.back();
  }
  const double B = static_cast<double>(batches.size());
  mean /= B;
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(d, d);
  for (const auto& c : covs) var += (c - mean).cwiseAbs2();
  var /= (B - 1.0);
  out.std_error = (var / B).cwiseSqrt();
  return out;
}

QuadratureEnsemble scale_quadratures(const QuadratureEnsemble& ens, const std::vector<double>& gains,
                                     const std::vector<double>& f_hz, const std::vector<double>& df_hz, double z0) {
  const std::size_t n = ens.layout.n_modes();
  if (gains.size() != n || f_hz.size() != n || df_hz.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "per-mode calibration vectors must have one entry per mode");
  std::vector<double> inv(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(gains[i] > 0.0)) throw Error(ErrorCode::NonPositiveGain, "gain of mode " + std::to_string(i + 1) + " <= 0");
    const double denom = gains[i] * z0 * kPlanck * f_hz[i] * df_hz[i];
    if (!(denom > 0.0)) throw Error(ErrorCode::NonPositiveGain, "scale denominator of mode " + std::to_string(i + 1) + " <= 0");
    inv[i] = 1.0 / std::sqrt(denom);
  }
  QuadratureEnsemble out = ens;
  for (auto& rec : out.trajectories)
    for (std::size_t i = 0; i < rec.modes.size() && i < n; ++i)
      for (auto& s : rec.modes[i]) s *= inv[i];
  return out;
}

CovarianceMatrix scale_and_subtract(const BackgroundPair& bg) {
  const auto d = bg.v_on.rows();
  if (bg.v_on.cols() != d || bg.v_off.rows() != d || bg.v_off.cols() != d || d % 2 != 0)
    throw Error(ErrorCode::DimensionMismatch, "V_on and V_off must be equal 2N x 2N matrices");
  const std::size_t n = static_cast<std::size_t>(d / 2);
  if (bg.frequencies.size() != n || bg.temperatures.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "need one frequency and temperature per mode");
  Eigen::MatrixXd v = 4.0 * (bg.v_on - bg.v_off);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = thermal_factor(bg.frequencies[i], bg.temperatures[i]);
    v(2 * i, 2 * i) += c;
    v(2 * i + 1, 2 * i + 1) += c;
  }
  return CovarianceMatrix(v, Units::VacuumUnit);
}

PhysicalityCheck physicality_check(const CovarianceMatrix& cov, const Eigen::MatrixXd* std_error) {
  const CovarianceMatrix v = convert_units(cov, Units::VacuumUnit);
  const std::size_t n = v.n_modes();
  Eigen::MatrixXcd H = v.data.cast<cplx>() + cplx(0.0, 1.0) * symplectic_form(n).cast<cplx>();
  H = 0.5 * (H + H.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  PhysicalityCheck out;
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  if (std_error && std_error->size() > 0) {
    const double f = cov.units == Units::VacuumUnit ? 1.0 : 4.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(*std_error * f);
    out.tolerance = 3.0 * svd.singularValues()(0);
  } else {
    out.tolerance = 1e-9 * std::abs(v.data.trace());
  }
  out.ok = out.min_eigenvalue >= -out.tolerance;
  return out;
}

void require_physical(const CovarianceMatrix& cov, const Eigen::MatrixXd* std_error) {
  auto c = physicality_check(cov, std_error);
  if (!c.ok)
    throw Error(ErrorCode::PhysicalityViolation, "min eigenvalue of V + i Omega is " + format_double(c.min_eigenvalue) +
                                                     " (tolerance " + format_double(c.tolerance) + ")");
}

std::string covariance_csv(const CovarianceMatrix& cov) {
  std::ostringstream os;
  const std::size_t n = cov.n_modes();
  for (std::size_t k = 0; k < n; ++k) os << (k ? "," : "") << 'x' << k + 1 << ",p" << k + 1;
  os << '\n';
  for (Eigen::Index r = 0; r < cov.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < cov.data.cols(); ++c) os << (c ? "," : "") << format_double(cov.data(r, c));
    os << '\n';
  }
  return os.str();
}

void write_covariance_csv(const std::string& path, const CovarianceMatrix& cov, const CovarianceMetadata& meta) {
  write_file(path, covariance_csv(cov));
  nlohmann::ordered_json j;
  j["units"] = units_name(cov.units);
  j["n_modes"] = cov.n_modes();
  j["frequencies_hz"] = meta.frequencies;
  j["bandwidths_hz"] = meta.bandwidths;
  write_file(path + ".json", j.dump(2) + "\n");
}

CovarianceMatrix read_covariance_csv(const std::string& path, Units fallback) {
  std::istringstream is(read_file(path));
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::Io, path + ": empty file");
  const std::size_t dim = split(trim(line), ',').size();
  if (dim == 0 || dim % 2 != 0) throw Error(ErrorCode::DimensionMismatch, path + ": header must name 2N columns");
  Eigen::MatrixXd m(dim, dim);
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    auto cells = split(trim(line), ',');
    if (cells.size() != dim || row >= dim) throw Error(ErrorCode::DimensionMismatch, path + ": ragged matrix");
    for (std::size_t c = 0; c < dim; ++c) {
      try {
        m(row, c) = std::stod(cells[c]);
      } catch (const std::exception&) {
        throw Error(ErrorCode::Io, path + ": bad number '" + cells[c] + "'");
      }
    }
    ++row;
  }
  if (row != dim) throw Error(ErrorCode::DimensionMismatch, path + ": expected " + std::to_string(dim) + " rows");
  Units u = fallback;
  std::ifstream side(path + ".json");
  if (side) {
    try {
      auto j = nlohmann::json::parse(side);
      if (j.contains("units")) u = parse_units(j["units"].get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Io, path + ".json: " + e.what());
    }
  }
  CovarianceMatrix cov(m, u);
  cov.validate();
  return cov;
}

}  // namespace jpa
