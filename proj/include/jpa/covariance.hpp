#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jpa/core.hpp"
#include "jpa/demod.hpp"

namespace jpa {

// Streaming second-moment sums over samples of the 2N quadrature vector (x1,p1,...).
class CovarianceAccumulator {
 public:
  explicit CovarianceAccumulator(std::size_t dim = 0);

  void add_sample(const Eigen::VectorXd& v);
  // Every retained sample of every mode; the record must have 2*dim/2 modes of equal length.
  void add(const QuadratureRecord& rec);
  void merge(const CovarianceAccumulator& other);

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return n_; }
  Eigen::VectorXd mean() const;
  // Unbiased estimate with mean subtraction. Throws InsufficientData below 2 samples.
  Eigen::MatrixXd covariance() const;

 private:
  std::size_t dim_;
  std::size_t n_ = 0;
  Eigen::VectorXd sum_;
  Eigen::MatrixXd outer_;
};

struct CovarianceEstimate {
  CovarianceMatrix cov;
  Eigen::MatrixXd std_error;  // group-to-group standard error per element, same units as cov
  std::size_t n_batches = 0;
  std::size_t n_samples = 0;
};

CovarianceMatrix estimate_covariance(const QuadratureEnsemble& ens);

// Trajectories are split into n_batches contiguous groups for the standard error.
CovarianceEstimate estimate_covariance_batched(const QuadratureEnsemble& ens, std::size_t n_batches = 10);

// Pooled estimate plus batch standard errors from per-batch accumulators, merged in order.
CovarianceEstimate combine_batches(const std::vector<CovarianceAccumulator>& batches, Units units);

// x = I / sqrt(G Z0 h f df) per mode; gains are linear power gains.
QuadratureEnsemble scale_quadratures(const QuadratureEnsemble& ens, const std::vector<double>& gains,
                                     const std::vector<double>& f_hz, const std::vector<double>& df_hz,
                                     double z0);

struct BackgroundPair {
  Eigen::MatrixXd v_on;
  Eigen::MatrixXd v_off;
  std::vector<double> frequencies;   // Hz, per mode
  std::vector<double> temperatures;  // K, per mode
};

// 4 (V_on - V_off) + diag(coth(h f_i / 2 k_B T_i)), VacuumUnit.
CovarianceMatrix scale_and_subtract(const BackgroundPair& bg);

struct PhysicalityCheck {
  double min_eigenvalue = 0.0;  // of V + i Omega, VacuumUnit
  double tolerance = 0.0;
  bool ok = true;
};

// Tolerance is 3 times the spectral norm of the standard-error matrix (VacuumUnit) when given,
// otherwise 1e-9 of the trace.
PhysicalityCheck physicality_check(const CovarianceMatrix& cov, const Eigen::MatrixXd* std_error = nullptr);
void require_physical(const CovarianceMatrix& cov, const Eigen::MatrixXd* std_error = nullptr);

struct CovarianceMetadata {
  std::vector<double> frequencies;  // Hz
  std::vector<double> bandwidths;   // Hz
};

// CSV with header x1,p1,...; sidecar `<path>.json` holds units, N, f_i and df_i.
void write_covariance_csv(const std::string& path, const CovarianceMatrix& cov, const CovarianceMetadata& meta = {});
std::string covariance_csv(const CovarianceMatrix& cov);
// Units come from the sidecar when present, else from fallback.
CovarianceMatrix read_covariance_csv(const std::string& path, Units fallback = Units::VacuumQuarter);

}  // namespace jpa
