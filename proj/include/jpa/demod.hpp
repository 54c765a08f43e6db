#pragma once

#include <memory>
#include <ostream>
#include <vector>

#include "jpa/core.hpp"
#include "jpa/langevin.hpp"

namespace jpa {

// One trajectory: per mode, complex baseband samples y = I + iQ, normalized so that vacuum
// gives <I^2> = <Q^2> = 1/4.
struct QuadratureRecord {
  std::vector<std::vector<cplx>> modes;
};

struct QuadratureEnsemble {
  ModeLayout layout;
  std::vector<QuadratureRecord> trajectories;
  std::vector<double> mode_phases;
  double sample_interval = 0.0;
};

struct DemodOptions {
  // Fraction of decimated samples dropped at each end of the record.
  double edge_fraction = 0.05;
};

// Brick-wall FFT band selection and down-conversion for a fixed trace geometry. Thread-safe after
// construction.
class Demodulator {
 public:
  Demodulator(const ModeLayout& layout, std::size_t n_samples, double dt, double t0, DemodOptions opts = {});
  ~Demodulator();
  Demodulator(const Demodulator&) = delete;
  Demodulator& operator=(const Demodulator&) = delete;

  QuadratureRecord operator()(const std::vector<cplx>& samples) const;
  std::size_t output_length() const { return keep_; }
  double sample_interval() const { return out_dt_; }

 private:
  struct Plans;
  ModeLayout layout_;
  std::size_t n_, L_, edge_, keep_;
  double dt_, t0_, out_dt_;
  std::vector<long> shift_;          // integer bin of each mode centre
  std::vector<double> residual_;     // fractional part of the centre, in bins
  std::vector<std::vector<long>> bins_;  // signed band bins per mode
  std::vector<double> norm_;
  std::unique_ptr<Plans> plans_;
};

QuadratureRecord demodulate(const FieldTrace& trace, const ModeLayout& layout, DemodOptions opts = {});

QuadratureEnsemble demodulate_ensemble(const std::vector<FieldTrace>& traces, const ModeLayout& layout,
                                       DemodOptions opts = {});

QuadratureEnsemble rotate_mode_phase(const QuadratureEnsemble& ens, std::size_t mode, double theta);

// Covariance congruence for per-mode quadrature rotations (x,p) -> R(theta)(x,p).
CovarianceMatrix rotate_covariance(const CovarianceMatrix& cov, const std::vector<double>& angles);

struct SymmetrizeResult {
  CovarianceMatrix cov;
  std::vector<double> angles;      // per mode, mode 0 fixed at 0
  std::vector<bool> degenerate;    // per chain block (k, k+1)
  double objective_before = 0.0;
  double objective_after = 0.0;
};

// Sum of squared <x_k p_{k+1}> + <p_k x_{k+1}> over the chain blocks.
double tms_cross_objective(const CovarianceMatrix& cov);

SymmetrizeResult symmetrize_covariance(const CovarianceMatrix& cov);

void write_quadrature_csv(std::ostream& os, const QuadratureEnsemble& ens);

}  // namespace jpa
