#pragma once

#include <string>
#include <vector>

#include "jpa/core.hpp"

namespace jpa {

// Symplectic eigenvalues in VacuumUnit convention (vacuum = 1), ascending.
Eigen::VectorXd symplectic_eigenvalues(const CovarianceMatrix& cov);

// Flips the p quadratures of the selected (0-based) modes.
CovarianceMatrix partial_transpose(const CovarianceMatrix& cov, const std::vector<std::size_t>& modes);

struct PptEntry {
  std::string label;  // e.g. "1-23": transposed modes, dash, the rest (1-based)
  std::vector<std::size_t> modes;
  double nu_min = 0.0;
};

struct PptResult {
  std::vector<PptEntry> entries;     // single mode vs rest
  std::vector<PptEntry> two_vs_two;  // optional, excluded from the verdict
  bool fully_inseparable = false;   // every single-mode nu_min below 1 - 1e-9
  double min_nu() const;
};

PptResult ppt_full_inseparability(const CovarianceMatrix& cov, bool include_two_vs_two = false);

// Weight products q_i = h_i g_i enter through min over bipartitions of |sum_I q| + |sum_J q|.
double f3(const std::vector<double>& h, const std::vector<double>& g);
// Carries the same 1/2 prefactor as f3 so that vacuum sits exactly at S = 1.
double f4(const std::vector<double>& h, const std::vector<double>& g);
// f4 without the prefactor, as typeset in the original derivation; equals 2 f4.
double f4_unhalved(const std::vector<double>& h, const std::vector<double>& g);
// 1/2 min over all nontrivial bipartitions; equals f3 and f4 for N = 3, 4.
double f_bipartition(const std::vector<double>& h, const std::vector<double>& g);

// (<du^2> + <dv^2>) / f_N with u = sum h_i x_i, v = sum g_i p_i read in VacuumQuarter units.
double gme_S(const CovarianceMatrix& cov, const std::vector<double>& h, const std::vector<double>& g);

struct GmeResult {
  double s_value = 0.0;
  std::vector<double> weights_h, weights_g;
  std::size_t base_mode = 0;
  double h = 0.0, g = 0.0;  // tied values of the non-base weights
};

struct GmeOptions {
  double grid_step = 0.05;
};

// Tied-weight search over every base mode: grid over [-1,1]^2, then Nelder-Mead from the best cell.
GmeResult optimize_gme(const CovarianceMatrix& cov, GmeOptions opts = {});

// Structured report with a SHA-256 of the input covariance CSV text.
std::string entanglement_report_json(const CovarianceMatrix& cov, const PptResult& ppt, const GmeResult* gme);

}  // namespace jpa
