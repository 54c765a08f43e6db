#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jpa/core.hpp"

namespace jpa {

using Eigen::MatrixXcd;

// Pump d couples modes i <= j when center_i + center_j matches its detuning within half a guard.
struct ModePair {
  std::size_t i = 0, j = 0;
  std::size_t pump = 0;
};

// Throws UnmatchedPump when some tone maps to no pair.
std::vector<ModePair> pump_mode_pairs(const PumpConfig& pumps, const ModeLayout& layout);

// Ladder ordering (a_1..a_N, a_1^+..a_N^+).
struct InteractionMatrix {
  MatrixXcd data;
  double omega = 0.0;
  CavityParams params;
  PumpConfig pumps;
  ModeLayout layout;
};

InteractionMatrix build_interaction_matrix(const CavityParams& params, const PumpConfig& pumps,
                                           const ModeLayout& layout, double omega = 0.0);

// Throws SingularAtThreshold when the 2-norm condition number exceeds 1e12.
MatrixXcd invert_interaction(const InteractionMatrix& m);

// I - kappa M^-1.
MatrixXcd io_adjacency(const MatrixXcd& m_inv, double kappa);

// Ladder-to-quadrature map: x = (a + a^+)/2, p = (a - a^+)/2i, rows ordered (x1,p1,...).
MatrixXcd ladder_to_quadrature(std::size_t n_modes);

// sqrt(kappa) K M^-1 K^-1 as a real matrix. Throws NonRealResidue above 1e-10 relative.
Eigen::MatrixXd to_quadrature_basis(const MatrixXcd& m_inv, double kappa);

struct AnalyticCovariance {
  CovarianceMatrix v_a;    // S^-1 V_in S^-T
  CovarianceMatrix v_out;  // (I - sqrt(kappa) S^-1) V_in (...)^T
};

// Single-frequency linear model with V_in = I/4, VacuumQuarter units.
AnalyticCovariance analytic_covariance(const CavityParams& params, const PumpConfig& pumps, const ModeLayout& layout,
                                       double omega = 0.0);

enum class EdgeKind { TMS, BS };
const char* edge_kind_name(EdgeKind k);

struct Edge {
  std::size_t i = 0, j = 0;  // 0-based, i < j
  EdgeKind kind = EdgeKind::TMS;
  cplx weight;
};

struct HGraph {
  std::size_t n_nodes = 0;
  std::vector<Edge> edges;
  std::size_t count(EdgeKind k) const;
  bool has(std::size_t i, std::size_t j, EdgeKind k) const;
};

// Keeps off-diagonal entries above threshold * (largest off-diagonal magnitude).
HGraph extract_graph(const MatrixXcd& m_inv, double threshold = 1e-6);

// Lines `i j kind re im` with 1-based nodes.
std::string graph_edge_list(const HGraph& g);
std::string graph_dot(const HGraph& g);

struct ZassenhausCounts {
  std::size_t n_tms = 0, n_bs = 0;
};
ZassenhausCounts zassenhaus_counts(std::size_t n_modes);

// Largest |within-block off-diagonal| of M^-1 relative to the largest entry.
double bs_residual(const MatrixXcd& m_inv);

struct BsSearchResult {
  bool found = false;
  std::vector<double> phases;
  double residual = 0.0;  // bs_residual at the returned or best phases
};

// Grid over multiples of pi/2 ordered by how many tones leave pi/2, then Nelder-Mead from the
// best grid point. found = residual < 1e-10.
BsSearchResult find_bs_suppressing_phases(const CavityParams& params, const PumpConfig& pumps,
                                          const ModeLayout& layout);

enum class GhzTarget { GHZ3, GHZ4 };

// Extra tones that add the missing TMS pairs to the nearest-neighbour scheme of a 3- or 4-mode
// equidistant layout.
std::vector<PumpTone> ghz_augmentation(const ModeLayout& layout, GhzTarget target, double amplitude,
                                       double phase = kPi / 2);

struct OracleOptions {
  std::size_t quad_points = 16;  // Gauss-Legendre nodes across each band
  double span = 30.0;            // sideband cutoff in units of kappa + gamma beyond the outer mode
};

// Smallest real part of the eigenvalues of the sideband system at zero offset, in units of
// (kappa + gamma)/2. Positive below the parametric threshold.
double parametric_stability_margin(const CavityParams& params, const PumpConfig& pumps, const ModeLayout& layout,
                                   double span = 3.0);

// Band-averaged output covariance of the demodulated modes for the full linear model: all pump
// sidebands, internal loss port at the bath temperature, detuning delta_r. VacuumQuarter units.
CovarianceMatrix analytic_output_covariance(const CavityParams& params, const PumpConfig& pumps,
                                            const ModeLayout& layout, OracleOptions opts = {});

}  // namespace jpa
