// Exact band-averaged output covariance of the linearised multi-tone cavity.
//
// With a(t) = sum_f A_f e^{i f t}, every pump tone links A_f to conj(A_{Delta_d - f}), so the
// response at one baseband offset nu closes on a lattice of sideband slots. "A" slots carry A_f,
// "B" slots carry conj(A_g). Rows:
//   A_f:  (i(f + delta_r) + Gamma/2) A_f + i sum_d alpha_d e^{i phi_d} conj(A_{Delta_d - f}) = n_f
//   B_g:  (-i(g + delta_r) + Gamma/2) conj(A_g) - i sum_d alpha_d e^{-i phi_d} A_{Delta_d - g} = conj(n_g)
// with n = sqrt(kappa) b_in + sqrt(gamma) c_in and independent symmetric-ordered noise of density 1/2
// per slot (times 2 nbar + 1 for the loss port).

#include <gsl/gsl_integration.h>

#include <Eigen/SparseLU>
#include <cmath>
#include <deque>
#include <map>

#include "jpa/graph.hpp"

namespace jpa {

namespace {

class SlotSet {
 public:
  explicit SlotSet(double quantum) : q_(quantum) {}

  // Index of f, or -1.
  long find(double f) const {
    const long long k = std::llround(f / q_);
    for (long long kk : {k, k - 1, k + 1}) {
      auto it = idx_.find(kk);
      if (it != idx_.end() && std::abs(freq_[it->second] - f) <= q_) return static_cast<long>(it->second);
    }
    return -1;
  }
  // Returns true when f was new.
  bool insert(double f) {
    if (find(f) >= 0) return false;
    idx_.emplace(std::llround(f / q_), freq_.size());
    freq_.push_back(f);
    return true;
  }
  const std::vector<double>& freqs() const { return freq_; }
  std::size_t size() const { return freq_.size(); }

 private:
  double q_;
  std::map<long long, std::size_t> idx_;
  std::vector<double> freq_;
};

struct Lattice {
  SlotSet A, B;
  explicit Lattice(double q) : A(q), B(q) {}
  std::size_t dim() const { return A.size() + B.size(); }
};

Lattice build_lattice(const std::vector<double>& centers, double nu, const PumpConfig& pumps, double fmax, double q) {
  Lattice L(q);
  std::deque<std::pair<bool, double>> queue;  // (is A slot, frequency)
  for (double c : centers) {
    if (L.A.insert(c + nu)) queue.push_back({true, c + nu});
    if (L.B.insert(c - nu)) queue.push_back({false, c - nu});
  }
  while (!queue.empty()) {
    auto [is_a, f] = queue.front();
    queue.pop_front();
    for (const auto& t : pumps.tones()) {
      const double g = t.detuning - f;
      if (std::abs(g) > fmax) continue;
      SlotSet& other = is_a ? L.B : L.A;
      if (other.insert(g)) queue.push_back({!is_a, g});
    }
  }
  return L;
}

std::vector<Eigen::Triplet<cplx>> lattice_triplets(const Lattice& L, const CavityParams& params,
                                                   const PumpConfig& pumps) {
  const cplx I(0.0, 1.0);
  const double G = params.total_rate();
  const std::size_t na = L.A.size(), nb = L.B.size();
  std::vector<Eigen::Triplet<cplx>> trip;
  for (std::size_t k = 0; k < na; ++k) {
    const double f = L.A.freqs()[k];
    trip.emplace_back(k, k, I * (f + params.delta_r) + 0.5 * G);
    for (std::size_t d = 0; d < pumps.size(); ++d) {
      const long j = L.B.find(pumps[d].detuning - f);
      if (j >= 0) trip.emplace_back(k, na + static_cast<std::size_t>(j), I * std::polar(pumps[d].amplitude, pumps[d].phase));
    }
  }
  for (std::size_t k = 0; k < nb; ++k) {
    const double g = L.B.freqs()[k];
    trip.emplace_back(na + k, na + k, -I * (g + params.delta_r) + 0.5 * G);
    for (std::size_t d = 0; d < pumps.size(); ++d) {
      const long j = L.A.find(pumps[d].detuning - g);
      if (j >= 0) trip.emplace_back(na + k, static_cast<std::size_t>(j), -I * std::polar(pumps[d].amplitude, -pumps[d].phase));
    }
  }
  return trip;
}

std::vector<double> angular_centers(const ModeLayout& layout) {
  std::vector<double> c;
  for (double x : layout.centers) c.push_back(kTwoPi * x);
  return c;
}

}  // namespace

double parametric_stability_margin(const CavityParams& params, const PumpConfig& pumps, const ModeLayout& layout,
                                   double span) {
  const double G = params.total_rate();
  const auto centers = angular_centers(layout);
  double cmax = 0.0;
  for (double c : centers) cmax = std::max(cmax, std::abs(c));
  const Lattice L = build_lattice(centers, 0.0, pumps, cmax + span * G, 1e-6 * G);
  const auto trip = lattice_triplets(L, params, pumps);
  Eigen::SparseMatrix<cplx> M(L.dim(), L.dim());
  M.setFromTriplets(trip.begin(), trip.end());
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(M), false);
  return es.eigenvalues().real().minCoeff() / (0.5 * G);
}

CovarianceMatrix analytic_output_covariance(const CavityParams& params, const PumpConfig& pumps,
                                            const ModeLayout& layout, OracleOptions opts) {
  layout.validate();
  params.validate();
  if (parametric_stability_margin(params, pumps, layout) <= 0.0)
    throw Error(ErrorCode::SingularAtThreshold, "pump configuration is above the parametric threshold");
  const std::size_t n = layout.n_modes();
  const double G = params.total_rate();
  const auto centers = angular_centers(layout);
  double cmax = 0.0;
  for (double c : centers) cmax = std::max(cmax, std::abs(c));
  const double half_band = kPi * layout.bandwidth;  // angular half width
  const double fmax = cmax + opts.span * G + half_band;
  const double thermal = thermal_factor(params.omega_r / kTwoPi, params.temperature);
  const MatrixXcd K = ladder_to_quadrature(n);

  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(opts.quad_points);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (std::size_t node = 0; node < opts.quad_points; ++node) {
    double nu = 0.0, w = 0.0;
    gsl_integration_glfixed_point(-half_band, half_band, node, &nu, &w, table);
    const Lattice L = build_lattice(centers, nu, pumps, fmax, 1e-6 * G);
    const std::size_t na = L.A.size(), dim = L.dim();
    const auto trip = lattice_triplets(L, params, pumps);
    Eigen::SparseMatrix<cplx> M(dim, dim);
    M.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseMatrix<cplx> Mt = M.transpose();
    Mt.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
    lu.compute(Mt);
    if (lu.info() != Eigen::Success) {
      gsl_integration_glfixed_table_free(table);
      throw Error(ErrorCode::SingularAtThreshold, "sideband system is singular");
    }
    // Selected rows of M^-1: output slots of each mode at +nu and their conjugates at -nu.
    std::vector<std::size_t> rows;
    for (double c : centers) rows.push_back(static_cast<std::size_t>(L.A.find(c + nu)));
    for (double c : centers) rows.push_back(na + static_cast<std::size_t>(L.B.find(c - nu)));
    MatrixXcd Sel = MatrixXcd::Zero(dim, 2 * n);
    for (std::size_t r = 0; r < rows.size(); ++r) Sel(rows[r], r) = 1.0;
    const MatrixXcd R = lu.solve(Sel).transpose();
    if (!R.allFinite()) {
      gsl_integration_glfixed_table_free(table);
      throw Error(ErrorCode::SingularAtThreshold, "sideband response is not finite");
    }
    MatrixXcd T = -params.kappa * R;
    for (std::size_t r = 0; r < rows.size(); ++r) T(r, rows[r]) += 1.0;
    const MatrixXcd E = 0.5 * (T * T.adjoint() + thermal * params.kappa * params.gamma * (R * R.adjoint()));
    V += (w / (2.0 * half_band)) * (K * E * K.adjoint()).real();
  }
  gsl_integration_glfixed_table_free(table);
  return CovarianceMatrix(0.5 * (V + V.transpose()), Units::VacuumQuarter);
}

}  // namespace jpa
