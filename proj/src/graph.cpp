#include "jpa/graph.hpp"

#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jpa/util.hpp"

namespace jpa {

std::vector<ModePair> pump_mode_pairs(const PumpConfig& pumps, const ModeLayout& layout) {
  std::vector<ModePair> pairs;
  const std::size_t n = layout.n_modes();
  double scale = layout.bandwidth;
  for (double c : layout.centers) scale = std::max(scale, std::abs(c));
  const double tol = layout.guard > 0.0 ? 0.5 * layout.guard : 1e-9 * scale;
  for (std::size_t d = 0; d < pumps.size(); ++d) {
    const double target = pumps[d].detuning / kTwoPi;
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        if (std::abs(layout.centers[i] + layout.centers[j] - target) <= tol) {
          pairs.push_back({i, j, d});
          any = true;
        }
    if (!any)
      throw Error(ErrorCode::UnmatchedPump, "pump " + std::to_string(d) + " at " + format_double(target) +
                                                " Hz couples no mode pair of the layout");
  }
  return pairs;
}

InteractionMatrix build_interaction_matrix(const CavityParams& params, const PumpConfig& pumps,
                                           const ModeLayout& layout, double omega) {
  const std::size_t n = layout.n_modes();
  const cplx I(0.0, 1.0);
  InteractionMatrix m;
  m.omega = omega;
  m.params = params;
  m.pumps = pumps;
  m.layout = layout;
  m.data = MatrixXcd::Zero(2 * n, 2 * n);
  const cplx c1 = -I * (omega - params.delta_r) + 0.5 * params.kappa;
  const cplx c2 = -I * (omega + params.delta_r) + 0.5 * params.kappa;
  for (std::size_t i = 0; i < n; ++i) {
    m.data(i, i) = c1;
    m.data(n + i, n + i) = c2;
  }
  for (const auto& p : pump_mode_pairs(pumps, layout)) {
    const cplx z = std::polar(pumps[p.pump].amplitude, pumps[p.pump].phase);
    m.data(p.i, n + p.j) += I * z;
    m.data(n + p.j, p.i) += -I * std::conj(z);
    if (p.i != p.j) {
      m.data(p.j, n + p.i) += I * z;
      m.data(n + p.i, p.j) += -I * std::conj(z);
    }
  }
  return m;
}

MatrixXcd invert_interaction(const InteractionMatrix& m) {
  Eigen::JacobiSVD<MatrixXcd> svd(m.data);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0) || s(0) / smin > 1e12)
    throw Error(ErrorCode::SingularAtThreshold, "interaction matrix condition number exceeds 1e12");
  return m.data.inverse();
}

MatrixXcd io_adjacency(const MatrixXcd& m_inv, double kappa) {
  return MatrixXcd::Identity(m_inv.rows(), m_inv.cols()) - kappa * m_inv;
}

MatrixXcd ladder_to_quadrature(std::size_t n) {
  MatrixXcd K = MatrixXcd::Zero(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    K(2 * i, i) = 0.5;
    K(2 * i, n + i) = 0.5;
    K(2 * i + 1, i) = cplx(0.0, -0.5);
    K(2 * i + 1, n + i) = cplx(0.0, 0.5);
  }
  return K;
}

Eigen::MatrixXd to_quadrature_basis(const MatrixXcd& m_inv, double kappa) {
  if (m_inv.rows() != m_inv.cols() || m_inv.rows() % 2 != 0)
    throw Error(ErrorCode::DimensionMismatch, "M^-1 must be 2N x 2N");
  const std::size_t n = static_cast<std::size_t>(m_inv.rows() / 2);
  const MatrixXcd K = ladder_to_quadrature(n);
  // K^-1 is (a = x + ip, a^+ = x - ip) in closed form.
  MatrixXcd Kinv = MatrixXcd::Zero(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    Kinv(i, 2 * i) = 1.0;
    Kinv(i, 2 * i + 1) = cplx(0.0, 1.0);
    Kinv(n + i, 2 * i) = 1.0;
    Kinv(n + i, 2 * i + 1) = cplx(0.0, -1.0);
  }
  const MatrixXcd s = std::sqrt(kappa) * K * m_inv * Kinv;
  const double scale = std::max(s.cwiseAbs().maxCoeff(), 1e-300);
  const double resid = s.imag().cwiseAbs().maxCoeff();
  if (resid > 1e-10 * scale)
    throw Error(ErrorCode::NonRealResidue, "quadrature-basis matrix has imaginary residue " + format_double(resid / scale));
  return s.real();
}

AnalyticCovariance analytic_covariance(const CavityParams& params, const PumpConfig& pumps, const ModeLayout& layout,
                                       double omega) {
  const auto m = build_interaction_matrix(params, pumps, layout, omega);
  const Eigen::MatrixXd s = to_quadrature_basis(invert_interaction(m), params.kappa);
  const auto d = s.rows();
  const Eigen::MatrixXd vin = 0.25 * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd t = Eigen::MatrixXd::Identity(d, d) - std::sqrt(params.kappa) * s;
  AnalyticCovariance out;
  out.v_a = CovarianceMatrix(s * vin * s.transpose(), Units::VacuumQuarter);
  out.v_out = CovarianceMatrix(t * vin * t.transpose(), Units::VacuumQuarter);
  return out;
}

const char* edge_kind_name(EdgeKind k) { return k == EdgeKind::TMS ? "TMS" : "BS"; }

std::size_t HGraph::count(EdgeKind k) const {
  return static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [k](const Edge& e) { return e.kind == k; }));
}

bool HGraph::has(std::size_t i, std::size_t j, EdgeKind k) const {
  if (i > j) std::swap(i, j);
  return std::any_of(edges.begin(), edges.end(), [&](const Edge& e) { return e.i == i && e.j == j && e.kind == k; });
}

HGraph extract_graph(const MatrixXcd& m_inv, double threshold) {
  if (m_inv.rows() != m_inv.cols() || m_inv.rows() % 2 != 0)
    throw Error(ErrorCode::DimensionMismatch, "M^-1 must be 2N x 2N");
  const std::size_t n = static_cast<std::size_t>(m_inv.rows() / 2);
  double peak = 0.0;
  for (Eigen::Index r = 0; r < m_inv.rows(); ++r)
    for (Eigen::Index c = 0; c < m_inv.cols(); ++c)
      if (r != c) peak = std::max(peak, std::abs(m_inv(r, c)));
  HGraph g;
  g.n_nodes = n;
  if (peak == 0.0) return g;
  const double cut = threshold * peak;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const cplx tms = std::abs(m_inv(i, n + j)) >= std::abs(m_inv(j, n + i)) ? m_inv(i, n + j) : m_inv(j, n + i);
      if (std::abs(tms) > cut) g.edges.push_back({i, j, EdgeKind::TMS, tms});
      if (std::abs(m_inv(i, j)) > cut) g.edges.push_back({i, j, EdgeKind::BS, m_inv(i, j)});
    }
  return g;
}

std::string graph_edge_list(const HGraph& g) {
  std::ostringstream os;
  for (const auto& e : g.edges)
    os << e.i + 1 << ' ' << e.j + 1 << ' ' << edge_kind_name(e.kind) << ' ' << format_double(e.weight.real()) << ' '
       << format_double(e.weight.imag()) << '\n';
  return os.str();
}

std::string graph_dot(const HGraph& g) {
  std::ostringstream os;
  os << "graph H {\n";
  for (std::size_t i = 0; i < g.n_nodes; ++i) os << "  " << i + 1 << ";\n";
  for (const auto& e : g.edges)
    os << "  " << e.i + 1 << " -- " << e.j + 1 << " [label=\"" << edge_kind_name(e.kind) << "\""
       << (e.kind == EdgeKind::BS ? ", style=dashed" : "") << "];\n";
  os << "}\n";
  return os.str();
}

ZassenhausCounts zassenhaus_counts(std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidModeSet, "need at least two modes");
  ZassenhausCounts z;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    z.n_bs += n - 2 * k;
    z.n_tms += n - 2 * k + 1;
  }
  return z;
}

double bs_residual(const MatrixXcd& m_inv) {
  const std::size_t n = static_cast<std::size_t>(m_inv.rows() / 2);
  const double scale = std::max(m_inv.cwiseAbs().maxCoeff(), 1e-300);
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) r = std::max({r, std::abs(m_inv(i, j)), std::abs(m_inv(n + i, n + j))});
  return r / scale;
}

namespace {

struct PhaseSearch {
  const CavityParams* params;
  const PumpConfig* pumps;
  const ModeLayout* layout;
  double residual(const std::vector<double>& phases) const {
    return bs_residual(invert_interaction(build_interaction_matrix(*params, pumps->with_phases(phases), *layout)));
  }
};

double phase_objective(const gsl_vector* x, void* p) {
  const auto* s = static_cast<const PhaseSearch*>(p);
  std::vector<double> ph(x->size);
  for (std::size_t i = 0; i < ph.size(); ++i) ph[i] = gsl_vector_get(x, i);
  try {
    return s->residual(ph);
  } catch (const Error&) {
    return 1e300;
  }
}

}  // namespace

BsSearchResult find_bs_suppressing_phases(const CavityParams& params, const PumpConfig& pumps,
                                          const ModeLayout& layout) {
  const std::size_t p = pumps.size();
  BsSearchResult res;
  if (p == 0) {
    res.found = true;
    return res;
  }
  PhaseSearch search{&params, &pumps, &layout};
  const double cand[4] = {kPi / 2, -kPi / 2, 0.0, kPi};
  std::size_t total = 1;
  for (std::size_t d = 0; d < p; ++d) total *= 4;
  // Order candidates by how many tones move away from pi/2, then by which tones move.
  std::vector<std::vector<int>> order;
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<int> digits(p);
    std::size_t c = code;
    for (std::size_t d = 0; d < p; ++d) {
      digits[d] = static_cast<int>(c % 4);
      c /= 4;
    }
    order.push_back(digits);
  }
  auto moved = [](const std::vector<int>& v) {
    std::vector<std::size_t> m;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] != 0) m.push_back(i);
    return m;
  };
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    auto ma = moved(a), mb = moved(b);
    if (ma.size() != mb.size()) return ma.size() < mb.size();
    if (ma != mb) return ma < mb;
    return a < b;
  });
  std::vector<double> best_ph;
  double best = 1e300;
  for (const auto& digits : order) {
    std::vector<double> ph(p);
    for (std::size_t d = 0; d < p; ++d) ph[d] = cand[digits[d]];
    double r;
    try {
      r = search.residual(ph);
    } catch (const Error&) {
      continue;
    }
    if (r < 1e-10) {
      res.found = true;
      res.phases = ph;
      res.residual = r;
      return res;
    }
    if (r < best) {
      best = r;
      best_ph = ph;
    }
  }
  if (best_ph.empty()) return res;

  gsl_multimin_function fn{&phase_objective, p, &search};
  gsl_vector* x = gsl_vector_alloc(p);
  gsl_vector* step = gsl_vector_alloc(p);
  for (std::size_t d = 0; d < p; ++d) gsl_vector_set(x, d, best_ph[d]);
  gsl_vector_set_all(step, 0.3);
  gsl_multimin_fminimizer* mm = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, p);
  gsl_multimin_fminimizer_set(mm, &fn, x, step);
  for (int it = 0; it < 400; ++it) {
    if (gsl_multimin_fminimizer_iterate(mm)) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(mm), 1e-12) == GSL_SUCCESS) break;
  }
  std::vector<double> ph(p);
  for (std::size_t d = 0; d < p; ++d) ph[d] = wrap_phase(gsl_vector_get(mm->x, d));
  const double r = mm->fval;
  gsl_multimin_fminimizer_free(mm);
  gsl_vector_free(x);
  gsl_vector_free(step);
  if (r < best) {
    best = r;
    best_ph = ph;
  }
  res.phases = best_ph;
  res.residual = best;
  res.found = best < 1e-10;
  return res;
}

std::vector<PumpTone> ghz_augmentation(const ModeLayout& layout, GhzTarget target, double amplitude, double phase) {
  const std::size_t n = layout.n_modes();
  const std::size_t want = target == GhzTarget::GHZ3 ? 3 : 4;
  if (n != want)
    throw Error(ErrorCode::UnsupportedTarget, "GHZ" + std::to_string(want) + " needs a " + std::to_string(want) +
                                                  "-mode layout, got " + std::to_string(n));
  layout.validate();
  const double tol = layout.guard > 0.0 ? 0.5 * layout.guard : 1e-9 * layout.bandwidth;
  std::vector<double> base;
  for (std::size_t i = 0; i + 1 < n; ++i) base.push_back(layout.centers[i] + layout.centers[i + 1]);
  auto covered = [&](double s, const std::vector<double>& set) {
    return std::any_of(set.begin(), set.end(), [&](double b) { return std::abs(b - s) <= tol; });
  };
  std::vector<double> extra;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = layout.centers[i] + layout.centers[j];
      if (!covered(s, base) && !covered(s, extra)) extra.push_back(s);
    }
  std::sort(extra.begin(), extra.end());
  std::vector<PumpTone> tones;
  for (double s : extra) tones.push_back({kTwoPi * s, amplitude, phase});
  return tones;
}

}  // namespace jpa
