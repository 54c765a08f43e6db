#include "jpa/entanglement.hpp"

#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "jpa/covariance.hpp"
#include "jpa/util.hpp"

namespace jpa {

Eigen::VectorXd symplectic_eigenvalues(const CovarianceMatrix& cov) {
  cov.validate();
  const CovarianceMatrix v = convert_units(cov, Units::VacuumUnit);
  const std::size_t n = v.n_modes();
  Eigen::MatrixXcd m = cplx(0.0, 1.0) * (symplectic_form(n) * v.data).cast<cplx>();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
  std::vector<double> mod;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mod.push_back(std::abs(es.eigenvalues()(i)));
  std::sort(mod.begin(), mod.end());
  // Eigenvalues come in +-nu pairs; after sorting the moduli each pair is adjacent.
  Eigen::VectorXd nu(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = mod[2 * k], b = mod[2 * k + 1];
    if (std::abs(a - b) > 1e-6 * std::max({a, b, 1e-300}))
      throw Error(ErrorCode::NotPositiveDefinite, "symplectic spectrum does not pair (" + format_double(a) + ", " +
                                                      format_double(b) + ")");
    nu(static_cast<Eigen::Index>(k)) = 0.5 * (a + b);
  }
  return nu;
}

CovarianceMatrix partial_transpose(const CovarianceMatrix& cov, const std::vector<std::size_t>& modes) {
  const std::size_t n = cov.n_modes();
  std::vector<bool> sel(n, false);
  std::size_t count = 0;
  for (std::size_t m : modes) {
    if (m >= n) throw Error(ErrorCode::InvalidModeSet, "mode " + std::to_string(m) + " out of range");
    if (!sel[m]) ++count;
    sel[m] = true;
  }
  if (count == 0 || count == n) throw Error(ErrorCode::InvalidModeSet, "mode set must be a non-empty proper subset");
  CovarianceMatrix out = cov;
  for (std::size_t m = 0; m < n; ++m) {
    if (!sel[m]) continue;
    const auto p = static_cast<Eigen::Index>(2 * m + 1);
    out.data.row(p) *= -1.0;
    out.data.col(p) *= -1.0;
  }
  return out;
}

static std::string bipartition_label(const std::vector<std::size_t>& part, std::size_t n) {
  std::string a, b;
  for (std::size_t m = 0; m < n; ++m) {
    if (std::find(part.begin(), part.end(), m) != part.end()) a += std::to_string(m + 1);
    else b += std::to_string(m + 1);
  }
  return a + "-" + b;
}

double PptResult::min_nu() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : entries) m = std::min(m, e.nu_min);
  return m;
}

PptResult ppt_full_inseparability(const CovarianceMatrix& cov, bool include_two_vs_two) {
  const std::size_t n = cov.n_modes();
  if (n < 2) throw Error(ErrorCode::InvalidModeSet, "PPT needs at least two modes");
  cov.validate();
  PptResult r;
  r.fully_inseparable = true;
  for (std::size_t k = 0; k < n; ++k) {
    PptEntry e;
    e.modes = {k};
    e.label = bipartition_label(e.modes, n);
    e.nu_min = symplectic_eigenvalues(partial_transpose(cov, e.modes)).minCoeff();
    r.fully_inseparable = r.fully_inseparable && e.nu_min < 1.0 - 1e-9;
    r.entries.push_back(e);
  }
  if (include_two_vs_two && n == 4) {
    for (std::size_t j = 1; j < 4; ++j) {
      PptEntry e;
      e.modes = {0, j};
      e.label = bipartition_label(e.modes, n);
      e.nu_min = symplectic_eigenvalues(partial_transpose(cov, e.modes)).minCoeff();
      r.two_vs_two.push_back(e);
    }
  }
  return r;
}

static std::vector<double> products(const std::vector<double>& h, const std::vector<double>& g) {
  if (h.size() != g.size()) throw Error(ErrorCode::DimensionMismatch, "h and g differ in length");
  std::vector<double> q(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) q[i] = h[i] * g[i];
  return q;
}

double f_bipartition(const std::vector<double>& h, const std::vector<double>& g) {
  const auto q = products(h, g);
  const std::size_t n = q.size();
  if (n < 2 || n > 20) throw Error(ErrorCode::InvalidModeSet, "bipartition bound needs 2..20 modes");
  double best = std::numeric_limits<double>::infinity();
  // Mode n-1 is kept on the J side so every split is visited once.
  const unsigned long full = 1ul << (n - 1);
  for (unsigned long mask = 1; mask < full; ++mask) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1ul ? a : b) += q[i];
    best = std::min(best, std::abs(a) + std::abs(b));
  }
  return 0.5 * best;
}

double f3(const std::vector<double>& h, const std::vector<double>& g) {
  const auto q = products(h, g);
  if (q.size() != 3) throw Error(ErrorCode::DimensionMismatch, "f3 takes three weights");
  return 0.5 * std::min({std::abs(q[0] + q[1]) + std::abs(q[2]), std::abs(q[2] + q[1]) + std::abs(q[0]),
                         std::abs(q[0] + q[2]) + std::abs(q[1])});
}

double f4_unhalved(const std::vector<double>& h, const std::vector<double>& g) {
  const auto q = products(h, g);
  if (q.size() != 4) throw Error(ErrorCode::DimensionMismatch, "f4 takes four weights");
  return std::min({std::abs(q[0] + q[1] + q[2]) + std::abs(q[3]), std::abs(q[3] + q[1] + q[2]) + std::abs(q[0]),
                   std::abs(q[3] + q[0] + q[2]) + std::abs(q[1]), std::abs(q[3] + q[0] + q[1]) + std::abs(q[2]),
                   std::abs(q[0] + q[1]) + std::abs(q[2] + q[3]), std::abs(q[0] + q[2]) + std::abs(q[1] + q[3]),
                   std::abs(q[1] + q[2]) + std::abs(q[0] + q[3])});
}

double f4(const std::vector<double>& h, const std::vector<double>& g) { return 0.5 * f4_unhalved(h, g); }

static double f_for(const std::vector<double>& h, const std::vector<double>& g) {
  switch (h.size()) {
    case 3: return f3(h, g);
    case 4: return f4(h, g);
    default: return f_bipartition(h, g);
  }
}

double gme_S(const CovarianceMatrix& cov, const std::vector<double>& h, const std::vector<double>& g) {
  const std::size_t n = cov.n_modes();
  if (h.size() != n || g.size() != n) throw Error(ErrorCode::DimensionMismatch, "one h and one g weight per mode");
  const CovarianceMatrix v = convert_units(cov, Units::VacuumQuarter);
  Eigen::VectorXd hx = Eigen::VectorXd::Zero(2 * n), gp = Eigen::VectorXd::Zero(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    hx(2 * i) = h[i];
    gp(2 * i + 1) = g[i];
  }
  const double f = f_for(h, g);
  if (!(f > 0.0)) throw Error(ErrorCode::ZeroDenominator, "f_N vanishes for these weights");
  return (hx.dot(v.data * hx) + gp.dot(v.data * gp)) / f;
}

namespace {

struct TiedProblem {
  const CovarianceMatrix* cov;
  std::size_t base;
  std::size_t n;

  std::pair<std::vector<double>, std::vector<double>> weights(double h, double g) const {
    std::vector<double> hv(n, h), gv(n, g);
    hv[base] = 1.0;
    gv[base] = 1.0;
    return {hv, gv};
  }
  // +inf where f_N = 0.
  double eval(double h, double g) const {
    auto [hv, gv] = weights(h, g);
    try {
      return gme_S(*cov, hv, gv);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ZeroDenominator) return std::numeric_limits<double>::infinity();
      throw;
    }
  }
};

double nm_objective(const gsl_vector* x, void* params) {
  const auto* p = static_cast<const TiedProblem*>(params);
  const double h = gsl_vector_get(x, 0), g = gsl_vector_get(x, 1);
  const double ch = std::clamp(h, -1.0, 1.0), cg = std::clamp(g, -1.0, 1.0);
  const double pen = 1e3 * ((h - ch) * (h - ch) + (g - cg) * (g - cg));
  const double s = p->eval(ch, cg);
  return std::isfinite(s) ? s + pen : 1e300;
}

}  // namespace

GmeResult optimize_gme(const CovarianceMatrix& cov, GmeOptions opts) {
  const std::size_t n = cov.n_modes();
  if (n != 3 && n != 4) throw Error(ErrorCode::InvalidModeSet, "GME optimisation supports N = 3 or 4");
  if (!(opts.grid_step > 0.0) || opts.grid_step > 1.0)
    throw Error(ErrorCode::ConfigInvalid, "grid_step must be in (0, 1]");
  const int steps = static_cast<int>(std::lround(2.0 / opts.grid_step));
  GmeResult best;
  best.s_value = std::numeric_limits<double>::infinity();
  for (std::size_t base = 0; base < n; ++base) {
    TiedProblem prob{&cov, base, n};
    double s0 = std::numeric_limits<double>::infinity(), h0 = 0.0, g0 = 0.0;
    for (int i = 0; i <= steps; ++i)
      for (int j = 0; j <= steps; ++j) {
        const double h = -1.0 + 2.0 * i / steps, g = -1.0 + 2.0 * j / steps;
        const double s = prob.eval(h, g);
        if (s < s0) {
          s0 = s;
          h0 = h;
          g0 = g;
        }
      }
    if (!std::isfinite(s0)) continue;

    gsl_multimin_function fn{&nm_objective, 2, &prob};
    gsl_vector* x = gsl_vector_alloc(2);
    gsl_vector* step = gsl_vector_alloc(2);
    gsl_vector_set(x, 0, h0);
    gsl_vector_set(x, 1, g0);
    gsl_vector_set_all(step, 0.5 * opts.grid_step);
    gsl_multimin_fminimizer* mm = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
    gsl_multimin_fminimizer_set(mm, &fn, x, step);
    for (int it = 0; it < 500; ++it) {
      if (gsl_multimin_fminimizer_iterate(mm)) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(mm), 1e-9) == GSL_SUCCESS) break;
    }
    double h1 = std::clamp(gsl_vector_get(mm->x, 0), -1.0, 1.0);
    double g1 = std::clamp(gsl_vector_get(mm->x, 1), -1.0, 1.0);
    double s1 = prob.eval(h1, g1);
    gsl_multimin_fminimizer_free(mm);
    gsl_vector_free(x);
    gsl_vector_free(step);
    if (!(s1 <= s0)) {
      s1 = s0;
      h1 = h0;
      g1 = g0;
    }
    if (s1 < best.s_value) {
      auto [hv, gv] = prob.weights(h1, g1);
      best.s_value = s1;
      best.weights_h = hv;
      best.weights_g = gv;
      best.base_mode = base;
      best.h = h1;
      best.g = g1;
    }
  }
  if (!std::isfinite(best.s_value)) throw Error(ErrorCode::ZeroDenominator, "no admissible weights");
  return best;
}

std::string entanglement_report_json(const CovarianceMatrix& cov, const PptResult& ppt, const GmeResult* gme) {
  nlohmann::ordered_json j;
  j["input_units"] = units_name(cov.units);
  j["ppt_units"] = units_name(Units::VacuumUnit);
  j["gme_units"] = units_name(Units::VacuumQuarter);
  nlohmann::ordered_json bp;
  for (const auto& e : ppt.entries) bp[e.label] = e.nu_min;
  j["ppt"] = bp;
  if (!ppt.two_vs_two.empty()) {
    nlohmann::ordered_json t;
    for (const auto& e : ppt.two_vs_two) t[e.label] = e.nu_min;
    j["ppt_two_vs_two"] = t;
  }
  j["fully_inseparable"] = ppt.fully_inseparable;
  if (gme) {
    j["gme"] = {{"s_value", gme->s_value},
                {"base_mode", gme->base_mode + 1},
                {"weights_h", gme->weights_h},
                {"weights_g", gme->weights_g},
                {"genuine", gme->s_value < 1.0}};
  }
  j["covariance_sha256"] = sha256_hex(covariance_csv(cov));
  return j.dump(2) + "\n";
}

}  // namespace jpa
