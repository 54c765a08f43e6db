#include "jpa/calibration.hpp"

#include <gsl/gsl_blas.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_fit.h>
#include <gsl/gsl_min.h>
#include <gsl/gsl_multifit_nlinear.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "jpa/langevin.hpp"
#include "jpa/util.hpp"

namespace jpa {

cplx reflection_response(double omega, const CavityParams& p) {
  return 1.0 - p.kappa / cplx(0.5 * p.total_rate(), -(omega - p.omega_r));
}

double cavity_phase_response(double omega, const CavityParams& p) { return wrap_phase(std::arg(reflection_response(omega, p))); }

double phase_offset_from_resonance(double offset, const CavityParams& p) {
  return wrap_phase(cavity_phase_response(p.omega_r + offset, p) - cavity_phase_response(p.omega_r, p));
}

double pump_phase_correction(double detuning, const CavityParams& p) { return 0.5 * phase_offset_from_resonance(detuning, p); }

PumpConfig with_cavity_phase_response(const PumpConfig& pumps, const CavityParams& params) {
  std::vector<double> ph;
  for (const auto& t : pumps.tones()) ph.push_back(t.phase + pump_phase_correction(t.detuning, params));
  return pumps.with_phases(ph);
}

// ---------------------------------------------------------------------------------------------
// Resonance fit. Parameters are scaled as (omega_r - w0)/s, kappa/s, gamma/s with s the initial
// linewidth so the solver sees O(1) numbers.

namespace {

struct ResData {
  const std::vector<ResonancePoint>* pts;
  double w0, s;
};

CavityParams unpack(const gsl_vector* x, const ResData& d) {
  CavityParams p;
  p.omega_r = d.w0 + d.s * gsl_vector_get(x, 0);
  p.kappa = d.s * gsl_vector_get(x, 1);
  p.gamma = d.s * gsl_vector_get(x, 2);
  return p;
}

int res_f(const gsl_vector* x, void* data, gsl_vector* f) {
  const auto& d = *static_cast<const ResData*>(data);
  const CavityParams p = unpack(x, d);
  for (std::size_t i = 0; i < d.pts->size(); ++i) {
    const auto& pt = (*d.pts)[i];
    const cplx r = reflection_response(pt.omega, p) - pt.response;
    gsl_vector_set(f, 2 * i, r.real());
    gsl_vector_set(f, 2 * i + 1, r.imag());
  }
  return GSL_SUCCESS;
}

int res_df(const gsl_vector* x, void* data, gsl_matrix* J) {
  const auto& d = *static_cast<const ResData*>(data);
  const CavityParams p = unpack(x, d);
  const double G2 = 0.5 * p.total_rate();
  for (std::size_t i = 0; i < d.pts->size(); ++i) {
    const cplx den(G2, -((*d.pts)[i].omega - p.omega_r));
    const cplx inv2 = 1.0 / (den * den);
    // r = 1 - kappa/den with den = Gamma/2 - i(w - w_r)
    const cplx d_wr = cplx(0.0, p.kappa) * inv2;
    const cplx d_k = -1.0 / den + p.kappa * 0.5 * inv2;
    const cplx d_g = p.kappa * 0.5 * inv2;
    const cplx cols[3] = {d_wr * d.s, d_k * d.s, d_g * d.s};
    for (int c = 0; c < 3; ++c) {
      gsl_matrix_set(J, 2 * i, c, cols[c].real());
      gsl_matrix_set(J, 2 * i + 1, c, cols[c].imag());
    }
  }
  return GSL_SUCCESS;
}

}  // namespace

ResonanceFit fit_resonance(const std::vector<ResonancePoint>& sweep) {
  if (sweep.size() < 5) throw Error(ErrorCode::FitDiverged, "need at least 5 sweep points");
  std::vector<double> dip(sweep.size());
  for (std::size_t i = 0; i < sweep.size(); ++i) dip[i] = std::norm(1.0 - sweep[i].response);
  const auto imax = static_cast<std::size_t>(std::max_element(dip.begin(), dip.end()) - dip.begin());
  const double dmax = dip[imax], dmin = *std::min_element(dip.begin(), dip.end());
  if (!(dmax > 1.5 * dmin) || !(dmax > 0.0)) throw Error(ErrorCode::FitDiverged, "no resonance visible in the sweep");

  // |1 - r|^2 is a Lorentzian of full width kappa + gamma and peak (2 kappa / Gamma)^2.
  std::vector<std::size_t> order(sweep.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return sweep[a].omega < sweep[b].omega; });
  std::size_t pos = 0;
  for (std::size_t k = 0; k < order.size(); ++k)
    if (order[k] == imax) pos = k;
  auto crossing = [&](int dir) {
    for (long k = static_cast<long>(pos); k >= 0 && k < static_cast<long>(order.size()); k += dir)
      if (dip[order[k]] <= 0.5 * dmax) return sweep[order[k]].omega;
    return sweep[order[dir < 0 ? 0 : order.size() - 1]].omega;
  };
  double width = crossing(+1) - crossing(-1);
  if (!(width > 0.0)) width = std::abs(sweep[order.back()].omega - sweep[order.front()].omega) / 4.0;
  const double k0 = std::min(std::sqrt(dmax) * width / 2.0, 0.95 * width);
  const double g0 = std::max(width - k0, 0.05 * width);

  ResData data{&sweep, sweep[imax].omega, width};
  const std::size_t n = 2 * sweep.size(), p = 3;
  gsl_multifit_nlinear_fdf fdf;
  fdf.f = res_f;
  fdf.df = res_df;
  fdf.fvv = nullptr;
  fdf.n = n;
  fdf.p = p;
  fdf.params = &data;
  gsl_multifit_nlinear_parameters fp = gsl_multifit_nlinear_default_parameters();
  gsl_multifit_nlinear_workspace* w = gsl_multifit_nlinear_alloc(gsl_multifit_nlinear_trust, &fp, n, p);
  gsl_vector* x0 = gsl_vector_alloc(p);
  gsl_vector_set(x0, 0, 0.0);
  gsl_vector_set(x0, 1, k0 / width);
  gsl_vector_set(x0, 2, g0 / width);
  gsl_error_handler_t* old = gsl_set_error_handler_off();
  int info = 0;
  int status = gsl_multifit_nlinear_init(x0, &fdf, w);
  if (status == GSL_SUCCESS) status = gsl_multifit_nlinear_driver(500, 1e-12, 1e-12, 1e-12, nullptr, nullptr, &info, w);
  ResonanceFit out;
  bool ok = status == GSL_SUCCESS;
  if (ok) {
    const gsl_vector* x = gsl_multifit_nlinear_position(w);
    const CavityParams fitp = unpack(x, data);
    out.omega_r = fitp.omega_r;
    out.kappa = fitp.kappa;
    out.gamma = fitp.gamma;
    out.iterations = gsl_multifit_nlinear_niter(w);
    const gsl_vector* f = gsl_multifit_nlinear_residual(w);
    double chi2 = 0.0;
    gsl_blas_ddot(f, f, &chi2);
    out.residual_norm = std::sqrt(chi2 / static_cast<double>(sweep.size()));
    gsl_matrix* cov = gsl_matrix_alloc(p, p);
    gsl_multifit_nlinear_covar(gsl_multifit_nlinear_jac(w), 0.0, cov);
    const double s2 = n > p ? chi2 / static_cast<double>(n - p) : 0.0;
    out.se_omega_r = width * std::sqrt(std::max(0.0, s2 * gsl_matrix_get(cov, 0, 0)));
    out.se_kappa = width * std::sqrt(std::max(0.0, s2 * gsl_matrix_get(cov, 1, 1)));
    out.se_gamma = width * std::sqrt(std::max(0.0, s2 * gsl_matrix_get(cov, 2, 2)));
    gsl_matrix_free(cov);
    ok = std::isfinite(out.omega_r) && std::isfinite(out.kappa) && std::isfinite(out.gamma) && out.kappa > 0.0 &&
         out.gamma > -3.0 * out.se_gamma - 1e-9 * out.kappa;
  }
  gsl_set_error_handler(old);
  gsl_vector_free(x0);
  gsl_multifit_nlinear_free(w);
  if (!ok) throw Error(ErrorCode::FitDiverged, "resonance fit did not converge to physical parameters");
  return out;
}

// ---------------------------------------------------------------------------------------------
// Gain map.

namespace {

struct CellRun {
  double power = 0.0;  // mean |projection|^2 over trajectories
};

double probe_line_power(const CavityParams& params, double a_norm, double detuning, const GainMapOptions& opts,
                        std::size_t cell) {
  const double G = params.total_rate();
  const double alpha = a_norm * G;
  PumpConfig pumps(std::vector<PumpTone>{{0.0, alpha, 0.0}});
  SimSettings s;
  s.dt = 0.04 / G;
  const double record = opts.record_time > 0.0 ? opts.record_time : 200.0 / G;
  // Relaxation slows as the pump approaches threshold.
  const double slow = std::max(0.5 * G - alpha, 0.02 * G);
  s.transient = s.dt * std::ceil(std::max(30.0 / G, 20.0 / slow) / s.dt);
  s.duration = s.transient + s.dt * std::ceil(record / s.dt);
  s.n_trajectories = opts.n_trajectories;
  s.seed = opts.seed;
  const double t_rec = s.duration - s.transient;
  // Vacuum floor of one record bin is 1/(2 T); the probe sits probe_snr_db above it.
  const double beta = std::sqrt(std::pow(10.0, opts.probe_snr_db / 10.0) / (2.0 * t_rec));
  // Aligns the probe with the amplified quadrature of the degenerate pump at zero detuning.
  const CoherentProbe probe{detuning, beta, (0.0 - kPi / 2) / 2.0};
  double acc = 0.0;
  for (std::size_t t = 0; t < opts.n_trajectories; ++t) {
    const FieldTrace tr = integrate_trajectory(params, pumps, s, cell * 1000003ull + t, &probe);
    cplx proj(0.0, 0.0);
    const cplx step = std::polar(1.0, -detuning * tr.dt);
    cplx rot = std::polar(1.0, -detuning * tr.t0);
    for (std::size_t k = 0; k < tr.b_out.size(); ++k) {
      if (k % 4096 == 0) rot = std::polar(1.0, -detuning * (tr.t0 + static_cast<double>(k) * tr.dt));
      proj += tr.b_out[k] * rot;
      rot *= step;
    }
    proj /= static_cast<double>(tr.b_out.size());
    acc += std::norm(proj) / (beta * beta);
  }
  return acc / static_cast<double>(opts.n_trajectories);
}

}  // namespace

GainMap simulate_gain_map(const CavityParams& params, const std::vector<double>& probe_detunings,
                          const std::vector<double>& amplitudes, const GainMapOptions& opts) {
  params.validate();
  if (opts.n_trajectories == 0) throw ConfigInvalid({"gain map needs at least one trajectory per cell"});
  GainMap map;
  map.detunings = probe_detunings;
  map.amplitudes = amplitudes;
  const std::size_t nd = probe_detunings.size(), na = amplitudes.size();
  map.gain_db = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(nd));
  CavityParams p = params;
  std::vector<double> ref(nd, 0.0);
  parallel_for(nd, opts.jobs, [&](std::size_t j) { ref[j] = probe_line_power(p, 0.0, probe_detunings[j], opts, j); });
  parallel_for(na * nd, opts.jobs, [&](std::size_t cell) {
    const std::size_t i = cell / nd, j = cell % nd;
    const double pw = amplitudes[i] == 0.0 ? ref[j] : probe_line_power(p, amplitudes[i], probe_detunings[j], opts, nd + cell);
    map.gain_db(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 10.0 * std::log10(pw / ref[j]);
  });
  return map;
}

namespace {

struct KerrProblem {
  const GainMap* measured;
  CavityParams params;
  GainMapOptions opts;
  double cost(double k) const {
    CavityParams p = params;
    p.kerr = k;
    try {
      const GainMap sim = simulate_gain_map(p, measured->detunings, measured->amplitudes, opts);
      const double d = (sim.gain_db - measured->gain_db).squaredNorm();
      return std::isfinite(d) ? d : std::numeric_limits<double>::infinity();
    } catch (const NumericalOverflow&) {
      return std::numeric_limits<double>::infinity();
    }
  }
};

double kerr_cost(double k, void* p) {
  const double c = static_cast<const KerrProblem*>(p)->cost(k);
  return std::isfinite(c) ? c : 1e300;
}

}  // namespace

KerrFit fit_kerr(const GainMap& measured, const CavityParams& params, double k_max, const GainMapOptions& opts,
                 std::size_t scan_points) {
  if (!(k_max > 0.0) || scan_points < 3) throw ConfigInvalid({"fit_kerr needs k_max > 0 and at least 3 scan points"});
  if (measured.gain_db.size() == 0) throw Error(ErrorCode::FitDiverged, "empty gain map");
  KerrProblem prob{&measured, params, opts};
  KerrFit out;
  std::size_t ibest = 0;
  for (std::size_t i = 0; i < scan_points; ++i) {
    const double k = k_max * static_cast<double>(i) / static_cast<double>(scan_points - 1);
    out.scan_k.push_back(k);
    out.scan_cost.push_back(prob.cost(k));
    if (out.scan_cost.back() < out.scan_cost[ibest]) ibest = i;
  }
  if (!std::isfinite(out.scan_cost[ibest])) throw Error(ErrorCode::FitDiverged, "every Kerr value overflowed");
  double kbest = out.scan_k[ibest], cbest = out.scan_cost[ibest];
  if (ibest > 0 && ibest + 1 < scan_points) {
    gsl_function fn{&kerr_cost, &prob};
    gsl_min_fminimizer* m = gsl_min_fminimizer_alloc(gsl_min_fminimizer_brent);
    gsl_error_handler_t* old = gsl_set_error_handler_off();
    if (gsl_min_fminimizer_set_with_values(m, &fn, kbest, cbest, out.scan_k[ibest - 1], out.scan_cost[ibest - 1],
                                           out.scan_k[ibest + 1], out.scan_cost[ibest + 1]) == GSL_SUCCESS) {
      for (int it = 0; it < 30; ++it) {
        if (gsl_min_fminimizer_iterate(m)) break;
        const double lo = gsl_min_fminimizer_x_lower(m), hi = gsl_min_fminimizer_x_upper(m);
        if (gsl_min_test_interval(lo, hi, 1e-3 * k_max / static_cast<double>(scan_points), 1e-3) == GSL_SUCCESS) break;
      }
      if (gsl_min_fminimizer_f_minimum(m) < cbest) {
        kbest = gsl_min_fminimizer_x_minimum(m);
        cbest = gsl_min_fminimizer_f_minimum(m);
      }
    }
    gsl_set_error_handler(old);
    gsl_min_fminimizer_free(m);
  }
  out.kerr = kbest;
  out.residual = std::sqrt(cbest / static_cast<double>(measured.gain_db.size()));
  return out;
}

std::string gain_map_csv(const GainMap& map) {
  std::ostringstream os;
  os << "A\\detuning_hz";
  for (double d : map.detunings) os << ',' << format_double(d / kTwoPi);
  os << '\n';
  for (std::size_t i = 0; i < map.amplitudes.size(); ++i) {
    os << format_double(map.amplitudes[i]);
    for (std::size_t j = 0; j < map.detunings.size(); ++j)
      os << ',' << format_double(map.gain_db(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------------------------

FriisFit friis_fit(const std::vector<NoiseSweepPoint>& sweep, double min_temperature) {
  std::vector<double> t, y;
  std::vector<std::string> bad;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const auto& p = sweep[i];
    if (!(p.source_temperature > 0.0) || !(p.power_density > 0.0))
      bad.push_back("sweep point " + std::to_string(i) + ": temperature and power density must be > 0");
    else if (p.source_temperature > min_temperature) {
      t.push_back(p.source_temperature);
      y.push_back(p.power_density);
    }
  }
  if (!bad.empty()) throw ConfigInvalid(bad);
  if (t.size() < 2 || *std::max_element(t.begin(), t.end()) == *std::min_element(t.begin(), t.end()))
    throw Error(ErrorCode::DegenerateSweep, "need at least two distinct temperatures above " +
                                                format_double(min_temperature) + " K");
  double c0, c1, cov00, cov01, cov11, sumsq;
  gsl_fit_linear(t.data(), 1, y.data(), 1, t.size(), &c0, &c1, &cov00, &cov01, &cov11, &sumsq);
  if (!(c1 > 0.0)) throw Error(ErrorCode::NonPositiveGain, "fitted slope is not positive");
  if (t.size() == 2) cov00 = cov01 = cov11 = 0.0;
  FriisFit f;
  f.n_points = t.size();
  f.gain_linear = c1 / kBoltzmann;
  f.gain_db = 10.0 * std::log10(f.gain_linear);
  f.se_gain_db = 10.0 / std::log(10.0) * std::sqrt(cov11) / c1;
  f.t_preamp = c0 / c1;
  // Delta method for T = c0 / c1.
  const double var_t = cov00 / (c1 * c1) + c0 * c0 * cov11 / std::pow(c1, 4) - 2.0 * c0 * cov01 / std::pow(c1, 3);
  f.se_t_preamp = std::sqrt(std::max(0.0, var_t));
  return f;
}

std::vector<NoiseSweepPoint> read_noise_sweep_csv(const std::string& path) {
  std::istringstream is(read_file(path));
  std::string line;
  std::vector<NoiseSweepPoint> out;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      if (line != "temperature_K,power_W_per_Hz")
        throw ConfigInvalid({path + ": header must be 'temperature_K,power_W_per_Hz'"});
      continue;
    }
    auto cells = split(line, ',');
    if (cells.size() != 2) throw ConfigInvalid({path + ":" + std::to_string(lineno) + ": expected 2 columns"});
    try {
      out.push_back({std::stod(cells[0]), std::stod(cells[1])});
    } catch (const std::exception&) {
      throw ConfigInvalid({path + ":" + std::to_string(lineno) + ": not a number"});
    }
  }
  return out;
}

std::string noise_sweep_csv(const std::vector<NoiseSweepPoint>& sweep) {
  std::ostringstream os;
  os << "temperature_K,power_W_per_Hz\n";
  for (const auto& p : sweep) os << format_double(p.source_temperature) << ',' << format_double(p.power_density) << '\n';
  return os.str();
}

}  // namespace jpa
