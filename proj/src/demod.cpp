#include "jpa/demod.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "jpa/util.hpp"

namespace jpa {

namespace {
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}
}  // namespace

struct Demodulator::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

Demodulator::Demodulator(const ModeLayout& layout, std::size_t n_samples, double dt, double t0, DemodOptions opts)
    : layout_(layout), n_(n_samples), dt_(dt), t0_(t0) {
  layout_.validate();
  if (n_samples < 4) throw Error(ErrorCode::InsufficientData, "trace too short to demodulate");
  const double nyquist = 0.5 / dt;
  for (std::size_t i = 0; i < layout_.n_modes(); ++i)
    if (std::abs(layout_.centers[i]) + 0.5 * layout_.bandwidth > nyquist)
      throw Error(ErrorCode::BandwidthExceeded, "mode " + std::to_string(i) + " extends beyond Nyquist");

  const double span = static_cast<double>(n_) * dt_;  // record length, s
  const double hw = 0.5 * layout_.bandwidth * span;  // half band in bins
  std::size_t max_bins = 0;
  for (double c : layout_.centers) {
    const double cb = c * span;
    const long kc = std::lround(cb);
    shift_.push_back(kc);
    residual_.push_back(cb - static_cast<double>(kc));
    std::vector<long> bins;
    // Symmetric about the centre so that bins paired by a pump (k1 + k2 = const) match up.
    const double eps = 1e-9 * std::max(1.0, hw);
    for (long k = static_cast<long>(std::ceil(cb - hw - eps)); static_cast<double>(k) <= cb + hw + eps; ++k)
      if (std::abs(static_cast<double>(k) - cb) <= hw + eps) bins.push_back(k);
    max_bins = std::max(max_bins, bins.size());
    norm_.push_back(1.0 / (static_cast<double>(n_) * std::sqrt(static_cast<double>(bins.size()) / span)));
    bins_.push_back(std::move(bins));
  }
  L_ = next_smooth(std::max<std::size_t>(static_cast<std::size_t>(std::ceil(2.0 * layout_.bandwidth * span)),
                                         max_bins + 1));
  out_dt_ = span / static_cast<double>(L_);
  edge_ = static_cast<std::size_t>(std::ceil(opts.edge_fraction * static_cast<double>(L_)));
  if (2 * edge_ >= L_) throw Error(ErrorCode::InsufficientData, "edge trimming leaves no samples");
  keep_ = L_ - 2 * edge_;

  plans_ = std::make_unique<Plans>();
  std::vector<cplx> a(std::max(n_, L_)), b(std::max(n_, L_));
  std::lock_guard<std::mutex> lock(planner_mutex());
  plans_->forward = fftw_plan_dft_1d(static_cast<int>(n_), reinterpret_cast<fftw_complex*>(a.data()),
                                     reinterpret_cast<fftw_complex*>(b.data()), FFTW_FORWARD,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->backward = fftw_plan_dft_1d(static_cast<int>(L_), reinterpret_cast<fftw_complex*>(a.data()),
                                      reinterpret_cast<fftw_complex*>(b.data()), FFTW_BACKWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
}

Demodulator::~Demodulator() = default;

QuadratureRecord Demodulator::operator()(const std::vector<cplx>& samples) const {
  if (samples.size() != n_) throw Error(ErrorCode::DimensionMismatch, "trace length differs from demodulator setup");
  std::vector<cplx> in(samples), spec(n_);
  fftw_execute_dft(plans_->forward, reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(spec.data()));
  QuadratureRecord rec;
  rec.modes.resize(layout_.n_modes());
  std::vector<cplx> band(L_), y(L_);
  const long n = static_cast<long>(n_);
  const long L = static_cast<long>(L_);
  for (std::size_t i = 0; i < layout_.n_modes(); ++i) {
    std::fill(band.begin(), band.end(), cplx(0.0, 0.0));
    for (long k : bins_[i]) {
      const long src = ((k % n) + n) % n;
      const long dst = (((k - shift_[i]) % L) + L) % L;
      band[dst] = spec[src];
    }
    fftw_execute_dft(plans_->backward, reinterpret_cast<fftw_complex*>(band.data()),
                     reinterpret_cast<fftw_complex*>(y.data()));
    const cplx global = std::polar(norm_[i], -kTwoPi * layout_.centers[i] * t0_);
    auto& out = rec.modes[i];
    out.resize(keep_);
    for (std::size_t m = 0; m < keep_; ++m) {
      const std::size_t mm = m + edge_;
      const double ph = -kTwoPi * residual_[i] * static_cast<double>(mm) / static_cast<double>(L_);
      out[m] = y[mm] * global * std::polar(1.0, ph);
    }
  }
  return rec;
}

QuadratureRecord demodulate(const FieldTrace& trace, const ModeLayout& layout, DemodOptions opts) {
  Demodulator d(layout, trace.b_out.size(), trace.dt, trace.t0, opts);
  return d(trace.b_out);
}

QuadratureEnsemble demodulate_ensemble(const std::vector<FieldTrace>& traces, const ModeLayout& layout,
                                       DemodOptions opts) {
  QuadratureEnsemble ens;
  ens.layout = layout;
  ens.mode_phases.assign(layout.n_modes(), 0.0);
  if (traces.empty()) return ens;
  Demodulator d(layout, traces.front().b_out.size(), traces.front().dt, traces.front().t0, opts);
  ens.sample_interval = d.sample_interval();
  for (const auto& t : traces) ens.trajectories.push_back(d(t.b_out));
  return ens;
}

QuadratureEnsemble rotate_mode_phase(const QuadratureEnsemble& ens, std::size_t mode, double theta) {
  if (mode >= ens.layout.n_modes())
    throw Error(ErrorCode::IndexOutOfRange, "mode " + std::to_string(mode) + " out of range");
  QuadratureEnsemble out = ens;
  if (out.mode_phases.size() != out.layout.n_modes()) out.mode_phases.assign(out.layout.n_modes(), 0.0);
  const cplx r = std::polar(1.0, theta);
  for (auto& rec : out.trajectories)
    for (auto& s : rec.modes.at(mode)) s *= r;
  out.mode_phases[mode] = wrap_phase(out.mode_phases[mode] + theta);
  return out;
}

CovarianceMatrix rotate_covariance(const CovarianceMatrix& cov, const std::vector<double>& angles) {
  const std::size_t n = cov.n_modes();
  if (angles.size() != n) throw Error(ErrorCode::DimensionMismatch, "one angle per mode required");
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (std::size_t k = 0; k < n; ++k) {
    const double c = std::cos(angles[k]), s = std::sin(angles[k]);
    R(2 * k, 2 * k) = c;
    R(2 * k, 2 * k + 1) = -s;
    R(2 * k + 1, 2 * k) = s;
    R(2 * k + 1, 2 * k + 1) = c;
  }
  return CovarianceMatrix(R * cov.data * R.transpose(), cov.units);
}

double tms_cross_objective(const CovarianceMatrix& cov) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < cov.n_modes(); ++k) {
    const double v = cov.data(2 * k, 2 * k + 3) + cov.data(2 * k + 1, 2 * k + 2);
    s += v * v;
  }
  return s;
}

SymmetrizeResult symmetrize_covariance(const CovarianceMatrix& cov) {
  const std::size_t n = cov.n_modes();
  if (n < 2) throw Error(ErrorCode::InvalidModeSet, "symmetrization needs at least two modes");
  SymmetrizeResult res;
  res.angles.assign(n, 0.0);
  res.degenerate.assign(n - 1, false);
  res.objective_before = tms_cross_objective(cov);
  const double scale = cov.data.diagonal().cwiseAbs().maxCoeff();
  // The block between modes k and k+1 splits into a rotation-like part, which is invariant under
  // R_k B R_{k+1}^T when both angles shift equally, and a reflection-like part Refl(beta) whose
  // angle moves as beta + theta_k + theta_{k+1}. Zeroing its off-diagonal fixes theta_{k+1}.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double ck = std::cos(res.angles[k]), sk = std::sin(res.angles[k]);
    Eigen::Matrix2d Rk;
    Rk << ck, -sk, sk, ck;
    const Eigen::Matrix2d B = Rk * cov.data.block<2, 2>(2 * k, 2 * k + 2);
    const double vc = 0.5 * (B(0, 0) - B(1, 1));
    const double vs = 0.5 * (B(0, 1) + B(1, 0));
    if (std::hypot(vc, vs) <= 1e-9 * scale) {
      res.degenerate[k] = true;
      res.angles[k + 1] = 0.0;
      continue;
    }
    res.angles[k + 1] = wrap_phase(-std::atan2(vs, vc));
  }
  res.cov = rotate_covariance(cov, res.angles);
  res.objective_after = tms_cross_objective(res.cov);
  return res;
}

void write_quadrature_csv(std::ostream& os, const QuadratureEnsemble& ens) {
  os << "trajectory,mode,sample,I,Q\n";
  for (std::size_t t = 0; t < ens.trajectories.size(); ++t) {
    const auto& rec = ens.trajectories[t];
    for (std::size_t m = 0; m < rec.modes.size(); ++m)
      for (std::size_t s = 0; s < rec.modes[m].size(); ++s)
        os << t << ',' << (m + 1) << ',' << s << ',' << format_double(rec.modes[m][s].real()) << ','
           << format_double(rec.modes[m][s].imag()) << '\n';
  }
}

}  // namespace jpa
