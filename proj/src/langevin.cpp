#include "jpa/langevin.hpp"

#include <atomic>
#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "jpa/util.hpp"

namespace jpa {

std::size_t SimSettings::transient_steps() const {
  return static_cast<std::size_t>(std::llround(transient / dt));
}

std::size_t SimSettings::record_steps() const {
  return static_cast<std::size_t>(std::llround((duration - transient) / dt));
}

std::vector<std::string> settings_violations(const SimSettings& s, const CavityParams& params,
                                             double min_bandwidth_hz) {
  std::vector<std::string> v;
  const double rate = params.total_rate();
  if (!(s.dt > 0.0)) v.push_back("sim.dt must be > 0");
  else if (!(s.dt * rate < 0.1))
    v.push_back("stability guard violated: dt*(kappa+gamma) = " + std::to_string(s.dt * rate) + " must be < 0.1");
  if (!(s.transient >= 20.0 / rate * (1.0 - 1e-9)))
    v.push_back("sim.transient must be >= 20/(kappa+gamma) = " + std::to_string(20.0 / rate) + " s");
  if (!(s.duration > s.transient)) v.push_back("sim.duration must exceed sim.transient");
  else if (min_bandwidth_hz > 0.0 && !((s.duration - s.transient) >= 100.0 / min_bandwidth_hz * (1.0 - 1e-9)))
    v.push_back("record length duration - transient must be >= 100/bandwidth = " +
                std::to_string(100.0 / min_bandwidth_hz) + " s");
  if (s.n_trajectories == 0) v.push_back("sim.n_trajectories must be >= 1");
  if (!(s.overflow_photons > 0.0)) v.push_back("sim.overflow_photons must be > 0");
  return v;
}

SimSettings default_settings(const CavityParams& params, const ModeLayout& layout, std::size_t n_trajectories,
                             std::uint64_t seed) {
  SimSettings s;
  const double rate = params.total_rate();
  const double dt_max = 0.04 / rate;
  const double min_record = 100.0 / layout.bandwidth;
  // Record length a multiple of 1/gcd(centres) so every centre and every pair sum sits on a bin.
  std::uint64_t q = 0;
  for (double c : layout.centers) q = std::gcd(q, static_cast<std::uint64_t>(std::llround(std::abs(c))));
  if (q > 0) {
    const double period = 1.0 / static_cast<double>(q);
    const double m = static_cast<double>(next_smooth(static_cast<std::size_t>(std::ceil(period / dt_max * (1.0 - 1e-12)))));
    s.dt = period / m;
    const double periods =
        static_cast<double>(next_smooth(static_cast<std::size_t>(std::ceil(min_record / period * (1.0 - 1e-12)))));
    s.transient = s.dt * std::ceil(30.0 / rate / s.dt);
    s.duration = s.transient + periods * m * s.dt;
  } else {
    s.dt = dt_max;
    s.transient = s.dt * std::ceil(30.0 / rate / s.dt);
    std::size_t n = static_cast<std::size_t>(std::ceil(min_record / s.dt));
    s.duration = s.transient + static_cast<double>(next_smooth(n)) * s.dt;
  }
  s.n_trajectories = n_trajectories;
  s.seed = seed;
  return s;
}

cplx drift(cplx a, double t, const CavityParams& params, const PumpConfig& pumps) {
  const cplx I(0.0, 1.0);
  cplx pump(0.0, 0.0);
  for (const auto& tone : pumps.tones())
    pump += tone.amplitude * std::exp(I * (tone.phase + tone.detuning * t));
  return (-I * params.delta_r - 0.5 * params.total_rate()) * a - I * pump * std::conj(a) -
         12.0 * I * params.kerr * std::norm(a) * a;
}

std::mt19937_64 trajectory_rng(std::uint64_t seed, std::size_t index) {
  const std::uint64_t idx = index;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32), 0x6a7061u};
  return std::mt19937_64(seq);
}

namespace {

// Sum of pump phasors alpha_d exp(i(phi_d + Delta_d t)) on the step grid, advanced by
// multiplication and re-synchronised from the exact value periodically.
class PumpPhasor {
 public:
  PumpPhasor(const PumpConfig& pumps, double t_start, double dt) : dt_(dt), t_start_(t_start) {
    for (const auto& tone : pumps.tones()) {
      amp_.push_back(tone.amplitude * std::polar(1.0, tone.phase));
      rate_.push_back(tone.detuning);
      step_.push_back(std::polar(1.0, tone.detuning * dt));
    }
    z_.resize(amp_.size());
    sync(0);
  }
  cplx value() const {
    cplx s(0.0, 0.0);
    for (std::size_t d = 0; d < z_.size(); ++d) s += amp_[d] * z_[d];
    return s;
  }
  void advance(std::size_t next_step) {
    if (next_step % 4096 == 0) {
      sync(next_step);
      return;
    }
    for (std::size_t d = 0; d < z_.size(); ++d) z_[d] *= step_[d];
  }

 private:
  void sync(std::size_t step) {
    const double t = t_start_ + static_cast<double>(step) * dt_;
    for (std::size_t d = 0; d < z_.size(); ++d) z_[d] = std::polar(1.0, rate_[d] * t);
  }
  double dt_, t_start_;
  std::vector<cplx> amp_, step_, z_;
  std::vector<double> rate_;
};

}  // namespace

FieldTrace integrate_trajectory(const CavityParams& params, const PumpConfig& pumps, const SimSettings& settings,
                                std::size_t trajectory_index, const CoherentProbe* probe) {
  const cplx I(0.0, 1.0);
  const double dt = settings.dt;
  const std::size_t n_tr = settings.transient_steps();
  const std::size_t n_rec = settings.record_steps();
  const std::size_t n_total = n_tr + n_rec;

  const double sk = std::sqrt(params.kappa);
  const double sg = std::sqrt(params.gamma);
  const cplx lin = -I * params.delta_r - 0.5 * params.total_rate();
  const double kerr12 = 12.0 * params.kerr;
  const double sigma_b = std::sqrt(1.0 / (4.0 * dt));
  const double sigma_c = std::sqrt(thermal_factor(params.omega_r / kTwoPi, params.temperature) / (4.0 * dt));

  auto rng = trajectory_rng(settings.seed, trajectory_index);
  boost::random::normal_distribution<double> normal(0.0, 1.0);

  FieldTrace out;
  out.dt = dt;
  out.index = trajectory_index;
  out.t0 = static_cast<double>(n_tr) * dt + 0.5 * dt;
  out.b_out.resize(n_rec);
  out.b_in.resize(n_rec);

  PumpPhasor pump(pumps, 0.0, dt);
  cplx p_now = pump.value();
  cplx probe_step(1.0, 0.0), probe_z(1.0, 0.0);
  if (probe) {
    probe_step = std::polar(1.0, probe->detuning * dt);
    probe_z = probe->amplitude * std::polar(1.0, probe->phase + probe->detuning * 0.5 * dt);
  }

  auto f = [&](cplx a, cplx p) { return lin * a - I * p * std::conj(a) - I * kerr12 * std::norm(a) * a; };

  cplx a(0.0, 0.0);
  for (std::size_t n = 0; n < n_total; ++n) {
    cplx b(sigma_b * normal(rng), sigma_b * normal(rng));
    cplx c(sigma_c * normal(rng), sigma_c * normal(rng));
    if (probe) {
      if (n % 4096 == 0)
        probe_z = probe->amplitude *
                  std::polar(1.0, probe->phase + probe->detuning * (static_cast<double>(n) + 0.5) * dt);
      b += probe_z;
      probe_z *= probe_step;
    }
    const cplx noise = (sk * b + sg * c) * dt;
    pump.advance(n + 1);
    const cplx p_next = pump.value();
    const cplx k1 = f(a, p_now);
    const cplx pred = a + k1 * dt + noise;
    const cplx k2 = f(pred, p_next);
    const cplx a_next = a + 0.5 * (k1 + k2) * dt + noise;
    const double photons = std::norm(a_next);
    if (!(photons <= settings.overflow_photons))
      throw NumericalOverflow(trajectory_index, static_cast<double>(n + 1) * dt,
                              "|a|^2 = " + std::to_string(photons) + " exceeds bound");
    if (n >= n_tr) {
      const std::size_t k = n - n_tr;
      out.b_in[k] = b;
      out.b_out[k] = b - sk * 0.5 * (a + a_next);
    }
    a = a_next;
    p_now = p_next;
  }
  return out;
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::size_t failed_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
        stop.store(true);
      }
    }
  };
  std::vector<std::thread> threads;
  const unsigned t = std::min<std::size_t>(jobs, n);
  for (unsigned k = 0; k < t; ++k) threads.emplace_back(worker);
  for (auto& th : threads) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<FieldTrace> run_ensemble(const CavityParams& params, const PumpConfig& pumps,
                                     const SimSettings& settings, unsigned jobs) {
  std::vector<FieldTrace> traces(settings.n_trajectories);
  parallel_for(settings.n_trajectories, jobs,
               [&](std::size_t i) { traces[i] = integrate_trajectory(params, pumps, settings, i); });
  return traces;
}

static void put_le(std::ofstream& os, double x) {
  static_assert(sizeof(double) == 8);
  unsigned char bytes[8];
  std::uint64_t u;
  std::memcpy(&u, &x, 8);
  for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(u >> (8 * k));
  os.write(reinterpret_cast<const char*>(bytes), 8);
}

void write_trace_binary(const std::string& path, const FieldTrace& trace) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path);
  for (std::size_t k = 0; k < trace.b_out.size(); ++k) {
    put_le(os, trace.t0 + static_cast<double>(k) * trace.dt);
    put_le(os, trace.b_out[k].real());
    put_le(os, trace.b_out[k].imag());
  }
  std::ofstream side(path + ".txt");
  if (!side) throw Error(ErrorCode::Io, "cannot open " + path + ".txt");
  side << "# output field trace\n"
       << "format: little-endian float64, 3 columns per row, no header\n"
       << "columns: t_s re_b_out im_b_out\n"
       << "units: b_out in sqrt(photons/s), rotating frame at omega_sigma/2\n"
       << "rows: " << trace.b_out.size() << "\n"
       << "dt_s: " << trace.dt << "\n"
       << "t0_s: " << trace.t0 << "\n"
       << "trajectory: " << trace.index << "\n";
}

}  // namespace jpa
