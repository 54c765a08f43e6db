#include <doctest.h>

#include <cmath>
#include <random>

#include "jpa/calibration.hpp"

using namespace jpa;

namespace {

std::vector<ResonancePoint> sweep_of(const CavityParams& p, std::size_t n, double half_span, double noise,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<ResonancePoint> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = p.omega_r - half_span + 2 * half_span * static_cast<double>(i) / static_cast<double>(n - 1);
    out.push_back({w, reflection_response(w, p) + noise * cplx(g(rng), g(rng))});
  }
  return out;
}

}  // namespace

TEST_CASE("reflection response") {
  CavityParams p;
  const cplx r0 = reflection_response(p.omega_r, p);
  CHECK(r0.real() == doctest::Approx(1.0 - 2 * 4.44 / 6.74).epsilon(1e-12));
  CHECK(r0.real() == doctest::Approx(-0.3175).epsilon(1e-3));
  CHECK(std::abs(r0.imag()) < 1e-15);
  CavityParams lossless = p;
  lossless.gamma = 0.0;
  CHECK(reflection_response(p.omega_r, lossless).real() == doctest::Approx(-1.0));
  for (int k = -50; k <= 50; ++k) {
    const double w = p.omega_r + k * 0.3e6 * kTwoPi;
    CHECK(std::abs(reflection_response(w, p)) <= 1.0 + 1e-15);
    CHECK(std::abs(reflection_response(w, lossless)) == doctest::Approx(1.0));
  }
}

TEST_CASE("phase response is odd about resonance") {
  CavityParams p;
  for (double f : {0.1e6, 0.5e6, 1e6, 2e6, 5e6}) {
    const double d = kTwoPi * f;
    CHECK(phase_offset_from_resonance(d, p) == doctest::Approx(-phase_offset_from_resonance(-d, p)));
    CHECK(pump_phase_correction(d, p) == doctest::Approx(0.5 * phase_offset_from_resonance(d, p)));
  }
  CHECK(phase_offset_from_resonance(0.0, p) == doctest::Approx(0.0));
  const double c = pump_phase_correction(kTwoPi * 2e6, p) * 180.0 / kPi;
  CHECK(std::abs(c) == doctest::Approx(46.0).epsilon(0.02));

  PumpConfig pumps({{-kTwoPi * 2e6, 1.0, 0.0}, {kTwoPi * 2e6, 1.0, 0.0}});
  auto corrected = with_cavity_phase_response(pumps, p);
  CHECK(corrected[0].phase == doctest::Approx(-corrected[1].phase));
  CHECK(corrected[1].phase == doctest::Approx(pump_phase_correction(kTwoPi * 2e6, p)));
}

TEST_CASE("resonance fit: noiseless recovery") {
  CavityParams p;
  auto fit = fit_resonance(sweep_of(p, 201, kTwoPi * 20e6, 0.0, 1));
  CHECK(fit.omega_r == doctest::Approx(p.omega_r).epsilon(1e-12));
  CHECK(fit.kappa == doctest::Approx(p.kappa).epsilon(1e-8));
  CHECK(fit.gamma == doctest::Approx(p.gamma).epsilon(1e-8));
  CHECK(fit.residual_norm < 1e-10);
}

TEST_CASE("resonance fit: property over random cavities with 1% noise") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    CavityParams p;
    p.omega_r = kTwoPi * (5e9 + 2e9 * u(rng));
    p.kappa = kTwoPi * (1e6 + 8e6 * u(rng));
    p.gamma = p.kappa * (0.1 + 0.6 * u(rng));
    const double span = 4 * (p.kappa + p.gamma);
    auto fit = fit_resonance(sweep_of(p, 401, span, 0.01, 100 + trial));
    CHECK(fit.kappa == doctest::Approx(p.kappa).epsilon(0.02));
    CHECK(fit.gamma == doctest::Approx(p.gamma).epsilon(0.02));
    CHECK(std::abs(fit.omega_r - p.omega_r) < 0.02 * p.kappa);
    CHECK(fit.se_kappa > 0.0);
  }
}

TEST_CASE("resonance fit: flat data diverges") {
  std::vector<ResonancePoint> flat;
  for (int i = 0; i < 50; ++i) flat.push_back({kTwoPi * (6e9 + i * 1e5), cplx(1.0, 0.0)});
  CHECK_THROWS_AS(fit_resonance(flat), Error);
  try {
    fit_resonance(flat);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FitDiverged);
  }
}

TEST_CASE("friis fit") {
  std::vector<NoiseSweepPoint> sweep;
  const double G = std::pow(10.0, 94.4 / 10.0), tp = 1.94;
  for (double t : {0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0}) sweep.push_back({t, kBoltzmann * G * (t + tp)});
  auto f = friis_fit(sweep);
  CHECK(f.gain_db == doctest::Approx(94.4).epsilon(1e-10));
  CHECK(f.t_preamp == doctest::Approx(tp).epsilon(1e-9));
  CHECK(f.n_points == 6);
  CHECK(f.se_gain_db < 1e-8);

  std::vector<NoiseSweepPoint> one{{1.0, 1e-14}, {1.0, 1.1e-14}};
  CHECK_THROWS_AS(friis_fit(one), Error);
  try {
    friis_fit(one);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateSweep);
  }
  const auto csv = noise_sweep_csv(sweep);
  CHECK(csv.rfind("temperature_K,power_W_per_Hz\n", 0) == 0);
}

TEST_CASE("gain map: reference row and growth with pump") {
  CavityParams p;
  GainMapOptions o;
  o.n_trajectories = 2;
  const std::vector<double> det{0.0, kTwoPi * 1e6};
  const std::vector<double> amps{0.0, 0.1, 0.2, 0.3};
  auto map = simulate_gain_map(p, det, amps, o);
  for (int j = 0; j < 2; ++j) CHECK(map.gain_db(0, j) == 0.0);
  for (int i = 1; i < 4; ++i) CHECK(map.gain_db(i, 0) > map.gain_db(i - 1, 0));
  CHECK(map.gain_db(3, 0) > 3.0);
  auto again = simulate_gain_map(p, det, amps, o);
  CHECK(again.gain_db == map.gain_db);
  CHECK(gain_map_csv(map).rfind("A\\detuning_hz,0,", 0) == 0);
}
