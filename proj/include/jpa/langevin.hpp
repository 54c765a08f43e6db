#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "jpa/core.hpp"

namespace jpa {

struct SimSettings {
  double dt = 1e-9;
  double duration = 0.0;
  double transient = 0.0;
  std::size_t n_trajectories = 1;
  std::uint64_t seed = 1;
  double overflow_photons = 1e6;

  std::size_t transient_steps() const;
  std::size_t record_steps() const;
};

// Checks the stability guard, record length and transient length. min_bandwidth_hz <= 0 skips
// the record-length check.
std::vector<std::string> settings_violations(const SimSettings& s, const CavityParams& params,
                                             double min_bandwidth_hz);

// Default settings for a layout: dt*(kappa+gamma) <= 0.04, transient >= 30/(kappa+gamma), record
// >= 100/bandwidth and a whole number of periods of the gcd of the mode centres.
SimSettings default_settings(const CavityParams& params, const ModeLayout& layout, std::size_t n_trajectories,
                             std::uint64_t seed);

struct FieldTrace {
  std::vector<cplx> b_out;
  std::vector<cplx> b_in;
  double t0 = 0.0;  // time of sample 0 (centre of its integration step)
  double dt = 0.0;
  std::size_t index = 0;
};

// Coherent tone added to b_in: amplitude * exp(i (detuning t + phase)).
struct CoherentProbe {
  double detuning = 0.0;  // rad/s in the rotating frame
  double amplitude = 0.0; // sqrt(photons/s)
  double phase = 0.0;
};

cplx drift(cplx a, double t, const CavityParams& params, const PumpConfig& pumps);

// Independent stream per (seed, index).
std::mt19937_64 trajectory_rng(std::uint64_t seed, std::size_t index);

FieldTrace integrate_trajectory(const CavityParams& params, const PumpConfig& pumps, const SimSettings& settings,
                                std::size_t trajectory_index, const CoherentProbe* probe = nullptr);

std::vector<FieldTrace> run_ensemble(const CavityParams& params, const PumpConfig& pumps,
                                     const SimSettings& settings, unsigned jobs = 1);

// Runs body(i) for i in [0, n) on `jobs` threads. If any call throws, the exception from the
// lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body);

// Little-endian float64 rows (t, Re b_out, Im b_out); the sidecar `<path>.txt` documents the layout.
void write_trace_binary(const std::string& path, const FieldTrace& trace);

}  // namespace jpa
