#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coexist/allocation.hpp"
#include "coexist/event_sim.hpp"
#include "coexist/link_model.hpp"
#include "coexist/spectra.hpp"

namespace coexist::scenario {

struct SprsSection {
  spectra::Spectrum spectrum;
  double ref_power_dbm = 0.0;
  double ref_bandwidth_ghz = 1.0;
};

struct SourceSection {
  double mu = 0.0;               ///< pairs per pulse behind matched analyzers
  double rep_rate_hz = 0.0;
  double pulse_fwhm_ps = 0.0;
  double pump_nm = 0.0;
  double signal_nm = 0.0;        ///< sent over the fiber
  double idler_nm = 0.0;         ///< kept at the source node
  events::PairStatistics statistics = events::PairStatistics::Poisson;
};

struct DetectorSection {
  double efficiency = 0.0;       ///< end to end, signal arm at the signal wavelength
  double dark_cps = 0.0;
};

struct AnalysisSection {
  double snr_anchor = 0.0;
  double grid_start_nm = 1260.0;
  double grid_stop_nm = 1360.0;
  double grid_step_nm = 2.0;
  std::size_t mc_replicas = 1000;
  double tomography_seconds = 60.0;      ///< per analyzer setting
  bool tomography_accidentals = false;
  double fringe_step_deg = 5.0;
  double fringe_seconds = 10.0;          ///< per fringe point
};

struct SimulationSection {
  std::uint64_t n_pulses = 2'000'000'000;
  double jitter_pulse_rate_hz = 50e6;
  std::uint64_t jitter_pulses = 1'000'000;
  std::int64_t jitter_scan_ps = 200;
};

struct Scenario {
  std::filesystem::path path;
  std::string raw_text;

  double fiber_length_km = 0.0;
  spectra::Spectrum loss{{{1000.0, 0.0}, {2000.0, 0.0}}, spectra::SpectrumUnit::LossDb};  ///< total dB
  std::optional<spectra::ClassicalPlan> classical;
  std::optional<SprsSection> sprs;
  double analyzer_noise_fraction = 0.5;
  SourceSection source;
  DetectorSection signal;
  DetectorSection idler;
  double filter_bandwidth_ghz = 0.0;
  double window_ps = 0.0;
  events::ClockModel clock;
  double werner_p = 1.0;
  double rotation_deg = 0.0;                  ///< remote polarization rotation
  AnalysisSection analysis;
  allocation::AllocationRequest allocation;
  SimulationSection simulation;
  std::uint64_t seed = 0;

  /// True when classical light shares the fiber.
  bool coexistence() const { return classical.has_value(); }
};

/// Strict loader: unknown keys, missing physical parameters and out-of-range
/// values raise ConfigError naming the field. Relative spectrum paths are
/// resolved against the config file's directory.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir,
                        const std::string& source_name = "<config>");

/// 64-bit FNV-1a of the config bytes, hex encoded.
std::string config_hash(const std::string& text);

/// Replaces the classical aggregate launch power.
void override_power(Scenario& s, double dbm);

link_model::LinkParams link_params(const Scenario& s);
link_model::SweepInputs sweep_inputs(const Scenario& s);
std::optional<spectra::SprsScaling> sprs_scaling(const Scenario& s);
quantum::TwoQubitState<double> source_state(const Scenario& s);

/// Pre-analyzer SpRS rate (counts/s) on the signal arm at its wavelength.
double signal_sprs_cps(const Scenario& s);

/// Event-level configuration at the signal wavelength. Emitted pairs per
/// pulse are mu divided by the analyzer marginal of the source state, so that
/// the analytic model and the simulation describe the same source.
events::SimConfig sim_config(const Scenario& s);

}  // namespace coexist::scenario
