#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "coexist/link_model.hpp"
#include "coexist/quantum_state.hpp"

namespace coexist::events {

enum class Node : std::uint8_t { Local = 0, Remote = 1 };

struct DetectionEvent {
  Node node = Node::Local;
  std::uint8_t channel = 0;
  std::uint64_t t_ps = 0;

  friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

using EventStream = std::vector<DetectionEvent>;

/// Timing model of the two nodes.
///
/// `sigma_tdc_ps` is the RMS of the timestamp difference of two channels on
/// one time-to-digital converter fed the same signal; each timestamp gets
/// sigma_tdc/sqrt(2). `sigma_sync_ps` is the extra RMS the synchronization
/// link adds to remote timestamps.
struct ClockModel {
  double sigma_tdc_ps = 0.0;
  double sigma_sync_ps = 0.0;
  double offset_ps = 0.0;        ///< static remote-minus-local delay
  double drift_ps_per_s = 0.0;

  void validate() const;
};

enum class PairStatistics { Poisson, Thermal };

struct ArmConfig {
  double efficiency = 0.0;   ///< end-to-end detection efficiency after the analyzer port
  double dark_cps = 0.0;
  double sprs_cps = 0.0;     ///< detected SpRS rate ahead of the analyzer
};

struct SimConfig {
  double rep_rate_hz = 500e6;
  std::uint64_t n_pulses = 1;
  double pulse_fwhm_ps = 70.0;
  double window_ps = 300.0;
  double mean_pairs = 0.0;   ///< emitted pairs per pulse
  PairStatistics statistics = PairStatistics::Poisson;
  ArmConfig local;           ///< idler, kept at the source node
  ArmConfig remote;          ///< signal, sent over the fiber
  /// Fraction of unpolarized background that exits one analyzer port.
  double analyzer_noise_fraction = 0.5;
  quantum::AnalyzerSetting local_analyzer;
  quantum::AnalyzerSetting remote_analyzer;
  quantum::TwoQubitState<double> state = quantum::bell_phi_plus<double>();
  ClockModel clock;
  std::uint64_t seed = 0;
  std::uint64_t block_pulses = std::uint64_t{1} << 28;

  double period_ps() const { return 1e12 / rep_rate_hz; }
  void validate() const;
};

/// Start of the simulated timeline; slot k is centred at kEpochPs + k * period.
inline constexpr std::uint64_t kEpochPs = 1'000'000;

struct EventStreams {
  EventStream local;
  EventStream remote;
  std::uint64_t n_pulses = 0;
  double period_ps = 0.0;
};

/// Event-level run. Pair emission per slot follows the configured statistics;
/// each photon passes its analyzer with the joint probabilities of the state
/// and survives with its arm efficiency. Both photons of a pair share the
/// emission time inside the pump pulse. Background (dark + analyzer fraction
/// of SpRS) is a homogeneous Poisson process. A detector fires at most once
/// per slot for pair photons. Output is deterministic in (config, seed).
EventStreams simulate(const SimConfig& cfg);

/// Analytic counterpart of a configuration: mu is the emitted pair number
/// times the analyzer marginal, so that the analytic singles and the matched/crossed
/// coincidence extrema are reproduced at first order. Throws ParameterError
/// when the two analyzer marginals differ.
link_model::LinkParams link_params_for(const SimConfig& cfg);

struct AnalyticRates {
  double singles_local = 0.0;
  double singles_remote = 0.0;
  double coincidences = 0.0;   ///< at the configured analyzer pair
};

AnalyticRates analytic_rates(const SimConfig& cfg);

// ---------------------------------------------------------------------------
// Correlation

/// Delta-t histogram with 1-ps bins; bin i holds delta t = lo_ps + i.
struct Histogram {
  std::int64_t lo_ps = 0;
  std::vector<std::uint64_t> counts;

  std::int64_t hi_ps() const { return lo_ps + static_cast<std::int64_t>(counts.size()) - 1; }
  std::uint64_t total() const;
  std::uint64_t at(std::int64_t dt_ps) const;
};

/// Local-event gate: only local events within +-width/2 of a slot centre
/// (first_slot_ps + k * period_ps) start a coincidence.
struct SlotGate {
  double first_slot_ps = 0.0;
  double period_ps = 0.0;
  double width_ps = 0.0;
};

struct CorrelationOptions {
  double window_ps = 300.0;
  std::int64_t offset_ps = 0;
  std::int64_t scan_lo_ps = -500;
  std::int64_t scan_hi_ps = 500;
  std::optional<SlotGate> gate;
};

struct Correlation {
  Histogram histogram;
  std::uint64_t coincidences = 0;   ///< pairs with |dt - offset| <= window/2
};

/// Two-pointer pass over time-ordered streams, dt = t_remote - t_local.
/// Throws OrderingError naming the first out-of-order event.
Correlation correlate(const EventStream& local, const EventStream& remote,
                      const CorrelationOptions& opt);

/// Throws OrderingError if `s` is not in non-decreasing time order.
void check_ordered(const EventStream& s, const char* name);

struct JitterEstimate {
  double rms_ps = 0.0;
  double center_ps = 0.0;
  int iterations = 0;
};

/// RMS of the histogram peak, restricted to +-5 sigma around the centroid
/// and iterated to convergence. Throws EstimationError without a peak.
JitterEstimate extract_jitter(const Histogram& h);

/// sqrt(combined^2 - single^2): the contribution added in quadrature.
double quadrature_difference(double combined_ps, double single_ps);

/// Split-signal timing test: one pulse train copied to two channels, either
/// on one TDC (no sync term) or on two TDCs joined by the sync link.
EventStreams simulate_split_signal(const ClockModel& clock, double pulse_rate_hz,
                                   std::uint64_t n_pulses, bool two_tdcs, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Rate extraction

struct MeasuredRates {
  std::uint64_t n_pulses = 0;
  std::uint64_t singles_local = 0;    ///< local events inside the slot gate
  std::uint64_t singles_remote = 0;   ///< remote events inside the (offset) slot gate
  std::uint64_t coincidences = 0;     ///< gated coincidences
};

/// Gated singles and coincidences with the configuration's window and offset.
MeasuredRates measure_rates(const SimConfig& cfg, const EventStreams& streams);

CorrelationOptions coincidence_options(const SimConfig& cfg);

/// Fringe measured at the event level: for each local HWP angle the
/// configuration is re-simulated for `seconds_per_point` and gated
/// coincidences are counted. Point i uses seed derived from (cfg.seed, i), so
/// two configurations differing only in background share their pair events.
std::vector<quantum::CountRecord> fringe_from_events(const SimConfig& cfg,
                                                     quantum::Basis remote_basis,
                                                     const std::vector<double>& hwp_grid_deg,
                                                     double seconds_per_point);

}  // namespace coexist::events
