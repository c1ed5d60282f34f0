#include "coexist/event_sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "coexist/error.hpp"
#include "coexist/rng.hpp"

namespace coexist::events {
namespace {

constexpr double kFwhmToSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

enum StreamKind : std::uint64_t { kPairs = 0, kLocalBackground = 1, kRemoteBackground = 2 };

std::uint64_t stream_id(std::uint64_t block, StreamKind kind) { return block * 4 + kind; }

double gaussian(std::mt19937_64& rng, double sigma) {
  if (!(sigma > 0.0)) return 0.0;
  std::normal_distribution<double> d(0.0, sigma);
  return d(rng);
}

std::uint64_t to_timestamp(double t_ps) {
  return t_ps <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(t_ps));
}

// Number of pairs in a slot known to hold at least one, for Poisson(lambda).
std::uint64_t zero_truncated_poisson(std::mt19937_64& rng, double lambda) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = u01(rng) * -std::expm1(-lambda);
  double pk = std::exp(-lambda) * lambda;
  double cumulative = pk;
  std::uint64_t k = 1;
  while (cumulative < u && k < 10000) {
    ++k;
    pk *= lambda / static_cast<double>(k);
    cumulative += pk;
  }
  return k;
}

// Per-pair detection classes: both photons, local only, remote only.
struct DetectionClasses {
  double both = 0.0;
  double local_only = 0.0;
  double remote_only = 0.0;
};

DetectionClasses detection_classes(const SimConfig& cfg) {
  const double joint = quantum::coincidence_probability(cfg.state, cfg.local_analyzer,
                                                        cfg.remote_analyzer);
  const double m_local = quantum::local_marginal(cfg.state, cfg.local_analyzer);
  const double m_remote = quantum::remote_marginal(cfg.state, cfg.remote_analyzer);
  DetectionClasses c;
  c.both = joint * cfg.local.efficiency * cfg.remote.efficiency;
  c.local_only = std::max(0.0, m_local * cfg.local.efficiency - c.both);
  c.remote_only = std::max(0.0, m_remote * cfg.remote.efficiency - c.both);
  return c;
}

struct Arrival {
  std::uint64_t slot;
  double t_ps;
};

class BlockSimulator {
public:
  BlockSimulator(const SimConfig& cfg, const DetectionClasses& classes)
      : cfg_(cfg),
        classes_(classes),
        period_(cfg.period_ps()),
        sigma_pulse_(cfg.pulse_fwhm_ps / kFwhmToSigma),
        sigma_channel_(cfg.clock.sigma_tdc_ps / std::sqrt(2.0)) {}

  void run(std::uint64_t block, std::uint64_t first_slot, std::uint64_t last_slot,
           EventStreams& out) {
    std::vector<Arrival> local;
    std::vector<Arrival> remote;
    auto rng = make_engine(cfg_.seed, stream_id(block, kPairs));
    if (cfg_.mean_pairs > 0.0) {
      if (cfg_.statistics == PairStatistics::Poisson) {
        poisson_pairs(rng, first_slot, last_slot, local, remote);
      } else {
        thermal_pairs(rng, first_slot, last_slot, local, remote);
      }
    }
    const std::size_t local_begin = out.local.size();
    const std::size_t remote_begin = out.remote.size();
    emit_clicks(local, Node::Local, out.local);
    emit_clicks(remote, Node::Remote, out.remote);

    const double span_start = slot_center(first_slot) - period_ / 2.0;
    const double span_end = slot_center(last_slot) - period_ / 2.0;
    auto rng_l = make_engine(cfg_.seed, stream_id(block, kLocalBackground));
    background(rng_l, background_cps(cfg_.local), span_start, span_end, Node::Local, out.local);
    auto rng_r = make_engine(cfg_.seed, stream_id(block, kRemoteBackground));
    background(rng_r, background_cps(cfg_.remote), span_start + cfg_.clock.offset_ps,
               span_end + cfg_.clock.offset_ps, Node::Remote, out.remote);

    sort_tail(out.local, local_begin);
    sort_tail(out.remote, remote_begin);
  }

private:
  double slot_center(std::uint64_t slot) const {
    return static_cast<double>(kEpochPs) + static_cast<double>(slot) * period_;
  }

  double background_cps(const ArmConfig& arm) const {
    return arm.dark_cps + cfg_.analyzer_noise_fraction * arm.sprs_cps;
  }

  double local_time(std::mt19937_64& rng, double emission) {
    return emission + gaussian(rng, sigma_channel_);
  }

  double remote_time(std::mt19937_64& rng, double emission) {
    const double sync = gaussian(rng, cfg_.clock.sigma_sync_ps);
    return emission + gaussian(rng, sigma_channel_) + sync + cfg_.clock.offset_ps +
           cfg_.clock.drift_ps_per_s * emission * 1e-12;
  }

  void add_pair(std::mt19937_64& rng, std::uint64_t slot, bool to_local, bool to_remote,
                std::vector<Arrival>& local, std::vector<Arrival>& remote) {
    const double emission = slot_center(slot) + gaussian(rng, sigma_pulse_);
    if (to_local) local.push_back({slot, local_time(rng, emission)});
    if (to_remote) remote.push_back({slot, remote_time(rng, emission)});
  }

  // Poisson pair numbers split into independent Poisson processes per
  // detection class, so only slots with a detection are visited.
  void poisson_pairs(std::mt19937_64& rng, std::uint64_t first, std::uint64_t last,
                     std::vector<Arrival>& local, std::vector<Arrival>& remote) {
    const std::array<std::pair<double, std::pair<bool, bool>>, 3> classes{{
        {classes_.both, {true, true}},
        {classes_.local_only, {true, false}},
        {classes_.remote_only, {false, true}},
    }};
    for (const auto& [q, route] : classes) {
      const double lambda = cfg_.mean_pairs * q;
      if (!(lambda > 0.0)) continue;
      const double p_slot = -std::expm1(-lambda);
      std::geometric_distribution<std::uint64_t> gap(p_slot);
      std::uint64_t slot = first;
      while (true) {
        const std::uint64_t skip = gap(rng);
        if (skip >= last - slot) break;
        slot += skip;
        const std::uint64_t n = zero_truncated_poisson(rng, lambda);
        for (std::uint64_t i = 0; i < n; ++i) {
          add_pair(rng, slot, route.first, route.second, local, remote);
        }
        ++slot;
        if (slot >= last) break;
      }
    }
  }

  // Thermal (single-mode) pair numbers: visit every emitting slot and route
  // each pair by its joint detection outcome.
  void thermal_pairs(std::mt19937_64& rng, std::uint64_t first, std::uint64_t last,
                     std::vector<Arrival>& local, std::vector<Arrival>& remote) {
    const double mu = cfg_.mean_pairs;
    std::geometric_distribution<std::uint64_t> gap(mu / (1.0 + mu));
    std::geometric_distribution<std::uint64_t> extra(1.0 / (1.0 + mu));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uint64_t slot = first;
    while (true) {
      const std::uint64_t skip = gap(rng);
      if (skip >= last - slot) break;
      slot += skip;
      const std::uint64_t n = 1 + extra(rng);
      for (std::uint64_t i = 0; i < n; ++i) {
        const double u = u01(rng);
        if (u < classes_.both) {
          add_pair(rng, slot, true, true, local, remote);
        } else if (u < classes_.both + classes_.local_only) {
          add_pair(rng, slot, true, false, local, remote);
        } else if (u < classes_.both + classes_.local_only + classes_.remote_only) {
          add_pair(rng, slot, false, true, local, remote);
        }
      }
      ++slot;
      if (slot >= last) break;
    }
  }

  // First photon per slot fires the detector.
  static void emit_clicks(std::vector<Arrival>& arrivals, Node node, EventStream& out) {
    std::sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) {
      return a.slot != b.slot ? a.slot < b.slot : a.t_ps < b.t_ps;
    });
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
      if (i > 0 && arrivals[i].slot == arrivals[i - 1].slot) continue;
      out.push_back({node, 0, to_timestamp(arrivals[i].t_ps)});
    }
  }

  static void background(std::mt19937_64& rng, double rate_cps, double start, double end,
                         Node node, EventStream& out) {
    if (!(rate_cps > 0.0) || !(end > start)) return;
    std::exponential_distribution<double> gap(rate_cps * 1e-12);
    double t = start + gap(rng);
    while (t < end) {
      out.push_back({node, 0, to_timestamp(t)});
      t += gap(rng);
    }
  }

  static void sort_tail(EventStream& s, std::size_t begin) {
    std::stable_sort(s.begin() + static_cast<std::ptrdiff_t>(begin), s.end(),
                     [](const DetectionEvent& a, const DetectionEvent& b) {
                       return a.t_ps < b.t_ps;
                     });
  }

  const SimConfig& cfg_;
  DetectionClasses classes_;
  double period_;
  double sigma_pulse_;
  double sigma_channel_;
};

bool by_time(const DetectionEvent& a, const DetectionEvent& b) { return a.t_ps < b.t_ps; }

bool in_gate(double t, double first, double period, double width) {
  const double k = std::round((t - first) / period);
  return std::abs(t - (first + k * period)) <= width / 2.0;
}

}  // namespace

void ClockModel::validate() const {
  if (!(sigma_tdc_ps >= 0.0) || !(sigma_sync_ps >= 0.0)) {
    throw ParameterError("clock jitter values must be >= 0 ps");
  }
  if (!std::isfinite(offset_ps) || !std::isfinite(drift_ps_per_s)) {
    throw ParameterError("clock offset and drift must be finite");
  }
  if (offset_ps < -static_cast<double>(kEpochPs) / 2.0) {
    throw ParameterError("clock offset is too negative for the simulated timeline");
  }
}

void SimConfig::validate() const {
  auto fraction = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ParameterError(std::string(name) + " must lie in [0, 1]");
    }
  };
  if (!(rep_rate_hz > 0.0)) throw ParameterError("repetition rate must be > 0 Hz");
  if (n_pulses < 1) throw ParameterError("n_pulses must be >= 1");
  if (!(window_ps > 0.0)) throw ParameterError("coincidence window must be > 0 ps");
  if (!(period_ps() > window_ps)) {
    throw ParameterError("repetition period must exceed the coincidence window");
  }
  if (!(pulse_fwhm_ps >= 0.0)) throw ParameterError("pulse FWHM must be >= 0 ps");
  if (!(mean_pairs >= 0.0) || !std::isfinite(mean_pairs)) {
    throw ParameterError("mean pair number must be finite and >= 0");
  }
  fraction(local.efficiency, "local efficiency");
  fraction(remote.efficiency, "remote efficiency");
  fraction(analyzer_noise_fraction, "analyzer noise fraction");
  for (const ArmConfig* arm : {&local, &remote}) {
    if (!(arm->dark_cps >= 0.0) || !(arm->sprs_cps >= 0.0)) {
      throw ParameterError("background rates must be >= 0 counts/s");
    }
  }
  if (block_pulses < 1) throw ParameterError("block_pulses must be >= 1");
  clock.validate();
}

EventStreams simulate(const SimConfig& cfg) {
  cfg.validate();
  EventStreams out;
  out.n_pulses = cfg.n_pulses;
  out.period_ps = cfg.period_ps();
  const DetectionClasses classes = detection_classes(cfg);
  BlockSimulator sim(cfg, classes);
  std::uint64_t block = 0;
  for (std::uint64_t first = 0; first < cfg.n_pulses; first += cfg.block_pulses, ++block) {
    const std::uint64_t last = std::min(cfg.n_pulses, first + cfg.block_pulses);
    sim.run(block, first, last, out);
  }
  // Blocks are contiguous in time; only extreme jitter could interleave them.
  if (!std::is_sorted(out.local.begin(), out.local.end(), by_time)) {
    std::stable_sort(out.local.begin(), out.local.end(), by_time);
  }
  if (!std::is_sorted(out.remote.begin(), out.remote.end(), by_time)) {
    std::stable_sort(out.remote.begin(), out.remote.end(), by_time);
  }
  return out;
}

link_model::LinkParams link_params_for(const SimConfig& cfg) {
  const double m_local = quantum::local_marginal(cfg.state, cfg.local_analyzer);
  const double m_remote = quantum::remote_marginal(cfg.state, cfg.remote_analyzer);
  if (std::abs(m_local - m_remote) > 1e-9) {
    std::ostringstream os;
    os << "analyzer marginals differ (local " << m_local << ", remote " << m_remote
       << "); no single mu reproduces both singles rates";
    throw ParameterError(os.str());
  }
  const double w = cfg.window_ps * 1e-12;
  link_model::LinkParams p;
  p.mu = cfg.mean_pairs * m_local;
  p.eta_idler_ref = cfg.local.efficiency;
  p.eta_signal_ref = cfg.remote.efficiency;
  p.dark_idler = cfg.local.dark_cps * w;
  p.dark_signal = cfg.remote.dark_cps * w;
  p.sprs_idler = cfg.analyzer_noise_fraction * cfg.local.sprs_cps * w;
  p.sprs_signal_ref = cfg.analyzer_noise_fraction * cfg.remote.sprs_cps * w;
  p.window_ps = cfg.window_ps;
  p.rep_rate_hz = cfg.rep_rate_hz;
  return p;
}

AnalyticRates analytic_rates(const SimConfig& cfg) {
  const double w = cfg.window_ps * 1e-12;
  const double m_local = quantum::local_marginal(cfg.state, cfg.local_analyzer);
  const double m_remote = quantum::remote_marginal(cfg.state, cfg.remote_analyzer);
  const double joint = quantum::coincidence_probability(cfg.state, cfg.local_analyzer,
                                                        cfg.remote_analyzer);
  AnalyticRates r;
  r.singles_local = cfg.mean_pairs * m_local * cfg.local.efficiency +
                    (cfg.local.dark_cps + cfg.analyzer_noise_fraction * cfg.local.sprs_cps) * w;
  r.singles_remote = cfg.mean_pairs * m_remote * cfg.remote.efficiency +
                     (cfg.remote.dark_cps + cfg.analyzer_noise_fraction * cfg.remote.sprs_cps) * w;
  r.coincidences = cfg.mean_pairs * joint * cfg.local.efficiency * cfg.remote.efficiency +
                   r.singles_local * r.singles_remote;
  return r;
}

// ---------------------------------------------------------------------------

std::uint64_t Histogram::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

std::uint64_t Histogram::at(std::int64_t dt_ps) const {
  if (dt_ps < lo_ps || dt_ps > hi_ps()) return 0;
  return counts[static_cast<std::size_t>(dt_ps - lo_ps)];
}

void check_ordered(const EventStream& s, const char* name) {
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i].t_ps < s[i - 1].t_ps) {
      std::ostringstream os;
      os << name << " stream is not time-ordered: event " << i << " at " << s[i].t_ps
         << " ps precedes event " << i - 1 << " at " << s[i - 1].t_ps << " ps";
      throw OrderingError(os.str());
    }
  }
}

Correlation correlate(const EventStream& local, const EventStream& remote,
                      const CorrelationOptions& opt) {
  if (!(opt.window_ps >= 0.0)) throw ParameterError("coincidence window must be >= 0 ps");
  if (opt.scan_hi_ps < opt.scan_lo_ps) throw ParameterError("scan range is empty");
  if (opt.scan_hi_ps - opt.scan_lo_ps > 100'000'000) {
    throw ParameterError("scan range exceeds 1e8 bins");
  }
  if (opt.gate && !(opt.gate->period_ps > 0.0)) throw ParameterError("gate period must be > 0");
  check_ordered(local, "local");
  check_ordered(remote, "remote");

  const double half = opt.window_ps / 2.0;
  const auto lo = std::min<std::int64_t>(
      opt.scan_lo_ps, static_cast<std::int64_t>(std::floor(static_cast<double>(opt.offset_ps) - half)));
  const auto hi = std::max<std::int64_t>(
      opt.scan_hi_ps, static_cast<std::int64_t>(std::ceil(static_cast<double>(opt.offset_ps) + half)));

  Correlation out;
  out.histogram.lo_ps = opt.scan_lo_ps;
  out.histogram.counts.assign(static_cast<std::size_t>(opt.scan_hi_ps - opt.scan_lo_ps + 1), 0);

  std::size_t start = 0;
  for (const auto& l : local) {
    const auto tl = static_cast<std::int64_t>(l.t_ps);
    if (opt.gate && !in_gate(static_cast<double>(tl), opt.gate->first_slot_ps,
                             opt.gate->period_ps, opt.gate->width_ps)) {
      continue;
    }
    while (start < remote.size() && static_cast<std::int64_t>(remote[start].t_ps) - tl < lo) {
      ++start;
    }
    for (std::size_t j = start; j < remote.size(); ++j) {
      const std::int64_t dt = static_cast<std::int64_t>(remote[j].t_ps) - tl;
      if (dt > hi) break;
      if (dt >= opt.scan_lo_ps && dt <= opt.scan_hi_ps) {
        ++out.histogram.counts[static_cast<std::size_t>(dt - opt.scan_lo_ps)];
      }
      if (std::abs(static_cast<double>(dt - opt.offset_ps)) <= half) ++out.coincidences;
    }
  }
  return out;
}

JitterEstimate extract_jitter(const Histogram& h) {
  const std::uint64_t total = h.total();
  if (total == 0) throw EstimationError("jitter estimate: histogram is empty");
  const auto peak_it = std::max_element(h.counts.begin(), h.counts.end());
  const auto peak_idx = static_cast<std::size_t>(peak_it - h.counts.begin());
  const double peak = static_cast<double>(*peak_it);
  const double mean = static_cast<double>(total) / static_cast<double>(h.counts.size());
  if (peak < 3.0 || peak < mean + 5.0 * std::sqrt(mean)) {
    throw EstimationError("jitter estimate: no discernible peak above the flat level");
  }

  // Initial width from the half-maximum crossing.
  std::size_t left = peak_idx;
  std::size_t right = peak_idx;
  while (left > 0 && static_cast<double>(h.counts[left - 1]) > peak / 2.0) --left;
  while (right + 1 < h.counts.size() && static_cast<double>(h.counts[right + 1]) > peak / 2.0) {
    ++right;
  }
  JitterEstimate est;
  est.center_ps = static_cast<double>(h.lo_ps) + static_cast<double>(peak_idx);
  est.rms_ps = static_cast<double>(right - left) / 2.3548200450309493;

  for (est.iterations = 1; est.iterations <= 200; ++est.iterations) {
    const double reach = std::max(5.0 * est.rms_ps, 0.5);
    double w = 0.0;
    double s1 = 0.0;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const double dt = static_cast<double>(h.lo_ps) + static_cast<double>(i);
      if (std::abs(dt - est.center_ps) > reach) continue;
      w += static_cast<double>(h.counts[i]);
      s1 += static_cast<double>(h.counts[i]) * dt;
    }
    const double center = s1 / w;
    double s2 = 0.0;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const double dt = static_cast<double>(h.lo_ps) + static_cast<double>(i);
      if (std::abs(dt - est.center_ps) > reach) continue;
      s2 += static_cast<double>(h.counts[i]) * (dt - center) * (dt - center);
    }
    const double rms = std::sqrt(s2 / w);
    const bool converged =
        std::abs(rms - est.rms_ps) < 1e-9 && std::abs(center - est.center_ps) < 1e-9;
    est.rms_ps = rms;
    est.center_ps = center;
    if (converged) break;
  }
  return est;
}

double quadrature_difference(double combined_ps, double single_ps) {
  if (combined_ps < single_ps) {
    throw EstimationError("combined jitter is smaller than the single-TDC jitter");
  }
  return std::sqrt(combined_ps * combined_ps - single_ps * single_ps);
}

EventStreams simulate_split_signal(const ClockModel& clock, double pulse_rate_hz,
                                   std::uint64_t n_pulses, bool two_tdcs, std::uint64_t seed) {
  clock.validate();
  if (!(pulse_rate_hz > 0.0)) throw ParameterError("pulse rate must be > 0 Hz");
  EventStreams out;
  out.n_pulses = n_pulses;
  out.period_ps = 1e12 / pulse_rate_hz;
  out.local.reserve(n_pulses);
  out.remote.reserve(n_pulses);
  auto rng = make_engine(seed, 0);
  const double sigma_channel = clock.sigma_tdc_ps / std::sqrt(2.0);
  for (std::uint64_t k = 0; k < n_pulses; ++k) {
    const double t = static_cast<double>(kEpochPs) + static_cast<double>(k) * out.period_ps;
    const double tl = t + gaussian(rng, sigma_channel);
    double tr = t + gaussian(rng, sigma_channel);
    if (two_tdcs) {
      tr += gaussian(rng, clock.sigma_sync_ps) + clock.offset_ps +
            clock.drift_ps_per_s * t * 1e-12;
    }
    out.local.push_back({Node::Local, 0, to_timestamp(tl)});
    out.remote.push_back({Node::Remote, 0, to_timestamp(tr)});
  }
  if (!std::is_sorted(out.remote.begin(), out.remote.end(), by_time)) {
    std::stable_sort(out.remote.begin(), out.remote.end(), by_time);
  }
  return out;
}

// ---------------------------------------------------------------------------

CorrelationOptions coincidence_options(const SimConfig& cfg) {
  CorrelationOptions opt;
  opt.window_ps = cfg.window_ps;
  opt.offset_ps = static_cast<std::int64_t>(std::llround(cfg.clock.offset_ps));
  const auto half = static_cast<std::int64_t>(std::ceil(cfg.window_ps / 2.0));
  opt.scan_lo_ps = opt.offset_ps - half;
  opt.scan_hi_ps = opt.offset_ps + half;
  opt.gate = SlotGate{static_cast<double>(kEpochPs), cfg.period_ps(), cfg.window_ps};
  return opt;
}

MeasuredRates measure_rates(const SimConfig& cfg, const EventStreams& streams) {
  MeasuredRates m;
  m.n_pulses = streams.n_pulses;
  const double period = cfg.period_ps();
  const double first = static_cast<double>(kEpochPs);
  for (const auto& e : streams.local) {
    if (in_gate(static_cast<double>(e.t_ps), first, period, cfg.window_ps)) ++m.singles_local;
  }
  for (const auto& e : streams.remote) {
    const double t = static_cast<double>(e.t_ps) - cfg.clock.offset_ps;
    const double drift = cfg.clock.drift_ps_per_s * t * 1e-12;
    if (in_gate(t - drift, first, period, cfg.window_ps)) ++m.singles_remote;
  }
  m.coincidences = correlate(streams.local, streams.remote, coincidence_options(cfg)).coincidences;
  return m;
}

std::vector<quantum::CountRecord> fringe_from_events(const SimConfig& cfg,
                                                     quantum::Basis remote_basis,
                                                     const std::vector<double>& hwp_grid_deg,
                                                     double seconds_per_point) {
  if (hwp_grid_deg.empty()) throw ParameterError("fringe grid is empty");
  if (!(seconds_per_point > 0.0)) throw ParameterError("seconds per point must be > 0");
  std::vector<quantum::CountRecord> out;
  out.reserve(hwp_grid_deg.size());
  for (std::size_t i = 0; i < hwp_grid_deg.size(); ++i) {
    SimConfig point = cfg;
    point.local_analyzer = quantum::AnalyzerSetting(0.0, hwp_grid_deg[i]);
    point.remote_analyzer = quantum::analyzer_for(remote_basis);
    point.n_pulses = static_cast<std::uint64_t>(std::llround(seconds_per_point * cfg.rep_rate_hz));
    point.seed = make_engine(cfg.seed, 0x5eed0000ULL + i)();
    const EventStreams streams = simulate(point);
    const auto corr = correlate(streams.local, streams.remote, coincidence_options(point));
    out.push_back({{point.local_analyzer, point.remote_analyzer}, corr.coincidences,
                   seconds_per_point});
  }
  return out;
}

}  // namespace coexist::events
