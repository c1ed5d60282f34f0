#include "coexist/scenario.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "coexist/error.hpp"

namespace coexist::scenario {
namespace {

using nlohmann::json;

// Object view that records which keys were read, so leftovers can be
// reported as unknown.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  /// Marks an optional key as known.
  void allow(const std::string& key) { seen_.insert(key); }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const std::string name = key.empty() ? (path_.empty() ? "<root>" : path_) : field(key);
    throw ConfigError(name + ": " + msg);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(key, "is required");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }

  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : (seen_.insert(key), fallback);
  }

  double positive(const std::string& key) {
    const double d = number(key);
    if (!(d > 0.0)) fail(key, "must be > 0");
    return d;
  }

  double non_negative(const std::string& key) {
    const double d = number(key);
    if (!(d >= 0.0)) fail(key, "must be >= 0");
    return d;
  }

  double fraction(const std::string& key) {
    const double d = number(key);
    if (!(d >= 0.0 && d <= 1.0)) fail(key, "must lie in [0, 1]");
    return d;
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) {
      seen_.insert(key);
      return fallback;
    }
    const json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0.0 && d <= 1.8e19 && std::floor(d) == d) return static_cast<std::uint64_t>(d);
    }
    fail(key, "must be a non-negative integer");
  }

  std::string text(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) {
      seen_.insert(key);
      return fallback;
    }
    const json& v = raw(key);
    if (!v.is_boolean()) fail(key, "must be true or false");
    return v.get<bool>();
  }

  std::pair<double, double> interval(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(key, "must be a two-element numeric array");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  Section sub(const std::string& key) { return Section(raw(key), field(key)); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) fail(item.key(), "unknown key");
    }
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

spectra::Spectrum load_curve(Section& sec, const std::string& key,
                             const std::filesystem::path& base) {
  const auto path = resolve(base, sec.text(key));
  if (!std::filesystem::exists(path)) sec.fail(key, "file not found: " + path.string());
  try {
    return spectra::load_spectrum_csv(path);
  } catch (const ValidationError& e) {
    sec.fail(key, e.what());
  }
}

DetectorSection parse_detector(Section sec, double window_ps) {
  DetectorSection d;
  d.efficiency = sec.number("efficiency");
  if (!(d.efficiency > 0.0 && d.efficiency <= 1.0)) sec.fail("efficiency", "must lie in (0, 1]");
  const bool cps = sec.has("dark_cps");
  const bool per_window = sec.has("dark_per_window");
  if (cps == per_window) sec.fail("", "give exactly one of dark_cps or dark_per_window");
  if (cps) {
    d.dark_cps = sec.non_negative("dark_cps");
  } else {
    d.dark_cps = sec.fraction("dark_per_window") / (window_ps * 1e-12);
  }
  sec.finish();
  return d;
}

}  // namespace

std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir,
                        const std::string& source_name) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  Scenario s;
  s.raw_text = text;
  Section top(root, "");

  {
    Section filters = top.sub("filters");
    s.filter_bandwidth_ghz = filters.positive("bandwidth_ghz");
    s.window_ps = filters.positive("window_ps");
    filters.finish();
  }
  {
    Section fiber = top.sub("fiber");
    s.fiber_length_km = fiber.positive("length_km");
    const auto curve = load_curve(fiber, "loss_spectrum", base_dir);
    if (!spectra::is_loss(curve.unit())) fiber.fail("loss_spectrum", "must be a loss curve (dB or dB/km)");
    s.loss = curve.to_total_loss(s.fiber_length_km);
    fiber.finish();
  }
  if (top.has("classical")) {
    Section c = top.sub("classical");
    spectra::ClassicalPlan plan;
    plan.aggregate_launch_dbm = c.number("aggregate_launch_dbm");
    plan.band_span_nm = c.interval("band_span_nm");
    if (c.has("extra_channels")) {
      const json& arr = c.raw("extra_channels");
      if (!arr.is_array()) c.fail("extra_channels", "must be an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Section ch(arr[i], c.field("extra_channels") + "[" + std::to_string(i) + "]");
        plan.extra_channels.push_back({ch.positive("wavelength_nm"), ch.number("power_dbm")});
        ch.finish();
      }
    }
    try {
      plan.validate();
    } catch (const ValidationError& e) {
      c.fail("", e.what());
    }
    s.classical = plan;
    c.finish();
  } else {
    top.allow("classical");
  }
  {
    Section sp = top.sub("sprs");
    s.analyzer_noise_fraction = sp.fraction("analyzer_noise_fraction");
    if (sp.has("spectrum")) {
      SprsSection sec{load_curve(sp, "spectrum", base_dir), sp.number("ref_power_dbm"),
                      sp.positive("ref_bandwidth_ghz")};
      if (sec.spectrum.unit() != spectra::SpectrumUnit::NormalizedRate &&
          sec.spectrum.unit() != spectra::SpectrumUnit::CountsPerSecond) {
        sp.fail("spectrum", "must be a rate curve (cps or cps/mW/GHz)");
      }
      s.sprs = sec;
    } else if (s.classical) {
      sp.fail("spectrum", "is required when a classical plan is present");
    }
    sp.finish();
  }
  {
    Section src = top.sub("source");
    s.source.mu = src.positive("mu");
    s.source.rep_rate_hz = src.positive("rep_rate_hz");
    s.source.pulse_fwhm_ps = src.non_negative("pulse_fwhm_ps");
    s.source.pump_nm = src.positive("pump_nm");
    s.source.signal_nm = src.positive("signal_nm");
    s.source.idler_nm = src.positive("idler_nm");
    const std::string stats = src.has("pair_statistics") ? src.text("pair_statistics") : "poisson";
    if (stats == "poisson") {
      s.source.statistics = events::PairStatistics::Poisson;
    } else if (stats == "thermal") {
      s.source.statistics = events::PairStatistics::Thermal;
    } else {
      src.fail("pair_statistics", "must be 'poisson' or 'thermal'");
    }
    src.finish();
    if (!s.loss.contains(s.source.signal_nm)) {
      src.fail("signal_nm", "outside the loss spectrum");
    }
  }
  {
    Section det = top.sub("detectors");
    s.signal = parse_detector(det.sub("signal"), s.window_ps);
    s.idler = parse_detector(det.sub("idler"), s.window_ps);
    det.finish();
  }
  {
    Section sync = top.sub("sync");
    s.clock.sigma_tdc_ps = sync.non_negative("sigma_tdc_ps");
    s.clock.sigma_sync_ps = sync.non_negative("sigma_sync_ps");
    s.clock.offset_ps = sync.number("offset_ps", 0.0);
    s.clock.drift_ps_per_s = sync.number("drift_ps_per_s", 0.0);
    sync.finish();
    try {
      s.clock.validate();
    } catch (const ValidationError& e) {
      sync.fail("", e.what());
    }
  }
  {
    Section st = top.sub("state");
    if (st.text("bell") != "phi+") st.fail("bell", "only 'phi+' is supported");
    s.werner_p = st.fraction("werner_p");
    s.rotation_deg = st.number("remote_rotation_deg", 0.0);
    st.finish();
  }
  {
    Section an = top.sub("analysis");
    s.analysis.snr_anchor = an.positive("snr_anchor");
    if (an.has("grid")) {
      Section g = an.sub("grid");
      s.analysis.grid_start_nm = g.positive("start_nm");
      s.analysis.grid_stop_nm = g.positive("stop_nm");
      s.analysis.grid_step_nm = g.positive("step_nm");
      g.finish();
    } else {
      an.allow("grid");
    }
    s.analysis.mc_replicas = an.count("mc_replicas", s.analysis.mc_replicas);
    if (s.analysis.mc_replicas < 100) an.fail("mc_replicas", "must be >= 100");
    s.analysis.tomography_seconds = an.number("tomography_seconds", s.analysis.tomography_seconds);
    if (!(s.analysis.tomography_seconds > 0.0)) an.fail("tomography_seconds", "must be > 0");
    s.analysis.tomography_accidentals = an.flag("tomography_accidentals", false);
    s.analysis.fringe_step_deg = an.number("fringe_step_deg", s.analysis.fringe_step_deg);
    if (!(s.analysis.fringe_step_deg > 0.0)) an.fail("fringe_step_deg", "must be > 0");
    s.analysis.fringe_seconds = an.number("fringe_seconds", s.analysis.fringe_seconds);
    if (!(s.analysis.fringe_seconds > 0.0)) an.fail("fringe_seconds", "must be > 0");
    an.finish();
  }
  s.allocation.band_lo_nm = s.analysis.grid_start_nm;
  s.allocation.band_hi_nm = s.analysis.grid_stop_nm;
  s.allocation.step_nm = s.analysis.grid_step_nm;
  if (top.has("allocation")) {
    Section al = top.sub("allocation");
    if (al.has("objective")) {
      try {
        s.allocation.objective = allocation::parse_objective(al.text("objective"));
      } catch (const ValidationError& e) {
        al.fail("objective", e.what());
      }
    }
    if (al.has("exclusions")) {
      const json& arr = al.raw("exclusions");
      if (!arr.is_array()) al.fail("exclusions", "must be an array of [lo, hi] pairs");
      for (const auto& e : arr) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
          al.fail("exclusions", "must be an array of [lo, hi] pairs");
        }
        s.allocation.exclusions.emplace_back(e[0].get<double>(), e[1].get<double>());
      }
    }
    s.allocation.min_guard_ghz = al.number("min_guard_ghz", 0.0);
    al.finish();
    try {
      s.allocation.validate();
    } catch (const ValidationError& e) {
      al.fail("", e.what());
    }
  } else {
    top.allow("allocation");
  }
  if (top.has("simulation")) {
    Section sim = top.sub("simulation");
    s.simulation.n_pulses = sim.count("n_pulses", s.simulation.n_pulses);
    if (s.simulation.n_pulses < 1) sim.fail("n_pulses", "must be >= 1");
    s.simulation.jitter_pulse_rate_hz =
        sim.number("jitter_pulse_rate_hz", s.simulation.jitter_pulse_rate_hz);
    if (!(s.simulation.jitter_pulse_rate_hz > 0.0)) sim.fail("jitter_pulse_rate_hz", "must be > 0");
    s.simulation.jitter_pulses = sim.count("jitter_pulses", s.simulation.jitter_pulses);
    if (s.simulation.jitter_pulses < 1) sim.fail("jitter_pulses", "must be >= 1");
    s.simulation.jitter_scan_ps = static_cast<std::int64_t>(
        sim.count("jitter_scan_ps", static_cast<std::uint64_t>(s.simulation.jitter_scan_ps)));
    sim.finish();
  } else {
    top.allow("simulation");
  }
  if (!top.has("seed")) top.fail("seed", "is required");
  s.seed = top.count("seed", 0);
  top.finish();

  if (1e12 / s.source.rep_rate_hz <= s.window_ps) {
    throw ConfigError("filters.window_ps: must be shorter than the repetition period");
  }
  link_params(s).validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Scenario s = parse_scenario(buf.str(), path.parent_path(), path.string());
  s.path = path;
  return s;
}

void override_power(Scenario& s, double dbm) {
  if (!std::isfinite(dbm)) throw ParameterError("--power-dbm must be finite");
  if (!s.classical) {
    throw ConfigError("--power-dbm needs a classical section in the config");
  }
  s.classical->aggregate_launch_dbm = dbm;
}

std::optional<spectra::SprsScaling> sprs_scaling(const Scenario& s) {
  if (!s.classical || !s.sprs) return std::nullopt;
  spectra::SprsScaling sc{s.sprs->spectrum, *s.classical, s.sprs->ref_power_dbm,
                          s.sprs->ref_bandwidth_ghz, s.filter_bandwidth_ghz};
  return sc;
}

double signal_sprs_cps(const Scenario& s) {
  const auto sc = sprs_scaling(s);
  return sc ? sc->rate_cps(s.source.signal_nm) : 0.0;
}

link_model::LinkParams link_params(const Scenario& s) {
  const double w = s.window_ps * 1e-12;
  link_model::LinkParams p;
  p.mu = s.source.mu;
  p.eta_idler_ref = s.idler.efficiency;
  p.eta_signal_ref = s.signal.efficiency;
  p.dark_idler = s.idler.dark_cps * w;
  p.dark_signal = s.signal.dark_cps * w;
  p.sprs_idler = 0.0;
  p.sprs_signal_ref = s.analyzer_noise_fraction * signal_sprs_cps(s) * w;
  p.window_ps = s.window_ps;
  p.rep_rate_hz = s.source.rep_rate_hz;
  p.reference_nm = s.source.signal_nm;
  return p;
}

link_model::SweepInputs sweep_inputs(const Scenario& s) {
  link_model::SweepInputs in{link_params(s), s.loss, sprs_scaling(s), s.analyzer_noise_fraction,
                             s.analysis.snr_anchor};
  return in;
}

quantum::TwoQubitState<double> source_state(const Scenario& s) {
  auto rho = quantum::werner_phi_plus<double>(s.werner_p);
  if (s.rotation_deg != 0.0) {
    rho = quantum::apply_local_unitaries(rho, quantum::Matrix2c<double>::Identity().eval(),
                                         quantum::polarization_rotation<double>(s.rotation_deg));
  }
  return rho;
}

events::SimConfig sim_config(const Scenario& s) {
  events::SimConfig cfg;
  cfg.rep_rate_hz = s.source.rep_rate_hz;
  cfg.n_pulses = s.simulation.n_pulses;
  cfg.pulse_fwhm_ps = s.source.pulse_fwhm_ps;
  cfg.window_ps = s.window_ps;
  cfg.statistics = s.source.statistics;
  cfg.state = source_state(s);
  cfg.local_analyzer = quantum::analyzer_for(quantum::Basis::H);
  cfg.remote_analyzer = quantum::analyzer_for(quantum::Basis::H);
  const double marginal = quantum::local_marginal(cfg.state, cfg.local_analyzer);
  cfg.mean_pairs = s.source.mu / marginal;
  cfg.local = {s.idler.efficiency, s.idler.dark_cps, 0.0};
  cfg.remote = {s.signal.efficiency, s.signal.dark_cps, signal_sprs_cps(s)};
  cfg.analyzer_noise_fraction = s.analyzer_noise_fraction;
  cfg.clock = s.clock;
  cfg.seed = s.seed;
  return cfg;
}

}  // namespace coexist::scenario
