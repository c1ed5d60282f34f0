#include "coexist/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "coexist/allocation.hpp"
#include "coexist/error.hpp"
#include "coexist/event_io.hpp"
#include "coexist/event_sim.hpp"
#include "coexist/fringe.hpp"
#include "coexist/quantum_io.hpp"
#include "coexist/scenario.hpp"

#ifndef COEXIST_VERSION
#define COEXIST_VERSION "0.0.0"
#endif

namespace coexist::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string format = "csv";
};

struct Context {
  Common common;
  std::optional<scenario::Scenario> scn;
  json overrides = json::object();
  std::uint64_t seed = 0;
};

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return num(v);
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::vector<double> hwp_grid(double step_deg) {
  std::vector<double> grid;
  for (int k = 0; static_cast<double>(k) * step_deg < 180.0 - 1e-9; ++k) {
    grid.push_back(static_cast<double>(k) * step_deg);
  }
  return grid;
}

quantum::Basis parse_basis(const std::string& token) {
  static const std::map<std::string, quantum::Basis> names{
      {"H", quantum::Basis::H}, {"V", quantum::Basis::V}, {"D", quantum::Basis::D},
      {"A", quantum::Basis::A}, {"R", quantum::Basis::R}, {"L", quantum::Basis::L}};
  const auto it = names.find(token);
  if (it == names.end()) throw ParameterError("unknown basis '" + token + "' (H|V|D|A|R|L)");
  return it->second;
}

const scenario::Scenario& need_scenario(const Context& ctx) {
  if (!ctx.scn) throw ConfigError("--config is required for this subcommand");
  return *ctx.scn;
}

// ---------------------------------------------------------------------------

struct SweepOptions {
  std::optional<double> power_dbm;
  std::optional<double> lambda_nm;
};

void cmd_sweep(Context& ctx, const SweepOptions& o, OutputSet& files, std::ostream& out) {
  auto s = need_scenario(ctx);
  if (o.power_dbm) {
    scenario::override_power(s, *o.power_dbm);
    ctx.overrides["power_dbm"] = *o.power_dbm;
  }
  const auto inputs = scenario::sweep_inputs(s);
  std::vector<double> grid;
  if (o.lambda_nm) {
    grid = {*o.lambda_nm};
    ctx.overrides["lambda_nm"] = *o.lambda_nm;
  } else {
    grid = link_model::wavelength_grid(s.analysis.grid_start_nm, s.analysis.grid_stop_nm,
                                       s.analysis.grid_step_nm);
  }
  const auto rows = link_model::sweep(inputs, grid);
  if (ctx.common.format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"lambda_nm", r.wavelength_nm}, {"S_i", r.singles_idler},
                     {"S_s", r.singles_signal}, {"C_max", r.c_max}, {"C_min", r.c_min},
                     {"V", r.visibility},
                     {"SNR", r.snr_saturated ? json("inf") : json(r.snr)}});
    }
    files.add("sweep.json", arr.dump(2) + "\n");
  } else {
    std::ostringstream os;
    link_model::write_sweep_csv(os, rows);
    files.add("sweep.csv", os.str());
  }
  out << "sweep: " << rows.size() << " wavelengths, "
      << (s.coexistence() ? "coexistence" : "dark fiber") << '\n';
}

void cmd_sprs_scale(Context& ctx, const SweepOptions& o, OutputSet& files, std::ostream& out) {
  auto s = need_scenario(ctx);
  if (o.power_dbm) {
    scenario::override_power(s, *o.power_dbm);
    ctx.overrides["power_dbm"] = *o.power_dbm;
  }
  const auto sc = scenario::sprs_scaling(s);
  if (!sc) throw ConfigError("sprs-scale needs classical and sprs.spectrum sections");
  std::vector<double> grid;
  if (o.lambda_nm) {
    grid = {*o.lambda_nm};
    ctx.overrides["lambda_nm"] = *o.lambda_nm;
  } else {
    for (const auto& p : sc->spectrum.points()) grid.push_back(p.wavelength_nm);
  }
  struct Row {
    double nm, value, rate, per_window;
  };
  std::vector<Row> rows;
  for (double nm : grid) {
    const double rate = sc->rate_cps(nm);
    rows.push_back({nm, sc->spectrum.at(nm), rate,
                    spectra::per_pulse_noise(rate * s.analyzer_noise_fraction, s.window_ps)});
  }
  if (ctx.common.format == "json") {
    json j;
    j["launch_dbm"] = sc->plan.aggregate_launch_dbm;
    j["filter_bandwidth_ghz"] = sc->filter_bw_ghz;
    j["rows"] = json::array();
    for (const auto& r : rows) {
      j["rows"].push_back({{"lambda_nm", r.nm}, {"spectrum_value", r.value},
                           {"rate_cps", r.rate}, {"per_window_post_analyzer", r.per_window}});
    }
    files.add("sprs_scaled.json", j.dump(2) + "\n");
  } else {
    std::ostringstream os;
    os << "lambda_nm,spectrum_value,rate_cps,per_window_post_analyzer\n";
    for (const auto& r : rows) {
      os << num(r.nm) << ',' << num(r.value) << ',' << num(r.rate) << ',' << num(r.per_window)
         << '\n';
    }
    files.add("sprs_scaled.csv", os.str());
  }
  out << "sprs-scale: " << rows.size() << " points at " << sc->plan.aggregate_launch_dbm
      << " dBm, " << sc->filter_bw_ghz << " GHz\n";
}

void cmd_jitter(Context& ctx, OutputSet& files, std::ostream& out) {
  const auto& s = need_scenario(ctx);
  const auto& sim = s.simulation;
  events::CorrelationOptions opt;
  opt.window_ps = s.window_ps;

  const auto one = events::simulate_split_signal(s.clock, sim.jitter_pulse_rate_hz,
                                                 sim.jitter_pulses, false, ctx.seed);
  opt.offset_ps = 0;
  opt.scan_lo_ps = -sim.jitter_scan_ps;
  opt.scan_hi_ps = sim.jitter_scan_ps;
  const auto c1 = events::correlate(one.local, one.remote, opt);

  const auto two = events::simulate_split_signal(s.clock, sim.jitter_pulse_rate_hz,
                                                 sim.jitter_pulses, true, ctx.seed + 1);
  opt.offset_ps = static_cast<std::int64_t>(std::llround(s.clock.offset_ps));
  opt.scan_lo_ps = opt.offset_ps - sim.jitter_scan_ps;
  opt.scan_hi_ps = opt.offset_ps + sim.jitter_scan_ps;
  const auto c2 = events::correlate(two.local, two.remote, opt);

  const auto j1 = events::extract_jitter(c1.histogram);
  const auto j2 = events::extract_jitter(c2.histogram);
  const double sync = events::quadrature_difference(j2.rms_ps, j1.rms_ps);

  std::ostringstream h1;
  std::ostringstream h2;
  events::write_histogram_csv(h1, c1.histogram);
  events::write_histogram_csv(h2, c2.histogram);
  files.add("jitter_1tdc.csv", h1.str());
  files.add("jitter_2tdc.csv", h2.str());
  json report{{"pulses", sim.jitter_pulses},
              {"pulse_rate_hz", sim.jitter_pulse_rate_hz},
              {"sigma_1tdc_ps", j1.rms_ps},
              {"sigma_2tdc_ps", j2.rms_ps},
              {"sigma_sync_ps", sync},
              {"center_2tdc_ps", j2.center_ps},
              {"configured", {{"sigma_tdc_ps", s.clock.sigma_tdc_ps},
                              {"sigma_sync_ps", s.clock.sigma_sync_ps}}}};
  files.add("jitter.json", report.dump(2) + "\n");
  out << std::fixed << std::setprecision(2) << "jitter: 1 TDC " << j1.rms_ps << " ps, 2 TDC "
      << j2.rms_ps << " ps, sync (quadrature) " << sync << " ps\n";
  out.unsetf(std::ios::floatfield);
}

struct FringeOptions {
  std::string bases = "H,D";
  bool analytic = false;
};

void cmd_fringe(Context& ctx, const FringeOptions& o, OutputSet& files, std::ostream& out) {
  const auto& s = need_scenario(ctx);
  const auto grid = hwp_grid(s.analysis.fringe_step_deg);
  auto cfg = scenario::sim_config(s);
  cfg.seed = ctx.seed;
  std::vector<quantum::Basis> bases;
  std::stringstream list(o.bases);
  for (std::string tok; std::getline(list, tok, ',');) bases.push_back(parse_basis(tok));
  if (bases.empty()) throw ParameterError("--bases is empty");

  std::ostringstream csv;
  csv << "remote_basis,hwp_deg,counts,seconds\n";
  json fits = json::array();
  for (std::size_t b = 0; b < bases.size(); ++b) {
    std::vector<quantum::CountRecord> records;
    if (o.analytic) {
      std::vector<quantum::SettingPair> settings;
      std::vector<double> expected;
      for (double th : grid) {
        auto point = cfg;
        point.local_analyzer = quantum::AnalyzerSetting(0.0, th);
        point.remote_analyzer = quantum::analyzer_for(bases[b]);
        settings.push_back({point.local_analyzer, point.remote_analyzer});
        expected.push_back(events::analytic_rates(point).coincidences * cfg.rep_rate_hz *
                           s.analysis.fringe_seconds);
      }
      records = quantum::poisson_sample(settings, expected, s.analysis.fringe_seconds,
                                        ctx.seed + b);
    } else {
      auto basis_cfg = cfg;
      basis_cfg.seed = ctx.seed + 1000003ULL * b;
      records = events::fringe_from_events(basis_cfg, bases[b], grid, s.analysis.fringe_seconds);
    }
    for (const auto& r : records) {
      csv << quantum::basis_label(bases[b]) << ',' << num(r.setting.local.hwp_deg) << ','
          << r.counts << ',' << num(r.seconds) << '\n';
    }
    const auto fit = quantum::fit_fringe(records);
    const auto mc = quantum::monte_carlo_errors(
        records, s.analysis.mc_replicas, ctx.seed + 77 + b,
        [](const std::vector<quantum::CountRecord>& r) { return quantum::fringe_visibility(r); });
    fits.push_back({{"remote_basis", std::string(1, quantum::basis_label(bases[b]))},
                    {"visibility", fit.visibility},
                    {"visibility_mc_std", mc.stddev},
                    {"c_max_rate", fit.c_max},
                    {"c_min_rate", fit.c_min},
                    {"phase_deg", fit.phase_deg}});
    out << "fringe " << quantum::basis_label(bases[b]) << ": V = " << std::fixed
        << std::setprecision(4) << fit.visibility << " +- " << mc.stddev << '\n';
    out.unsetf(std::ios::floatfield);
  }
  const auto lp = scenario::link_params(s);
  const auto pred = link_model::predict(scenario::sweep_inputs(s), s.source.signal_nm);
  json report{{"mode", o.analytic ? "analytic" : "events"},
              {"seconds_per_point", s.analysis.fringe_seconds},
              {"analytic_visibility", pred.visibility},
              {"mu", lp.mu},
              {"fits", fits}};
  files.add("fringe.csv", csv.str());
  files.add("fringe_fit.json", report.dump(2) + "\n");
}

struct TomographyOptions {
  std::optional<bool> accidentals;
};

void cmd_tomography(Context& ctx, const TomographyOptions& o, OutputSet& files,
                    std::ostream& out) {
  const auto& s = need_scenario(ctx);
  auto cfg = scenario::sim_config(s);
  const bool accidentals = o.accidentals.value_or(s.analysis.tomography_accidentals);
  const auto settings = quantum::canonical_tomography_settings();
  std::vector<double> expected;
  for (const auto& st : settings) {
    auto point = cfg;
    point.local_analyzer = st.local;
    point.remote_analyzer = st.remote;
    const auto r = events::analytic_rates(point);
    const double per_pulse =
        accidentals ? r.coincidences : r.coincidences - r.singles_local * r.singles_remote;
    expected.push_back(per_pulse * cfg.rep_rate_hz * s.analysis.tomography_seconds);
  }
  const auto records =
      quantum::poisson_sample(settings, expected, s.analysis.tomography_seconds, ctx.seed);
  const auto rho = quantum::tomography_reconstruct<double>(records);
  const auto phi = quantum::phi_plus_vector<double>();
  const auto fid = [&phi](const std::vector<quantum::CountRecord>& r) {
    return quantum::fidelity_to_pure(phi, quantum::tomography_reconstruct<double>(r));
  };
  const auto mc = quantum::monte_carlo_errors(records, s.analysis.mc_replicas, ctx.seed + 1, fid);

  std::ostringstream counts;
  quantum::write_count_records_csv(counts, records);
  files.add("tomography_counts.csv", counts.str());
  files.add("rho.json", quantum::to_json(rho).dump(2) + "\n");
  const json report{{"fidelity", mc.point},
                    {"fidelity_mc_mean", mc.mean},
                    {"fidelity_mc_std", mc.stddev},
                    {"replicas", mc.replicas},
                    {"purity", rho.purity()},
                    {"accidentals", accidentals},
                    {"werner_p", s.werner_p},
                    {"werner_fidelity", (3.0 * s.werner_p + 1.0) / 4.0}};
  files.add("tomography.json", report.dump(2) + "\n");
  out << "tomography: F = " << std::fixed << std::setprecision(4) << mc.point << " +- "
      << mc.stddev << " (" << mc.replicas << " replicas)\n";
  out.unsetf(std::ios::floatfield);
}

struct AllocateOptions {
  bool pair = false;
  std::optional<double> power_dbm;
  std::optional<std::string> objective;
};

void cmd_allocate(Context& ctx, const AllocateOptions& o, OutputSet& files, std::ostream& out) {
  auto s = need_scenario(ctx);
  if (o.power_dbm) {
    scenario::override_power(s, *o.power_dbm);
    ctx.overrides["power_dbm"] = *o.power_dbm;
  }
  auto req = s.allocation;
  if (o.objective) {
    req.objective = allocation::parse_objective(*o.objective);
    ctx.overrides["objective"] = *o.objective;
  }
  const auto inputs = scenario::sweep_inputs(s);
  if (o.pair) {
    const auto r = allocation::pair_allocate(req, inputs, s.source.pump_nm);
    allocation::write_report_table(out, r);
    files.add("pair_allocation.json", allocation::report_json(r) + "\n");
    return;
  }
  const auto r = allocation::allocate(req, inputs);
  allocation::write_report_table(out, r);
  if (ctx.common.format == "csv") {
    std::ostringstream os;
    os << "rank,lambda_nm,V,SNR,loss_db,sprs_cps\n";
    std::size_t rank = 1;
    for (const auto& c : r.ranked) {
      os << rank++ << ',' << num(c.wavelength_nm) << ',' << num(c.visibility) << ','
         << (c.snr_saturated ? std::string("inf") : num(c.snr)) << ',' << num(c.loss_db) << ','
         << num(c.sprs_cps) << '\n';
    }
    files.add("allocation.csv", os.str());
  }
  files.add("allocation.json", allocation::report_json(r) + "\n");
}

struct SimulateOptions {
  std::optional<std::uint64_t> n_pulses;
  std::string local_basis = "H";
  std::string remote_basis = "H";
  std::string events_format = "bin";
};

void cmd_simulate(Context& ctx, const SimulateOptions& o, OutputSet& files, std::ostream& out) {
  const auto& s = need_scenario(ctx);
  auto cfg = scenario::sim_config(s);
  cfg.seed = ctx.seed;
  if (o.n_pulses) {
    cfg.n_pulses = *o.n_pulses;
    ctx.overrides["n_pulses"] = *o.n_pulses;
  }
  cfg.local_analyzer = quantum::analyzer_for(parse_basis(o.local_basis));
  cfg.remote_analyzer = quantum::analyzer_for(parse_basis(o.remote_basis));
  if (o.events_format != "bin" && o.events_format != "csv") {
    throw ParameterError("--events-format must be bin or csv");
  }
  const auto streams = events::simulate(cfg);
  const auto m = events::measure_rates(cfg, streams);
  const auto a = events::analytic_rates(cfg);
  const double n = static_cast<double>(cfg.n_pulses);

  for (const auto& [name, stream] :
       {std::pair{"local", &streams.local}, std::pair{"remote", &streams.remote}}) {
    std::ostringstream os;
    if (o.events_format == "bin") {
      events::write_events_binary(os, *stream);
      files.add(std::string("events_") + name + ".bin", os.str());
    } else {
      events::write_events_csv(os, *stream);
      files.add(std::string("events_") + name + ".csv", os.str());
    }
  }
  const json report{
      {"n_pulses", cfg.n_pulses},
      {"mean_pairs_emitted", cfg.mean_pairs},
      {"local_basis", o.local_basis},
      {"remote_basis", o.remote_basis},
      {"events", {{"local", streams.local.size()}, {"remote", streams.remote.size()}}},
      {"measured_per_pulse",
       {{"singles_local", static_cast<double>(m.singles_local) / n},
        {"singles_remote", static_cast<double>(m.singles_remote) / n},
        {"coincidences", static_cast<double>(m.coincidences) / n}}},
      {"measured_counts",
       {{"singles_local", m.singles_local},
        {"singles_remote", m.singles_remote},
        {"coincidences", m.coincidences}}},
      {"analytic_per_pulse",
       {{"singles_local", a.singles_local},
        {"singles_remote", a.singles_remote},
        {"coincidences", a.coincidences}}}};
  files.add("simulate.json", report.dump(2) + "\n");
  out << "simulate: " << cfg.n_pulses << " pulses, " << streams.local.size() << " local / "
      << streams.remote.size() << " remote events, " << m.coincidences << " coincidences\n";
}

struct CorrelateOptions {
  std::string local_path;
  std::string remote_path;
  std::string mixed_path;
  std::optional<double> window_ps;
  std::int64_t offset_ps = 0;
  std::int64_t scan_lo_ps = -500;
  std::int64_t scan_hi_ps = 500;
};

void cmd_correlate(Context& ctx, const CorrelateOptions& o, OutputSet& files, std::ostream& out) {
  events::EventStream local;
  events::EventStream remote;
  if (!o.mixed_path.empty()) {
    if (!o.local_path.empty() || !o.remote_path.empty()) {
      throw ParameterError("give either --events or --local/--remote, not both");
    }
    auto split = events::split_by_node(events::load_events(o.mixed_path));
    local = std::move(split.local);
    remote = std::move(split.remote);
  } else {
    if (o.local_path.empty() || o.remote_path.empty()) {
      throw ParameterError("correlate needs --events or both --local and --remote");
    }
    local = events::load_events(o.local_path);
    remote = events::load_events(o.remote_path);
  }
  events::CorrelationOptions opt;
  if (o.window_ps) {
    opt.window_ps = *o.window_ps;
  } else if (ctx.scn) {
    opt.window_ps = ctx.scn->window_ps;
  }
  opt.offset_ps = o.offset_ps;
  opt.scan_lo_ps = o.scan_lo_ps;
  opt.scan_hi_ps = o.scan_hi_ps;
  const auto c = events::correlate(local, remote, opt);
  std::ostringstream hist;
  events::write_histogram_csv(hist, c.histogram);
  files.add("histogram.csv", hist.str());
  json report{{"local_events", local.size()},
              {"remote_events", remote.size()},
              {"window_ps", opt.window_ps},
              {"offset_ps", opt.offset_ps},
              {"coincidences", c.coincidences}};
  try {
    const auto j = events::extract_jitter(c.histogram);
    report["peak_rms_ps"] = j.rms_ps;
    report["peak_center_ps"] = j.center_ps;
  } catch (const EstimationError&) {
    report["peak_rms_ps"] = nullptr;
  }
  files.add("correlate.json", report.dump(2) + "\n");
  out << "correlate: " << c.coincidences << " coincidences in +-" << opt.window_ps / 2.0
      << " ps\n";
}

json manifest(const Context& ctx, const std::string& subcommand, const OutputSet& files) {
  json outputs = json::array();
  for (const auto& [name, content] : files.files()) outputs.push_back(name);
  json j{{"tool", "coexist"},
         {"version", COEXIST_VERSION},
         {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." +
                               std::to_string(EIGEN_MAJOR_VERSION) + "." +
                               std::to_string(EIGEN_MINOR_VERSION)},
         {"subcommand", subcommand},
         {"seed", ctx.seed},
         {"overrides", ctx.overrides},
         {"outputs", outputs},
         {"created_utc", utc_now()}};
  if (ctx.scn) {
    j["config"] = ctx.scn->path.string();
    j["config_hash"] = scenario::config_hash(ctx.scn->raw_text);
  } else {
    j["config"] = nullptr;
    j["config_hash"] = nullptr;
  }
  return j;
}

}  // namespace

void OutputSet::add(const std::string& name, std::string content) {
  files_[name] = std::move(content);
}

void OutputSet::commit() const {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error("cannot create output directory " + dir_.string() + ": " + ec.message());
  std::vector<fs::path> done;
  try {
    for (const auto& [name, content] : files_) {
      const fs::path target = dir_ / name;
      const fs::path tmp = dir_ / ("." + name + ".tmp");
      {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f << content;
        f.close();
        if (!f) {
          fs::remove(tmp, ec);
          throw Error("failed writing " + tmp.string());
        }
      }
      fs::rename(tmp, target);
      done.push_back(target);
    }
  } catch (...) {
    for (const auto& p : done) fs::remove(p, ec);
    throw;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entanglement distribution over fiber shared with classical traffic"};
  app.set_version_flag("--version", COEXIST_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  std::uint64_t seed_value = 0;
  app.add_option("--config", common.config, "Scenario config (JSON)");
  auto* seed_opt = app.add_option("--seed", seed_value, "Override the config seed");
  app.add_option("--out", common.out_dir, "Output directory")->capture_default_str();
  app.add_option("--format", common.format, "Tabular output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  SweepOptions sweep_opt;
  auto* sweep = app.add_subcommand("sweep", "Analytic V and SNR over the wavelength grid");
  sweep->add_option("--power-dbm", sweep_opt.power_dbm, "Classical launch power override");
  sweep->add_option("--lambda-nm", sweep_opt.lambda_nm, "Evaluate a single wavelength");

  SweepOptions sprs_opt;
  auto* sprs = app.add_subcommand("sprs-scale", "SpRS spectrum rescaled to the classical plan");
  sprs->add_option("--power-dbm", sprs_opt.power_dbm, "Classical launch power override");
  sprs->add_option("--lambda-nm", sprs_opt.lambda_nm, "Evaluate a single wavelength");

  auto* jitter = app.add_subcommand("jitter", "Split-signal timing histograms and RMS jitter");

  FringeOptions fringe_opt;
  auto* fringe = app.add_subcommand("fringe", "Two-photon interference curves and visibilities");
  fringe->add_option("--bases", fringe_opt.bases, "Remote analyzer bases, comma separated")
      ->capture_default_str();
  fringe->add_flag("--analytic", fringe_opt.analytic,
                   "Poisson-sample the closed-form rates instead of simulating events");

  TomographyOptions tomo_opt;
  auto* tomo = app.add_subcommand("tomography", "Synthetic state tomography with MC errors");
  tomo->add_flag("--include-accidentals,!--no-accidentals", tomo_opt.accidentals,
                 "Add accidental coincidences to the synthetic counts");

  AllocateOptions alloc_opt;
  auto* alloc = app.add_subcommand("allocate", "Rank quantum-channel wavelengths");
  alloc->add_flag("--pair", alloc_opt.pair, "Choose a conjugate signal/idler pair");
  alloc->add_option("--power-dbm", alloc_opt.power_dbm, "Classical launch power override");
  alloc->add_option("--objective", alloc_opt.objective, "visibility or snr");

  SimulateOptions sim_opt;
  auto* simulate = app.add_subcommand("simulate", "Event-level run writing raw event streams");
  simulate->add_option("--n-pulses", sim_opt.n_pulses, "Override simulation.n_pulses");
  simulate->add_option("--local-basis", sim_opt.local_basis)->capture_default_str();
  simulate->add_option("--remote-basis", sim_opt.remote_basis)->capture_default_str();
  simulate->add_option("--events-format", sim_opt.events_format, "bin or csv")
      ->capture_default_str();

  CorrelateOptions corr_opt;
  auto* correlate = app.add_subcommand("correlate", "Delta-t histogram of two event files");
  correlate->add_option("--local", corr_opt.local_path, "Local event file");
  correlate->add_option("--remote", corr_opt.remote_path, "Remote event file");
  correlate->add_option("--events", corr_opt.mixed_path, "Single file holding both nodes");
  correlate->add_option("--window-ps", corr_opt.window_ps, "Coincidence window");
  correlate->add_option("--offset-ps", corr_opt.offset_ps)->capture_default_str();
  correlate->add_option("--scan-lo-ps", corr_opt.scan_lo_ps)->capture_default_str();
  correlate->add_option("--scan-hi-ps", corr_opt.scan_hi_ps)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  Context ctx;
  ctx.common = common;
  try {
    if (!common.config.empty()) ctx.scn = scenario::load_scenario(common.config);
    if (*seed_opt) {
      ctx.seed = seed_value;
    } else if (ctx.scn) {
      ctx.seed = ctx.scn->seed;
    }
    OutputSet files(common.out_dir);
    std::string name;
    if (*sweep) {
      name = "sweep";
      cmd_sweep(ctx, sweep_opt, files, out);
    } else if (*sprs) {
      name = "sprs-scale";
      cmd_sprs_scale(ctx, sprs_opt, files, out);
    } else if (*jitter) {
      name = "jitter";
      cmd_jitter(ctx, files, out);
    } else if (*fringe) {
      name = "fringe";
      cmd_fringe(ctx, fringe_opt, files, out);
    } else if (*tomo) {
      name = "tomography";
      cmd_tomography(ctx, tomo_opt, files, out);
    } else if (*alloc) {
      name = "allocate";
      cmd_allocate(ctx, alloc_opt, files, out);
    } else if (*simulate) {
      name = "simulate";
      cmd_simulate(ctx, sim_opt, files, out);
    } else if (*correlate) {
      name = "correlate";
      cmd_correlate(ctx, corr_opt, files, out);
    }
    files.add("manifest.json", manifest(ctx, name, files).dump(2) + "\n");
    files.commit();
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace coexist::cli
