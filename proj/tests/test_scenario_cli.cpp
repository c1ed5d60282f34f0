#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "coexist/cli.hpp"
#include "coexist/error.hpp"
#include "coexist/event_io.hpp"
#include "coexist/scenario.hpp"
#include "oracles.hpp"

using namespace coexist;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kData = COEXIST_DATA_DIR;

json reference_json() {
  std::ifstream f(kData / "reference.json");
  return json::parse(f);
}

scenario::Scenario parse(const json& j) { return scenario::parse_scenario(j.dump(), kData); }

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "coexist");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = coexist::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("coexist_cli_" + name);
  fs::remove_all(d);
  return d;
}

// Reference scenario with spectrum paths made absolute and cheap knobs.
fs::path quick_config(const fs::path& dir) {
  auto j = reference_json();
  j["fiber"]["loss_spectrum"] = (kData / "loss_24km.csv").string();
  j["sprs"]["spectrum"] = (kData / "sprs_oband.csv").string();
  j["analysis"]["fringe_seconds"] = 0.2;
  j["analysis"]["fringe_step_deg"] = 15.0;
  j["analysis"]["mc_replicas"] = 100;
  j["simulation"]["n_pulses"] = 20000000;
  j["simulation"]["jitter_pulses"] = 200000;
  fs::create_directories(dir);
  const auto path = dir / "quick.json";
  std::ofstream(path) << j.dump(2);
  return path;
}

}  // namespace

TEST_CASE("reference scenario loads with the expected operating point") {
  const auto s = scenario::load_scenario(kData / "reference.json");
  CHECK(s.coexistence());
  CHECK(s.source.mu == 0.009);
  CHECK(s.window_ps == 300.0);
  CHECK(s.classical->aggregate_launch_dbm == 21.4);
  const auto lp = scenario::link_params(s);
  CHECK(lp.dark_signal == doctest::Approx(3.8e-7));
  CHECK(lp.dark_idler == doctest::Approx(1.8e-7));
  CHECK(lp.sprs_signal_ref ==
        doctest::Approx(0.5 * oracle::sample_sprs(1290) * std::pow(10.0, 2.14) * 7.0 * 300e-12));
  const auto cfg = scenario::sim_config(s);
  CHECK(cfg.mean_pairs == doctest::Approx(0.018));
  CHECK(cfg.remote.sprs_cps == doctest::Approx(oracle::sample_sprs(1290) * std::pow(10.0, 2.14) * 7.0));
  const auto dark = scenario::load_scenario(kData / "dark_fiber.json");
  CHECK_FALSE(dark.coexistence());
  CHECK(scenario::link_params(dark).sprs_signal_ref == 0.0);
}

TEST_CASE("strict schema") {
  auto j = reference_json();
  j["source"]["colour"] = "blue";
  CHECK_THROWS_WITH_AS(parse(j), doctest::Contains("source.colour: unknown key"), ConfigError);

  j = reference_json();
  j["source"].erase("mu");
  CHECK_THROWS_WITH_AS(parse(j), doctest::Contains("source.mu: is required"), ConfigError);

  j = reference_json();
  j["detectors"]["signal"]["efficiency"] = 1.5;
  CHECK_THROWS_WITH_AS(parse(j), doctest::Contains("detectors.signal.efficiency"), ConfigError);

  j = reference_json();
  j["detectors"]["signal"]["dark_cps"] = 100;
  CHECK_THROWS_WITH_AS(parse(j), doctest::Contains("exactly one"), ConfigError);

  j = reference_json();
  j["fiber"]["loss_spectrum"] = "missing.csv";
  CHECK_THROWS_WITH_AS(parse(j), doctest::Contains("file not found"), ConfigError);

  j = reference_json();
  j["fiber"]["loss_spectrum"] = "sprs_oband.csv";
  CHECK_THROWS_AS(parse(j), ConfigError);

  j = reference_json();
  j.erase("seed");
  CHECK_THROWS_AS(parse(j), ConfigError);

  CHECK_THROWS_AS(scenario::parse_scenario("{ not json", kData), ConfigError);
  CHECK_THROWS_AS(scenario::load_scenario(kData / "nope.json"), ConfigError);
}

TEST_CASE("config hash is stable and content sensitive") {
  CHECK(scenario::config_hash("") == "cbf29ce484222325");
  CHECK(scenario::config_hash("a") == "af63dc4c8601ec8c");
  CHECK(scenario::config_hash("a ") != scenario::config_hash("a"));
}

TEST_CASE("cli sweep matches the library and is byte reproducible") {
  const auto dir = fresh_dir("sweep");
  const auto cfg = (kData / "reference.json").string();
  auto r = run_cli({"--config", cfg, "--out", dir.string(), "sweep"});
  REQUIRE(r.code == 0);
  const auto first = slurp(dir / "sweep.csv");
  r = run_cli({"sweep", "--config", cfg, "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "sweep.csv") == first);

  const auto s = scenario::load_scenario(cfg);
  const auto row = link_model::predict(scenario::sweep_inputs(s), 1290);
  std::istringstream in(first);
  std::string line;
  bool found = false;
  while (std::getline(in, line)) {
    if (line.rfind("1290,", 0) == 0) {
      found = true;
      std::vector<double> v;
      std::stringstream ls(line);
      for (std::string tok; std::getline(ls, tok, ',');) v.push_back(std::stod(tok));
      CHECK(v[5] == doctest::Approx(row.visibility).epsilon(1e-10));
    }
  }
  CHECK(found);

  const auto m = json::parse(slurp(dir / "manifest.json"));
  CHECK(m["subcommand"] == "sweep");
  CHECK(m["config_hash"] == scenario::config_hash(slurp(cfg)));
  CHECK(m["seed"] == s.seed);

  r = run_cli({"sweep", "--config", cfg, "--out", dir.string(), "--format", "json", "--lambda-nm",
           "1310", "--power-dbm", "10"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(slurp(dir / "sweep.json")).size() == 1);
}

TEST_CASE("cli sprs-scale, allocate and exit codes") {
  const auto dir = fresh_dir("alloc");
  const auto cfg = (kData / "reference.json").string();
  auto r = run_cli({"sprs-scale", "--config", cfg, "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "sprs_scaled.csv"));
  r = run_cli({"sprs-scale", "--config", (kData / "dark_fiber.json").string(), "--out",
           (dir / "dark").string()});
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(dir / "dark"));

  r = run_cli({"allocate", "--config", cfg, "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(json::parse(slurp(dir / "allocation.json"))["chosen_nm"] == 1290.0);
  r = run_cli({"allocate", "--pair", "--config", cfg, "--out", dir.string()});
  CHECK(r.code == 0);
  const auto pair = json::parse(slurp(dir / "pair_allocation.json"));
  CHECK(pair["chosen"]["signal_nm"] == 1290.0);
  CHECK(pair["chosen"]["idler_nm"] == 1310.0);

  // Everything excluded: infeasible, exit 3, nothing written.
  auto j = reference_json();
  j["fiber"]["loss_spectrum"] = (kData / "loss_24km.csv").string();
  j["sprs"]["spectrum"] = (kData / "sprs_oband.csv").string();
  j["allocation"]["exclusions"] = json::array({json::array({1250, 1370})});
  fs::create_directories(dir);
  std::ofstream(dir / "blocked.json") << j.dump();
  const auto out3 = dir / "blocked";
  r = run_cli({"allocate", "--config", (dir / "blocked.json").string(), "--out", out3.string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("exclusion") != std::string::npos);
  CHECK_FALSE(fs::exists(out3 / "manifest.json"));

  CHECK(run_cli({"sweep", "--config", (dir / "missing.json").string()}).code == 2);
  CHECK(run_cli({"sweep", "--bogus"}).code == 2);
  CHECK(run_cli({"--config", cfg, "sweep", "--lambda-nm", "1500", "--out", dir.string()}).code == 2);
  CHECK(run_cli({}).code == 2);
}

TEST_CASE("cli jitter, tomography, fringe, simulate, correlate") {
  const auto dir = fresh_dir("events");
  const auto cfg = quick_config(dir).string();
  const auto out = (dir / "out").string();

  auto r = run_cli({"jitter", "--config", cfg, "--out", out});
  REQUIRE(r.code == 0);
  const auto jit = json::parse(slurp(dir / "out" / "jitter.json"));
  CHECK(jit["sigma_2tdc_ps"].get<double>() == doctest::Approx(4.6).epsilon(0.1 / 4.6));
  CHECK(fs::exists(dir / "out" / "jitter_1tdc.csv"));

  auto j = reference_json();
  r = run_cli({"tomography", "--config", (kData / "werner.json").string(), "--out", out});
  REQUIRE(r.code == 0);
  const auto tomo = json::parse(slurp(dir / "out" / "tomography.json"));
  CHECK(tomo["werner_fidelity"].get<double>() == doctest::Approx(0.961));
  CHECK(std::abs(tomo["fidelity"].get<double>() - 0.961) <
        3.0 * tomo["fidelity_mc_std"].get<double>() + 0.005);
  CHECK(fs::exists(dir / "out" / "rho.json"));

  r = run_cli({"fringe", "--config", cfg, "--out", out, "--bases", "H"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(slurp(dir / "out" / "fringe_fit.json"))["fits"].size() == 1);
  r = run_cli({"fringe", "--analytic", "--config", cfg, "--out", out, "--bases", "H,D"});
  REQUIRE(r.code == 0);
  CHECK(run_cli({"fringe", "--config", cfg, "--out", out, "--bases", "Q"}).code == 2);

  r = run_cli({"simulate", "--config", cfg, "--out", out, "--seed", "5"});
  REQUIRE(r.code == 0);
  const auto first = slurp(dir / "out" / "events_local.bin");
  r = run_cli({"simulate", "--config", cfg, "--out", out, "--seed", "5"});
  CHECK(slurp(dir / "out" / "events_local.bin") == first);
  const auto sim = json::parse(slurp(dir / "out" / "simulate.json"));

  r = run_cli({"correlate", "--local", (dir / "out" / "events_local.bin").string(), "--remote",
           (dir / "out" / "events_remote.bin").string(), "--out", out, "--window-ps", "300",
           "--scan-lo-ps", "-150", "--scan-hi-ps", "150"});
  REQUIRE(r.code == 0);
  const auto corr = json::parse(slurp(dir / "out" / "correlate.json"));
  // Ungated counting can only add accidentals relative to the gated count.
  CHECK(corr["coincidences"].get<std::uint64_t>() >=
        sim["measured_counts"]["coincidences"].get<std::uint64_t>());

  r = run_cli({"simulate", "--config", cfg, "--out", out, "--events-format", "csv", "--n-pulses",
           "1000000"});
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "out" / "events_local.csv").rfind("node,channel,t_ps\n", 0) == 0);
  CHECK(run_cli({"correlate", "--out", out}).code == 2);
}
