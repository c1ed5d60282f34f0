#include <doctest.h>

#include <algorithm>
#include <json.hpp>
#include <sstream>

#include "coexist/allocation.hpp"
#include "coexist/error.hpp"
#include "coexist/scenario.hpp"

using namespace coexist;
using namespace coexist::allocation;

namespace {

link_model::LinkParams params(double dark_s = 3.8e-7, double dark_i = 1.8e-7) {
  link_model::LinkParams p;
  p.mu = 0.009;
  p.eta_idler_ref = 0.03;
  p.eta_signal_ref = 0.001;
  p.dark_idler = dark_i;
  p.dark_signal = dark_s;
  return p;
}

link_model::SweepInputs inputs(const std::vector<spectra::SpectrumPoint>& loss,
                               const std::vector<spectra::SpectrumPoint>& sprs,
                               double dark_s = 3.8e-7, double dark_i = 1.8e-7) {
  spectra::ClassicalPlan plan;
  plan.aggregate_launch_dbm = 21.4;
  plan.band_span_nm = {1530, 1565};
  return {params(dark_s, dark_i), spectra::Spectrum(loss, spectra::SpectrumUnit::LossDb),
          spectra::SprsScaling{spectra::Spectrum(sprs, spectra::SpectrumUnit::NormalizedRate),
                               plan, 0.0, 1.0, 7.0},
          0.5, 17.0};
}

AllocationRequest request(double lo, double hi, double step) {
  AllocationRequest r;
  r.band_lo_nm = lo;
  r.band_hi_nm = hi;
  r.step_nm = step;
  return r;
}

link_model::SweepInputs shipped() {
  return scenario::sweep_inputs(scenario::load_scenario(COEXIST_DATA_DIR "/reference.json"));
}

}  // namespace

TEST_CASE("single candidate") {
  const auto r = allocate(request(1290, 1290, 1), shipped());
  REQUIRE(r.ranked.size() == 1);
  CHECK(r.chosen_nm == 1290);
}

TEST_CASE("shipped spectra: visibility objective picks the 1260-1290 region") {
  const auto r = allocate(request(1260, 1360, 2), shipped());
  CHECK(r.chosen_nm >= 1260);
  CHECK(r.chosen_nm <= 1290);
  CHECK(r.ranked.front().wavelength_nm == r.chosen_nm);
  for (std::size_t i = 1; i < r.ranked.size(); ++i) {
    CHECK(r.ranked[i - 1].visibility >= r.ranked[i].visibility - 1e-15);
  }
}

TEST_CASE("zero SpRS and snr objective reduce to the loss minimum") {
  auto in = inputs({{1260, 12}, {1300, 9}, {1340, 10}}, {{1260, 0}, {1340, 0}});
  auto req = request(1260, 1340, 5);
  req.objective = Objective::Snr;
  CHECK(allocate(req, in).chosen_nm == 1300);
}

TEST_CASE("exclusions are closed intervals and never appear in the report") {
  auto req = request(1260, 1360, 2);
  req.exclusions = {{1286, 1294}, {1270, 1270}};
  const auto r = allocate(req, shipped());
  for (const auto& c : r.ranked) {
    CHECK_FALSE((c.wavelength_nm >= 1286 && c.wavelength_nm <= 1294));
    CHECK(c.wavelength_nm != 1270);
  }
  CHECK(r.chosen_nm != 1290);
}

TEST_CASE("infeasible requests name the binding constraints") {
  auto req = request(1280, 1290, 2);
  req.exclusions = {{1279, 1291}};
  try {
    allocate(req, shipped());
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(std::string(e.what()).find("[1279, 1291]") != std::string::npos);
    CHECK(e.exit_code() == 3);
  }
}

TEST_CASE("guard band around classical carriers is in frequency") {
  auto in = shipped();
  in.sprs->plan.extra_channels = {{1300.0, 0.0}};
  auto req = request(1296, 1304, 1);
  req.min_guard_ghz = 200;   // about 1.13 nm at 1300 nm
  const auto grid = feasible_grid(req, in);
  CHECK(std::find(grid.begin(), grid.end(), 1300.0) == grid.end());
  CHECK(std::find(grid.begin(), grid.end(), 1299.0) == grid.end());
  CHECK(std::find(grid.begin(), grid.end(), 1298.0) != grid.end());
}

TEST_CASE("request validation") {
  CHECK_THROWS_AS(request(1300, 1290, 1).validate(), ParameterError);
  CHECK_THROWS_AS(request(1290, 1300, 0).validate(), ParameterError);
  auto r = request(1260, 1360, 1);
  r.exclusions = {{100, 200}};
  CHECK_THROWS_AS(r.validate(), ParameterError);
}

TEST_CASE("ties go to lower SpRS, then shorter wavelength") {
  // Flat loss and no dark counts: visibility is identical everywhere when
  // the SpRS curve is flat, so the shortest wavelength wins.
  auto flat = inputs({{1260, 10}, {1360, 10}}, {{1260, 1}, {1360, 1}});
  CHECK(allocate(request(1260, 1300, 10), flat).chosen_nm == 1260);
}

TEST_CASE("dominance: lowering SpRS or loss never lowers the rank") {
  const auto base = inputs({{1260, 11}, {1280, 10.6}, {1300, 10.2}, {1320, 10}},
                           {{1260, 1.2}, {1280, 1.0}, {1300, 2.0}, {1320, 8.0}});
  const auto req = request(1260, 1320, 20);
  auto rank_of = [&](const link_model::SweepInputs& in, double nm) {
    const auto r = allocate(req, in);
    for (std::size_t i = 0; i < r.ranked.size(); ++i) {
      if (r.ranked[i].wavelength_nm == nm) return i;
    }
    return r.ranked.size();
  };
  const auto before = rank_of(base, 1300);
  auto better_sprs = inputs({{1260, 11}, {1280, 10.6}, {1300, 10.2}, {1320, 10}},
                            {{1260, 1.2}, {1280, 1.0}, {1300, 0.5}, {1320, 8.0}});
  CHECK(rank_of(better_sprs, 1300) <= before);
  auto better_loss = inputs({{1260, 11}, {1280, 10.6}, {1300, 9.0}, {1320, 10}},
                            {{1260, 1.2}, {1280, 1.0}, {1300, 2.0}, {1320, 8.0}});
  CHECK(rank_of(better_loss, 1300) <= before);
}

TEST_CASE("scaling all SpRS leaves the dark-count-free visibility ranking unchanged") {
  const std::vector<spectra::SpectrumPoint> loss{{1260, 11}, {1300, 10.2}, {1340, 9.5}};
  const std::vector<spectra::SpectrumPoint> s1{{1260, 1.3}, {1300, 2.4}, {1340, 70}};
  std::vector<spectra::SpectrumPoint> s3 = s1;
  for (auto& p : s3) p.value *= 3.0;
  const auto req = request(1260, 1340, 4);
  const auto a = allocate(req, inputs(loss, s1, 0.0, 0.0));
  const auto b = allocate(req, inputs(loss, s3, 0.0, 0.0));
  REQUIRE(a.ranked.size() == b.ranked.size());
  for (std::size_t i = 0; i < a.ranked.size(); ++i) {
    CHECK(a.ranked[i].wavelength_nm == b.ranked[i].wavelength_nm);
  }
}

TEST_CASE("pair allocation around the 1300 nm pump") {
  const auto r = pair_allocate(request(1260, 1360, 2), shipped(), 1300.0);
  CHECK(r.chosen.signal_nm == 1290);
  CHECK(r.chosen.idler_nm == 1310);
  for (const auto& p : r.ranked) {
    CHECK(p.mismatch_ghz <= 299792458.0 * 2.0 / (1250.0 * 1250.0));
  }
}

TEST_CASE("pair allocation stays conjugate under a heavy red-side penalty") {
  auto in = inputs({{1260, 10}, {1360, 10}}, {{1260, 1}, {1300, 1}, {1301, 1000}, {1360, 1000}});
  PairOptions both;
  both.idler_in_fiber = true;
  const auto r = pair_allocate(request(1260, 1340, 2), in, 1300.0, both);
  const bool blue_signal = r.chosen.signal_nm < 1300;
  const bool blue_idler = r.chosen.idler_nm < 1300;
  CHECK(blue_signal != blue_idler);
}

TEST_CASE("symmetric spectra give a symmetric pair") {
  auto in = inputs({{1260, 10}, {1340, 10}}, {{1260, 5}, {1300, 1}, {1340, 5}});
  PairOptions both;
  both.idler_in_fiber = true;
  const auto r = pair_allocate(request(1280, 1320, 2), in, 1300.0, both);
  const double nu = [](double nm) { return 299792458.0 / nm; }(1300.0);
  CHECK(std::abs(299792458.0 / r.chosen.signal_nm + 299792458.0 / r.chosen.idler_nm - 2 * nu) <
        100.0);
}

TEST_CASE("no conjugate candidate is infeasible") {
  CHECK_THROWS_AS(pair_allocate(request(1260, 1280, 2), shipped(), 1300.0), InfeasibleError);
}

TEST_CASE("report formats") {
  const auto r = allocate(request(1280, 1300, 10), shipped());
  const auto j = nlohmann::json::parse(report_json(r));
  CHECK(j["chosen_nm"] == 1290.0);
  CHECK(j["ranked"].size() == 3);
  std::ostringstream os;
  write_report_table(os, r);
  CHECK(os.str().find("chosen: 1290") != std::string::npos);
}
