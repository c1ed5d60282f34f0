#include <doctest.h>

#include <cmath>
#include <numeric>

#include "coexist/error.hpp"
#include "coexist/event_sim.hpp"
#include "coexist/fringe.hpp"
#include "oracles.hpp"

using namespace coexist;
using namespace coexist::events;

namespace {

SimConfig reference(std::uint64_t n) {
  SimConfig c;
  c.n_pulses = n;
  c.mean_pairs = 0.018;
  c.local = {0.03, 1.8e-7 / 300e-12, 0.0};
  c.remote = {0.001, 3.8e-7 / 300e-12, 0.0};
  c.clock = {3.5, 3.0, 0.0, 0.0};
  c.seed = 11;
  return c;
}

double z(double observed, double expected) {
  return (observed - expected) / std::sqrt(expected);
}

}  // namespace

TEST_CASE("empty run") {
  SimConfig c;
  c.n_pulses = 1000000;
  const auto s = simulate(c);
  CHECK(s.local.empty());
  CHECK(s.remote.empty());
}

TEST_CASE("config validation") {
  auto c = reference(10);
  c.window_ps = 0;
  CHECK_THROWS_AS(simulate(c), ParameterError);
  c = reference(0);
  CHECK_THROWS_AS(simulate(c), ParameterError);
  c = reference(10);
  c.window_ps = 2500;   // period is 2000 ps
  CHECK_THROWS_AS(simulate(c), ParameterError);
  c = reference(10);
  c.clock.sigma_sync_ps = -1;
  CHECK_THROWS_AS(simulate(c), ParameterError);
}

TEST_CASE("background-only counts follow Poisson statistics") {
  SimConfig c;
  c.n_pulses = 500'000'000;   // one second
  c.local.dark_cps = 2000;
  c.remote.dark_cps = 500;
  c.remote.sprs_cps = 1000;   // half passes the analyzer
  const auto s = simulate(c);
  CHECK(std::abs(z(static_cast<double>(s.local.size()), 2000.0)) < 3.0);
  CHECK(std::abs(z(static_cast<double>(s.remote.size()), 1000.0)) < 3.0);
  check_ordered(s.local, "local");
  check_ordered(s.remote, "remote");
}

TEST_CASE("deterministic in seed, different across seeds") {
  auto c = reference(50'000'000);
  const auto a = simulate(c);
  const auto b = simulate(c);
  CHECK(a.local == b.local);
  CHECK(a.remote == b.remote);
  c.seed = 12;
  CHECK(simulate(c).local != a.local);
  // Smaller blocks change the stream but not its statistics.
  c.seed = 11;
  c.block_pulses = 1'000'000;
  const auto blocked = simulate(c);
  check_ordered(blocked.local, "local");
  CHECK(std::abs(static_cast<double>(blocked.local.size()) - static_cast<double>(a.local.size())) <
        6.0 * std::sqrt(static_cast<double>(a.local.size())));
}

TEST_CASE("pair events are shared between backgrounds") {
  auto dark = reference(20'000'000);
  auto lit = dark;
  lit.remote.sprs_cps = 5000;
  const auto a = simulate(dark);
  const auto b = simulate(lit);
  CHECK(a.local == b.local);
  CHECK(b.remote.size() > a.remote.size());
}

TEST_CASE("rates match the analytic model") {
  auto c = reference(400'000'000);
  const auto s = simulate(c);
  const auto m = measure_rates(c, s);
  const auto a = analytic_rates(c);
  const double n = static_cast<double>(c.n_pulses);
  CHECK(std::abs(z(static_cast<double>(m.singles_local), a.singles_local * n)) < 3.0);
  CHECK(std::abs(z(static_cast<double>(m.singles_remote), a.singles_remote * n)) < 3.0);
  CHECK(std::abs(z(static_cast<double>(m.coincidences), a.coincidences * n)) < 3.0);

  const auto lp = link_params_for(c);
  CHECK(lp.mu == doctest::Approx(0.009));
  const auto o = oracle::link(0.009, 0.03, 0.001, 1.8e-7, 3.8e-7);
  CHECK(a.coincidences == doctest::Approx(o.c_max).epsilon(1e-9));
  c.remote_analyzer = quantum::analyzer_for(quantum::Basis::V);
  CHECK(analytic_rates(c).coincidences == doctest::Approx(o.c_min).epsilon(1e-9));
}

TEST_CASE("thermal statistics keep the mean") {
  auto c = reference(200'000'000);
  c.statistics = PairStatistics::Thermal;
  const auto s = simulate(c);
  const auto m = measure_rates(c, s);
  const auto a = analytic_rates(c);
  CHECK(std::abs(z(static_cast<double>(m.singles_local), a.singles_local * 2e8)) < 3.0);
}

TEST_CASE("correlate basics") {
  EventStream l{{Node::Local, 0, 1000}, {Node::Local, 0, 5000}};
  EventStream r{{Node::Remote, 0, 1000}, {Node::Remote, 0, 5000}};
  const auto c = correlate(l, r, {});
  CHECK(c.histogram.at(0) == 2);
  CHECK(c.histogram.total() == 2);
  CHECK(c.coincidences == 2);

  EventStream unordered{{Node::Local, 0, 10}, {Node::Local, 0, 5}};
  CHECK_THROWS_AS(correlate(unordered, r, {}), OrderingError);
  try {
    check_ordered(unordered, "local");
  } catch (const OrderingError& e) {
    CHECK(std::string(e.what()).find("event 1") != std::string::npos);
  }
}

TEST_CASE("correlate is mirror symmetric and monotone in the window") {
  SimConfig c;
  c.n_pulses = 50'000'000;
  c.local.dark_cps = 2e6;
  c.remote.dark_cps = 2e6;
  c.seed = 3;
  const auto s = simulate(c);
  CorrelationOptions opt;
  opt.scan_lo_ps = -20000;
  opt.scan_hi_ps = 20000;
  const auto ab = correlate(s.local, s.remote, opt);
  const auto ba = correlate(s.remote, s.local, opt);
  for (std::int64_t dt = -20000; dt <= 20000; dt += 37) {
    CHECK(ab.histogram.at(dt) == ba.histogram.at(-dt));
  }
  std::uint64_t last = 0;
  for (double w : {100.0, 300.0, 1000.0, 5000.0}) {
    opt.window_ps = w;
    const auto n = correlate(s.local, s.remote, opt).coincidences;
    CHECK(n >= last);
    last = n;
  }
  // Uniform backgrounds: 1-ns bins of the histogram are flat.
  std::vector<double> bins;
  for (std::int64_t lo = -20000; lo < 20000; lo += 1000) {
    double sum = 0;
    for (std::int64_t dt = lo; dt < lo + 1000; ++dt) sum += static_cast<double>(ab.histogram.at(dt));
    bins.push_back(sum);
  }
  const double mean = std::accumulate(bins.begin(), bins.end(), 0.0) / static_cast<double>(bins.size());
  double chi2 = 0;
  for (double b : bins) chi2 += (b - mean) * (b - mean) / mean;
  CHECK(mean > 100);
  CHECK(chi2 < 39 + 5 * std::sqrt(2 * 39.0));
}

TEST_CASE("jitter extraction") {
  Histogram delta;
  delta.lo_ps = -10;
  delta.counts.assign(21, 0);
  delta.counts[10] = 1000;
  CHECK(extract_jitter(delta).rms_ps == doctest::Approx(0.0));

  Histogram empty;
  empty.lo_ps = -10;
  empty.counts.assign(21, 0);
  CHECK_THROWS_AS(extract_jitter(empty), EstimationError);
  Histogram flat = empty;
  for (auto& v : flat.counts) v = 100;
  CHECK_THROWS_AS(extract_jitter(flat), EstimationError);

  // Sampled Gaussian of 3.5 ps.
  ClockModel clock{3.5, 0.0, 0.0, 0.0};
  const auto s = simulate_split_signal(clock, 50e6, 1'000'000, false, 5);
  CorrelationOptions opt;
  opt.scan_lo_ps = -100;
  opt.scan_hi_ps = 100;
  const auto j = extract_jitter(correlate(s.local, s.remote, opt).histogram);
  CHECK(j.rms_ps == doctest::Approx(3.5).epsilon(0.1 / 3.5));
  CHECK(quadrature_difference(4.6, 3.5) == doctest::Approx(2.985).epsilon(1e-3));
  CHECK_THROWS_AS(quadrature_difference(3.0, 3.5), EstimationError);
}

TEST_CASE("jitter composition with the synchronization term") {
  ClockModel clock{3.5, 3.0, 250.0, 0.0};
  const auto s = simulate_split_signal(clock, 50e6, 1'000'000, true, 9);
  CorrelationOptions opt;
  opt.offset_ps = 250;
  opt.scan_lo_ps = 150;
  opt.scan_hi_ps = 350;
  const auto j = extract_jitter(correlate(s.local, s.remote, opt).histogram);
  CHECK(j.center_ps == doctest::Approx(250.0).epsilon(0.001));
  CHECK(std::abs(j.rms_ps - std::hypot(3.5, 3.0)) < 0.03 * std::hypot(3.5, 3.0));
}

TEST_CASE("event-level fringe of a noiseless Bell state") {
  SimConfig c;
  c.mean_pairs = 0.001;
  c.local.efficiency = 0.5;
  c.remote.efficiency = 0.5;
  c.seed = 4;
  std::vector<double> grid;
  for (double th = 0; th < 180; th += 10) grid.push_back(th);
  const auto rec = fringe_from_events(c, quantum::Basis::D, grid, 0.02);
  const auto fit = quantum::fit_fringe(rec);
  CHECK(fit.visibility > 0.99);
}
