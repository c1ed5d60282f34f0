#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "coexist/error.hpp"
#include "coexist/event_io.hpp"

using namespace coexist;
using namespace coexist::events;

namespace {
EventStream sample() {
  return {{Node::Local, 0, 1'000'000}, {Node::Remote, 3, 1'000'005},
          {Node::Local, 1, 0xFFFF'FFFF'FFFFULL}};
}
}  // namespace

TEST_CASE("binary round trip") {
  std::stringstream ss;
  write_events_binary(ss, sample());
  CHECK(ss.str().size() == 9 + 3 * 10);
  CHECK(read_events_binary(ss) == sample());
}

TEST_CASE("binary layout is little-endian") {
  std::stringstream ss;
  write_events_binary(ss, {{Node::Remote, 2, 0x0102030405060708ULL}});
  const std::string b = ss.str();
  CHECK(b.substr(0, 8) == "CXEVENTS");
  CHECK(static_cast<int>(b[8]) == 1);
  CHECK(static_cast<int>(b[9]) == 1);
  CHECK(static_cast<int>(b[10]) == 2);
  CHECK(static_cast<int>(b[11]) == 8);
  CHECK(static_cast<int>(b[18]) == 1);
}

TEST_CASE("binary errors") {
  std::stringstream bad("NOTMAGIC\x01");
  CHECK_THROWS_AS(read_events_binary(bad), FormatError);
  std::stringstream ss;
  write_events_binary(ss, sample());
  std::string truncated = ss.str();
  truncated.pop_back();
  std::stringstream t(truncated);
  CHECK_THROWS_AS(read_events_binary(t), FormatError);
  std::string version = ss.str();
  version[8] = 9;
  std::stringstream v(version);
  CHECK_THROWS_AS(read_events_binary(v), FormatError);
}

TEST_CASE("csv round trip and errors") {
  std::stringstream ss;
  write_events_csv(ss, sample());
  CHECK(read_events_csv(ss) == sample());
  std::stringstream bad("node,channel,t_ps\nlocal,0,-5\n");
  CHECK_THROWS_AS(read_events_csv(bad), FormatError);
  std::stringstream node("node,channel,t_ps\nmiddle,0,5\n");
  CHECK_THROWS_AS(read_events_csv(node), FormatError);
}

TEST_CASE("load picks the format and split keeps order") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto bin = dir / "coexist_test_events.bin";
  const auto csv = dir / "coexist_test_events.csv";
  {
    std::ofstream f(bin, std::ios::binary);
    write_events_binary(f, sample());
    std::ofstream g(csv);
    write_events_csv(g, sample());
  }
  CHECK(load_events(bin) == sample());
  CHECK(load_events(csv) == sample());
  const auto split = split_by_node(sample());
  CHECK(split.local.size() == 2);
  CHECK(split.remote.size() == 1);
  std::filesystem::remove(bin);
  std::filesystem::remove(csv);
  CHECK_THROWS_AS(load_events(dir / "does_not_exist.bin"), ConfigError);
}

TEST_CASE("histogram csv") {
  Histogram h;
  h.lo_ps = -1;
  h.counts = {1, 5, 2};
  std::ostringstream os;
  write_histogram_csv(os, h);
  CHECK(os.str() == "dt_ps,count\n-1,1\n0,5\n1,2\n");
}
