#include "coexist/event_io.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "coexist/error.hpp"

namespace coexist::events {
namespace {

std::string location(std::string_view source, std::size_t line) {
  std::ostringstream os;
  os << source << ':' << line;
  return os.str();
}

Node parse_node(std::string_view token, std::string_view where) {
  if (token == "local" || token == "0") return Node::Local;
  if (token == "remote" || token == "1") return Node::Remote;
  throw FormatError(std::string(where) + ": unknown node '" + std::string(token) + "'");
}

template <typename T>
T parse_uint(std::string_view token, std::string_view where, const char* field) {
  T value{};
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw FormatError(std::string(where) + ": bad " + field + " '" + std::string(token) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void write_events_binary(std::ostream& out, const EventStream& events) {
  out.write(kEventMagic, sizeof kEventMagic);
  out.put(static_cast<char>(kEventFormatVersion));
  std::array<char, 10> rec{};
  for (const auto& e : events) {
    rec[0] = static_cast<char>(e.node);
    rec[1] = static_cast<char>(e.channel);
    for (int b = 0; b < 8; ++b) rec[2 + b] = static_cast<char>((e.t_ps >> (8 * b)) & 0xFF);
    out.write(rec.data(), rec.size());
  }
  if (!out) throw Error("failed writing binary event stream");
}

EventStream read_events_binary(std::istream& in, std::string_view source_name) {
  char magic[sizeof kEventMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kEventMagic, sizeof magic) != 0) {
    throw FormatError(std::string(source_name) + ": not a binary event file (bad magic)");
  }
  const int version = in.get();
  if (version != kEventFormatVersion) {
    throw FormatError(std::string(source_name) + ": unsupported event format version " +
                      std::to_string(version));
  }
  EventStream out;
  std::array<unsigned char, 10> rec{};
  std::size_t index = 0;
  while (in.read(reinterpret_cast<char*>(rec.data()), rec.size())) {
    if (rec[0] > 1) {
      throw FormatError(std::string(source_name) + ": record " + std::to_string(index) +
                        " has invalid node " + std::to_string(rec[0]));
    }
    DetectionEvent e;
    e.node = static_cast<Node>(rec[0]);
    e.channel = rec[1];
    for (int b = 0; b < 8; ++b) e.t_ps |= static_cast<std::uint64_t>(rec[2 + b]) << (8 * b);
    out.push_back(e);
    ++index;
  }
  if (in.gcount() != 0) {
    throw FormatError(std::string(source_name) + ": truncated record at index " +
                      std::to_string(index));
  }
  return out;
}

void write_events_csv(std::ostream& out, const EventStream& events) {
  out << "node,channel,t_ps\n";
  for (const auto& e : events) {
    out << (e.node == Node::Local ? "local" : "remote") << ',' << static_cast<int>(e.channel)
        << ',' << e.t_ps << '\n';
  }
}

EventStream read_events_csv(std::istream& in, std::string_view source_name) {
  EventStream out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const std::string where = location(source_name, lineno);
    if (!header) {
      if (text != "node,channel,t_ps") {
        throw FormatError(where + ": expected header 'node,channel,t_ps'");
      }
      header = true;
      continue;
    }
    const auto c1 = text.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : text.find(',', c1 + 1);
    if (c2 == std::string_view::npos || text.find(',', c2 + 1) != std::string_view::npos) {
      throw FormatError(where + ": expected 3 fields");
    }
    DetectionEvent e;
    e.node = parse_node(trim(text.substr(0, c1)), where);
    e.channel = parse_uint<std::uint8_t>(trim(text.substr(c1 + 1, c2 - c1 - 1)), where, "channel");
    e.t_ps = parse_uint<std::uint64_t>(trim(text.substr(c2 + 1)), where, "timestamp");
    out.push_back(e);
  }
  if (!header) throw FormatError(std::string(source_name) + ": missing header");
  return out;
}

EventStream load_events(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open event file " + path.string());
  char head[sizeof kEventMagic] = {};
  in.read(head, sizeof head);
  const bool binary = in.gcount() == sizeof head && std::memcmp(head, kEventMagic, sizeof head) == 0;
  in.clear();
  in.seekg(0);
  return binary ? read_events_binary(in, path.string()) : read_events_csv(in, path.string());
}

EventStreams split_by_node(const EventStream& mixed) {
  EventStreams out;
  for (const auto& e : mixed) (e.node == Node::Local ? out.local : out.remote).push_back(e);
  return out;
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
  out << "dt_ps,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << h.lo_ps + static_cast<std::int64_t>(i) << ',' << h.counts[i] << '\n';
  }
}

}  // namespace coexist::events
