#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "coexist/event_sim.hpp"

namespace coexist::events {

/// Binary event file: 8-byte magic "CXEVENTS", one version byte, then
/// 10-byte records (u8 node, u8 channel, u64 timestamp in ps), little-endian.
inline constexpr char kEventMagic[8] = {'C', 'X', 'E', 'V', 'E', 'N', 'T', 'S'};
inline constexpr std::uint8_t kEventFormatVersion = 1;

void write_events_binary(std::ostream& out, const EventStream& events);
EventStream read_events_binary(std::istream& in, std::string_view source_name = "<stream>");

/// CSV export with header `node,channel,t_ps`; node is `local` or `remote`.
void write_events_csv(std::ostream& out, const EventStream& events);
EventStream read_events_csv(std::istream& in, std::string_view source_name = "<stream>");

/// Reads either format, picked from the leading bytes.
EventStream load_events(const std::filesystem::path& path);

/// Splits a mixed stream by node, keeping order.
EventStreams split_by_node(const EventStream& mixed);

/// `dt_ps,count`, one row per bin.
void write_histogram_csv(std::ostream& out, const Histogram& h);

}  // namespace coexist::events
