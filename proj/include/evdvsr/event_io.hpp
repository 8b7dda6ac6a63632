#pragma once

#include "evdvsr/events.hpp"

#include <filesystem>
#include <iosfwd>

namespace evdvsr::events {

/// Binary layout, little-endian:
///   16-byte magic field "EVDV1\n" zero-padded, uint16 W, uint16 H, uint64 t_min,
///   then 9-byte records {uint32 t - t_min, uint16 x, uint16 y, int8 p}.
inline constexpr std::size_t kEventHeaderSize = 16 + 2 + 2 + 8;
inline constexpr std::size_t kEventRecordSize = 4 + 2 + 2 + 1;

void write_events_binary(std::ostream& out, const EventStream& stream);
EventStream read_events_binary(std::istream& in);

void save_events(const std::filesystem::path& path, const EventStream& stream);
EventStream load_events(const std::filesystem::path& path);

/// CSV fallback: a "# W H t_min t_max" header line, then "t,x,y,p" per event.
void write_events_csv(std::ostream& out, const EventStream& stream);
EventStream read_events_csv(std::istream& in);

}  // namespace evdvsr::events
