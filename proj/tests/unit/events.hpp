#pragma once

#include "rrbd/model/history.hpp"

namespace ev {

using rrbd::model::Event;
using rrbd::model::History;
using rrbd::model::SyncFlags;

inline constexpr SyncFlags FUA = SyncFlags::kFua;
inline constexpr SyncFlags PRE = SyncFlags::kPreflush;
inline constexpr SyncFlags BOTH = SyncFlags::kFuaPreflush;

inline Event wi(std::uint32_t t, std::uint64_t b, std::uint64_t v, SyncFlags s = SyncFlags::kNone) {
  return Event::write_inv(t, b, v, s);
}
inline Event wr(std::uint32_t t, std::uint64_t b) { return Event::write_res(t, b); }
inline Event ri(std::uint32_t t, std::uint64_t b) { return Event::read_inv(t, b); }
inline Event rr(std::uint32_t t, std::uint64_t b, std::uint64_t v) { return Event::read_res(t, b, v); }
inline Event cr() { return Event::crash(); }

inline History H(std::initializer_list<Event> events) { return History(std::vector<Event>(events)); }

}  // namespace ev
