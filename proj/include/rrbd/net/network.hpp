#pragma once

// In-process message transport over the simulator. Each directed link is FIFO
// with seeded latency; an adversary can drop, duplicate, delay (which lets a
// message overtake or be overtaken) or corrupt frames, and can cut nodes or
// single link directions. Frames are MAC-checked before any handler sees them.

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <utility>

#include "rrbd/net/configuration.hpp"
#include "rrbd/net/wire.hpp"
#include "rrbd/sim/simulator.hpp"

namespace rrbd::net {

inline constexpr std::uint32_t kServiceSlot = 0xffffffffu;
inline const NodeId kServiceId{kServiceSlot, 0};

struct NetLatency {
  sim::Time min_us = 50;
  sim::Time max_us = 200;
};

struct NetCounters {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;       // adversary drops and cut links
  std::uint64_t undeliverable = 0; // sender or receiver gone
  std::uint64_t duplicated = 0;
  std::uint64_t corrupted = 0;
  std::uint64_t mac_failures = 0;
};

class Network {
 public:
  using Handler = std::function<void(const NodeId& from, const Message& msg)>;
  using Link = std::pair<std::uint32_t, std::uint32_t>;  // (from slot, to slot)

  Network(sim::Simulator& sim, const storage::CipherContext& cipher, NetLatency latency = {},
          std::uint64_t seed = 1);

  void attach(const NodeId& id, Handler handler);
  // Messages the node sent that are still in flight are lost with it.
  void detach(const NodeId& id);
  bool attached(const NodeId& id) const;

  void send(const NodeId& from, const NodeId& to, const Message& msg);

  void drop_next(Link link, std::uint64_t count);
  void duplicate_next(Link link, std::uint64_t count);
  void delay_next(Link link, std::uint64_t count, sim::Time extra);
  void corrupt_next(Link link, std::uint64_t count);
  // Constant extra one-way latency; order on the link is preserved.
  void set_link_delay(Link link, sim::Time extra);
  void cut_link(Link link, bool cut);
  void isolate(std::uint32_t slot, bool isolated);
  // Drop everything addressed to this exact identity (slots are shared
  // between incarnations, identities are not).
  void deafen(const NodeId& id, bool deaf);

  NetCounters counters() const;

 private:
  struct Faults {
    std::uint64_t drop = 0;
    std::uint64_t dup = 0;
    std::uint64_t delay = 0;
    sim::Time delay_by = 0;
    std::uint64_t corrupt = 0;
    sim::Time extra = 0;
    bool cut = false;
  };

  bool blocked(const Link& link) const;
  void deliver(const NodeId& from, std::uint64_t sender_gen, const NodeId& to, const Bytes& frame);
  void schedule_frame(const NodeId& from, const NodeId& to, Bytes frame, sim::Time extra, bool in_order);

  sim::Simulator& sim_;
  const storage::CipherContext& cipher_;
  NetLatency latency_;

  mutable std::mutex mu_;
  std::map<NodeId, std::pair<Handler, std::uint64_t>> endpoints_;
  std::uint64_t next_gen_ = 1;
  std::map<Link, Faults> faults_;
  std::map<std::pair<NodeId, NodeId>, sim::Time> last_delivery_;
  std::set<std::uint32_t> isolated_;
  std::set<NodeId> deaf_;
  NetCounters counters_;
  std::mt19937_64 rng_;
};

}  // namespace rrbd::net
