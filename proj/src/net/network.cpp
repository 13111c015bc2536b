#include "rrbd/net/network.hpp"

#include <algorithm>

namespace rrbd::net {

Network::Network(sim::Simulator& sim, const storage::CipherContext& cipher, NetLatency latency,
                 std::uint64_t seed)
    : sim_(sim), cipher_(cipher), latency_(latency), rng_(seed) {}

void Network::attach(const NodeId& id, Handler handler) {
  std::lock_guard lock(mu_);
  endpoints_[id] = {std::move(handler), next_gen_++};
}

void Network::detach(const NodeId& id) {
  std::lock_guard lock(mu_);
  endpoints_.erase(id);
}

bool Network::attached(const NodeId& id) const {
  std::lock_guard lock(mu_);
  return endpoints_.count(id) > 0;
}

bool Network::blocked(const Link& link) const {
  if (isolated_.count(link.first) || isolated_.count(link.second)) return true;
  auto it = faults_.find(link);
  return it != faults_.end() && it->second.cut;
}

void Network::send(const NodeId& from, const NodeId& to, const Message& msg) {
  Bytes frame = encode(msg, cipher_);
  const Link link{from.slot, to.slot};
  bool dup = false;
  bool reorder = false;
  sim::Time extra = 0;
  {
    std::lock_guard lock(mu_);
    ++counters_.sent;
    if (blocked(link)) {
      ++counters_.dropped;
      return;
    }
    Faults& f = faults_[link];
    extra = f.extra;
    if (f.drop > 0) {
      --f.drop;
      ++counters_.dropped;
      return;
    }
    if (f.corrupt > 0) {
      --f.corrupt;
      ++counters_.corrupted;
      frame[std::uniform_int_distribution<std::size_t>(0, frame.size() - 1)(rng_)] ^= 0x01;
    }
    if (f.dup > 0) {
      --f.dup;
      ++counters_.duplicated;
      dup = true;
    }
    if (f.delay > 0) {
      --f.delay;
      extra += f.delay_by;
      reorder = true;
    }
  }
  if (dup) schedule_frame(from, to, frame, extra, !reorder);
  schedule_frame(from, to, std::move(frame), extra, !reorder);
}

void Network::schedule_frame(const NodeId& from, const NodeId& to, Bytes frame, sim::Time extra,
                             bool in_order) {
  std::uint64_t gen = 0;
  sim::Time at = 0;
  {
    std::lock_guard lock(mu_);
    at = sim_.now() + std::uniform_int_distribution<sim::Time>(latency_.min_us, latency_.max_us)(rng_) + extra;
    if (auto it = endpoints_.find(from); it != endpoints_.end()) gen = it->second.second;
    if (in_order) {
      sim::Time& last = last_delivery_[{from, to}];
      at = std::max(at, last);
      last = at;
    }
  }
  sim_.schedule(at - sim_.now(), [this, from, gen, to, frame = std::move(frame)] {
    deliver(from, gen, to, frame);
  });
}

void Network::deliver(const NodeId& from, std::uint64_t sender_gen, const NodeId& to, const Bytes& frame) {
  Handler handler;
  {
    std::lock_guard lock(mu_);
    auto sender = endpoints_.find(from);
    auto receiver = endpoints_.find(to);
    if (receiver == endpoints_.end() ||
        (sender_gen != 0 && (sender == endpoints_.end() || sender->second.second != sender_gen))) {
      ++counters_.undeliverable;
      return;
    }
    if (blocked({from.slot, to.slot}) || deaf_.count(to)) {
      ++counters_.dropped;
      return;
    }
    handler = receiver->second.first;
  }
  auto msg = decode(frame, cipher_);
  {
    std::lock_guard lock(mu_);
    if (!msg) {
      ++counters_.mac_failures;
      return;
    }
    ++counters_.delivered;
  }
  handler(from, *msg);
}

void Network::drop_next(Link link, std::uint64_t count) {
  std::lock_guard lock(mu_);
  faults_[link].drop += count;
}

void Network::duplicate_next(Link link, std::uint64_t count) {
  std::lock_guard lock(mu_);
  faults_[link].dup += count;
}

void Network::delay_next(Link link, std::uint64_t count, sim::Time extra) {
  std::lock_guard lock(mu_);
  faults_[link].delay += count;
  faults_[link].delay_by = extra;
}

void Network::corrupt_next(Link link, std::uint64_t count) {
  std::lock_guard lock(mu_);
  faults_[link].corrupt += count;
}

void Network::set_link_delay(Link link, sim::Time extra) {
  std::lock_guard lock(mu_);
  faults_[link].extra = extra;
}

void Network::cut_link(Link link, bool cut) {
  std::lock_guard lock(mu_);
  faults_[link].cut = cut;
}

void Network::isolate(std::uint32_t slot, bool isolated) {
  std::lock_guard lock(mu_);
  if (isolated) {
    isolated_.insert(slot);
  } else {
    isolated_.erase(slot);
  }
}

void Network::deafen(const NodeId& id, bool deaf) {
  std::lock_guard lock(mu_);
  if (deaf) {
    deaf_.insert(id);
  } else {
    deaf_.erase(id);
  }
}

NetCounters Network::counters() const {
  std::lock_guard lock(mu_);
  return counters_;
}

}  // namespace rrbd::net
