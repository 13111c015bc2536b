#include "rrbd/sim/simulator.hpp"

namespace rrbd::sim {

Simulator::EventId Simulator::schedule(Time delay, Callback cb) {
  const EventId id = next_id_++;
  queue_.emplace(Key{now_ + delay, id}, std::move(cb));
  when_.emplace(id, now_ + delay);
  return id;
}

void Simulator::cancel(EventId id) {
  auto it = when_.find(id);
  if (it == when_.end()) return;
  queue_.erase(Key{it->second, id});
  when_.erase(it);
}

bool Simulator::step() {
  if (queue_.empty()) return false;
  auto it = queue_.begin();
  now_ = it->first.first;
  when_.erase(it->first.second);
  Callback cb = std::move(it->second);
  queue_.erase(it);
  ++executed_;
  cb();
  return true;
}

void Simulator::run_until(Time t) {
  while (!queue_.empty() && queue_.begin()->first.first <= t) step();
  if (now_ < t) now_ = t;
}

void Simulator::run_while(const std::function<bool()>& pred) {
  while (pred() && step()) {
  }
}

std::uint64_t Simulator::uniform(std::uint64_t lo, std::uint64_t hi) {
  if (hi <= lo) return lo;
  return lo + rng_() % (hi - lo + 1);
}

}  // namespace rrbd::sim
