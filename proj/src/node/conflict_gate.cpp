#include "rrbd/node/conflict_gate.hpp"

#include <vector>

namespace rrbd::node {

bool ConflictGate::conflicts_invoked(const Range& r) const {
  for (const auto& [id, range] : invoked_) {
    if (range.overlaps(r)) return true;
  }
  return false;
}

ConflictGate::OpId ConflictGate::arrive(std::uint64_t first, std::uint64_t count, Start start) {
  const OpId id = next_++;
  const Range r{first, count};
  bool blocked = conflicts_invoked(r);
  for (const auto& w : pending_) {
    if (blocked) break;
    blocked = w.range.overlaps(r);
  }
  if (blocked) {
    pending_.push_back({id, r, std::move(start)});
    return id;
  }
  invoked_.emplace(id, r);
  start(id);
  return id;
}

void ConflictGate::finish(OpId id) {
  if (invoked_.erase(id) == 0) return;
  std::vector<Waiting> released;
  while (!pending_.empty() && !conflicts_invoked(pending_.front().range)) {
    invoked_.emplace(pending_.front().id, pending_.front().range);
    released.push_back(std::move(pending_.front()));
    pending_.pop_front();
  }
  for (auto& w : released) w.start(w.id);
}

void ConflictGate::clear() {
  invoked_.clear();
  pending_.clear();
}

}  // namespace rrbd::node
