#pragma once

// Pending queue plus invoked set. An operation starts immediately unless its
// block range overlaps an invoked or an earlier pending operation; finishing
// an operation releases the longest non-conflicting prefix of the queue.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>

namespace rrbd::node {

class ConflictGate {
 public:
  using OpId = std::uint64_t;
  using Start = std::function<void(OpId)>;

  // `start` may run before arrive() returns.
  OpId arrive(std::uint64_t first, std::uint64_t count, Start start);
  void finish(OpId id);

  std::size_t invoked() const { return invoked_.size(); }
  std::size_t pending() const { return pending_.size(); }
  bool idle() const { return invoked_.empty() && pending_.empty(); }
  void clear();

 private:
  struct Range {
    std::uint64_t first;
    std::uint64_t count;
    bool overlaps(const Range& o) const { return first < o.first + o.count && o.first < first + count; }
  };
  struct Waiting {
    OpId id;
    Range range;
    Start start;
  };

  bool conflicts_invoked(const Range& r) const;

  OpId next_ = 1;
  std::map<OpId, Range> invoked_;
  std::deque<Waiting> pending_;
};

}  // namespace rrbd::node
