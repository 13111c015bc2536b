#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rrbd::model {

using ThreadId = std::uint32_t;
using BlockId = std::uint64_t;
using ValueId = std::uint64_t;

// Every block holds this value before its first write. Reads that observe it
// are explained by an implicit initial write that precedes the whole history.
inline constexpr ValueId kInitialValue = 0;

enum class EventKind : std::uint8_t { kReadInv, kReadRes, kWriteInv, kWriteRes, kCrash };

// Persistence flags carried by a write invocation (REQ_FUA / REQ_PREFLUSH).
enum class SyncFlags : std::uint8_t { kNone = 0, kFua = 1, kPreflush = 2, kFuaPreflush = 3 };

constexpr SyncFlags operator|(SyncFlags a, SyncFlags b) {
  return static_cast<SyncFlags>(static_cast<std::uint8_t>(a) | static_cast<std::uint8_t>(b));
}
constexpr bool has_fua(SyncFlags s) { return (static_cast<std::uint8_t>(s) & 1) != 0; }
constexpr bool has_preflush(SyncFlags s) { return (static_cast<std::uint8_t>(s) & 2) != 0; }
constexpr bool is_flagged(SyncFlags s) { return s != SyncFlags::kNone; }

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The history violates per-thread well-formedness or has non-dense sequence numbers.
class MalformedHistory : public ModelError {
 public:
  using ModelError::ModelError;
};

// The history is well-formed but outside what the checker evaluates, e.g. a
// read of a block that no earlier invocation wrote.
class PreconditionViolation : public ModelError {
 public:
  using ModelError::ModelError;
};

// The search budget ran out. Not a verdict.
class SizeLimitExceeded : public ModelError {
 public:
  using ModelError::ModelError;
};

struct Event {
  std::uint64_t seq = 0;
  std::optional<ThreadId> thread;
  EventKind kind = EventKind::kCrash;
  std::optional<BlockId> block;
  std::optional<ValueId> value;
  SyncFlags sync = SyncFlags::kNone;

  static Event read_inv(ThreadId t, BlockId b);
  static Event read_res(ThreadId t, BlockId b, ValueId v);
  static Event write_inv(ThreadId t, BlockId b, ValueId v, SyncFlags sync = SyncFlags::kNone);
  static Event write_res(ThreadId t, BlockId b);
  static Event crash();

  bool is_invocation() const { return kind == EventKind::kReadInv || kind == EventKind::kWriteInv; }
  bool is_response() const { return kind == EventKind::kReadRes || kind == EventKind::kWriteRes; }
  bool is_crash() const { return kind == EventKind::kCrash; }
  bool is_write() const { return kind == EventKind::kWriteInv || kind == EventKind::kWriteRes; }

  // Equality ignoring `seq`; used for per-thread equivalence.
  bool same_action(const Event& other) const;
};

std::string to_string(const Event& e);

// A totally ordered sequence of events. Sequence numbers are always the dense
// positions 0..n-1; appending renumbers.
class History {
 public:
  History() = default;
  explicit History(std::vector<Event> events);

  History& push(Event e);
  History& append(const History& other);

  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  const Event& operator[](std::size_t i) const { return events_[i]; }

  // Index of the matching response for each invocation (and vice versa);
  // nullopt for pending invocations and crashes. Throws MalformedHistory.
  std::vector<std::optional<std::size_t>> matching() const;

  // Throws MalformedHistory if any response lacks a matching invocation, an
  // invocation is issued while its thread already has one outstanding in the
  // same era, or a crash carries thread/block/value fields.
  void validate() const;

  // Crash-free segments E_0 .. E_x; there is always one more era than crashes.
  std::vector<History> eras() const;

  // H[t]: the subsequence of events performed by thread t.
  History thread_view(ThreadId t) const;

  bool has_crash() const;

  bool operator==(const History& other) const;

 private:
  std::vector<Event> events_;
};

}  // namespace rrbd::model
