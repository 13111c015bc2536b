#pragma once

// Deterministic discrete-event simulator. Time is in microseconds. Events at
// the same instant run in scheduling order, so a run is a pure function of the
// seed and the inputs.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <utility>

namespace rrbd::sim {

using Time = std::uint64_t;

inline constexpr Time kMillisecond = 1000;

class Simulator {
 public:
  using Callback = std::function<void()>;
  using EventId = std::uint64_t;

  explicit Simulator(std::uint64_t seed) : rng_(seed) {}
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  Time now() const { return now_; }

  EventId schedule(Time delay, Callback cb);
  EventId post(Callback cb) { return schedule(0, std::move(cb)); }
  void cancel(EventId id);

  // Runs the next event. Returns false when the queue is empty.
  bool step();
  // Runs events up to and including time t, then sets now() = t.
  void run_until(Time t);
  // Runs events while pred() holds and events remain.
  void run_while(const std::function<bool()>& pred);

  std::size_t pending() const { return queue_.size(); }
  std::uint64_t executed() const { return executed_; }

  std::mt19937_64& rng() { return rng_; }
  // Uniform integer in [lo, hi].
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);

 private:
  using Key = std::pair<Time, EventId>;

  Time now_ = 0;
  EventId next_id_ = 0;
  std::uint64_t executed_ = 0;
  std::map<Key, Callback> queue_;
  std::map<EventId, Time> when_;
  std::mt19937_64 rng_;
};

}  // namespace rrbd::sim
