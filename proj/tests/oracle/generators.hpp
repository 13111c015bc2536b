#pragma once

// History generators for checker tests: exhaustive small-scope enumeration
// (canonical up to renaming of threads, blocks and values) and seeded random
// histories.

#include <cstdint>
#include <random>
#include <vector>

#include "rrbd/model/history.hpp"

namespace oracle {

using rrbd::model::Event;
using rrbd::model::History;
using rrbd::model::SyncFlags;

struct Scope {
  int max_events = 8;
  int blocks = 2;
  int threads = 2;
  int crashes = 1;
};

// Calls fn(h) for every well-formed history with at most max_events events in
// which reads only target blocks with an earlier write invocation. Threads and
// blocks are numbered in order of first appearance and write values are fresh
// (1, 2, ...) in invocation order; a read returns 0 or a value already written
// to its block.
template <typename F>
void for_each_history(const Scope& scope, F&& fn) {
  struct Outstanding {
    bool any = false;
    bool write = false;
    std::uint64_t block = 0;
  };
  std::vector<Event> events;
  std::vector<Outstanding> out(scope.threads);
  std::vector<std::vector<std::uint64_t>> written(scope.blocks);
  int threads_used = 0;
  int blocks_used = 0;
  std::uint64_t next_value = 1;
  int crashes = 0;

  auto rec = [&](auto&& self) -> void {
    fn(History(events));
    if (static_cast<int>(events.size()) == scope.max_events) return;
    if (crashes < scope.crashes) {
      auto saved = out;
      for (auto& o : out) o.any = false;
      ++crashes;
      events.push_back(Event::crash());
      self(self);
      events.pop_back();
      --crashes;
      out = saved;
    }
    const int tlim = std::min(threads_used + 1, scope.threads);
    for (int t = 0; t < tlim; ++t) {
      const int saved_threads = threads_used;
      threads_used = std::max(threads_used, t + 1);
      Outstanding& o = out[t];
      if (o.any) {
        const Outstanding saved = o;
        o.any = false;
        if (saved.write) {
          events.push_back(Event::write_res(t, saved.block));
          self(self);
          events.pop_back();
        } else {
          std::vector<std::uint64_t> values{0};
          for (auto v : written[saved.block]) values.push_back(v);
          for (auto v : values) {
            events.push_back(Event::read_res(t, saved.block, v));
            self(self);
            events.pop_back();
          }
        }
        o = saved;
      } else {
        const int blim = std::min(blocks_used + 1, scope.blocks);
        for (int b = 0; b < blim; ++b) {
          const int saved_blocks = blocks_used;
          blocks_used = std::max(blocks_used, b + 1);
          o = {true, true, static_cast<std::uint64_t>(b)};
          for (int f = 0; f < 4; ++f) {
            written[b].push_back(next_value);
            events.push_back(Event::write_inv(t, b, next_value++, static_cast<SyncFlags>(f)));
            self(self);
            events.pop_back();
            --next_value;
            written[b].pop_back();
          }
          if (!written[b].empty()) {
            o = {true, false, static_cast<std::uint64_t>(b)};
            events.push_back(Event::read_inv(t, b));
            self(self);
            events.pop_back();
          }
          o = {};
          blocks_used = saved_blocks;
        }
      }
      threads_used = saved_threads;
    }
  };
  rec(rec);
}

struct RandomShape {
  int events = 12;
  int blocks = 3;
  int threads = 3;
  double crash_p = 0.08;
  double flag_p = 0.3;
  double read_p = 0.4;
  double fresh_read_p = 0.7;  // chance a read returns the latest written value
};

History random_history(std::mt19937_64& rng, const RandomShape& shape);

}  // namespace oracle
