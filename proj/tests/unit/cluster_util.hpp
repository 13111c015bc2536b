#pragma once

#include <gtest/gtest.h>

#include "rrbd/harness/cluster.hpp"

namespace testutil {

using namespace rrbd;

inline harness::ClusterParams small(std::uint32_t nodes = 2, std::uint32_t f = 1, std::uint32_t layers = 0) {
  harness::ClusterParams p;
  p.nodes = nodes;
  p.f = f;
  p.blocks = 32;
  p.block_size = 512;
  p.merkle_disk_layers = layers;
  p.recovery_timeout = 20 * sim::kMillisecond;
  return p;
}

inline Bytes fill(const harness::Cluster& c, std::uint8_t v) { return Bytes(c.params().block_size, v); }

// Issues a write on the primary and runs the simulator until it completes.
// Returns the completion time relative to the call.
inline sim::Time write_sync(harness::Cluster& c, model::BlockId b, std::uint8_t v,
                            model::SyncFlags s = model::SyncFlags::kNone) {
  bool done = false;
  const sim::Time t0 = c.sim().now();
  sim::Time took = 0;
  c.primary().write(b, fill(c, v), s, [&] {
    done = true;
    took = c.sim().now() - t0;
  });
  c.sim().run_while([&] { return !done; });
  EXPECT_TRUE(done);
  return took;
}

inline Bytes read_sync(harness::Cluster& c, model::BlockId b) {
  Bytes out;
  bool done = false;
  c.primary().read(b, [&](Bytes v) {
    out = std::move(v);
    done = true;
  });
  c.sim().run_while([&] { return !done && c.primary().alive(); });
  return out;
}

inline void settle(harness::Cluster& c, sim::Time us = 100 * sim::kMillisecond) {
  c.sim().run_until(c.sim().now() + us);
}

}  // namespace testutil
