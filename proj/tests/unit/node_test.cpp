#include <gtest/gtest.h>

#include <vector>

#include "cluster_util.hpp"
#include "rrbd/node/conflict_gate.hpp"

using namespace rrbd;
using namespace testutil;
using model::SyncFlags;
using net::MsgType;
using node::ConflictGate;
using node::Node;

TEST(ConflictGateTest, NonConflictingStartImmediately) {
  ConflictGate g;
  std::vector<ConflictGate::OpId> started;
  auto rec = [&](ConflictGate::OpId id) { started.push_back(id); };
  const auto a = g.arrive(0, 1, rec);
  const auto b = g.arrive(1, 1, rec);
  EXPECT_EQ(started, (std::vector<ConflictGate::OpId>{a, b}));
  EXPECT_EQ(g.invoked(), 2u);
}

TEST(ConflictGateTest, SameBlockQueuesBehind) {
  ConflictGate g;
  std::vector<ConflictGate::OpId> started;
  auto rec = [&](ConflictGate::OpId id) { started.push_back(id); };
  const auto a = g.arrive(5, 1, rec);
  const auto b = g.arrive(5, 1, rec);
  EXPECT_EQ(started.size(), 1u);
  EXPECT_EQ(g.pending(), 1u);
  g.finish(a);
  EXPECT_EQ(started, (std::vector<ConflictGate::OpId>{a, b}));
  g.finish(b);
  EXPECT_TRUE(g.idle());
}

TEST(ConflictGateTest, QueuedOpsKeepArrivalOrder) {
  ConflictGate g;
  std::vector<ConflictGate::OpId> started;
  auto rec = [&](ConflictGate::OpId id) { started.push_back(id); };
  const auto a = g.arrive(0, 2, rec);  // blocks 0-1
  const auto b = g.arrive(1, 1, rec);  // conflicts with a
  const auto c = g.arrive(7, 1, rec);  // free
  const auto d = g.arrive(1, 2, rec);  // behind b
  const auto e = g.arrive(2, 1, rec);  // overlaps pending d
  EXPECT_EQ(started, (std::vector<ConflictGate::OpId>{a, c}));
  g.finish(a);
  EXPECT_EQ(started, (std::vector<ConflictGate::OpId>{a, c, b}));
  g.finish(b);
  EXPECT_EQ(started, (std::vector<ConflictGate::OpId>{a, c, b, d}));
  g.finish(d);
  EXPECT_EQ(started, (std::vector<ConflictGate::OpId>{a, c, b, d, e}));
}

TEST(ConflictGateTest, NoTwoInvokedOverlap) {
  ConflictGate g;
  std::mt19937_64 rng(8);
  std::map<ConflictGate::OpId, std::pair<std::uint64_t, std::uint64_t>> ranges;
  std::set<ConflictGate::OpId> live;
  for (int i = 0; i < 5000; ++i) {
    if (!live.empty() && rng() % 2) {
      auto it = live.begin();
      std::advance(it, rng() % live.size());
      const auto id = *it;
      live.erase(it);
      g.finish(id);
      continue;
    }
    const std::uint64_t first = rng() % 16, count = 1 + rng() % 3;
    g.arrive(first, count, [&, first, count](ConflictGate::OpId id) {
      for (auto o : live) {
        const auto [f2, c2] = ranges[o];
        ASSERT_FALSE(first < f2 + c2 && f2 < first + count) << "overlap";
      }
      ranges[id] = {first, count};
      live.insert(id);
    });
    EXPECT_EQ(g.invoked(), live.size());
  }
}

TEST(FenceTest, Examples) {
  // An old primary's replication after P1a raised the backup's seen ballot.
  EXPECT_FALSE(Node::fence_accepts(MsgType::kWriteRepl, 1, 2, 1));
  EXPECT_TRUE(Node::fence_accepts(MsgType::kWriteRepl, 2, 2, 2));
  // Future ballot on a data message: rejected until this node reconfigures.
  EXPECT_FALSE(Node::fence_accepts(MsgType::kWriteRepl, 3, 2, 2));
  EXPECT_FALSE(Node::fence_accepts(MsgType::kAck, 2, 2, 1));
  EXPECT_TRUE(Node::fence_accepts(MsgType::kP1a, 3, 2, 2));
  EXPECT_FALSE(Node::fence_accepts(MsgType::kP1a, 1, 2, 2));
  EXPECT_TRUE(Node::fence_accepts(MsgType::kReconfig, 2, 2, 1));
  EXPECT_FALSE(Node::fence_accepts(MsgType::kHashReq, 1, 2, 2));
}

TEST(PrimaryTest, ReadAfterWrite) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  EXPECT_TRUE(c.primary().active());
  write_sync(c, 3, 0x33);
  EXPECT_EQ(read_sync(c, 3), fill(c, 0x33));
  EXPECT_EQ(c.primary().write_index(), 1u);
}

TEST(PrimaryTest, UnwrittenBlockReadsZero) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  EXPECT_EQ(read_sync(c, 9), fill(c, 0));
}

TEST(PrimaryTest, WriteIndexIncrementsByOne) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  for (std::uint64_t i = 1; i <= 10; ++i) {
    EXPECT_EQ(c.primary().write(i % 4, fill(c, 1), SyncFlags::kNone, [] {}), i);
  }
}

TEST(PrimaryTest, SameBlockWritesSerialize) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  std::vector<int> order;
  c.primary().write(2, fill(c, 1), SyncFlags::kNone, [&] { order.push_back(1); });
  c.primary().write(2, fill(c, 2), SyncFlags::kNone, [&] { order.push_back(2); });
  EXPECT_EQ(c.primary().gate().pending(), 1u);
  settle(c);
  EXPECT_EQ(order, (std::vector<int>{1, 2}));
  EXPECT_EQ(read_sync(c, 2), fill(c, 2));
}

TEST(PrimaryTest, UnflaggedWriteIgnoresBackupDelay) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  c.net().set_link_delay({0, 1}, 50 * sim::kMillisecond);
  EXPECT_LT(write_sync(c, 1, 1), 1 * sim::kMillisecond);
}

TEST(PrimaryTest, FlaggedWriteWaitsForBackupAck) {
  for (SyncFlags s : {SyncFlags::kFua, SyncFlags::kPreflush}) {
    harness::Cluster c(small());
    ASSERT_TRUE(c.deploy());
    c.net().set_link_delay({0, 1}, 50 * sim::kMillisecond);
    EXPECT_GE(write_sync(c, 1, 1, s), 50 * sim::kMillisecond);
    EXPECT_GE(c.primary().ack_watermark(c.node(1).id()), 1u);
  }
}

TEST(PrimaryTest, DelayedAckDelaysFlaggedWrite) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  c.net().set_link_delay({1, 0}, 30 * sim::kMillisecond);
  EXPECT_GE(write_sync(c, 1, 1, SyncFlags::kFua), 30 * sim::kMillisecond);
}

TEST(PrimaryTest, CumulativeAckReleasesSeveralWaiters) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  c.net().cut_link({1, 0}, true);
  int done = 0;
  for (model::BlockId b = 0; b < 4; ++b) c.primary().write(b, fill(c, 5), SyncFlags::kFua, [&] { ++done; });
  settle(c);
  EXPECT_EQ(done, 0);
  EXPECT_EQ(c.primary().sync_waiters(), 4u);
  c.net().cut_link({1, 0}, false);
  // One more flagged write makes the backup ack again, covering everything.
  c.primary().write(9, fill(c, 5), SyncFlags::kFua, [&] { ++done; });
  settle(c);
  EXPECT_EQ(done, 5);
}

TEST(PrimaryTest, ZeroToleranceNeedsNoAck) {
  harness::Cluster c(small(1, 0));
  ASSERT_TRUE(c.deploy());
  EXPECT_LT(write_sync(c, 1, 1, SyncFlags::kFua), 1 * sim::kMillisecond);
}

TEST(PrimaryTest, ReadRacingWriteToSameBlock) {
  // The read's leaf must be taken before a queued write installs its own.
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    auto p = small();
    p.seed = seed;
    harness::Cluster c(p);
    ASSERT_TRUE(c.deploy());
    write_sync(c, 4, 1);
    Bytes got;
    c.primary().read(4, [&](Bytes v) { got = std::move(v); });
    c.primary().write(4, fill(c, 2), SyncFlags::kNone, [] {});
    settle(c);
    ASSERT_TRUE(c.primary().active()) << "seed " << seed << ": " << c.primary().halt_reason();
    EXPECT_EQ(got, fill(c, 1));
  }
}

TEST(PrimaryTest, RolledBackPageHaltsOnRead) {
  for (std::uint32_t layers : {0u, 1u}) {
    harness::Cluster c(small(2, 1, layers));
    ASSERT_TRUE(c.deploy());
    write_sync(c, 6, 1, SyncFlags::kFua);
    const auto old = c.disk(0).snapshot();
    write_sync(c, 6, 2, SyncFlags::kFua);
    c.disk(0).restore(old);
    read_sync(c, 6);
    EXPECT_TRUE(c.primary().halted()) << "L=" << layers;
    EXPECT_FALSE(c.primary().active());
  }
}

TEST(PrimaryTest, CorruptPageHaltsOnRead) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  write_sync(c, 6, 1, SyncFlags::kFua);
  c.disk(0).corrupt(6, 100);
  read_sync(c, 6);
  EXPECT_TRUE(c.primary().halted());
}

TEST(PrimaryTest, InactiveNodeRefusesWork) {
  harness::Cluster c(small());
  EXPECT_THROW(c.primary().write(0, fill(c, 1), SyncFlags::kNone, [] {}), node::NotActive);
  ASSERT_TRUE(c.deploy());
  EXPECT_THROW(c.primary().write(999, fill(c, 1), SyncFlags::kNone, [] {}), storage::OutOfRange);
  c.primary().crash();
  EXPECT_THROW(c.primary().read(0, [](Bytes) {}), node::NotActive);
}

TEST(BackupTest, AppliesInIndexOrder) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  std::vector<std::uint64_t> admitted;
  c.node(1).observer().on_admit = [&](std::uint64_t i) { admitted.push_back(i); };
  std::vector<std::uint64_t> arrival;
  c.node(1).observer().on_data = [&](const net::NodeId&, const net::Message& m, bool) {
    arrival.push_back(m.write_index);
  };
  c.net().delay_next({0, 1}, 1, 20 * sim::kMillisecond);
  c.primary().write(1, fill(c, 1), SyncFlags::kNone, [] {});
  c.net().delay_next({0, 1}, 1, 10 * sim::kMillisecond);
  c.primary().write(2, fill(c, 2), SyncFlags::kNone, [] {});
  c.primary().write(3, fill(c, 3), SyncFlags::kFua, [] {});
  settle(c);
  EXPECT_EQ(arrival, (std::vector<std::uint64_t>{3, 2, 1}));
  EXPECT_EQ(admitted, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(c.node(1).write_index(), 3u);
  EXPECT_EQ(c.node(1).held(), 0u);
}

TEST(BackupTest, DuplicatesAreIdempotent) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  c.net().duplicate_next({0, 1}, 3);
  for (model::BlockId b = 0; b < 3; ++b) c.primary().write(b, fill(c, 7), SyncFlags::kNone, [] {});
  settle(c);
  EXPECT_EQ(c.node(1).write_index(), 3u);
  EXPECT_EQ(c.node(1).counters().duplicates, 3u);
}

TEST(BackupTest, NonConflictingWritesOverlapOnDisk) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  std::size_t peak = 0;
  c.node(1).observer().on_admit = [&](std::uint64_t) { peak = std::max(peak, c.node(1).gate().invoked()); };
  for (model::BlockId b = 0; b < 8; ++b) c.primary().write(b, fill(c, 1), SyncFlags::kNone, [] {});
  settle(c);
  EXPECT_GT(peak, 1u);
}

TEST(BackupTest, MirrorsPrimaryDisk) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  for (model::BlockId b = 0; b < 8; ++b) write_sync(c, b, static_cast<std::uint8_t>(b + 1), SyncFlags::kFua);
  settle(c);
  for (model::BlockId b = 0; b < 8; ++b) EXPECT_EQ(c.disk(0).read_now(b), c.disk(1).read_now(b));
  EXPECT_EQ(c.node(0).integrity().root(), c.node(1).integrity().root());
}
