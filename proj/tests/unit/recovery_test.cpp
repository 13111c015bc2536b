#include <gtest/gtest.h>

#include <optional>
#include <set>

#include "cluster_util.hpp"

using namespace rrbd;
using namespace testutil;
using model::SyncFlags;

namespace {

node::RecoveryReport recover_slot(harness::Cluster& c, std::uint32_t slot) {
  node::Node& n = c.restart(slot);
  std::optional<node::RecoveryReport> out;
  n.recover(c.next_configuration(slot), [&](const node::RecoveryReport& r) { out = r; });
  c.sim().run_while([&] { return !out; });
  EXPECT_TRUE(out);
  return out.value_or(node::RecoveryReport{});
}

}  // namespace

TEST(RecoveryTest, RollbackRepairsExactlyTheRolledBackPages) {
  for (std::uint32_t layers : {0u, 1u, 2u}) {
    harness::Cluster c(small(2, 1, layers));
    ASSERT_TRUE(c.deploy());
    for (model::BlockId b = 0; b < 10; ++b) write_sync(c, b, 1, SyncFlags::kFua);
    const auto old = c.disk(0).snapshot();
    for (model::BlockId b : {3, 5, 7}) write_sync(c, b, 2, SyncFlags::kFua);
    settle(c);
    c.primary().crash();
    c.disk(0).restore(old);

    const auto r = recover_slot(c, 0);
    ASSERT_TRUE(r.ok) << r.error;
    EXPECT_EQ(r.designated.slot, 1u);
    EXPECT_EQ(std::set<model::BlockId>(r.repaired_blocks.begin(), r.repaired_blocks.end()),
              (std::set<model::BlockId>{3, 5, 7}))
        << "L=" << layers;
    EXPECT_EQ(r.pages_repaired, 3u);
    EXPECT_EQ(r.pages_verified, c.params().blocks);
    ASSERT_TRUE(c.primary().active());
    EXPECT_EQ(c.primary().ballot(), 2u);
    EXPECT_EQ(c.primary().write_index(), 13u);
    for (model::BlockId b = 0; b < c.params().blocks; ++b) {
      EXPECT_EQ(c.disk(0).read_now(b), c.disk(1).read_now(b)) << "block " << b;
    }
    EXPECT_EQ(read_sync(c, 5), fill(c, 2));
    EXPECT_EQ(read_sync(c, 4), fill(c, 1));
  }
}

TEST(RecoveryTest, BenignCrashRepairsNothing) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  for (model::BlockId b = 0; b < 6; ++b) write_sync(c, b, 9, SyncFlags::kFua);
  settle(c);
  c.primary().crash();
  const auto r = recover_slot(c, 0);
  ASSERT_TRUE(r.ok) << r.error;
  EXPECT_EQ(r.pages_repaired, 0u);
  EXPECT_GT(r.hash_bytes, 0u);
  EXPECT_LE(r.started, r.matched);
  EXPECT_LE(r.matched, r.finished);
}

TEST(RecoveryTest, BackupRecoveryFencesAndRejoins) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  write_sync(c, 0, 1, SyncFlags::kFua);
  node::Node& primary = c.primary();
  bool fenced = false;
  primary.observer().on_inactive = [&](node::Inactive why) { fenced = why == node::Inactive::kFenced; };
  c.node(1).crash();
  const auto r = recover_slot(c, 1);
  ASSERT_TRUE(r.ok) << r.error;
  EXPECT_TRUE(fenced);
  EXPECT_EQ(&c.primary(), &primary);
  EXPECT_TRUE(c.primary().active());
  EXPECT_TRUE(c.node(1).active());
  EXPECT_EQ(c.primary().ballot(), 2u);
  EXPECT_EQ(c.node(1).write_index(), c.primary().write_index());
  EXPECT_GE(write_sync(c, 2, 2, SyncFlags::kFua), 0u);
}

TEST(RecoveryTest, UnreachableQuorumAborts) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  write_sync(c, 0, 1, SyncFlags::kFua);
  c.net().isolate(1, true);
  c.primary().crash();
  const auto r = recover_slot(c, 0);
  EXPECT_FALSE(r.ok);
  EXPECT_FALSE(r.error.empty());
  EXPECT_FALSE(c.primary().active());
}

TEST(RecoveryTest, SingleNodeCannotRecoverFromNothing) {
  harness::Cluster c(small(1, 0));
  ASSERT_TRUE(c.deploy());
  write_sync(c, 0, 1, SyncFlags::kFua);
  c.primary().crash();
  const auto r = recover_slot(c, 0);
  EXPECT_FALSE(r.ok);
}

TEST(RecoveryTest, ConcurrentInitializeOneWins) {
  harness::Cluster c(small(3, 1));
  auto conf = [&](std::uint32_t primary, std::uint32_t backup) {
    net::Configuration k;
    k.ballot = 1;
    k.f = 1;
    k.members = {c.node(primary).id(), c.node(backup).id()};
    return k;
  };
  const net::Configuration a = conf(0, 1), b = conf(0, 2);
  int answered = 0, ok = 0;
  c.node(1).initialize(a, [&](bool good) {
    ++answered;
    ok += good;
  });
  c.node(2).initialize(b, [&](bool good) {
    ++answered;
    ok += good;
  });
  c.sim().run_while([&] { return answered < 2; });
  EXPECT_EQ(ok, 1);
  const auto all = c.service().all_conf();
  ASSERT_EQ(all.size(), 1u);
  const net::Configuration& winner = all.begin()->second;
  EXPECT_TRUE(winner == a || winner == b);
  EXPECT_EQ(winner == a, c.node(1).ballot() == 1);
}

TEST(RecoveryTest, InitializeAfterDeployFails) {
  harness::Cluster c(small());
  ASSERT_TRUE(c.deploy());
  node::Node& fresh = c.restart(1);
  net::Configuration k = c.primary().conf();
  k.ballot = 2;
  k.members[1] = fresh.id();
  std::optional<bool> got;
  fresh.initialize(k, [&](bool good) { got = good; });
  c.sim().run_while([&] { return !got; });
  EXPECT_EQ(got, false);
}

TEST(RecoveryTest, OldPrimaryFencedAfterReplacement) {
  auto p = small(3, 1);
  harness::Cluster c(p);
  ASSERT_TRUE(c.deploy());
  node::Node& old = c.primary();
  write_sync(c, 0, 1, SyncFlags::kFua);
  c.net().deafen(old.id(), true);
  std::uint64_t late_accepted = 0, late_rejected = 0;
  for (std::uint32_t s : {1u, 2u}) {
    c.node(s).observer().on_data = [&, s](const net::NodeId& from, const net::Message&, bool accepted) {
      if (from != old.id() || c.node(s).seen_ballot() < 2) return;
      ++(accepted ? late_accepted : late_rejected);
    };
  }
  node::Node& fresh = c.replace(0);
  net::Configuration k;
  k.ballot = c.service().highest_ballot() + 1;
  k.f = 1;
  k.members = {fresh.id(), c.node(1).id(), c.node(2).id()};
  std::optional<node::RecoveryReport> r;
  fresh.recover(k, [&](const node::RecoveryReport& rep) { r = rep; });
  c.sim().run_while([&] { return !r; });
  ASSERT_TRUE(r && r->ok) << (r ? r->error : "no report");
  EXPECT_EQ(r->pages_repaired, 1u);  // the blank disk gets block 0
  for (int i = 0; i < 5; ++i) old.write(1, fill(c, 3), SyncFlags::kNone, [] {});
  settle(c);
  EXPECT_EQ(late_accepted, 0u);
  EXPECT_GT(late_rejected, 0u);
  EXPECT_EQ(read_sync(c, 0), fill(c, 1));
}
