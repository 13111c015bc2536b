#include <gtest/gtest.h>

#include <random>
#include <thread>
#include <vector>

#include "rrbd/net/config_service.hpp"
#include "rrbd/net/network.hpp"
#include "rrbd/net/wire.hpp"

using namespace rrbd;
using namespace rrbd::net;

namespace {

const storage::CipherContext& cipher() {
  static const storage::CipherContext c(storage::CipherContext::key_from_seed(11));
  return c;
}

Message sample() {
  Message m;
  m.type = MsgType::kWriteRepl;
  m.ballot = 3;
  m.write_index = 0x1122334455667788ull;
  m.block = 42;
  m.flags = kFlagFua | kFlagPreflush;
  m.payload = Bytes{1, 2, 3, 4, 5};
  return m;
}

Configuration conf(std::uint64_t ballot, std::vector<NodeId> members, std::uint32_t f = 1) {
  Configuration c;
  c.ballot = ballot;
  c.members = std::move(members);
  c.f = f;
  return c;
}

}  // namespace

TEST(WireTest, RoundTrip) {
  const Message m = sample();
  const Bytes frame = encode(m, cipher());
  EXPECT_EQ(frame.size(), kHeaderSize + m.payload.size() + kMacSize);
  EXPECT_EQ(frame[0], 1);
  const auto back = decode(frame, cipher());
  ASSERT_TRUE(back);
  EXPECT_EQ(*back, m);
}

TEST(WireTest, EveryBitFlipRejected) {
  const Bytes frame = encode(sample(), cipher());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    for (int bit = 0; bit < 8; ++bit) {
      Bytes bad = frame;
      bad[i] ^= static_cast<std::uint8_t>(1 << bit);
      ASSERT_FALSE(decode(bad, cipher())) << "byte " << i << " bit " << bit;
    }
  }
}

TEST(WireTest, RandomFramesNeverAccepted) {
  std::mt19937_64 rng(99);
  std::uint64_t accepted = 0;
  for (int i = 0; i < 200'000; ++i) {
    Bytes junk(rng() % 96);
    for (auto& b : junk) b = static_cast<std::uint8_t>(rng());
    // Half the time give it a plausible header so the MAC is what rejects it.
    if (junk.size() >= kHeaderSize + kMacSize && (i & 1)) {
      junk[0] = static_cast<std::uint8_t>(1 + rng() % 11);
      const std::uint32_t len = static_cast<std::uint32_t>(junk.size() - kHeaderSize - kMacSize);
      for (int k = 0; k < 4; ++k) junk[kHeaderSize - 4 + k] = static_cast<std::uint8_t>(len >> (8 * k));
    }
    accepted += decode(junk, cipher()).has_value();
  }
  EXPECT_EQ(accepted, 0u);
}

TEST(WireTest, TruncatedAndOtherKey) {
  const Bytes frame = encode(sample(), cipher());
  for (std::size_t n = 0; n < frame.size(); ++n) {
    EXPECT_FALSE(decode(ByteView(frame.data(), n), cipher()));
  }
  const storage::CipherContext other(storage::CipherContext::key_from_seed(12));
  EXPECT_FALSE(decode(frame, other));
}

TEST(ConfigurationTest, Bounds) {
  EXPECT_NO_THROW(conf(1, {{0, 0}, {1, 0}}).validate());
  EXPECT_NO_THROW(conf(1, {{0, 0}, {1, 0}, {2, 0}}).validate());
  EXPECT_NO_THROW(conf(1, {{0, 0}}, 0).validate());
  EXPECT_THROW(conf(1, {{0, 0}}, 1).validate(), InvalidConfiguration);
  EXPECT_THROW(conf(1, {{0, 0}, {1, 0}, {2, 0}, {3, 0}}).validate(), InvalidConfiguration);
  EXPECT_THROW(conf(1, {{0, 0}, {0, 1}}).validate(), InvalidConfiguration);
  const Configuration c = conf(7, {{0, 2}, {1, 5}});
  EXPECT_EQ(Configuration::parse(c.serialize()), c);
}

TEST(ConfigServiceTest, AppendAndReplay) {
  ConfigService s;
  const Configuration c1 = conf(1, {{0, 0}, {1, 0}});
  MatchB b = s.match_a(1, c1);
  EXPECT_EQ(b.ballot_c, 1u);
  EXPECT_EQ(b.all_conf.size(), 1u);
  b = s.match_a(1, c1);
  EXPECT_EQ(b.all_conf.size(), 1u);
  const Configuration c2 = conf(2, {{0, 1}, {1, 0}});
  b = s.match_a(2, c2);
  EXPECT_EQ(b.ballot_c, 2u);
  EXPECT_EQ(b.all_conf.size(), 2u);
  EXPECT_EQ(MatchB::parse(b.serialize()).all_conf, b.all_conf);
}

TEST(ConfigServiceTest, Rejections) {
  ConfigService s;
  s.match_a(1, conf(1, {{0, 0}, {1, 0}}));
  EXPECT_THROW(s.match_a(1, conf(1, {{0, 9}, {1, 0}})), ConfigRejected);
  EXPECT_THROW(s.match_a(3, conf(2, {{0, 1}, {1, 0}})), ConfigRejected);
  EXPECT_EQ(s.highest_ballot(), 1u);
}

TEST(ConfigServiceTest, ConcurrentCallsSerialize) {
  ConfigService s;
  std::vector<std::thread> ts;
  std::vector<int> ok(8, 0);
  for (int i = 0; i < 8; ++i) {
    ts.emplace_back([&, i] {
      try {
        s.match_a(1, conf(1, {{0, static_cast<std::uint32_t>(i)}, {1, 0}}));
        ok[i] = 1;
      } catch (const ConfigRejected&) {
      }
    });
  }
  for (auto& t : ts) t.join();
  int winners = 0;
  for (int v : ok) winners += v;
  EXPECT_EQ(winners, 1);
  EXPECT_EQ(s.all_conf().size(), 1u);
}

namespace {

struct NetFixture : ::testing::Test {
  sim::Simulator sim{4};
  Network net{sim, cipher(), {}, 4};
  NodeId a{0, 0}, b{1, 0};
  std::vector<std::uint64_t> got;

  void SetUp() override {
    net.attach(a, [](const NodeId&, const Message&) {});
    net.attach(b, [this](const NodeId& from, const Message& m) {
      EXPECT_EQ(from, a);
      got.push_back(m.write_index);
    });
  }

  void send(std::uint64_t n) {
    for (std::uint64_t i = 1; i <= n; ++i) {
      Message m = sample();
      m.write_index = i;
      net.send(a, b, m);
    }
    sim.run_until(sim.now() + 1'000'000);
  }
};

}  // namespace

TEST_F(NetFixture, FifoPerLink) {
  send(200);
  ASSERT_EQ(got.size(), 200u);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], i + 1);
}

TEST_F(NetFixture, CorruptedFramesDroppedAtMac) {
  net.corrupt_next({0, 1}, 5);
  send(20);
  EXPECT_EQ(got.size(), 15u);
  EXPECT_EQ(net.counters().corrupted, 5u);
  EXPECT_EQ(net.counters().mac_failures, 5u);
}

TEST_F(NetFixture, DropDupDelay) {
  net.drop_next({0, 1}, 2);
  net.duplicate_next({0, 1}, 1);
  send(5);
  EXPECT_EQ(got, (std::vector<std::uint64_t>{3, 3, 4, 5}));
  got.clear();
  net.delay_next({0, 1}, 1, 10'000);
  send(3);
  EXPECT_EQ(got, (std::vector<std::uint64_t>{2, 3, 1}));
}

TEST_F(NetFixture, LinkDelayKeepsOrder) {
  net.set_link_delay({0, 1}, 50'000);
  Message m = sample();
  m.write_index = 1;
  net.send(a, b, m);
  sim.run_until(49'000);
  EXPECT_TRUE(got.empty());
  sim.run_until(60'000);
  EXPECT_EQ(got.size(), 1u);
}

TEST_F(NetFixture, IsolationAndDeafness) {
  net.isolate(1, true);
  send(3);
  EXPECT_TRUE(got.empty());
  net.isolate(1, false);
  net.deafen(b, true);
  send(3);
  EXPECT_TRUE(got.empty());
  net.deafen(b, false);
  send(1);
  EXPECT_EQ(got.size(), 1u);
}

TEST_F(NetFixture, DetachedSenderLosesInFlight) {
  Message m = sample();
  net.send(a, b, m);
  net.detach(a);
  sim.run_until(1'000'000);
  EXPECT_TRUE(got.empty());
}
