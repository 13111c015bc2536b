#include <gtest/gtest.h>

#include <random>
#include <set>

#include "generators.hpp"
#include "naive_oracle.hpp"
#include "rrbd/model/checker.hpp"
#include "rrbd/model/trace_io.hpp"

using namespace rrbd::model;

namespace {

void agree(const History& h) {
  const bool fast = is_crash_consistent(h).consistent;
  ASSERT_EQ(fast, oracle::crash_consistent(h)) << to_trace(h);
  if (!h.has_crash()) {
    ASSERT_EQ(is_linearizable(h).linearizable, fast) << to_trace(h);
  }
}

}  // namespace

TEST(CheckerOracle, ExhaustiveSixEvents) {
  std::size_t n = 0;
  oracle::for_each_history(oracle::Scope{6, 2, 2, 1}, [&](const History& h) {
    agree(h);
    ++n;
  });
  EXPECT_GT(n, 30000u);
}

TEST(CheckerOracle, ExhaustiveThreeThreadsFiveEvents) {
  oracle::for_each_history(oracle::Scope{5, 2, 3, 2}, [&](const History& h) { agree(h); });
}

TEST(CheckerOracle, RandomTwelveEvents) {
  std::mt19937_64 rng(12);
  oracle::RandomShape shape;
  for (int n = 0; n < 2000; ++n) {
    shape.crash_p = (n % 3) * 0.06;
    agree(oracle::random_history(rng, shape));
  }
}

TEST(CheckerOracle, DurableCutsMatchSubsetFilter) {
  std::mt19937_64 rng(13);
  oracle::RandomShape shape;
  shape.crash_p = 0;
  for (int n = 0; n < 1500; ++n) {
    shape.events = 2 + n % 10;
    auto era = oracle::random_history(rng, shape);
    auto naive = oracle::durable_cuts(era);
    auto fast = durable_cuts(era);
    // Each enumerated cut passes the literal filter.
    std::set<std::vector<std::uint64_t>> fast_writes;
    for (const auto& c : fast) {
      auto hist = c.history();
      ASSERT_NE(std::find(naive.begin(), naive.end(), hist), naive.end()) << to_trace(era);
      std::vector<std::uint64_t> w;
      for (const auto& e : hist.events()) {
        if (e.kind == EventKind::kWriteInv) w.push_back(*e.value);
      }
      fast_writes.insert(w);
    }
    // And every literal cut's write set is enumerated.
    std::set<std::vector<std::uint64_t>> naive_writes;
    for (const auto& hist : naive) {
      std::vector<std::uint64_t> w;
      for (const auto& e : hist.events()) {
        if (e.kind == EventKind::kWriteInv) w.push_back(*e.value);
      }
      naive_writes.insert(w);
    }
    EXPECT_EQ(fast_writes, naive_writes) << to_trace(era);
    EXPECT_EQ(fast_writes.size(), fast.size());
  }
}
