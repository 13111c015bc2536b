#include <gtest/gtest.h>

#include <random>

#include "events.hpp"
#include "generators.hpp"
#include "rrbd/model/checker.hpp"
#include "rrbd/model/trace_io.hpp"

using namespace ev;
using namespace rrbd::model;

TEST(TraceIo, FormatsEveryKind) {
  auto h = H({wi(1, 0, 5, BOTH), wr(1, 0), ri(2, 3), rr(2, 3, 0), cr(), wi(1, 0, 6, PRE), wi(2, 1, 7, FUA)});
  EXPECT_EQ(to_trace(h),
            "0 1 WI 0 5 FP\n"
            "1 1 WR 0 - -\n"
            "2 2 RI 3 - -\n"
            "3 2 RR 3 0 -\n"
            "4 - CR - - -\n"
            "5 1 WI 0 6 P\n"
            "6 2 WI 1 7 F\n");
}

TEST(TraceIo, RoundTripIsByteExact) {
  std::mt19937_64 rng(3);
  oracle::RandomShape shape;
  shape.crash_p = 0.1;
  for (int n = 0; n < 500; ++n) {
    auto h = oracle::random_history(rng, shape);
    const std::string text = to_trace(h);
    auto back = parse_trace(text);
    EXPECT_EQ(back, h);
    EXPECT_EQ(to_trace(back), text);
    EXPECT_EQ(is_crash_consistent(back).consistent, is_crash_consistent(h).consistent);
  }
}

TEST(TraceIo, CommentsAndEmptyInput) {
  EXPECT_TRUE(parse_trace("").empty());
  EXPECT_TRUE(parse_trace("# nothing\n").empty());
  auto h = parse_trace("# header\n0 1 WI 0 1 -\n# mid\n1 1 WR 0 - -\n");
  EXPECT_EQ(h, H({wi(1, 0, 1), wr(1, 0)}));
}

TEST(TraceIo, FuaRollbackTraceIsInconsistent) {
  auto h = parse_trace(
      "0 1 WI 0 1 F\n"
      "1 1 WR 0 - -\n"
      "2 - CR - - -\n"
      "3 1 RI 0 - -\n"
      "4 1 RR 0 0 -\n");
  EXPECT_FALSE(is_crash_consistent(h).consistent);
}

TEST(TraceIo, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_trace(text);
    } catch (const TraceParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("0 1 WI 0 1 -\n1 1 XX 0 - -\n"), 2u);
  EXPECT_EQ(line_of("# c\n0 1 WI 0 1\n"), 2u);
  EXPECT_EQ(line_of("1 1 WI 0 1 -\n"), 1u);
  EXPECT_EQ(line_of("0 1 WI 0 - -\n"), 1u);
  EXPECT_EQ(line_of("0 1 WI 0 1 Q\n"), 1u);
  EXPECT_EQ(line_of("0 1 WR 0 - F\n"), 1u);
  EXPECT_EQ(line_of("0 1 CR - - -\n"), 1u);
  EXPECT_EQ(line_of("0 x WI 0 1 -\n"), 1u);
  EXPECT_EQ(line_of("0  1 WI 0 1 -\n"), 1u);
  EXPECT_THROW(parse_trace("0 1 WR 0 - -\n"), MalformedHistory);
}
