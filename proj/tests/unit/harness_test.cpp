#include <gtest/gtest.h>

#include "rrbd/harness/campaign.hpp"
#include "rrbd/harness/fault_schedule.hpp"
#include "rrbd/harness/run.hpp"
#include "rrbd/model/checker.hpp"
#include "rrbd/model/trace_io.hpp"

using namespace rrbd;
using namespace rrbd::harness;

namespace {

RunConfig base() {
  RunConfig cfg;
  cfg.cluster.nodes = 2;
  cfg.cluster.f = 1;
  cfg.cluster.blocks = 64;
  cfg.cluster.block_size = 512;
  cfg.cluster.seed = 7;
  cfg.workload.threads = 3;
  cfg.workload.ops = 10;
  cfg.workload.fsync_every = 4;
  return cfg;
}

}  // namespace

TEST(FaultScheduleTest, ParsesEveryAction) {
  const auto a = parse_faults(
      "# comment\n"
      "\n"
      "3 crash 0\n"
      "4+250 snapshot 1 s1\n"
      "5 rollback 1 s1\n"
      "6 crash_rollback 0\n"
      "7 corrupt_page 1 12\n"
      "8 drop 0>1 2\n"
      "8 dup 1>0 1\n"
      "8 corrupt 0>1 3\n"
      "9 delay 0>1 2 500\n"
      "9 link_delay 1>0 800\n"
      "10 isolate 1\n"
      "11 heal 1\n"
      "12 pause\n");
  ASSERT_EQ(a.size(), 13u);
  EXPECT_EQ(a[0].kind, FaultKind::kCrash);
  EXPECT_EQ(a[1].micros, 250u);
  EXPECT_EQ(a[1].name, "s1");
  EXPECT_EQ(a[3].name, "default");
  EXPECT_EQ(a[4].arg, 12u);
  EXPECT_EQ(a[5].node, 0u);
  EXPECT_EQ(a[5].to, 1u);
  EXPECT_EQ(a[5].count, 2u);
  EXPECT_EQ(a[8].arg, 500u);
  EXPECT_EQ(a[12].kind, FaultKind::kPause);
  EXPECT_EQ(parse_faults(format_faults(a)).size(), a.size());
  EXPECT_EQ(format_faults(parse_faults(format_faults(a))), format_faults(a));
}

TEST(FaultScheduleTest, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) {
    try {
      parse_faults(text);
    } catch (const FaultParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  EXPECT_EQ(line_of("1 crash 0\nbogus\n"), 2u);
  EXPECT_EQ(line_of("# c\n\n1 explode 0\n"), 3u);
  EXPECT_EQ(line_of("1 drop 0-1 2\n"), 1u);
  EXPECT_EQ(line_of("1 crash\n"), 1u);
  EXPECT_EQ(line_of("x crash 0\n"), 1u);
}

TEST(RunTest, CleanRunPasses) {
  const RunResult r = run(base());
  EXPECT_EQ(r.exit_code, kExitPass) << r.verdict << " " << r.explanation;
  EXPECT_TRUE(r.consistent);
  EXPECT_EQ(r.app_ops, 30u);
  EXPECT_GT(r.flagged.count, 0u);
}

TEST(RunTest, Deterministic) {
  RunConfig cfg = base();
  cfg.faults = parse_faults("5 snapshot 0\n12 crash_rollback 0\n0 link_delay 0>1 700\n");
  const RunResult a = run(cfg);
  const RunResult b = run(cfg);
  EXPECT_EQ(model::to_trace(a.history), model::to_trace(b.history));
  EXPECT_EQ(a.report_text(), b.report_text());
  EXPECT_EQ(a.exit_code, kExitPass) << a.explanation;
  EXPECT_EQ(a.recoveries, 1u);
  cfg.cluster.seed = 8;
  EXPECT_NE(model::to_trace(run(cfg).history), model::to_trace(a.history));
}

TEST(RunTest, RunAndCheckAgree) {
  FuzzOptions o;
  o.schedules = 60;
  for (std::uint64_t i = 0; i < o.schedules; ++i) {
    const RunResult r = run(fuzz_config(o, i));
    ASSERT_TRUE(r.checked);
    const model::History h = model::parse_trace(model::to_trace(r.history));
    EXPECT_EQ(model::is_crash_consistent(h).consistent, r.consistent) << "schedule " << i;
  }
}

TEST(RunTest, ZeroToleranceRollbackIsDetected) {
  RunConfig cfg = base();
  cfg.cluster.nodes = 1;
  cfg.cluster.f = 0;
  cfg.faults = parse_faults("2 snapshot 0\n1000 rollback 0\n");
  const RunResult r = run(cfg);
  EXPECT_EQ(r.exit_code, kExitHaltDetected) << r.verdict;
  EXPECT_EQ(r.verdict, "HALT-DETECTED");
  EXPECT_TRUE(r.consistent);
}

TEST(RunTest, UnreachableQuorumExitsThree) {
  EXPECT_TRUE(unreachable_quorum(3).all_passed());
}

TEST(RunTest, ReportIsKeyValue) {
  const RunResult r = run(base());
  const std::string text = r.report_text();
  std::size_t lines = 0;
  for (std::size_t p = 0, q; (q = text.find('\n', p)) != std::string::npos; p = q + 1, ++lines) {
    const std::string line = text.substr(p, q - p);
    EXPECT_NE(line.find('='), std::string::npos) << line;
  }
  EXPECT_EQ(lines, r.report().size());
}

TEST(CampaignTest, SmallCampaignsPass) {
  FuzzOptions o;
  o.schedules = 40;
  EXPECT_TRUE(fuzz(o).all_passed());
  EndToEndOptions t;
  t.runs = 40;
  const CampaignSummary s = end_to_end(t);
  EXPECT_TRUE(s.all_passed());
  EXPECT_EQ(s.recoveries, t.runs);
}

TEST(CampaignTest, AckMutantCaught) {
  FuzzOptions o;
  o.schedules = 500;
  o.mutants.ack_off_by_one = true;
  EXPECT_FALSE(fuzz(o).all_passed());
}
