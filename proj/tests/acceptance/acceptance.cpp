// Acceptance run: one PASS/FAIL line per criterion.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "generators.hpp"
#include "naive_oracle.hpp"
#include "rrbd/harness/campaign.hpp"
#include "rrbd/model/checker.hpp"

using namespace rrbd;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int failures = 0;

void report(int n, bool ok, const std::string& what) {
  if (!ok) ++failures;
  std::printf("criterion %d %s %s\n", n, ok ? "PASS" : "FAIL", what.c_str());
  std::fflush(stdout);
}

template <typename... T>
std::string cat(const T&... parts) {
  std::ostringstream out;
  (out << ... << parts);
  return out.str();
}

bool agree(const model::History& h) {
  const bool fast = model::is_crash_consistent(h).consistent;
  if (fast != oracle::crash_consistent(h)) return false;
  if (!h.has_crash() && model::is_linearizable(h).linearizable != fast) return false;
  return true;
}

void criterion1(int max_events, std::uint64_t random_runs) {
  const auto t0 = Clock::now();
  std::uint64_t exhaustive = 0;
  std::uint64_t bad = 0;
  oracle::for_each_history(oracle::Scope{max_events, 2, 2, 1}, [&](const model::History& h) {
    ++exhaustive;
    bad += !agree(h);
  });
  std::mt19937_64 rng(2024);
  oracle::RandomShape shape;
  std::uint64_t random = 0;
  for (std::uint64_t n = 0; n < random_runs; ++n) {
    shape.events = 6 + static_cast<int>(n % 7);
    shape.crash_p = static_cast<double>(n % 4) * 0.06;
    bad += !agree(oracle::random_history(rng, shape));
    ++random;
  }
  const double secs = since(t0);
  report(1, bad == 0 && secs <= 600,
         cat("checker/oracle agreement: ", exhaustive, " exhaustive histories (<= ", max_events,
             " events, 2 blocks, 2 threads, 1 crash) + ", random, " random (<= 12 events), ", bad,
             " disagreements, ", static_cast<int>(secs), " s"));
}

void criteria234(std::uint64_t runs) {
  harness::EndToEndOptions o;
  o.runs = runs;
  const harness::CampaignSummary s = harness::end_to_end(o);
  std::string first;
  if (!s.failures.empty()) first = cat(", first failure seed ", s.failures[0].seed, ": ", s.failures[0].detail);
  report(2, s.all_passed() && s.recoveries >= runs && s.seconds <= 900,
         cat(s.passed, "/", s.runs, " crash+rollback runs (N=2, f=1) judged crash consistent, ", s.crashes,
             " crashes, ", s.recoveries, " recoveries, ", s.pages_repaired, " pages repaired, ",
             static_cast<int>(s.seconds), " s", first));
  report(3, s.sync_violations == 0 && s.sync_checks > 0,
         cat(s.sync_checks, " post-recovery reads of blocks whose last completed write carried FUA/PREFLUSH, ",
             s.sync_violations, " lost"));
  report(4, s.cut_violations == 0 && s.cut_checks >= 100,
         cat(s.cut_checks, " pause-point checks of backup applied histories against durable cuts, ",
             s.cut_violations, " violations"));
}

void criterion5(std::uint64_t runs) {
  harness::DetectionOptions o;
  o.runs = runs;
  const harness::CampaignSummary d = harness::detection(o);
  const harness::CampaignSummary q = harness::unreachable_quorum(77);
  report(5, d.all_passed() && q.all_passed(),
         cat(d.passed, "/", d.runs, " single-node rollbacks ended HALT-DETECTED with consistent histories; ",
             q.passed, "/", q.runs, " unreachable-quorum recoveries exited ", harness::kExitAborted));
}

void criterion6(std::uint64_t races) {
  const harness::SplitBrainSummary s = harness::split_brain(races, 1);
  std::string problem = s.problems.empty() ? "" : ", " + s.problems.front();
  report(6, s.old_accepted_after_fence == 0 && s.completed == s.races && s.old_rejected > 0 && s.problems.empty(),
         cat(s.races, " races, ", s.completed, " completed, ", s.old_sent_after_fence,
             " messages from the old primary reached fenced nodes, ", s.old_rejected, " rejected, ",
             s.old_accepted_after_fence, " accepted", problem));
}

void criterion7() {
  const sim::Time d = 50 * sim::kMillisecond;
  const harness::AsynchronyResult a = harness::asynchrony(d, 5);
  const bool ok = a.consistent && a.unflagged_slow.count > 0 && a.flagged_slow.count > 0 &&
                  a.unflagged_slow.mean_us == a.unflagged_fast.mean_us && a.unflagged_slow.mean_us < 1000 &&
                  a.flagged_slow.min_us >= d;
  report(7, ok,
         cat("D=", d, " us: unflagged mean ", a.unflagged_slow.mean_us, " us (", a.unflagged_fast.mean_us,
             " us without delay), flagged min ", a.flagged_slow.min_us, " us"));
}

void criterion8(std::uint64_t schedules) {
  auto campaign = [&](node::Mutants m, int layers) {
    harness::FuzzOptions o;
    o.schedules = schedules;
    o.mutants = m;
    o.merkle_disk_layers = layers;
    return harness::fuzz(o);
  };
  const harness::CampaignSummary clean = campaign({}, -1);
  node::Mutants ack;
  ack.ack_off_by_one = true;
  node::Mutants merkle;
  merkle.skip_merkle_verify = true;
  node::Mutants order;
  order.backup_out_of_order = true;
  const auto a = campaign(ack, -1);
  const auto b = campaign(merkle, 1);
  const auto c = campaign(order, -1);
  const int caught = (a.passed < a.runs) + (b.passed < b.runs) + (c.passed < c.runs);
  report(8, caught == 3 && clean.all_passed(),
         cat(caught, "/3 mutants caught in ", schedules, " schedules each (ack off-by-one: ", a.runs - a.passed,
             " failing runs; skip Merkle verification at L=1: ", b.runs - b.passed,
             "; backup out of order: ", c.runs - c.passed, "); correct build ", clean.runs - clean.passed,
             " failures"));
}

void criterion9() {
  harness::SystematicOptions o;
  const harness::CampaignSummary s = harness::systematic(o);
  std::string first;
  if (!s.failures.empty()) first = cat(", first failure seed ", s.failures[0].seed, ": ", s.failures[0].detail);
  report(9, s.all_passed(),
         cat(s.passed, "/", s.runs, " systematic crash points (12 templates of <= 8 ops, primary and backup, ",
             "crash and crash+rollback) pass", first));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::set<int> only;
  int max_events = 8;
  std::uint64_t random_runs = 10'000;
  std::uint64_t end_to_end_runs = 1000;
  std::uint64_t detection_runs = 200;
  std::uint64_t races = 100;
  std::uint64_t schedules = 500;
  app.add_option("--only", only, "criteria to run (default: all)");
  app.add_option("--max-events", max_events, "exhaustive scope for criterion 1");
  app.add_option("--random", random_runs, "random histories for criterion 1");
  app.add_option("--end-to-end-runs", end_to_end_runs, "runs for criteria 2-4");
  app.add_option("--detection-runs", detection_runs, "runs for criterion 5");
  app.add_option("--races", races, "races for criterion 6");
  app.add_option("--schedules", schedules, "schedules per campaign for criterion 8");
  CLI11_PARSE(app, argc, argv);
  auto want = [&](int n) { return only.empty() || only.count(n) > 0; };

  if (want(1)) criterion1(max_events, random_runs);
  if (want(2) || want(3) || want(4)) criteria234(end_to_end_runs);
  if (want(5)) criterion5(detection_runs);
  if (want(6)) criterion6(races);
  if (want(7)) criterion7();
  if (want(8)) criterion8(schedules);
  if (want(9)) criterion9();
  return failures == 0 ? 0 : 1;
}
