#include "rrbd/harness/campaign.hpp"

#include <chrono>
#include <random>
#include <sstream>

#include "rrbd/harness/page_codec.hpp"

namespace rrbd::harness {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::uint64_t pick(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

bool chance(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

FaultAction act(std::uint64_t step, std::uint64_t micros, FaultKind kind, std::uint32_t node = 0) {
  FaultAction a;
  a.step = step;
  a.micros = micros;
  a.kind = kind;
  a.node = node;
  return a;
}

FaultAction link(std::uint64_t step, std::uint64_t micros, FaultKind kind, std::uint32_t from, std::uint32_t to,
                 std::uint64_t count, std::uint64_t arg) {
  FaultAction a = act(step, micros, kind, from);
  a.to = to;
  a.count = count;
  a.arg = arg;
  return a;
}

WorkloadKind any_kind(std::mt19937_64& rng) {
  static constexpr WorkloadKind kKinds[] = {WorkloadKind::kSeq, WorkloadKind::kRand, WorkloadKind::kContended};
  return kKinds[pick(rng, 0, 2)];
}

// Reordering and latency noise on the replication links. Data links never
// lose or corrupt messages here: the protocol does not retransmit.
void add_noise(std::mt19937_64& rng, std::uint64_t total, std::uint32_t nodes, std::vector<FaultAction>& out) {
  for (std::uint32_t b = 1; b < nodes; ++b) {
    if (chance(rng, 0.5)) out.push_back(link(0, 0, FaultKind::kLinkDelay, 0, b, 0, pick(rng, 100, 1500)));
    if (chance(rng, 0.4)) {
      out.push_back(link(pick(rng, 0, total), pick(rng, 0, 300), FaultKind::kDelay, 0, b, pick(rng, 1, 3),
                         pick(rng, 200, 1500)));
    }
    if (chance(rng, 0.3)) out.push_back(link(pick(rng, 0, total), pick(rng, 0, 300), FaultKind::kDup, 0, b, 2, 0));
    if (chance(rng, 0.2)) out.push_back(link(pick(rng, 0, total), pick(rng, 0, 300), FaultKind::kDup, b, 0, 1, 0));
  }
}

template <class Make>
CampaignSummary campaign(std::uint64_t runs, Make make, int expected,
                         const std::function<void(std::uint64_t, const RunResult&)>& progress = {}) {
  CampaignSummary s;
  const auto t0 = Clock::now();
  for (std::uint64_t i = 0; i < runs; ++i) {
    const RunConfig cfg = make(i);
    const RunResult r = run(cfg);
    s.add(r, cfg, r.exit_code == expected && !r.stalled);
    if (progress) progress(i, r);
  }
  s.seconds = since(t0);
  return s;
}

}  // namespace

void CampaignSummary::add(const RunResult& r, const RunConfig& cfg, bool expected) {
  ++runs;
  ++by_exit[r.exit_code];
  passed += expected;
  stalled += r.stalled;
  crashes += r.crashes;
  recoveries += r.recoveries;
  pages_repaired += r.pages_repaired;
  sync_checks += r.sync_checks;
  sync_violations += r.sync_violations;
  cut_checks += r.cut_checks;
  cut_violations += r.cut_violations;
  repair_checks += r.repair_checks;
  repair_violations += r.repair_violations;
  halts += r.halts;
  if (!expected && failures.size() < 5) {
    std::string detail = r.explanation;
    for (const auto& v : r.violations) detail += (detail.empty() ? "" : "; ") + v;
    if (r.aborted) detail += (detail.empty() ? "" : "; ") + r.abort_reason;
    if (r.stalled) detail += (detail.empty() ? "" : "; ") + std::string("stalled");
    failures.push_back({cfg.cluster.seed, r.exit_code, format_faults(cfg.faults), detail});
  }
}

std::string CampaignSummary::text() const {
  std::ostringstream out;
  out << "runs=" << runs << "\npassed=" << passed << "\nfailed=" << (runs - passed) << "\n";
  for (const auto& [code, n] : by_exit) out << "exit_" << verdict_name(code) << "=" << n << "\n";
  out << "stalled=" << stalled << "\ncrashes=" << crashes << "\nrecoveries=" << recoveries
      << "\npages_repaired=" << pages_repaired << "\nhalts=" << halts << "\nsync_checks=" << sync_checks
      << "\nsync_violations=" << sync_violations << "\ncut_checks=" << cut_checks
      << "\ncut_violations=" << cut_violations << "\nrepair_checks=" << repair_checks
      << "\nrepair_violations=" << repair_violations << "\nseconds=" << seconds << "\n";
  for (std::size_t i = 0; i < failures.size(); ++i) {
    const auto& f = failures[i];
    out << "failure" << i << "_seed=" << f.seed << "\nfailure" << i << "_verdict=" << verdict_name(f.exit_code)
        << "\nfailure" << i << "_detail=" << f.detail << "\n";
  }
  return out.str();
}

// ---- fuzz ------------------------------------------------------------------

RunConfig fuzz_config(const FuzzOptions& o, std::uint64_t i) {
  RunConfig cfg;
  const std::uint64_t seed = o.seed * 1'000'003 + i;
  std::mt19937_64 rng(seed ^ 0xf00dull);
  cfg.cluster.nodes = o.nodes;
  cfg.cluster.f = o.f;
  cfg.cluster.blocks = o.blocks;
  cfg.cluster.block_size = o.block_size;
  cfg.cluster.seed = seed;
  cfg.cluster.mutants = o.mutants;
  cfg.cluster.merkle_disk_layers =
      o.merkle_disk_layers >= 0 ? static_cast<std::uint32_t>(o.merkle_disk_layers) : static_cast<std::uint32_t>(i % 3);
  cfg.workload.kind = any_kind(rng);
  cfg.workload.threads = o.threads;
  cfg.workload.ops = o.ops;
  static constexpr std::uint64_t kFsync[] = {0, 2, 3, 4};
  cfg.workload.fsync_every = kFsync[pick(rng, 0, 3)];

  const std::uint64_t total = o.threads * o.ops;
  auto& faults = cfg.faults;
  if (o.nodes > 1) add_noise(rng, total, o.nodes, faults);

  const std::uint32_t target = static_cast<std::uint32_t>(pick(rng, 0, o.nodes - 1));
  const std::uint64_t s1 = pick(rng, 0, total * 2 / 3);
  const std::uint64_t s2 = pick(rng, s1, total);
  switch (pick(rng, 0, 2)) {
    case 0:
      faults.push_back(act(s2, pick(rng, 0, 400), FaultKind::kCrash, target));
      break;
    case 1:
      faults.push_back(act(s1, pick(rng, 0, 400), FaultKind::kSnapshot, target));
      faults.push_back(act(s2, pick(rng, 0, 400), FaultKind::kCrashRollback, target));
      break;
    default:
      faults.push_back(act(s1, pick(rng, 0, 400), FaultKind::kSnapshot, target));
      faults.push_back(act(s2, pick(rng, 0, 400), FaultKind::kRollback, target));
      break;
  }
  if (chance(rng, 0.5)) faults.push_back(act(pick(rng, 1, total), pick(rng, 0, 400), FaultKind::kPause));
  return cfg;
}

CampaignSummary fuzz(const FuzzOptions& o) {
  // With f=0 an online rollback ends in HALT-DETECTED; the fuzz treats any
  // exit code other than inconsistency or budget as a pass there.
  CampaignSummary s;
  const auto t0 = Clock::now();
  for (std::uint64_t i = 0; i < o.schedules; ++i) {
    const RunConfig cfg = fuzz_config(o, i);
    const RunResult r = run(cfg);
    bool ok = r.exit_code == kExitPass;
    if (o.f == 0) ok = r.exit_code == kExitPass || r.exit_code == kExitHaltDetected || r.exit_code == kExitAborted;
    s.add(r, cfg, ok && !r.stalled);
    if (o.progress) o.progress(i, r);
  }
  s.seconds = since(t0);
  return s;
}

// ---- systematic ------------------------------------------------------------

std::vector<RunConfig> systematic_configs(const SystematicOptions& o) {
  std::vector<RunConfig> out;
  std::uint64_t tmpl = 0;
  for (WorkloadKind kind : {WorkloadKind::kSeq, WorkloadKind::kRand, WorkloadKind::kContended}) {
    for (std::uint64_t fsync : {0, 2}) {
      for (std::uint32_t threads : {1u, 2u}) {
        ++tmpl;
        for (std::uint64_t step = 0; step <= o.max_ops; ++step) {
          for (std::size_t oi = 0; oi < o.offsets.size(); ++oi) {
            for (std::uint32_t target : {0u, 1u}) {
              for (bool rollback : {false, true}) {
                RunConfig cfg;
                cfg.cluster.nodes = 2;
                cfg.cluster.f = 1;
                cfg.cluster.blocks = 8;
                cfg.cluster.block_size = o.block_size;
                cfg.cluster.seed = tmpl * 100 + step;
                cfg.cluster.merkle_disk_layers = static_cast<std::uint32_t>((step + oi) % 3);
                cfg.workload.kind = kind;
                cfg.workload.threads = threads;
                cfg.workload.ops = o.max_ops / threads;
                cfg.workload.fsync_every = fsync;
                if (rollback) {
                  cfg.faults.push_back(act(step / 2, 0, FaultKind::kSnapshot, target));
                  cfg.faults.push_back(act(step, o.offsets[oi], FaultKind::kCrashRollback, target));
                } else {
                  cfg.faults.push_back(act(step, o.offsets[oi], FaultKind::kCrash, target));
                }
                out.push_back(std::move(cfg));
              }
            }
          }
        }
      }
    }
  }
  return out;
}

CampaignSummary systematic(const SystematicOptions& o) {
  const auto configs = systematic_configs(o);
  return campaign(
      configs.size(), [&](std::uint64_t i) { return configs[i]; }, kExitPass, o.progress);
}

// ---- end-to-end campaign ---------------------------------------------

RunConfig end_to_end_config(const EndToEndOptions& o, std::uint64_t i) {
  RunConfig cfg;
  const std::uint64_t seed = o.seed * 7'000'003 + i;
  std::mt19937_64 rng(seed ^ 0xbeefull);
  cfg.cluster.nodes = 2;
  cfg.cluster.f = 1;
  cfg.cluster.blocks = 16;
  cfg.cluster.block_size = 512;
  cfg.cluster.seed = seed;
  cfg.cluster.merkle_disk_layers = static_cast<std::uint32_t>(i % 3);
  cfg.workload.kind = any_kind(rng);
  cfg.workload.threads = 3;
  cfg.workload.ops = 8;
  cfg.workload.fsync_every = pick(rng, 2, 4);
  const std::uint64_t total = 24;
  add_noise(rng, total, 2, cfg.faults);
  const std::uint32_t target = static_cast<std::uint32_t>(pick(rng, 0, 1));
  // The crash lands while the workload still has operations left.
  const std::uint64_t s1 = pick(rng, 0, 14);
  const std::uint64_t s2 = pick(rng, s1, total - 4);
  cfg.faults.push_back(act(s1, pick(rng, 0, 400), FaultKind::kSnapshot, target));
  cfg.faults.push_back(act(s2, pick(rng, 0, 400), FaultKind::kCrashRollback, target));
  cfg.faults.push_back(act(pick(rng, 1, total), pick(rng, 0, 400), FaultKind::kPause));
  return cfg;
}

CampaignSummary end_to_end(const EndToEndOptions& o) {
  return campaign(
      o.runs, [&](std::uint64_t i) { return end_to_end_config(o, i); }, kExitPass, o.progress);
}

// ---- detection mode ----------------------------------------------------------

RunConfig detection_config(const DetectionOptions& o, std::uint64_t i) {
  RunConfig cfg;
  const std::uint64_t seed = o.seed * 5'000'011 + i;
  std::mt19937_64 rng(seed ^ 0xdeadull);
  cfg.cluster.nodes = 1;
  cfg.cluster.f = 0;
  cfg.cluster.blocks = 16;
  cfg.cluster.block_size = 512;
  cfg.cluster.seed = seed;
  cfg.cluster.merkle_disk_layers = static_cast<std::uint32_t>(i % 3);
  cfg.workload.kind = any_kind(rng);
  cfg.workload.threads = 2;
  cfg.workload.ops = 8;
  // fsync_every 2 guarantees journal writes after the snapshot.
  cfg.workload.fsync_every = 2;
  cfg.faults.push_back(act(pick(rng, 0, 6), pick(rng, 0, 400), FaultKind::kSnapshot, 0));
  // Past the end of the workload: fires before the final read-back.
  cfg.faults.push_back(act(1000, pick(rng, 0, 400), FaultKind::kRollback, 0));
  return cfg;
}

CampaignSummary detection(const DetectionOptions& o) {
  return campaign(
      o.runs, [&](std::uint64_t i) { return detection_config(o, i); }, kExitHaltDetected);
}

CampaignSummary unreachable_quorum(std::uint64_t seed) {
  auto make = [seed](std::uint64_t i) {
    RunConfig cfg;
    cfg.cluster.blocks = 16;
    cfg.cluster.block_size = 512;
    cfg.cluster.seed = seed + i;
    cfg.cluster.recovery_timeout = 20 * sim::kMillisecond;
    cfg.workload.threads = 2;
    cfg.workload.ops = 6;
    cfg.workload.fsync_every = 0;
    if (i == 0) {
      // The only node crashes: nobody is left to vouch for its state.
      cfg.cluster.nodes = 1;
      cfg.cluster.f = 0;
      cfg.faults.push_back(act(4, 10, FaultKind::kCrash, 0));
    } else {
      // The backup is cut off, then the primary crashes.
      cfg.cluster.nodes = 2;
      cfg.cluster.f = 1;
      cfg.faults.push_back(act(3, 0, FaultKind::kIsolate, 1));
      cfg.faults.push_back(act(4, 10, FaultKind::kCrash, 0));
    }
    return cfg;
  };
  return campaign(2, make, kExitAborted);
}

// ---- split brain -------------------------------------------------------------

std::string SplitBrainSummary::text() const {
  std::ostringstream out;
  out << "races=" << races << "\ncompleted=" << completed << "\nold_accepted_before_fence=" << old_accepted_before_fence
      << "\nold_sent_after_fence=" << old_sent_after_fence << "\nold_rejected=" << old_rejected
      << "\nold_accepted_after_fence=" << old_accepted_after_fence << "\n";
  for (std::size_t i = 0; i < problems.size(); ++i) out << "problem" << i << "=" << problems[i] << "\n";
  return out.str();
}

SplitBrainSummary split_brain(std::uint64_t races, std::uint64_t seed) {
  SplitBrainSummary s;
  for (std::uint64_t race = 0; race < races; ++race) {
    ClusterParams p;
    p.nodes = 3;
    p.f = 1;
    p.blocks = 16;
    p.block_size = 512;
    p.seed = seed * 9'000'011 + race;
    p.merkle_disk_layers = static_cast<std::uint32_t>(race % 3);
    Cluster c(p);
    std::mt19937_64 rng(p.seed ^ 0x5b5bull);
    ++s.races;
    if (!c.deploy()) {
      s.problems.push_back("race " + std::to_string(race) + ": deploy failed");
      continue;
    }
    node::Node& old = c.primary();
    const net::NodeId old_id = old.id();
    // Some races keep replication traffic in flight across the fence.
    if (chance(rng, 0.5)) c.net().set_link_delay({0, 1}, pick(rng, 100, 2000));
    if (chance(rng, 0.5)) c.net().set_link_delay({0, 2}, pick(rng, 100, 2000));

    bool fenced_any = false;
    for (std::uint32_t slot : {1u, 2u}) {
      node::Node& b = c.node(slot);
      b.observer().on_data = [&, bp = &b](const net::NodeId& from, const net::Message&, bool accepted) {
        if (from != old_id) return;
        const bool fenced = bp->seen_ballot() > 1;
        if (fenced) {
          ++s.old_sent_after_fence;
          fenced_any = true;
        }
        if (accepted) {
          if (fenced) {
            ++s.old_accepted_after_fence;
            s.problems.push_back("race " + std::to_string(race) + ": " + bp->id().to_string() +
                                 " accepted a message from the fenced primary");
          } else {
            ++s.old_accepted_before_fence;
          }
        } else {
          ++s.old_rejected;
        }
      };
    }

    // The old primary writes continuously until the end of the race.
    const sim::Time end = 40 * sim::kMillisecond;
    std::uint64_t value = 0;
    std::function<void(int)> loop = [&](int t) {
      if (c.sim().now() >= end || !old.active()) return;
      const model::BlockId b = pick(rng, 0, p.blocks - 1);
      const auto sync = t == 0 && chance(rng, 0.2) ? model::SyncFlags::kFua : model::SyncFlags::kNone;
      old.write(b, encode_page(++value, p.block_size), sync, [&, t] {
        c.sim().schedule(pick(rng, 0, 30), [&, t] { loop(t); });
      });
    };
    for (int t = 0; t < 3; ++t) loop(t);

    const sim::Time race_at = pick(rng, 0, 3000);
    bool recovered = false;
    bool recovery_ok = false;
    node::Node* fresh = nullptr;
    c.sim().schedule(race_at, [&] {
      c.net().deafen(old_id, true);
      c.sim().schedule(pick(rng, 0, 200), [&] {
        fresh = &c.replace(0);
        net::Configuration conf;
        conf.ballot = c.service().highest_ballot() + 1;
        conf.f = 1;
        conf.members = {fresh->id(), c.node(1).id(), c.node(2).id()};
        fresh->recover(conf, [&](const node::RecoveryReport& r) {
          recovered = true;
          recovery_ok = r.ok;
          if (!r.ok) s.problems.push_back("race " + std::to_string(race) + ": recovery failed: " + r.error);
        });
      });
    });
    c.sim().run_while([&] { return c.sim().now() < end || !recovered; });
    // Let in-flight traffic from the old primary land.
    c.sim().run_while([&] { return c.sim().now() < end + 10 * sim::kMillisecond; });

    if (recovery_ok && fresh && fresh->active() && fresh->ballot() == 2 && c.node(1).active() &&
        c.node(1).ballot() == 2 && c.node(2).active() && c.node(2).ballot() == 2 && fenced_any) {
      ++s.completed;
    } else if (recovery_ok) {
      s.problems.push_back("race " + std::to_string(race) + ": new configuration not fully active");
    }
  }
  return s;
}

// ---- asynchrony ----------------------------------------------------------------

std::string AsynchronyResult::text() const {
  std::ostringstream out;
  out << "delay_us=" << delay_us << "\nunflagged_mean_us_no_delay=" << unflagged_fast.mean_us
      << "\nunflagged_mean_us_delay=" << unflagged_slow.mean_us << "\nunflagged_max_us_delay=" << unflagged_slow.max_us
      << "\nflagged_min_us_delay=" << flagged_slow.min_us << "\nflagged_mean_us_delay=" << flagged_slow.mean_us
      << "\nconsistent=" << consistent << "\n";
  return out.str();
}

AsynchronyResult asynchrony(sim::Time delay_us, std::uint64_t seed) {
  AsynchronyResult a;
  a.delay_us = delay_us;
  auto base = [&] {
    RunConfig cfg;
    cfg.cluster.nodes = 2;
    cfg.cluster.f = 1;
    cfg.cluster.blocks = 64;
    cfg.cluster.block_size = 512;
    cfg.cluster.seed = seed;
    cfg.workload.kind = WorkloadKind::kRand;
    cfg.workload.threads = 3;
    cfg.workload.ops = 20;
    cfg.workload.read_ratio = 0;
    cfg.workload.fsync_every = 0;
    return cfg;
  };
  RunConfig fast = base();
  RunConfig slow = base();
  slow.faults.push_back(link(0, 0, FaultKind::kLinkDelay, 0, 1, 0, delay_us));
  RunConfig flagged = slow;
  flagged.workload.fsync_every = 1;
  const RunResult rf = run(fast);
  const RunResult rs = run(slow);
  const RunResult rg = run(flagged);
  a.unflagged_fast = rf.unflagged;
  a.unflagged_slow = rs.unflagged;
  a.flagged_slow = rg.flagged;
  a.consistent = rf.exit_code == kExitPass && rs.exit_code == kExitPass && rg.exit_code == kExitPass;
  return a;
}

}  // namespace rrbd::harness
