// rrbd: run, check and fuzz the replicated block device simulation.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "rrbd/harness/campaign.hpp"
#include "rrbd/harness/run.hpp"
#include "rrbd/model/checker.hpp"
#include "rrbd/model/trace_io.hpp"

namespace {

using namespace rrbd;

struct CommonFlags {
  std::uint32_t nodes = 2;
  std::uint32_t f = 1;
  std::uint32_t layers = 0;
  std::uint64_t blocks = 64;
  std::size_t block_size = 4096;
  std::uint32_t threads = 3;
  std::uint64_t ops = 10;
  std::uint64_t fsync_every = 0;
  std::string workload = "rand";
  std::uint64_t seed = 1;
  bool mutant_ack = false;
  bool mutant_merkle = false;
  bool mutant_order = false;
};

void add_common(CLI::App* app, CommonFlags& c) {
  app->add_option("--nodes", c.nodes, "replicas (N)")->check(CLI::Range(1u, 16u));
  app->add_option("--f", c.f, "tolerated failures");
  app->add_option("--merkle-disk-layers", c.layers, "Merkle layers kept on disk (L)")->check(CLI::Range(0u, 8u));
  app->add_option("--blocks", c.blocks, "application blocks")->check(CLI::Range(2ull, 1ull << 24));
  app->add_option("--block-size", c.block_size, "bytes per block")->check(CLI::Range(64ull, 1ull << 20));
  app->add_option("--threads", c.threads, "application threads")->check(CLI::Range(1u, 64u));
  app->add_option("--ops", c.ops, "operations per thread");
  app->add_option("--fsync-every", c.fsync_every, "fsync after every k operations (0: never)");
  app->add_option("--workload", c.workload, "seq, rand or contended")
      ->check(CLI::IsMember({"seq", "rand", "contended"}));
  app->add_option("--seed", c.seed, "random seed");
  app->add_flag("--mutant-ack-off-by-one", c.mutant_ack, "release flagged writes one index early");
  app->add_flag("--mutant-skip-merkle-verify", c.mutant_merkle, "trust on-disk Merkle layers");
  app->add_flag("--mutant-backup-out-of-order", c.mutant_order, "backup applies writes as they arrive");
}

node::Mutants mutants(const CommonFlags& c) {
  node::Mutants m;
  m.ack_off_by_one = c.mutant_ack;
  m.skip_merkle_verify = c.mutant_merkle;
  m.backup_out_of_order = c.mutant_order;
  return m;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int cmd_run(const CommonFlags& c, const std::string& faults, const std::string& trace_out,
            const std::string& report) {
  harness::RunConfig cfg;
  cfg.cluster.nodes = c.nodes;
  cfg.cluster.f = c.f;
  cfg.cluster.merkle_disk_layers = c.layers;
  cfg.cluster.blocks = c.blocks;
  cfg.cluster.block_size = c.block_size;
  cfg.cluster.seed = c.seed;
  cfg.cluster.mutants = mutants(c);
  cfg.workload.kind = harness::parse_workload(c.workload);
  cfg.workload.threads = c.threads;
  cfg.workload.ops = c.ops;
  cfg.workload.fsync_every = c.fsync_every;
  if (!faults.empty()) cfg.faults = harness::load_faults(faults);
  const harness::RunResult r = harness::run(cfg);
  if (!trace_out.empty()) write_file(trace_out, model::to_trace(r.history));
  const std::string text = r.report_text();
  if (!report.empty()) write_file(report, text);
  std::cout << text;
  return r.exit_code;
}

int cmd_check(const std::string& path) {
  model::History h;
  try {
    h = model::load_trace(path);
  } catch (const model::TraceParseError& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return 64;
  }
  try {
    const auto r = model::is_crash_consistent(h);
    if (r.consistent) {
      std::cout << "CONSISTENT\n";
      return harness::kExitPass;
    }
    std::cout << "INCONSISTENT\n" << r.explanation << "\n";
    return harness::kExitInconsistent;
  } catch (const model::SizeLimitExceeded& e) {
    std::cout << "BUDGET-EXCEEDED\n" << e.what() << "\n";
    return harness::kExitBudget;
  } catch (const model::ModelError& e) {
    std::cout << "INCONSISTENT\n" << e.what() << "\n";
    return harness::kExitInconsistent;
  }
}

harness::FuzzOptions fuzz_options(const CommonFlags& c, std::uint64_t schedules, bool vary_layers) {
  harness::FuzzOptions o;
  o.schedules = schedules;
  o.seed = c.seed;
  o.nodes = c.nodes;
  o.f = c.f;
  o.blocks = c.blocks;
  o.block_size = c.block_size;
  o.threads = c.threads;
  o.ops = c.ops;
  o.merkle_disk_layers = vary_layers ? -1 : static_cast<int>(c.layers);
  o.mutants = mutants(c);
  return o;
}

// Re-runs one schedule of a fuzz campaign with full output.
int cmd_replay(const CommonFlags& c, std::uint64_t schedules, bool vary_layers, std::uint64_t index,
               const std::string& trace_out) {
  const harness::RunConfig cfg = harness::fuzz_config(fuzz_options(c, schedules, vary_layers), index);
  std::cout << "# schedule " << index << " seed " << cfg.cluster.seed << " L " << cfg.cluster.merkle_disk_layers
            << " workload " << harness::to_string(cfg.workload.kind) << " fsync-every "
            << cfg.workload.fsync_every << "\n"
            << harness::format_faults(cfg.faults);
  const harness::RunResult r = harness::run(cfg);
  if (!trace_out.empty()) write_file(trace_out, model::to_trace(r.history));
  std::cout << r.report_text();
  return r.exit_code;
}

int cmd_fuzz(const CommonFlags& c, std::uint64_t schedules, bool vary_layers, bool systematic, bool quiet) {
  harness::CampaignSummary s;
  auto progress = [quiet](std::uint64_t i, const harness::RunResult& r) {
    if (!quiet && r.exit_code != harness::kExitPass) {
      std::cerr << "schedule " << i << ": " << r.verdict << "\n";
    }
  };
  if (systematic) {
    harness::SystematicOptions o;
    o.max_ops = c.ops;
    o.progress = progress;
    s = harness::systematic(o);
  } else {
    harness::FuzzOptions o = fuzz_options(c, schedules, vary_layers);
    o.progress = progress;
    s = harness::fuzz(o);
  }
  std::cout << s.text();
  return s.all_passed() ? harness::kExitPass : harness::kExitInconsistent;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replicated rollback-resistant block device simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::string faults, trace_out, report;
  auto* run = app.add_subcommand("run", "one end-to-end run");
  add_common(run, run_flags);
  run->add_option("--faults", faults, "fault schedule file")->check(CLI::ExistingFile);
  run->add_option("--trace-out", trace_out, "write the application trace here");
  run->add_option("--report", report, "write the key=value report here");

  std::string trace;
  auto* check = app.add_subcommand("check", "judge a trace file");
  check->add_option("trace", trace, "trace file")->required()->check(CLI::ExistingFile);

  CommonFlags fuzz_flags;
  fuzz_flags.blocks = 16;
  fuzz_flags.block_size = 512;
  std::uint64_t schedules = 500;
  bool vary = false, systematic = false, quiet = false;
  auto* fuzz = app.add_subcommand("fuzz", "seeded campaign of runs with random faults");
  add_common(fuzz, fuzz_flags);
  fuzz->add_option("--schedules", schedules, "number of runs");
  fuzz->add_flag("--vary-layers", vary, "draw L from {0,1,2} per run");
  fuzz->add_flag("--systematic", systematic, "every crash point of the small templates (--ops is the op bound)");
  fuzz->add_flag("--quiet", quiet, "no per-run output");
  std::int64_t replay = -1;
  std::string fuzz_trace;
  fuzz->add_option("--replay", replay, "run only this schedule index and print its report");
  fuzz->add_option("--trace-out", fuzz_trace, "with --replay: write the trace here");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_flags, faults, trace_out, report);
    if (*check) return cmd_check(trace);
    if (*fuzz && replay >= 0) {
      return cmd_replay(fuzz_flags, schedules, vary, static_cast<std::uint64_t>(replay), fuzz_trace);
    }
    if (*fuzz) return cmd_fuzz(fuzz_flags, schedules, vary, systematic, quiet);
  } catch (const harness::FaultParseError& e) {
    std::cerr << faults << ": " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 70;
  }
  return 0;
}
